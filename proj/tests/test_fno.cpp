#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>

#include "rws/fno.hpp"

using namespace rws;

namespace {
constexpr double kPi = 3.14159265358979323846;

Eigen::MatrixXd random_signal(int d, int J, NormalRng& rng) {
    Eigen::MatrixXd Z(d, J);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < J; ++j) Z(i, j) = rng.normal();
    return Z;
}

// Band-limited signal from explicit one-sided coefficients c[ch][k].
Eigen::MatrixXd from_modes(const std::vector<std::vector<std::complex<double>>>& c, int J) {
    int d = static_cast<int>(c.size());
    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(d, J);
    for (int ch = 0; ch < d; ++ch)
        for (std::size_t k = 0; k < c[ch].size(); ++k)
            for (int j = 0; j < J; ++j) {
                double t = 2 * kPi * j / J;
                double m = (k == 0) ? 1.0 : 2.0;
                Z(ch, j) += m * std::real(c[ch][k] * std::polar(1.0, k * t));
            }
    return Z;
}

std::vector<Eigen::MatrixXcd> identity_kernels(int d, int K) {
    return std::vector<Eigen::MatrixXcd>(K, Eigen::MatrixXcd::Identity(d, d));
}
} // namespace

TEST_CASE("spectral conv with identity kernels is the ideal low-pass") {
    const int d = 3, J = 64, K = 8;
    NormalRng rng(5);
    auto Z = random_signal(d, J, rng);
    auto Y = spectral_conv(Z, identity_kernels(d, K));
    // oracle low-pass by direct DFT
    for (int ch = 0; ch < d; ++ch)
        for (int j = 0; j < J; ++j) {
            std::complex<double> acc = 0;
            for (int k = 0; k < K; ++k) {
                std::complex<double> zh = 0;
                for (int l = 0; l < J; ++l)
                    zh += Z(ch, l) * std::polar(1.0, -2 * kPi * k * l / J);
                zh /= J;
                double m = (k == 0) ? 1.0 : 2.0;
                acc += m * zh * std::polar(1.0, 2 * kPi * k * j / J);
            }
            CHECK(Y(ch, j) == doctest::Approx(acc.real()).epsilon(1e-12));
        }
}

TEST_CASE("pure harmonic is an eigenfunction of a diagonal kernel") {
    const int d = 2, J = 64, K = 8, k0 = 5;
    const double c = 1.7;
    std::vector<Eigen::MatrixXcd> Khat(K, Eigen::MatrixXcd::Zero(d, d));
    Khat[k0] = c * Eigen::MatrixXcd::Identity(d, d);
    Eigen::MatrixXd Z(d, J);
    for (int j = 0; j < J; ++j) {
        double t = 2 * kPi * j / J;
        Z(0, j) = std::cos(k0 * t + 0.3);
        Z(1, j) = std::sin(k0 * t);
    }
    auto Y = spectral_conv(Z, Khat);
    CHECK((Y - c * Z).norm() < 1e-12 * Z.norm());
}

TEST_CASE("spectral conv matches a naive direct-summation oracle") {
    const int d = 4, J = 48, K = 6;
    NormalRng rng(11);
    std::vector<Eigen::MatrixXcd> Khat(K);
    for (auto& m : Khat) {
        m.resize(d, d);
        for (int i = 0; i < d * d; ++i)
            m.data()[i] = std::complex<double>(rng.normal(), rng.normal());
    }
    auto Z = random_signal(d, J, rng);
    auto Y = spectral_conv(Z, Khat);
    for (int j = 0; j < J; ++j) {
        Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(d);
        for (int k = 0; k < K; ++k) {
            Eigen::VectorXcd zh = Eigen::VectorXcd::Zero(d);
            for (int l = 0; l < J; ++l)
                zh += Z.col(l) * std::polar(1.0, -2 * kPi * k * l / J);
            zh /= J;
            double m = (k == 0) ? 1.0 : 2.0;
            acc += m * std::polar(1.0, 2 * kPi * k * j / J) * (Khat[k] * zh);
        }
        CHECK((Y.col(j) - acc.real()).norm() < 1e-12 * (1.0 + acc.real().norm()));
    }
}

TEST_CASE("spectral conv linearity and shape guards") {
    const int d = 2, J = 32, K = 4;
    NormalRng rng(3);
    auto Z1 = random_signal(d, J, rng);
    auto Z2 = random_signal(d, J, rng);
    auto Khat = identity_kernels(d, K);
    Eigen::MatrixXd Y = spectral_conv(2.5 * Z1 - 0.5 * Z2, Khat);
    Eigen::MatrixXd Yl = 2.5 * spectral_conv(Z1, Khat) - 0.5 * spectral_conv(Z2, Khat);
    CHECK((Y - Yl).norm() < 1e-12 * Yl.norm());
    CHECK_THROWS_AS(spectral_conv(random_signal(d, 6, rng), identity_kernels(d, 4)), FnoError);
}

TEST_CASE("forward: zero weights give zero, identity configuration is identity") {
    FnoConfig cfg;
    cfg.d_in = cfg.d_out = cfg.d = 3;
    cfg.L = 1;
    cfg.K_max = 4;
    FnoParams p = FnoParams::init(cfg, 9);
    NormalRng rng(2);
    auto X = random_signal(3, 32, rng);
    FnoParams z = FnoParams::zeros_like(p);
    z.cfg = cfg;
    CHECK(fno_forward(z, X).norm() == 0.0);
    z.P.setIdentity();
    z.Q.setIdentity();
    z.W[0].setIdentity();
    CHECK((fno_forward(z, X) - X).norm() < 1e-14 * X.norm());
}

TEST_CASE("discretization invariance on band-limited input") {
    FnoConfig cfg;
    cfg.d_in = 2;
    cfg.d_out = 2;
    cfg.d = 8;
    cfg.L = 3;
    cfg.K_max = 6;
    FnoParams p = FnoParams::init(cfg, 17);
    std::vector<std::vector<std::complex<double>>> c(2);
    NormalRng rng(23);
    for (auto& ch : c)
        for (int k = 0; k < 5; ++k) ch.push_back({0.3 * rng.normal(), 0.3 * rng.normal()});
    auto Y1 = fno_forward(p, from_modes(c, 128));
    auto Y2 = fno_forward(p, from_modes(c, 256));
    double err = 0, nrm = 0;
    for (int j = 0; j < 128; ++j) {
        err += (Y1.col(j) - Y2.col(2 * j)).squaredNorm();
        nrm += Y2.col(2 * j).squaredNorm();
    }
    CHECK(std::sqrt(err / nrm) <= 1e-6);
}

TEST_CASE("translation equivariance with constant-mode biases") {
    FnoConfig cfg;
    cfg.d_in = 2;
    cfg.d_out = 2;
    cfg.d = 6;
    cfg.L = 2;
    cfg.K_max = 5;
    FnoParams p = FnoParams::init(cfg, 31);
    for (auto& b : p.bhat) {
        b.setZero();
        for (int i = 0; i < b.rows(); ++i) b(i, 0) = 0.1 * i; // constant mode only
    }
    const int J = 64, m = 13;
    NormalRng rng(7);
    auto X = random_signal(2, J, rng);
    Eigen::MatrixXd Xs(2, J);
    for (int j = 0; j < J; ++j) Xs.col(j) = X.col((j + J - m) % J);
    auto Y = fno_forward(p, X);
    auto Ys = fno_forward(p, Xs);
    double worst = 0;
    for (int j = 0; j < J; ++j)
        worst = std::max(worst, (Ys.col(j) - Y.col((j + J - m) % J)).norm());
    CHECK(worst <= 1e-10);
}

TEST_CASE("H1 relative loss basics and analytic oracle") {
    NormalRng rng(1);
    auto T = random_signal(3, 32, rng);
    CHECK(h1_relative_loss(T, T) == 0.0);
    CHECK(h1_relative_loss(Eigen::MatrixXd::Zero(3, 32), T) == doctest::Approx(2.0));
    // band-limited pair with analytic continuum norms: for f = sum_k 2 Re(c_k e^{ikt}),
    // mean f^2 = c_0^2 + 2 sum_{k>=1} |c_k|^2 and D adds k^2 weights.
    std::vector<std::vector<std::complex<double>>> cp(1), ct(1);
    cp[0] = {{0.4, 0.0}, {0.3, -0.2}, {0.0, 0.1}};
    ct[0] = {{-0.1, 0.0}, {0.2, 0.5}, {0.3, 0.0}};
    const int J = 32;
    auto P = from_modes(cp, J), T2 = from_modes(ct, J);
    auto power = [](const std::vector<std::complex<double>>& c, bool diff) {
        double s = 0;
        for (std::size_t k = 0; k < c.size(); ++k) {
            double w = diff ? static_cast<double>(k * k) : 1.0;
            s += w * (k == 0 ? 1.0 : 2.0) * std::norm(c[k]);
        }
        return s;
    };
    std::vector<std::complex<double>> ce(3);
    for (int k = 0; k < 3; ++k) ce[k] = cp[0][k] - ct[0][k];
    double expect = power(ce, false) / power(ct[0], false) + power(ce, true) / power(ct[0], true);
    CHECK(h1_relative_loss(P, T2) == doctest::Approx(expect).epsilon(1e-10));
    CHECK_THROWS_AS(h1_relative_loss(P, Eigen::MatrixXd::Zero(1, J)), FnoError);
}

TEST_CASE("finite-difference gradient check on a toy configuration") {
    FnoConfig cfg;
    cfg.d_in = 3;
    cfg.d_out = 2;
    cfg.d = 4;
    cfg.L = 2;
    cfg.K_max = 4;
    FnoParams p = FnoParams::init(cfg, 77);
    NormalRng rng(13);
    std::vector<Eigen::MatrixXd> X{random_signal(3, 32, rng), random_signal(3, 32, rng)};
    std::vector<Eigen::MatrixXd> T{random_signal(2, 32, rng), random_signal(2, 32, rng)};
    FnoParams g = FnoParams::zeros_like(p);
    fno_loss_and_gradients(p, X, T, g);
    std::vector<double> analytic;
    g.for_each([&](double& v) { analytic.push_back(v); });
    const double step = 1e-6;
    double worst = 0;
    std::size_t idx = 0, n = p.parameter_count();
    for (std::size_t i = 0; i < n; ++i) {
        double fd;
        {
            std::size_t k = 0;
            double lp = 0, lm = 0;
            FnoParams q = p;
            q.for_each([&](double& v) { if (k++ == i) v += step; });
            FnoParams dummy = FnoParams::zeros_like(p);
            lp = fno_loss_and_gradients(q, X, T, dummy);
            k = 0;
            FnoParams q2 = p;
            q2.for_each([&](double& v) { if (k++ == i) v -= step; });
            FnoParams dummy2 = FnoParams::zeros_like(p);
            lm = fno_loss_and_gradients(q2, X, T, dummy2);
            fd = (lp - lm) / (2 * step);
        }
        double rel = std::abs(analytic[i] - fd) / std::max(std::abs(fd), 1e-6);
        worst = std::max(worst, rel);
        ++idx;
    }
    CHECK(worst <= 1e-5);
}

TEST_CASE("gradient of a spectral mode vanishes without input energy at that mode") {
    FnoConfig cfg;
    cfg.d_in = 2;
    cfg.d_out = 2;
    cfg.d = 3;
    cfg.L = 1;
    cfg.K_max = 6;
    FnoParams p = FnoParams::init(cfg, 5);
    // input with modes 0..2 only
    std::vector<std::vector<std::complex<double>>> c(2);
    for (auto& ch : c) ch = {{0.5, 0}, {0.2, 0.1}, {-0.3, 0.4}};
    auto X = from_modes(c, 32);
    NormalRng rng(4);
    std::vector<Eigen::MatrixXd> T{random_signal(2, 32, rng)};
    FnoParams g = FnoParams::zeros_like(p);
    fno_loss_and_gradients(p, {X}, T, g);
    for (int k = 3; k < cfg.K_max; ++k) CHECK(g.Khat[0][k].norm() <= 1e-12);
    CHECK(g.Khat[0][1].norm() > 1e-8);
}

TEST_CASE("zero gradient at an exact minimum") {
    FnoConfig cfg;
    cfg.d_in = 2;
    cfg.d_out = 2;
    cfg.d = 2;
    cfg.L = 1;
    cfg.K_max = 4;
    FnoParams p = FnoParams::init(cfg, 21);
    NormalRng rng(6);
    auto X = random_signal(2, 32, rng);
    auto T = fno_forward(p, X); // minimum of the quadratic loss: pred == target
    FnoParams g = FnoParams::zeros_like(p);
    CHECK(fno_loss_and_gradients(p, {X}, {T}, g) <= 1e-20);
    double worst = 0;
    g.for_each([&](double& v) { worst = std::max(worst, std::abs(v)); });
    CHECK(worst <= 1e-10);
}

TEST_CASE("single-sample overfit and training determinism") {
    DatasetConfig dcfg;
    dcfg.J = 32;
    dcfg.gp.n_points = 32;
    dcfg.gp.variance = 1e-4;
    namespace fs = std::filesystem;
    auto dir = (fs::temp_directory_path() / "rws_fno_overfit").string();
    fs::remove_all(dir);
    auto man = generate_dataset(dcfg, 1, 99, dir, 1.0);
    auto [samples, lman] = load_dataset(dir);

    FnoConfig cfg;
    cfg.d = 16;
    cfg.L = 2;
    cfg.K_max = 8;
    TrainConfig tc;
    tc.epochs = 500; // one sample: one step per epoch
    tc.batch = 1;
    tc.seed = 3;
    auto st = train_fno(samples, lman, cfg, tc);
    CHECK(st.train_loss.back() <= 1e-3);

    TrainConfig tc2 = tc;
    tc2.epochs = 5;
    auto a = train_fno(samples, lman, cfg, tc2);
    auto b = train_fno(samples, lman, cfg, tc2);
    for (int e = 0; e < 5; ++e) CHECK(a.train_loss[e] == b.train_loss[e]);
}

TEST_CASE("geo eval reduces to the forward pass, serialization round-trips") {
    DatasetConfig dcfg;
    dcfg.J = 32;
    dcfg.gp.n_points = 32;
    dcfg.gp.variance = 1e-4;
    namespace fs = std::filesystem;
    auto dir = (fs::temp_directory_path() / "rws_fno_geo").string();
    fs::remove_all(dir);
    generate_dataset(dcfg, 2, 5, dir, 1.0);
    auto [samples, lman] = load_dataset(dir);
    FnoConfig cfg;
    cfg.d = 8;
    cfg.L = 2;
    cfg.K_max = 8;
    TrainConfig tc;
    tc.epochs = 2;
    tc.batch = 2;
    auto st = train_fno(samples, lman, cfg, tc);

    const Sample& s = samples[0];
    auto [r1, r2] = geo_fno_eval(st, s.curve, s.rt1, s.rt2);
    auto Y = fno_forward(st.params, sample_input(s, st.mean, st.stdev));
    for (int j = 0; j < s.curve.J; ++j) {
        CHECK(r1.v(2 * j) == doctest::Approx(Y(0, j) * st.stdev[8] + st.mean[8]).epsilon(1e-14));
        CHECK(r2.v(2 * j + 1) ==
              doctest::Approx(Y(3, j) * st.stdev[11] + st.mean[11]).epsilon(1e-14));
    }

    auto mpath = (fs::temp_directory_path() / "rws_fno_model").string();
    save_model(st, mpath);
    auto st2 = load_model(mpath);
    auto Ya = fno_forward(st.params, sample_input(s, st.mean, st.stdev));
    auto Yb = fno_forward(st2.params, sample_input(s, st2.mean, st2.stdev));
    CHECK((Ya - Yb).norm() == 0.0);
}
