#include "rws/fno.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

using nlohmann::json;

namespace rws {

namespace {
constexpr double kPi = 3.14159265358979323846;

const Eigen::MatrixXcd& cached_dft(int J, int K) {
    static std::map<std::pair<int, int>, Eigen::MatrixXcd> cache;
    auto key = std::make_pair(J, K);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, dft_matrix(J, K)).first;
    return it->second;
}

const Eigen::MatrixXd& cached_diff(int J) {
    static std::map<int, Eigen::MatrixXd> cache;
    auto it = cache.find(J);
    if (it == cache.end()) it = cache.emplace(J, spectral_diff_matrix(J)).first;
    return it->second;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }
double gelu_prime(double x) {
    double Phi = 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
    double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
    return Phi + x * phi;
}

// One-sided spectrum with the synthesis doubling convention.
Eigen::MatrixXcd analyze(const Eigen::MatrixXd& Z, int K) {
    const int J = static_cast<int>(Z.cols());
    return (Z * cached_dft(J, K).conjugate()) / static_cast<double>(J);
}

Eigen::MatrixXd synthesize(const Eigen::MatrixXcd& H, int J) {
    const int K = static_cast<int>(H.cols());
    Eigen::MatrixXcd Hc = H;
    for (int k = 1; k < K; ++k) Hc.col(k) *= 2.0;
    return (Hc * cached_dft(J, K).transpose()).real();
}

// Gradient of a synthesis w.r.t. its coefficients: gH = (G * conj(E)) * C.
Eigen::MatrixXcd synth_grad(const Eigen::MatrixXd& G, int K) {
    const int J = static_cast<int>(G.cols());
    Eigen::MatrixXcd gH = G * cached_dft(J, K).conjugate();
    for (int k = 1; k < K; ++k) gH.col(k) *= 2.0;
    return gH;
}

struct BlockCache {
    Eigen::MatrixXd z;    // block input
    Eigen::MatrixXcd zh;  // analysis of z
    Eigen::MatrixXd a;    // pre-activation
};

struct ForwardCache {
    Eigen::MatrixXd x;
    std::vector<BlockCache> blocks;
    Eigen::MatrixXd zL; // final block output
    Eigen::MatrixXd y;
};

ForwardCache forward_cached(const FnoParams& p, const Eigen::MatrixXd& X) {
    const auto& cfg = p.cfg;
    const int J = static_cast<int>(X.cols());
    if (X.rows() != cfg.d_in) throw FnoError("input channel mismatch");
    if (J < 2 * cfg.K_max) throw FnoError("resolution below 2*K_max");
    ForwardCache fc;
    fc.x = X;
    Eigen::MatrixXd z = p.P * X;
    fc.blocks.resize(cfg.L);
    for (int l = 0; l < cfg.L; ++l) {
        BlockCache& bc = fc.blocks[l];
        bc.z = z;
        bc.zh = analyze(z, cfg.K_max);
        Eigen::MatrixXcd H(cfg.d, cfg.K_max);
        for (int k = 0; k < cfg.K_max; ++k) H.col(k) = p.Khat[l][k] * bc.zh.col(k);
        H += p.bhat[l];
        bc.a = p.W[l] * z + synthesize(H, J);
        if (l + 1 < cfg.L)
            z = bc.a.unaryExpr([](double v) { return gelu(v); });
        else
            z = bc.a;
    }
    fc.zL = z;
    fc.y = p.Q * z;
    return fc;
}

void backward_cached(const FnoParams& p, const ForwardCache& fc, const Eigen::MatrixXd& dY,
                     FnoParams& g) {
    const auto& cfg = p.cfg;
    g.Q += dY * fc.zL.transpose();
    Eigen::MatrixXd dz = p.Q.transpose() * dY;
    for (int l = cfg.L - 1; l >= 0; --l) {
        const BlockCache& bc = fc.blocks[l];
        Eigen::MatrixXd da =
            (l + 1 < cfg.L)
                ? (dz.array() * bc.a.unaryExpr([](double v) { return gelu_prime(v); }).array())
                      .matrix()
                : dz;
        g.W[l] += da * bc.z.transpose();
        Eigen::MatrixXcd gH = synth_grad(da, cfg.K_max);
        g.bhat[l] += gH;
        const int J = static_cast<int>(bc.z.cols());
        Eigen::MatrixXcd gzh(cfg.d, cfg.K_max);
        for (int k = 0; k < cfg.K_max; ++k) {
            g.Khat[l][k] += gH.col(k) * bc.zh.col(k).adjoint();
            gzh.col(k) = p.Khat[l][k].adjoint() * gH.col(k);
        }
        dz = p.W[l].transpose() * da +
             (gzh * cached_dft(J, cfg.K_max).transpose()).real() / static_cast<double>(J);
    }
    g.P += dz * fc.x.transpose();
}

std::vector<double*> parameter_pointers(FnoParams& p) {
    std::vector<double*> out;
    auto add_real = [&](Eigen::MatrixXd& m) {
        for (Eigen::Index i = 0; i < m.size(); ++i) out.push_back(m.data() + i);
    };
    auto add_cplx = [&](Eigen::MatrixXcd& m) {
        double* d = reinterpret_cast<double*>(m.data());
        for (Eigen::Index i = 0; i < 2 * m.size(); ++i) out.push_back(d + i);
    };
    add_real(p.P);
    for (auto& w : p.W) add_real(w);
    for (auto& layer : p.Khat)
        for (auto& k : layer) add_cplx(k);
    for (auto& b : p.bhat) add_cplx(b);
    add_real(p.Q);
    return out;
}

} // namespace

Eigen::MatrixXcd dft_matrix(int J, int K) {
    Eigen::MatrixXcd E(J, K);
    for (int j = 0; j < J; ++j)
        for (int k = 0; k < K; ++k) {
            double ang = 2.0 * kPi * j * k / J;
            E(j, k) = std::complex<double>(std::cos(ang), std::sin(ang));
        }
    return E;
}

FnoParams FnoParams::init(const FnoConfig& cfg, std::uint64_t seed) {
    FnoParams p;
    p.cfg = cfg;
    p.P.setZero(cfg.d, cfg.d_in);
    p.Q.setZero(cfg.d_out, cfg.d);
    p.W.assign(cfg.L, Eigen::MatrixXd::Zero(cfg.d, cfg.d));
    p.Khat.assign(cfg.L, std::vector<Eigen::MatrixXcd>(
                             cfg.K_max, Eigen::MatrixXcd::Zero(cfg.d, cfg.d)));
    p.bhat.assign(cfg.L, Eigen::MatrixXcd::Zero(cfg.d, cfg.K_max));
    NormalRng rng(seed ? seed : 1);
    double sp = 1.0 / std::sqrt(static_cast<double>(cfg.d_in));
    double sw = 1.0 / std::sqrt(static_cast<double>(cfg.d));
    double sk = 1.0 / (static_cast<double>(cfg.d) * std::sqrt(static_cast<double>(cfg.K_max)));
    for (Eigen::Index i = 0; i < p.P.size(); ++i) p.P.data()[i] = sp * rng.normal();
    for (auto& w : p.W)
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = sw * rng.normal();
    for (auto& layer : p.Khat)
        for (auto& k : layer)
            for (Eigen::Index i = 0; i < k.size(); ++i)
                k.data()[i] = std::complex<double>(sk * rng.normal(), sk * rng.normal());
    // biases start at zero
    for (Eigen::Index i = 0; i < p.Q.size(); ++i) p.Q.data()[i] = sw * rng.normal();
    return p;
}

FnoParams FnoParams::zeros_like(const FnoParams& src) {
    FnoParams p;
    p.cfg = src.cfg;
    p.P = Eigen::MatrixXd::Zero(src.P.rows(), src.P.cols());
    p.Q = Eigen::MatrixXd::Zero(src.Q.rows(), src.Q.cols());
    p.W.assign(src.W.size(), Eigen::MatrixXd::Zero(src.W[0].rows(), src.W[0].cols()));
    p.Khat.assign(src.Khat.size(),
                  std::vector<Eigen::MatrixXcd>(
                      src.Khat[0].size(),
                      Eigen::MatrixXcd::Zero(src.Khat[0][0].rows(), src.Khat[0][0].cols())));
    p.bhat.assign(src.bhat.size(),
                  Eigen::MatrixXcd::Zero(src.bhat[0].rows(), src.bhat[0].cols()));
    return p;
}

void FnoParams::for_each(const std::function<void(double&)>& f) {
    for (double* ptr : parameter_pointers(*this)) f(*ptr);
}

std::size_t FnoParams::parameter_count() const {
    return parameter_pointers(const_cast<FnoParams&>(*this)).size();
}

Eigen::MatrixXd spectral_conv(const Eigen::MatrixXd& Z,
                              const std::vector<Eigen::MatrixXcd>& Khat) {
    const int J = static_cast<int>(Z.cols());
    const int K = static_cast<int>(Khat.size());
    if (J < 2 * K) throw FnoError("K_max too large for the grid");
    Eigen::MatrixXcd zh = analyze(Z, K);
    Eigen::MatrixXcd H(Z.rows(), K);
    for (int k = 0; k < K; ++k) H.col(k) = Khat[k] * zh.col(k);
    return synthesize(H, J);
}

Eigen::MatrixXd fno_forward(const FnoParams& p, const Eigen::MatrixXd& X) {
    return forward_cached(p, X).y;
}

Eigen::MatrixXd spectral_diff_matrix(int J) {
    if (J % 2 != 0) throw FnoError("spectral differentiation requires even J");
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(J, J);
    for (int j = 0; j < J; ++j)
        for (int l = 0; l < J; ++l) {
            if (j == l) continue;
            double s = ((j - l) % 2 == 0) ? 1.0 : -1.0;
            D(j, l) = 0.5 * s / std::tan(0.5 * (j - l) * 2.0 * kPi / J);
        }
    return D;
}

double h1_relative_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
    const int J = static_cast<int>(target.cols());
    const Eigen::MatrixXd& D = cached_diff(J);
    double tn = target.squaredNorm();
    Eigen::MatrixXd Td = target * D.transpose();
    double tdn = Td.squaredNorm();
    if (tn <= 0.0 || tdn <= 0.0) throw FnoError("zero target norm in H1 loss");
    Eigen::MatrixXd e = pred - target;
    return e.squaredNorm() / tn + (e * D.transpose()).squaredNorm() / tdn;
}

double fno_loss_and_gradients(const FnoParams& p, const std::vector<Eigen::MatrixXd>& inputs,
                              const std::vector<Eigen::MatrixXd>& targets, FnoParams& grads) {
    if (inputs.empty() || inputs.size() != targets.size())
        throw FnoError("empty or mismatched batch");
    const double bs = static_cast<double>(inputs.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        ForwardCache fc = forward_cached(p, inputs[i]);
        const Eigen::MatrixXd& T = targets[i];
        const int J = static_cast<int>(T.cols());
        const Eigen::MatrixXd& D = cached_diff(J);
        double tn = T.squaredNorm();
        double tdn = (T * D.transpose()).squaredNorm();
        if (tn <= 0.0 || tdn <= 0.0) throw FnoError("zero target norm in H1 loss");
        Eigen::MatrixXd e = fc.y - T;
        loss += (e.squaredNorm() / tn + (e * D.transpose()).squaredNorm() / tdn) / bs;
        Eigen::MatrixXd dY =
            (2.0 / (bs * tn)) * e + (2.0 / (bs * tdn)) * (e * D.transpose() * D);
        backward_cached(p, fc, dY, grads);
    }
    return loss;
}

Eigen::MatrixXd sample_input(const Sample& s, const std::array<double, 12>& mean,
                             const std::array<double, 12>& stdev) {
    const Curve& c = s.curve;
    Eigen::MatrixXd X(8, c.J);
    for (int j = 0; j < c.J; ++j) {
        double raw[8] = {c.x[j].x(),      c.x[j].y(),      c.dx[j].x(),     c.dx[j].y(),
                         s.rt1.v(2 * j),  s.rt1.v(2 * j + 1), s.rt2.v(2 * j), s.rt2.v(2 * j + 1)};
        for (int ch = 0; ch < 8; ++ch) X(ch, j) = (raw[ch] - mean[ch]) / stdev[ch];
    }
    return X;
}

Eigen::MatrixXd sample_target(const Sample& s, const std::array<double, 12>& mean,
                              const std::array<double, 12>& stdev) {
    const Curve& c = s.curve;
    Eigen::MatrixXd T(4, c.J);
    for (int j = 0; j < c.J; ++j) {
        double raw[4] = {s.r1.v(2 * j), s.r1.v(2 * j + 1), s.r2.v(2 * j), s.r2.v(2 * j + 1)};
        for (int ch = 0; ch < 4; ++ch) T(ch, j) = (raw[ch] - mean[8 + ch]) / stdev[8 + ch];
    }
    return T;
}

TrainState train_fno(const std::vector<Sample>& samples, const DatasetManifest& manifest,
                     const FnoConfig& cfg, const TrainConfig& tc) {
    TrainState st;
    st.mean = manifest.mean;
    st.stdev = manifest.stdev;
    st.dataset_crc = manifest.crc;
    st.params = FnoParams::init(cfg, tc.seed ^ 0xf00d);
    st.m = FnoParams::zeros_like(st.params);
    st.v = FnoParams::zeros_like(st.params);

    std::vector<Eigen::MatrixXd> X(samples.size()), T(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        X[i] = sample_input(samples[i], st.mean, st.stdev);
        T[i] = sample_target(samples[i], st.mean, st.stdev);
    }
    std::vector<int> train_idx = manifest.train_idx;
    const std::vector<int>& test_idx = manifest.test_idx;
    if (train_idx.empty()) throw FnoError("empty train split");

    auto pp = parameter_pointers(st.params);
    auto pm = parameter_pointers(st.m);
    auto pv = parameter_pointers(st.v);

    NormalRng rng(tc.seed ^ 0xabcdef);
    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        for (int i = static_cast<int>(train_idx.size()) - 1; i > 0; --i) {
            int j = std::min(i, static_cast<int>(rng.uniform() * (i + 1)));
            std::swap(train_idx[i], train_idx[j]);
        }
        double epoch_loss = 0.0;
        int counted = 0;
        for (std::size_t start = 0; start < train_idx.size(); start += tc.batch) {
            std::size_t end = std::min(train_idx.size(), start + tc.batch);
            std::vector<Eigen::MatrixXd> bx, bt;
            for (std::size_t i = start; i < end; ++i) {
                bx.push_back(X[train_idx[i]]);
                bt.push_back(T[train_idx[i]]);
            }
            FnoParams g = FnoParams::zeros_like(st.params);
            double loss = fno_loss_and_gradients(st.params, bx, bt, g);
            if (!std::isfinite(loss))
                throw FnoError("NaN loss at step " + std::to_string(st.step));
            epoch_loss += loss * static_cast<double>(end - start);
            counted += static_cast<int>(end - start);
            ++st.step;
            auto pg = parameter_pointers(g);
            double b1t = 1.0 - std::pow(tc.beta1, static_cast<double>(st.step));
            double b2t = 1.0 - std::pow(tc.beta2, static_cast<double>(st.step));
            for (std::size_t i = 0; i < pp.size(); ++i) {
                double gi = *pg[i];
                *pm[i] = tc.beta1 * *pm[i] + (1.0 - tc.beta1) * gi;
                *pv[i] = tc.beta2 * *pv[i] + (1.0 - tc.beta2) * gi * gi;
                *pp[i] -= tc.lr * (*pm[i] / b1t) / (std::sqrt(*pv[i] / b2t) + tc.eps);
            }
        }
        st.train_loss.push_back(epoch_loss / counted);
        double tl = 0.0;
        if (!test_idx.empty()) {
            for (int i : test_idx) tl += h1_relative_loss(fno_forward(st.params, X[i]), T[i]);
            tl /= static_cast<double>(test_idx.size());
        }
        st.test_loss.push_back(tl);
        if (tc.verbose)
            std::fprintf(stderr, "epoch %d train %.6f test %.6f\n", epoch,
                         st.train_loss.back(), tl);
    }
    return st;
}

std::pair<BoundaryField, BoundaryField> geo_fno_eval(const TrainState& st, const Curve& c,
                                                     const BoundaryField& rt1,
                                                     const BoundaryField& rt2) {
    Sample s;
    s.curve = c;
    s.rt1 = rt1;
    s.rt2 = rt2;
    s.r1 = s.r2 = BoundaryField::zero(c);
    Eigen::MatrixXd X = sample_input(s, st.mean, st.stdev);
    Eigen::MatrixXd Y = fno_forward(st.params, X);
    BoundaryField r1 = BoundaryField::zero(c), r2 = BoundaryField::zero(c);
    for (int j = 0; j < c.J; ++j) {
        r1.v(2 * j) = Y(0, j) * st.stdev[8] + st.mean[8];
        r1.v(2 * j + 1) = Y(1, j) * st.stdev[9] + st.mean[9];
        r2.v(2 * j) = Y(2, j) * st.stdev[10] + st.mean[10];
        r2.v(2 * j + 1) = Y(3, j) * st.stdev[11] + st.mean[11];
    }
    return {r1, r2};
}

void save_model(const TrainState& st, const std::string& path) {
    const auto& cfg = st.params.cfg;
    json j;
    j["format"] = "RWS-FNO1";
    j["d_in"] = cfg.d_in;
    j["d_out"] = cfg.d_out;
    j["L"] = cfg.L;
    j["d"] = cfg.d;
    j["K_max"] = cfg.K_max;
    j["activation"] = cfg.activation;
    j["step"] = st.step;
    j["mean"] = st.mean;
    j["stdev"] = st.stdev;
    j["dataset_crc"] = st.dataset_crc;
    j["train_loss"] = st.train_loss;
    j["test_loss"] = st.test_loss;
    std::ofstream jf(path + ".json");
    jf << j.dump(1) << "\n";
    if (!jf) throw FnoError("failed to write model header");

    std::vector<double> blob;
    const_cast<FnoParams&>(st.params).for_each([&](double& v) { blob.push_back(v); });
    std::uint64_t crc = crc64(blob.data(), blob.size() * sizeof(double));
    std::ofstream bf(path + ".bin", std::ios::binary);
    bf.write(reinterpret_cast<const char*>(blob.data()),
             static_cast<std::streamsize>(blob.size() * sizeof(double)));
    bf.write(reinterpret_cast<const char*>(&crc), sizeof(crc));
    if (!bf) throw FnoError("failed to write model blob");
}

TrainState load_model(const std::string& path) {
    std::ifstream jf(path + ".json");
    if (!jf) throw FnoError("missing model header: " + path);
    json j = json::parse(jf);
    if (j.at("format") != "RWS-FNO1") throw FnoError("unsupported model format");
    FnoConfig cfg;
    cfg.d_in = j.at("d_in");
    cfg.d_out = j.at("d_out");
    cfg.L = j.at("L");
    cfg.d = j.at("d");
    cfg.K_max = j.at("K_max");
    cfg.activation = j.at("activation");
    TrainState st;
    st.params = FnoParams::init(cfg, 1);
    st.m = FnoParams::zeros_like(st.params);
    st.v = FnoParams::zeros_like(st.params);
    st.step = j.at("step");
    for (int c = 0; c < 12; ++c) {
        st.mean[c] = j.at("mean").at(c);
        st.stdev[c] = j.at("stdev").at(c);
    }
    st.dataset_crc = j.at("dataset_crc");
    st.train_loss = j.at("train_loss").get<std::vector<double>>();
    st.test_loss = j.at("test_loss").get<std::vector<double>>();

    std::ifstream bf(path + ".bin", std::ios::binary);
    if (!bf) throw FnoError("missing model blob");
    std::size_t n = st.params.parameter_count();
    std::vector<double> blob(n);
    bf.read(reinterpret_cast<char*>(blob.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    std::uint64_t crc = 0;
    bf.read(reinterpret_cast<char*>(&crc), sizeof(crc));
    if (!bf) throw FnoError("truncated model blob");
    if (crc != crc64(blob.data(), blob.size() * sizeof(double)))
        throw FnoError("model checksum failure");
    std::size_t i = 0;
    st.params.for_each([&](double& v) { v = blob[i++]; });
    return st;
}

} // namespace rws
