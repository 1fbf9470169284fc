#include "rws/macro_channel.hpp"

#include <cmath>
#include <complex>

namespace rws {

namespace {

constexpr std::complex<double> I1(0.0, 1.0);

// Chebyshev collocation nodes (descending) and differentiation matrix on
// [-1, 1], Trefethen's construction.
void cheb(int n, Eigen::VectorXd& x, Eigen::MatrixXd& D) {
    const int N = n - 1;
    x.resize(n);
    D.setZero(n, n);
    if (N == 0) {
        x(0) = 1.0;
        return;
    }
    Eigen::VectorXd c(n);
    for (int j = 0; j < n; ++j) {
        x(j) = std::cos(M_PI * j / N);
        c(j) = (j == 0 || j == N) ? 2.0 : 1.0;
        if (j % 2 == 1) c(j) = -c(j);
    }
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            D(i, j) = (c(i) / c(j)) / (x(i) - x(j));
            row += D(i, j);
        }
        D(i, i) = -row; // negative row sums: exact derivative of constants
    }
}

// Barycentric interpolation at Chebyshev nodes (second-kind weights).
std::complex<double> bary(const Eigen::VectorXd& y, const Eigen::Ref<const Eigen::VectorXcd>& f,
                          double yq) {
    const int n = static_cast<int>(y.size());
    std::complex<double> num = 0.0;
    double den = 0.0;
    for (int j = 0; j < n; ++j) {
        if (yq == y(j)) return f(j);
        double w = (j == 0 || j == n - 1) ? 0.5 : 1.0;
        if (j % 2 == 1) w = -w;
        const double r = w / (yq - y(j));
        num += r * f(j);
        den += r;
    }
    return num / den;
}

struct ModePack {
    // mode columns evaluated at yq by barycentric interpolation
    Eigen::VectorXcd u, v, uy, vy;
};

ModePack interp_modes(const SpectralField& f, double yq) {
    const int K = static_cast<int>(f.u.cols());
    ModePack m;
    m.u.resize(K);
    m.v.resize(K);
    m.uy.resize(K);
    m.vy.resize(K);
    for (int k = 0; k < K; ++k) {
        m.u(k) = bary(f.ycheb, f.u.col(k), yq);
        m.v(k) = bary(f.ycheb, f.v.col(k), yq);
        m.uy(k) = bary(f.ycheb, f.uy.col(k), yq);
        m.vy(k) = bary(f.ycheb, f.vy.col(k), yq);
    }
    return m;
}

double synth(const Eigen::VectorXcd& coef, double beta1, double x) {
    double s = coef(0).real();
    for (int k = 1; k < coef.size(); ++k)
        s += 2.0 * (coef(k) * std::exp(I1 * (beta1 * k * x))).real();
    return s;
}

double synth_w(const Eigen::VectorXcd& coef, const Eigen::VectorXd& dbl, double beta1,
               double x) {
    double s = 0.0;
    for (int k = 0; k < coef.size(); ++k)
        s += dbl(k) * (coef(k) * std::exp(I1 * (beta1 * k * x))).real();
    return s;
}

} // namespace

double SlipFunction::eval(double x) const {
    if (coef.size() == 0) throw MacroError("empty slip function");
    return std::max(synth_w(coef, dbl, 2.0 * M_PI / L_per, x), alpha_min);
}

SlipFunction SlipFunction::constant(double c, double L_per_) {
    SlipFunction s;
    s.coef = Eigen::VectorXcd::Constant(1, std::complex<double>(c, 0.0));
    s.dbl = Eigen::VectorXd::Constant(1, 1.0);
    s.L_per = L_per_;
    return s;
}

SlipFunction interpolate_slip(const std::vector<double>& xs, const std::vector<double>& alphas,
                              double L_per, double alpha_min) {
    const int N = static_cast<int>(xs.size());
    if (N < 1 || alphas.size() != xs.size()) throw MacroError("interpolate_slip: bad sizes");
    const double h = L_per / N;
    for (int i = 1; i < N; ++i)
        if (std::abs(xs[i] - xs[0] - i * h) > 1e-9 * L_per)
            throw MacroError("interpolate_slip: points not uniform over the period");
    SlipFunction s;
    s.L_per = L_per;
    s.alpha_min = alpha_min;
    std::vector<double> a(alphas);
    for (double& v : a)
        if (v < alpha_min) {
            v = alpha_min;
            s.clamped = true;
        }
    // One-sided spectrum; for even N the Nyquist mode enters once (cosine
    // convention, exact at the nodes).
    const int K = N / 2 + 1;
    const double beta1 = 2.0 * M_PI / L_per;
    s.coef.setZero(K);
    s.dbl.setOnes(K);
    for (int k = 0; k < K; ++k) {
        if (k > 0 && !(N % 2 == 0 && k == N / 2)) s.dbl(k) = 2.0;
        std::complex<double> c = 0.0;
        for (int i = 0; i < N; ++i) c += a[i] * std::exp(-I1 * (beta1 * k * xs[i]));
        s.coef(k) = c / double(N);
    }
    return s;
}

SpectralField solve_macro(const SlipFunction& slip, const std::function<Vec2(double)>& g_top,
                          const ChannelGeometry& geom, int Nx, int Ny) {
    if (Nx < 3 || Nx % 2 == 0) throw MacroError("solve_macro: Nx must be odd and >= 3");
    if (Ny < 6) throw MacroError("solve_macro: Ny too small");
    if (!(geom.y_top > geom.y0)) throw MacroError("solve_macro: empty channel");
    const double L = geom.L_per;
    const double beta1 = 2.0 * M_PI / L;
    const int K = (Nx + 1) / 2;

    // Chebyshev machinery on [y0, y_top]; node 0 is the top, node Ny-1 the wall.
    Eigen::VectorXd xi;
    Eigen::MatrixXd Ds;
    cheb(Ny, xi, Ds);
    const double half = 0.5 * (geom.y_top - geom.y0);
    Eigen::MatrixXd D = Ds / half;
    Eigen::MatrixXd D2 = D * D, D3 = D2 * D, D4 = D2 * D2;

    SpectralField f;
    f.geom = geom;
    f.Nx = Nx;
    f.Ny = Ny;
    f.ycheb.resize(Ny);
    for (int j = 0; j < Ny; ++j) f.ycheb(j) = geom.y0 + half * (xi(j) + 1.0);
    f.u.setZero(Ny, K);
    f.v.setZero(Ny, K);
    f.uy.setZero(Ny, K);
    f.vy.setZero(Ny, K);
    f.p.setZero(Ny, K);

    // Top data modes at the x collocation points.
    std::vector<double> xc(Nx), alpha(Nx);
    Eigen::VectorXcd g1(K), g2(K);
    g1.setZero();
    g2.setZero();
    for (int i = 0; i < Nx; ++i) {
        xc[i] = L * i / Nx;
        alpha[i] = slip.eval(xc[i]);
        const Vec2 g = g_top(xc[i]);
        for (int k = 0; k < K; ++k) {
            const std::complex<double> e = std::exp(-I1 * (beta1 * k * xc[i])) / double(Nx);
            g1(k) += g.x() * e;
            g2(k) += g.y() * e;
        }
    }
    const double gscale = std::max(1.0, g1.cwiseAbs().maxCoeff() + g2.cwiseAbs().maxCoeff());
    if (std::abs(g2(0)) > 1e-12 * gscale)
        throw MacroError("solve_macro: top data has nonzero net flux");

    // Per mode: psi0 with the actual top data and zero wall slip velocity,
    // psi1 with zero top data and unit wall slip velocity. The Navier wall
    // needs the shear map slip-velocity -> -d_y u at the wall; assembled in
    // physical space it closes a dense Nx x Nx system.
    Eigen::MatrixXcd psi0(Ny, K), psi1(Ny, K);
    Eigen::VectorXcd s0(K), s1(K); // -d_y u at the wall for each family
    for (int k = 0; k < K; ++k) {
        if (k == 0) {
            // Mean mode: v = 0 and u'' = 0 with Dirichlet values at both ends.
            Eigen::MatrixXd A = D2;
            A.row(0).setZero();
            A(0, 0) = 1.0; // u(top)
            A.row(Ny - 1).setZero();
            A(Ny - 1, Ny - 1) = 1.0; // u(wall)
            Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
            Eigen::VectorXd b0 = Eigen::VectorXd::Zero(Ny), b1 = b0;
            b0(0) = g1(0).real();
            b1(Ny - 1) = 1.0;
            Eigen::VectorXd u0 = lu.solve(b0), u1 = lu.solve(b1);
            // Stored as a streamfunction-free mode: psi columns hold u itself
            // in psi0/psi1 and are converted below.
            psi0.col(0) = u0.cast<std::complex<double>>();
            psi1.col(0) = u1.cast<std::complex<double>>();
            s0(0) = -(D.row(Ny - 1) * u0)(0);
            s1(0) = -(D.row(Ny - 1) * u1)(0);
            continue;
        }
        const double beta = beta1 * k;
        Eigen::MatrixXcd A =
            (D4 - 2.0 * beta * beta * D2).cast<std::complex<double>>();
        A.diagonal().array() += beta * beta * beta * beta;
        // Boundary rows: psi(top), psi'(top), psi'(wall), psi(wall).
        A.row(0).setZero();
        A(0, 0) = 1.0;
        A.row(1) = D.row(0).cast<std::complex<double>>();
        A.row(Ny - 2) = D.row(Ny - 1).cast<std::complex<double>>();
        A.row(Ny - 1).setZero();
        A(Ny - 1, Ny - 1) = 1.0;
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
        Eigen::VectorXcd b0 = Eigen::VectorXcd::Zero(Ny), b1 = b0;
        b0(0) = I1 * g2(k) / beta; // v(top) = -i beta psi(top) = g2
        b0(1) = g1(k);             // u(top) = psi'(top)
        b1(Ny - 2) = 1.0;          // u(wall) = psi'(wall) = 1
        psi0.col(k) = lu.solve(b0);
        psi1.col(k) = lu.solve(b1);
        s0(k) = -(D2.row(Ny - 1).cast<std::complex<double>>() * psi0.col(k))(0);
        s1(k) = -(D2.row(Ny - 1).cast<std::complex<double>>() * psi1.col(k))(0);
    }

    // Wall system in physical slip-velocity values U at the x nodes:
    // (I + diag(alpha) S) U = -diag(alpha) sb, S the shear influence matrix.
    Eigen::MatrixXcd E(Nx, K);
    for (int i = 0; i < Nx; ++i)
        for (int k = 0; k < K; ++k) E(i, k) = std::exp(I1 * (beta1 * k * xc[i]));
    Eigen::VectorXd dbl(K);
    dbl(0) = 1.0;
    for (int k = 1; k < K; ++k) dbl(k) = 2.0;
    Eigen::MatrixXcd Ed = E;
    Eigen::VectorXcd s0d = s0;
    for (int k = 0; k < K; ++k) {
        Ed.col(k) *= dbl(k) * s1(k) / double(Nx);
        s0d(k) *= dbl(k);
    }
    Eigen::MatrixXd S = (Ed * E.adjoint()).real();
    Eigen::VectorXd sb = (E * s0d).real();
    Eigen::MatrixXd M = S;
    for (int i = 0; i < Nx; ++i) {
        M.row(i) *= alpha[i];
        M(i, i) += 1.0;
        sb(i) *= -alpha[i];
    }
    Eigen::VectorXd U = M.partialPivLu().solve(sb);
    Eigen::VectorXcd Uhat = E.adjoint() * U / double(Nx);

    for (int k = 0; k < K; ++k) {
        const Eigen::VectorXcd psi = psi0.col(k) + Uhat(k) * psi1.col(k);
        if (k == 0) {
            f.u.col(0) = psi; // psi column holds u for the mean mode
            f.uy.col(0) = D.cast<std::complex<double>>() * psi;
            // v, vy, p stay zero for the mean mode
            continue;
        }
        const double beta = beta1 * k;
        f.u.col(k) = D.cast<std::complex<double>>() * psi;
        f.v.col(k) = -I1 * beta * psi;
        f.uy.col(k) = D2.cast<std::complex<double>>() * psi;
        f.vy.col(k) = -I1 * beta * f.u.col(k);
        // x-momentum: i beta p = u'' - beta^2 u
        f.p.col(k) = (D3.cast<std::complex<double>>() * psi -
                      beta * beta * f.u.col(k)) /
                     (I1 * beta);
    }
    return f;
}

Vec2 SpectralField::velocity(double x, double y) const {
    const ModePack m = interp_modes(*this, y);
    const double beta1 = 2.0 * M_PI / geom.L_per;
    return Vec2(synth(m.u, beta1, x), synth(m.v, beta1, x));
}

Eigen::Matrix2d SpectralField::velocity_gradient(double x, double y) const {
    const ModePack m = interp_modes(*this, y);
    const double beta1 = 2.0 * M_PI / geom.L_per;
    const int K = static_cast<int>(u.cols());
    Eigen::Matrix2d g;
    Eigen::VectorXcd ux(K), vx(K);
    for (int k = 0; k < K; ++k) {
        ux(k) = I1 * (beta1 * k) * m.u(k);
        vx(k) = I1 * (beta1 * k) * m.v(k);
    }
    g(0, 0) = synth(ux, beta1, x);
    g(0, 1) = synth(m.uy, beta1, x);
    g(1, 0) = synth(vx, beta1, x);
    g(1, 1) = synth(m.vy, beta1, x);
    return g;
}

double SpectralField::pressure(double x, double y) const {
    const int K = static_cast<int>(u.cols());
    Eigen::VectorXcd pk(K);
    for (int k = 0; k < K; ++k) pk(k) = bary(ycheb, p.col(k), y);
    return synth(pk, 2.0 * M_PI / geom.L_per, x);
}

double robin_residual(const SpectralField& f, const SlipFunction& slip, int n_samples) {
    const int n = n_samples > 0 ? n_samples : f.Nx;
    const double shift = n_samples > 0 ? 0.5 * f.geom.L_per / n : 0.0;
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = f.geom.L_per * i / n + shift;
        const Vec2 u = f.velocity(x, f.geom.y0);
        const Eigen::Matrix2d g = f.velocity_gradient(x, f.geom.y0);
        // wall tangent e_x, fluid-outward normal -e_y: t . d_n u = -d_y u1
        const double r = u.x() + slip.eval(x) * (-g(0, 1));
        worst = std::max(worst, std::max(std::abs(r), std::abs(u.y())));
    }
    return worst;
}

double h1_seminorm_difference(const SpectralField& a, const SpectralField& b, int nx, int ny) {
    if (a.geom.L_per != b.geom.L_per || a.geom.y0 != b.geom.y0 ||
        a.geom.y_top != b.geom.y_top)
        throw MacroError("h1_seminorm_difference: mismatched geometry");
    const double L = a.geom.L_per, hy = (a.geom.y_top - a.geom.y0) / (ny - 1);
    double acc = 0.0;
    for (int i = 0; i < nx; ++i) {
        const double x = L * i / nx;
        for (int j = 0; j < ny; ++j) {
            const double y = a.geom.y0 + hy * j;
            const Eigen::Matrix2d d = a.velocity_gradient(x, y) - b.velocity_gradient(x, y);
            const double wt = (j == 0 || j == ny - 1) ? 0.5 : 1.0;
            acc += wt * d.squaredNorm();
        }
    }
    return std::sqrt(acc * (L / nx) * hy);
}

BoundaryField reconstruct_bc(const SpectralField& macro, const Curve& c,
                             const std::vector<int>& node_class, double y0) {
    const int J = c.J;
    if (static_cast<int>(node_class.size()) != J)
        throw MacroError("reconstruct_bc: node_class size mismatch");
    BoundaryField h = BoundaryField::zero(c);
    h.curve_id = c.id;

    // fixed nodes: rough wall (zero) or macro trace (class 1 at/above y0);
    // parameter derivative of the prescribed data at fixed nodes, for the
    // gap-fill endpoint conditions.
    std::vector<bool> fixed(J, false);
    std::vector<Vec2> dval(J, Vec2::Zero());
    for (int j = 0; j < J; ++j) {
        if (node_class[j] == 0) {
            fixed[j] = true; // h = 0, dh/dt = 0
        } else if (c.x[j].y() >= y0 - 1e-12) {
            fixed[j] = true;
            h.set(j, macro.velocity(c.x[j].x(), c.x[j].y()));
            dval[j] = macro.velocity_gradient(c.x[j].x(), c.x[j].y()) * c.dx[j];
        }
    }

    std::vector<std::vector<int>> gaps;
    {
        int start = -1;
        for (int j = 0; j < J; ++j)
            if (fixed[j]) {
                start = j;
                break;
            }
        if (start < 0) throw MacroError("reconstruct_bc: no fixed nodes");
        std::vector<int> cur;
        for (int s = 1; s <= J; ++s) {
            const int j = (start + s) % J;
            if (fixed[j]) {
                if (!cur.empty()) gaps.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(j);
            }
        }
    }
    if (gaps.empty()) return h;

    // One degree-5 polynomial per gap and component over tau in [0,1];
    // minimize the parameter-derivative energy sum_g (1/dt_g) int |p'|^2 dtau
    // subject to endpoint value/derivative matching and exact zero net flux
    // through the whole boundary.
    const int G = static_cast<int>(gaps.size());
    const int nv = 12 * G;              // 6 coeffs x 2 components per gap
    const int nc = 8 * G + 1;           // 4 endpoint conditions x 2 comps + flux
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nv, nv);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nc, nv);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(nc);

    double flux_fixed = 0.0;
    for (int j = 0; j < J; ++j)
        if (fixed[j]) flux_fixed += c.w[j] * h.at(j).dot(c.normal[j]);
    const int frow = 8 * G;
    b(frow) = -flux_fixed;

    std::vector<double> gap_t0(G), gap_dt(G);
    for (int g = 0; g < G; ++g) {
        const int ip = (gaps[g].front() - 1 + J) % J; // fixed predecessor
        const int is = (gaps[g].back() + 1) % J;      // fixed successor
        double t0 = c.t[ip], t1 = c.t[is];
        if (t1 <= t0) t1 += 2.0 * M_PI;
        const double dt = t1 - t0;
        gap_t0[g] = t0;
        gap_dt[g] = dt;
        for (int comp = 0; comp < 2; ++comp) {
            const int off = 12 * g + 6 * comp;
            for (int m = 1; m <= 5; ++m)
                for (int n = 1; n <= 5; ++n)
                    H(off + m, off + n) = double(m) * double(n) / double(m + n - 1) / dt;
            const int crow = 8 * g + 4 * comp;
            // p(0), p(1), p'(0), p'(1) in tau; derivative data scales by dt
            A(crow + 0, off + 0) = 1.0;
            for (int m = 0; m <= 5; ++m) A(crow + 1, off + m) = 1.0;
            A(crow + 2, off + 1) = 1.0;
            for (int m = 1; m <= 5; ++m) A(crow + 3, off + m) = double(m);
            b(crow + 0) = h.at(ip)(comp);
            b(crow + 1) = h.at(is)(comp);
            b(crow + 2) = dval[ip](comp) * dt;
            b(crow + 3) = dval[is](comp) * dt;
            for (int j : gaps[g]) {
                double tj = c.t[j];
                if (tj < t0) tj += 2.0 * M_PI;
                const double tau = (tj - t0) / dt;
                double pw = 1.0;
                const double nj = c.w[j] * c.normal[j](comp);
                for (int m = 0; m <= 5; ++m) {
                    A(frow, off + m) += nj * pw;
                    pw *= tau;
                }
            }
        }
    }

    Eigen::MatrixXd KKT = Eigen::MatrixXd::Zero(nv + nc, nv + nc);
    KKT.topLeftCorner(nv, nv) = 2.0 * H;
    KKT.topRightCorner(nv, nc) = A.transpose();
    KKT.bottomLeftCorner(nc, nv) = A;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv + nc);
    rhs.tail(nc) = b;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(KKT);
    if (!lu.isInvertible()) throw MacroError("reconstruct_bc: singular gap system");
    const Eigen::VectorXd sol = lu.solve(rhs);

    for (int g = 0; g < G; ++g)
        for (int j : gaps[g]) {
            double tj = c.t[j];
            if (tj < gap_t0[g]) tj += 2.0 * M_PI;
            const double tau = (tj - gap_t0[g]) / gap_dt[g];
            Vec2 val;
            for (int comp = 0; comp < 2; ++comp) {
                const int off = 12 * g + 6 * comp;
                double acc = 0.0, pw = 1.0;
                for (int m = 0; m <= 5; ++m) {
                    acc += sol(off + m) * pw;
                    pw *= tau;
                }
                val(comp) = acc;
            }
            h.set(j, val);
        }
    return h;
}

} // namespace rws
