#include "rws/reference.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Sparse>

namespace rws {

namespace {

struct Stencil {
    // coefficients of the mapped Laplacian at offsets in (i, j)
    double c{}, xp{}, xm{}, ep{}, em{}, pp{}, pm{}, mp{}, mm{};
};

// Delta f = f_xx + 2 a f_xeta + (a^2 + b^2) f_etaeta + ceta f_eta on the map
// y = w + eta (y_top - w); a = -w' (1 - eta) / H, b = 1/H, H = y_top - w.
Stencil laplacian_stencil(double a, double b, double ceta, double hx, double he) {
    Stencil s;
    const double ixx = 1.0 / (hx * hx), iee = 1.0 / (he * he);
    const double ixe = 2.0 * a / (4.0 * hx * he), ie = ceta / (2.0 * he);
    const double aee = (a * a + b * b) * iee;
    s.c = -2.0 * ixx - 2.0 * aee;
    s.xp = ixx;
    s.xm = ixx;
    s.ep = aee + ie;
    s.em = aee - ie;
    s.pp = ixe;
    s.mm = ixe;
    s.pm = -ixe;
    s.mp = -ixe;
    return s;
}

} // namespace

ReferenceField solve_reference(const RoughChannelSpec& spec, int nx, int ny) {
    if (nx < 8 || ny < 8) throw ReferenceError("grid too small");
    if (!spec.wall || !spec.wall_d1 || !spec.wall_d2 || !spec.g1_top)
        throw ReferenceError("wall/top data callbacks missing");
    if (spec.min_wavelength > 0.0 &&
        nx * spec.min_wavelength < 16.0 * spec.L_per - 1e-12)
        throw ReferenceError("fewer than 16 cells per wall wavelength");

    const double L = spec.L_per, hx = L / nx, he = 1.0 / ny;
    const int nyp = ny + 1;
    // grading map eta = s(xi): the FD grid is uniform in xi
    const double g = spec.grading;
    const double E = g > 0.0 ? std::expm1(g) : 0.0;
    std::vector<double> seta(nyp), sp(nyp), spp(nyp);
    for (int j = 0; j <= ny; ++j) {
        const double xi = he * j;
        if (g > 0.0) {
            const double ex = std::exp(g * xi);
            seta[j] = (ex - 1.0) / E;
            sp[j] = g * ex / E;
            spp[j] = g * g * ex / E;
        } else {
            seta[j] = xi;
            sp[j] = 1.0;
            spp[j] = 0.0;
        }
    }
    std::vector<double> w(nx), w1(nx), w2(nx), g1(nx);
    for (int i = 0; i < nx; ++i) {
        const double x = hx * i;
        w[i] = spec.wall(x);
        w1[i] = spec.wall_d1(x);
        w2[i] = spec.wall_d2(x);
        g1[i] = spec.g1_top(x);
        if (w[i] >= spec.y_top) throw ReferenceError("wall reaches the top");
    }

    // unknowns: psi, omega interleaved per node, then Q
    const int n = 2 * nx * nyp + 1;
    const int iQ = n - 1;
    auto ip = [&](int i, int j) { return 2 * (((i + nx) % nx) * nyp + j); };
    auto io = [&](int i, int j) { return ip(i, j) + 1; };

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(24 * static_cast<size_t>(nx) * nyp);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);

    for (int i = 0; i < nx; ++i) {
        const double H = spec.y_top - w[i], b = 1.0 / H;
        for (int j = 0; j <= ny; ++j) {
            const int rp = ip(i, j), ro = io(i, j);
            if (j == 0) {
                // wall: psi = 0 and psi_eta = 0 (no-slip)
                trip.emplace_back(rp, ip(i, 0), 1.0);
                trip.emplace_back(ro, ip(i, 0), -3.0 / (2.0 * he));
                trip.emplace_back(ro, ip(i, 1), 4.0 / (2.0 * he));
                trip.emplace_back(ro, ip(i, 2), -1.0 / (2.0 * he));
                continue;
            }
            if (j == ny) {
                // top: psi = Q and b psi_eta = g1
                trip.emplace_back(rp, ip(i, ny), 1.0);
                trip.emplace_back(rp, iQ, -1.0);
                trip.emplace_back(ro, ip(i, ny), b / sp[ny] * 3.0 / (2.0 * he));
                trip.emplace_back(ro, ip(i, ny - 1), b / sp[ny] * -4.0 / (2.0 * he));
                trip.emplace_back(ro, ip(i, ny - 2), b / sp[ny] * 1.0 / (2.0 * he));
                rhs(ro) = g1[i];
                continue;
            }
            const double eta = seta[j];
            const double a = -w1[i] * (1.0 - eta) * b;
            const double ceta = -(1.0 - eta) * (w2[i] * b + 2.0 * w1[i] * w1[i] * b * b);
            // in xi coordinates: f_eta = f_xi/s', f_etaeta = f_xixi/s'^2
            //                    - f_xi s''/s'^3, f_xeta = f_xxi/s'
            const double at = a / sp[j], bt = b / sp[j];
            const double ct = ceta / sp[j] - (a * a + b * b) * spp[j] / (sp[j] * sp[j] * sp[j]);
            const Stencil s = laplacian_stencil(at, bt, ct, hx, he);
            // Delta psi + omega = 0
            trip.emplace_back(rp, ip(i, j), s.c);
            trip.emplace_back(rp, ip(i + 1, j), s.xp);
            trip.emplace_back(rp, ip(i - 1, j), s.xm);
            trip.emplace_back(rp, ip(i, j + 1), s.ep);
            trip.emplace_back(rp, ip(i, j - 1), s.em);
            trip.emplace_back(rp, ip(i + 1, j + 1), s.pp);
            trip.emplace_back(rp, ip(i - 1, j - 1), s.mm);
            trip.emplace_back(rp, ip(i + 1, j - 1), s.pm);
            trip.emplace_back(rp, ip(i - 1, j + 1), s.mp);
            trip.emplace_back(rp, io(i, j), 1.0);
            // Delta omega = 0
            trip.emplace_back(ro, io(i, j), s.c);
            trip.emplace_back(ro, io(i + 1, j), s.xp);
            trip.emplace_back(ro, io(i - 1, j), s.xm);
            trip.emplace_back(ro, io(i, j + 1), s.ep);
            trip.emplace_back(ro, io(i, j - 1), s.em);
            trip.emplace_back(ro, io(i + 1, j + 1), s.pp);
            trip.emplace_back(ro, io(i - 1, j - 1), s.mm);
            trip.emplace_back(ro, io(i + 1, j - 1), s.pm);
            trip.emplace_back(ro, io(i - 1, j + 1), s.mp);
        }
        // closure: G L = -int_top omega_y dx, omega_y = b omega_eta on the top
        const double f = -hx * b / sp[ny] / (2.0 * he);
        trip.emplace_back(iQ, io(i, ny), f * 3.0);
        trip.emplace_back(iQ, io(i, ny - 1), f * -4.0);
        trip.emplace_back(iQ, io(i, ny - 2), f * 1.0);
    }
    rhs(iQ) = spec.G * L;

    Eigen::SparseMatrix<double> A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success) throw ReferenceError("sparse factorization failed");
    const Eigen::VectorXd sol = lu.solve(rhs);
    if (lu.info() != Eigen::Success) throw ReferenceError("sparse solve failed");

    ReferenceField f;
    f.L_per = L;
    f.y_top = spec.y_top;
    f.nx = nx;
    f.ny = ny;
    f.wall = spec.wall;
    f.psi.resize(nyp, nx);
    f.om.resize(nyp, nx);
    f.u.resize(nyp, nx);
    f.v.resize(nyp, nx);
    f.Q = sol(iQ);
    f.grading = g;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j <= ny; ++j) {
            f.psi(j, i) = sol(ip(i, j));
            f.om(j, i) = sol(io(i, j));
        }
    // nodal velocities: u = b psi_eta, v = -(psi_x + a psi_eta)
    for (int i = 0; i < nx; ++i) {
        const double H = spec.y_top - w[i], b = 1.0 / H;
        for (int j = 0; j <= ny; ++j) {
            double pe;
            if (j == 0)
                pe = (-3.0 * f.psi(0, i) + 4.0 * f.psi(1, i) - f.psi(2, i)) / (2.0 * he);
            else if (j == ny)
                pe = (3.0 * f.psi(ny, i) - 4.0 * f.psi(ny - 1, i) + f.psi(ny - 2, i)) /
                     (2.0 * he);
            else
                pe = (f.psi(j + 1, i) - f.psi(j - 1, i)) / (2.0 * he);
            const double px =
                (f.psi(j, (i + 1) % nx) - f.psi(j, (i + nx - 1) % nx)) / (2.0 * hx);
            pe /= sp[j]; // psi_eta from psi_xi
            const double a = -w1[i] * (1.0 - seta[j]) * b;
            f.u(j, i) = b * pe;
            f.v(j, i) = -(px + a * pe);
        }
    }
    return f;
}

namespace {

double bilinear(const Eigen::MatrixXd& m, int nx, int ny, double xi, double eta) {
    // xi in cell units (periodic), eta in [0, 1]
    const int i0 = static_cast<int>(std::floor(xi));
    const double fx = xi - i0;
    double ej = eta * ny;
    ej = std::min(std::max(ej, 0.0), static_cast<double>(ny));
    int j0 = static_cast<int>(std::floor(ej));
    if (j0 >= ny) j0 = ny - 1;
    const double fy = ej - j0;
    const int ia = ((i0 % nx) + nx) % nx, ib = (ia + 1) % nx;
    return (1 - fx) * (1 - fy) * m(j0, ia) + fx * (1 - fy) * m(j0, ib) +
           (1 - fx) * fy * m(j0 + 1, ia) + fx * fy * m(j0 + 1, ib);
}

} // namespace

namespace {

// invert the grading map: xi = s^{-1}(eta)
double to_xi(double eta, double grading) {
    if (grading <= 0.0) return eta;
    return std::log1p(eta * std::expm1(grading)) / grading;
}

} // namespace

Vec2 ReferenceField::velocity(double x, double y) const {
    const double wx = wall(x);
    const double eta = (y - wx) / (y_top - wx);
    if (eta < -1e-9 || eta > 1.0 + 1e-9)
        throw ReferenceError("evaluation point outside the channel");
    const double xi = x / (L_per / nx);
    const double c = to_xi(std::clamp(eta, 0.0, 1.0), grading);
    return Vec2(bilinear(u, nx, ny, xi, c), bilinear(v, nx, ny, xi, c));
}

double ReferenceField::vorticity(double x, double y) const {
    const double wx = wall(x);
    const double eta = (y - wx) / (y_top - wx);
    if (eta < -1e-9 || eta > 1.0 + 1e-9)
        throw ReferenceError("evaluation point outside the channel");
    return bilinear(om, nx, ny, x / (L_per / nx),
                    to_xi(std::clamp(eta, 0.0, 1.0), grading));
}

std::vector<Vec2> lowpass_x(const std::vector<Vec2>& line, double L_per, double eps) {
    const int n = static_cast<int>(line.size());
    if (n == 0) throw ReferenceError("empty line");
    if (eps <= 0.0) throw ReferenceError("cutoff wavelength must be positive");
    const int kcut = static_cast<int>(std::floor(L_per / eps + 1e-9));
    const int kmax = n / 2;
    std::vector<Vec2> out(n, Vec2::Zero());
    const std::complex<double> I1(0.0, 1.0);
    for (int comp = 0; comp < 2; ++comp) {
        for (int k = 0; k <= std::min(kcut, kmax); ++k) {
            std::complex<double> c = 0.0;
            for (int i = 0; i < n; ++i)
                c += line[i](comp) * std::exp(-I1 * (2.0 * M_PI * k * i / double(n)));
            c /= double(n);
            const double dbl = (k == 0 || 2 * k == n) ? 1.0 : 2.0;
            for (int i = 0; i < n; ++i)
                out[i](comp) +=
                    dbl * (c * std::exp(I1 * (2.0 * M_PI * k * i / double(n)))).real();
        }
    }
    return out;
}

} // namespace rws
