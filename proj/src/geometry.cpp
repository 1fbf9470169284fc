#include "rws/geometry.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>

#include <Eigen/Cholesky>

namespace rws {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

double Curve::arclength() const {
    double s = 0.0;
    for (double wj : w) s += wj;
    return s;
}

LineSegment LineSegment::make(const Vec2& a, const Vec2& b, int nq) {
    if ((b - a).norm() <= 0.0) throw GeometryError("degenerate line segment");
    LineSegment seg;
    seg.a = a;
    seg.b = b;
    seg.tangent_L = (b - a).normalized();
    seg.normal_L = Vec2(seg.tangent_L.y(), -seg.tangent_L.x());
    seg.nq = nq;
    return seg;
}

std::uint64_t NormalRng::next() {
    // splitmix64: small, stable across platforms, good enough for sampling.
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double NormalRng::uniform() {
    // 53-bit mantissa in (0,1)
    return (static_cast<double>(next() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

double NormalRng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double th = kTwoPi * u2;
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
}

std::vector<double> sample_rough_wall(const GpConfig& cfg) {
    if (cfg.corr_len <= 0.0) throw ConfigError("corr_len must be positive");
    if (cfg.variance < 0.0) throw ConfigError("variance must be non-negative");
    const int n = cfg.n_points;
    std::vector<double> out(n, 0.0);
    if (cfg.variance == 0.0) return out;

    Eigen::MatrixXd C(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double dx = std::abs(i - j) / static_cast<double>(n - 1);
            C(i, j) = cfg.variance * std::exp(-dx / cfg.corr_len);
        }
        C(i, i) += 1e-12;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(C);
    if (llt.info() != Eigen::Success) throw GeometryError("GP covariance not SPD");
    Eigen::VectorXd z(n);
    NormalRng rng(cfg.seed);
    for (int i = 0; i < n; ++i) z(i) = rng.normal();
    Eigen::VectorXd s = llt.matrixL() * z;
    for (int i = 0; i < n; ++i) out[i] = s(i);
    return out;
}

CubicSpline::CubicSpline(std::vector<double> xs, std::vector<double> ys, bool clamp,
                         double slope_a, double slope_b)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
    const int n = static_cast<int>(xs_.size());
    if (n < 3) throw GeometryError("spline needs >= 3 points");
    // Tridiagonal system for second derivatives M_i.
    Eigen::VectorXd dl(n - 1), d(n), du(n - 1), rhs(n);
    auto h = [&](int i) { return xs_[i + 1] - xs_[i]; };
    auto slope = [&](int i) { return (ys_[i + 1] - ys_[i]) / h(i); };
    for (int i = 1; i < n - 1; ++i) {
        dl(i - 1) = h(i - 1);
        d(i) = 2.0 * (h(i - 1) + h(i));
        du(i) = h(i);
        rhs(i) = 6.0 * (slope(i) - slope(i - 1));
    }
    if (clamp) {
        d(0) = 2.0 * h(0);
        du(0) = h(0);
        rhs(0) = 6.0 * (slope(0) - slope_a);
        d(n - 1) = 2.0 * h(n - 2);
        dl(n - 2) = h(n - 2);
        rhs(n - 1) = 6.0 * (slope_b - slope(n - 2));
    } else {
        d(0) = 1.0; du(0) = 0.0; rhs(0) = 0.0;
        d(n - 1) = 1.0; dl(n - 2) = 0.0; rhs(n - 1) = 0.0;
    }
    // Thomas algorithm.
    std::vector<double> cp(n - 1), dp(n);
    cp[0] = du(0) / d(0);
    dp[0] = rhs(0) / d(0);
    for (int i = 1; i < n; ++i) {
        double m = d(i) - dl(i - 1) * cp[i - 1];
        if (i < n - 1) cp[i] = du(i) / m;
        dp[i] = (rhs(i) - dl(i - 1) * dp[i - 1]) / m;
    }
    c2_.resize(n);
    c2_[n - 1] = dp[n - 1];
    for (int i = n - 2; i >= 0; --i) c2_[i] = dp[i] - cp[i] * c2_[i + 1];
}

int CubicSpline::find(double x) const {
    int lo = 0, hi = static_cast<int>(xs_.size()) - 2;
    if (x <= xs_.front()) return 0;
    if (x >= xs_.back()) return hi;
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    int i = static_cast<int>(it - xs_.begin()) - 1;
    return std::clamp(i, lo, hi);
}

double CubicSpline::eval(double x) const {
    int i = find(x);
    double h = xs_[i + 1] - xs_[i];
    double A = (xs_[i + 1] - x) / h, B = (x - xs_[i]) / h;
    return A * ys_[i] + B * ys_[i + 1] +
           ((A * A * A - A) * c2_[i] + (B * B * B - B) * c2_[i + 1]) * h * h / 6.0;
}

double CubicSpline::deriv(double x) const {
    int i = find(x);
    double h = xs_[i + 1] - xs_[i];
    double A = (xs_[i + 1] - x) / h, B = (x - xs_[i]) / h;
    return (ys_[i + 1] - ys_[i]) / h +
           ((3 * B * B - 1) * c2_[i + 1] - (3 * A * A - 1) * c2_[i]) * h / 6.0;
}

double CubicSpline::deriv2(double x) const {
    int i = find(x);
    double h = xs_[i + 1] - xs_[i];
    double A = (xs_[i + 1] - x) / h, B = (x - xs_[i]) / h;
    return A * c2_[i] + B * c2_[i + 1];
}

Vec2 QuinticPatch::eval(double s) const {
    double p = 1.0;
    Vec2 r = Vec2::Zero();
    for (int k = 0; k < 6; ++k) {
        r.x() += cx[k] * p;
        r.y() += cy[k] * p;
        p *= s;
    }
    return r;
}

Vec2 QuinticPatch::deriv(double s) const {
    double p = 1.0;
    Vec2 r = Vec2::Zero();
    for (int k = 1; k < 6; ++k) {
        r.x() += k * cx[k] * p;
        r.y() += k * cy[k] * p;
        p *= s;
    }
    return r;
}

Vec2 QuinticPatch::deriv2(double s) const {
    double p = 1.0;
    Vec2 r = Vec2::Zero();
    for (int k = 2; k < 6; ++k) {
        r.x() += k * (k - 1) * cx[k] * p;
        r.y() += k * (k - 1) * cy[k] * p;
        p *= s;
    }
    return r;
}

QuinticPatch QuinticPatch::fit(const Vec2& p0, const Vec2& d0, const Vec2& dd0,
                               const Vec2& p1, const Vec2& d1, const Vec2& dd1) {
    // Conditions at s=0 pin c0..c2; remaining 3 coefficients from s=1.
    Eigen::Matrix3d M;
    M << 1, 1, 1,
         3, 4, 5,
         6, 12, 20;
    QuinticPatch q;
    for (int c = 0; c < 2; ++c) {
        double a0 = p0(c), a1 = d0(c), a2 = dd0(c) / 2.0;
        Eigen::Vector3d rhs(p1(c) - (a0 + a1 + a2),
                            d1(c) - (a1 + 2 * a2),
                            dd1(c) - 2 * a2);
        Eigen::Vector3d hi = M.partialPivLu().solve(rhs);
        auto& cc = (c == 0) ? q.cx : q.cy;
        cc = {a0, a1, a2, hi(0), hi(1), hi(2)};
    }
    return q;
}

Curve discretize_parametric(const ParametricMap& map, int J) {
    if (J < 4) throw GeometryError("J too small");
    Curve c;
    c.J = J;
    c.t.resize(J);
    c.x.resize(J);
    c.dx.resize(J);
    c.ddx.resize(J);
    c.normal.resize(J);
    c.tangent.resize(J);
    c.kappa.resize(J);
    c.w.resize(J);
    static std::atomic<std::uint64_t> next_id{1};
    c.id = next_id.fetch_add(1);
    for (int j = 0; j < J; ++j) {
        double t = kTwoPi * j / J;
        c.t[j] = t;
        Vec2 p, d, dd;
        map(t, p, d, dd);
        double sp = d.norm();
        if (sp <= 0.0) throw GeometryError("vanishing parameterization speed");
        c.x[j] = p;
        c.dx[j] = d;
        c.ddx[j] = dd;
        c.tangent[j] = d / sp;
        c.normal[j] = Vec2(c.tangent[j].y(), -c.tangent[j].x());
        c.kappa[j] = (d.x() * dd.y() - d.y() * dd.x()) / (sp * sp * sp);
        c.w[j] = (kTwoPi / J) * sp;
    }
    if (!polyline_simple(c.x)) throw GeometryError("self-intersecting discretization");
    return c;
}

bool polyline_simple(const std::vector<Vec2>& pts) {
    const int n = static_cast<int>(pts.size());
    auto seg_intersect = [](const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
        auto cross = [](const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); };
        double d1 = cross(q2 - q1, p1 - q1);
        double d2 = cross(q2 - q1, p2 - q1);
        double d3 = cross(p2 - p1, q1 - p1);
        double d4 = cross(p2 - p1, q2 - p1);
        return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
    };
    for (int i = 0; i < n; ++i) {
        Vec2 a1 = pts[i], a2 = pts[(i + 1) % n];
        for (int j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue; // shared endpoint with closing edge
            Vec2 b1 = pts[j], b2 = pts[(j + 1) % n];
            if (seg_intersect(a1, a2, b1, b2)) return false;
        }
    }
    return true;
}

namespace {

// Piecewise boundary in a provisional parameter tau; rescaled to [0, 2*pi).
struct Piece {
    double tau0 = 0.0, dtau = 0.0;
    std::function<void(double s, Vec2&, Vec2&, Vec2&)> map; // derivatives in s
    bool is_wall = false;
};

double patch_arclength(const QuinticPatch& q) {
    // 64-pt Gauss-Legendre on [0,1]; speeds are smooth polynomials.
    static const int N = 64;
    static std::vector<double> xs, ws;
    if (xs.empty()) {
        // Golub-Welsch via Eigen symmetric eigensolver.
        Eigen::MatrixXd Jm = Eigen::MatrixXd::Zero(N, N);
        for (int i = 1; i < N; ++i) {
            double b = i / std::sqrt(4.0 * i * i - 1.0);
            Jm(i, i - 1) = b;
            Jm(i - 1, i) = b;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Jm);
        for (int i = 0; i < N; ++i) {
            xs.push_back(0.5 * (es.eigenvalues()(i) + 1.0));
            double v = es.eigenvectors()(0, i);
            ws.push_back(v * v); // weights sum to 1 on [0,1] (2*v^2 on [-1,1])
        }
    }
    double L = 0.0;
    for (int i = 0; i < N; ++i) L += ws[i] * q.deriv(xs[i]).norm();
    return L;
}

struct EndState {
    Vec2 p, d, dd; // derivatives with respect to the local piece parameter s
};

// Build a corner patch between two endpoint states whose s-derivatives are
// scaled by zeta (the patch's provisional parameter length relative to the
// neighbours' unit-speed-in-s convention), tuning zeta so the patch arclength
// equals target.
QuinticPatch tuned_corner(const EndState& e0, const EndState& e1, double target,
                          double& zeta_out) {
    auto build = [&](double zeta) {
        return QuinticPatch::fit(e0.p, e0.d * zeta, e0.dd * (zeta * zeta),
                                 e1.p, e1.d * zeta, e1.dd * (zeta * zeta));
    };
    // Bracket: arclength is increasing in zeta near the useful range.
    double lo = 1e-3, hi = 1.0;
    auto len = [&](double z) { return patch_arclength(build(z)); };
    double flo = len(lo) - target, fhi = len(hi) - target;
    int guard = 0;
    while (flo > 0 && guard++ < 60) { lo *= 0.5; flo = len(lo) - target; }
    guard = 0;
    while (fhi < 0 && guard++ < 60) { hi *= 1.5; fhi = len(hi) - target; }
    if (flo > 0 || fhi < 0) throw GeometryError("corner arclength tuning failed to bracket");
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = len(mid) - target;
        if (std::abs(fm) < 1e-13 || (hi - lo) < 1e-15) { lo = hi = mid; break; }
        if ((fm > 0) == (fhi > 0)) { hi = mid; fhi = fm; }
        else { lo = mid; flo = fm; }
    }
    zeta_out = 0.5 * (lo + hi);
    return build(zeta_out);
}

} // namespace

MicroDomain build_micro_domain(const MicroDomainSpec& spec,
                               const std::vector<double>& wall, int J) {
    const double W = spec.width;
    const double r = spec.corner_radius;
    if (r <= 0.0) throw GeometryError("corner_radius must be positive");
    if (spec.line_offset <= 0.0 || spec.line_offset >= spec.height)
        throw GeometryError("line_offset must lie in (0, height)");

    double wall_max = 0.0;
    for (double v : wall) wall_max = std::max(wall_max, std::abs(v));
    if (wall_max >= spec.line_offset)
        throw GeometryError("wall roughness exceeds line_offset");

    // The box spans [wall mean, height] vertically; the evaluation line sits
    // at line_offset in between (gamma1 = line_offset, gamma2 = height - line_offset).
    const double x_left = -W / 2.0, x_right = W / 2.0;
    const double y_top = spec.height;

    // Spline of wall samples on uniform grid over [x_left, x_right], clamped
    // flat at both ends so the corner blend starts from a well-defined state.
    const int n = static_cast<int>(wall.size());
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i)
        xs[i] = x_left + (x_right - x_left) * i / static_cast<double>(n - 1);
    auto spline = std::make_shared<CubicSpline>(xs, wall, true, 0.0, 0.0);

    // Wall piece spans [x_left + r, x_right - r]. s-parameterization is affine
    // in x at unit arclength-rate in the x direction (speed |(1, s')|).
    const double xw0 = x_left + r, xw1 = x_right - r;
    const double yw0 = spline->eval(xw0), yw1 = spline->eval(xw1);

    // Endpoint states in a unit-speed-like convention: straight pieces and the
    // wall piece are parameterized so |d/ds| = piece length (s in [0,1]).
    auto wall_state = [&](double x) {
        EndState e;
        double sp = spline->deriv(x), spp = spline->deriv2(x);
        double Lx = xw1 - xw0;
        e.p = Vec2(x, spline->eval(x));
        e.d = Vec2(Lx, sp * Lx);
        e.dd = Vec2(0.0, spp * Lx * Lx);
        return e;
    };
    auto line_state = [&](const Vec2& p, const Vec2& dir_times_len) {
        EndState e;
        e.p = p;
        e.d = dir_times_len;
        e.dd = Vec2::Zero();
        return e;
    };

    // Corner target arclength: quarter-turn of radius r.
    const double corner_len = 1.5707963267948966192313216916398 * r;
    // Side/top endpoints.
    const Vec2 br_lo(xw1, yw1), br_hi(x_right, yw1 + r);
    const Vec2 tr_lo(x_right, y_top - r), tr_hi(x_right - r, y_top);
    const Vec2 tl_lo(x_left + r, y_top), tl_hi(x_left, y_top - r);
    const Vec2 bl_lo(x_left, yw0 + r), bl_hi(xw0, yw0);

    const double side_r_len = tr_lo.y() - br_hi.y();
    const double side_l_len = tl_hi.y() - bl_lo.y(); // traversed downward
    const double top_len = (x_right - r) - (x_left + r);
    if (side_r_len <= 0 || side_l_len <= 0 || top_len <= 0)
        throw GeometryError("box too small for corner radius");

    // Endpoint states (derivatives scaled so that s in [0,1] covers the piece
    // with |d| = length for straights; the wall uses its own x-affine rule).
    EndState w_end = wall_state(xw1);
    EndState w_start = wall_state(xw0);
    EndState sr0 = line_state(br_hi, Vec2(0, side_r_len));
    EndState sr1 = line_state(tr_lo, Vec2(0, side_r_len));
    EndState tp0 = line_state(tr_hi, Vec2(-top_len, 0));
    EndState tp1 = line_state(tl_lo, Vec2(-top_len, 0));
    EndState sl0 = line_state(tl_hi, Vec2(0, -side_l_len));
    EndState sl1 = line_state(bl_lo, Vec2(0, -side_l_len));

    double z_br, z_tr, z_tl, z_bl;
    QuinticPatch c_br = tuned_corner(w_end, sr0, corner_len, z_br);
    QuinticPatch c_tr = tuned_corner(sr1, tp0, corner_len, z_tr);
    QuinticPatch c_tl = tuned_corner(tp1, sl0, corner_len, z_tl);
    QuinticPatch c_bl = tuned_corner(sl1, w_start, corner_len, z_bl);

    // Curvature check on the corner patches.
    for (const QuinticPatch* q : {&c_br, &c_tr, &c_tl, &c_bl}) {
        for (int i = 0; i <= 50; ++i) {
            double s = i / 50.0;
            Vec2 d = q->deriv(s), dd = q->deriv2(s);
            double sp = d.norm();
            double k = std::abs(d.x() * dd.y() - d.y() * dd.x()) / (sp * sp * sp);
            if (k > spec.gp.curvature_bound)
                throw GeometryError("corner curvature exceeds bound");
        }
    }

    // Assemble pieces with provisional parameter lengths. Straight/wall pieces
    // get dtau = 1 (their s IS the provisional parameter unit); corner patches
    // get dtau = zeta so the global map stays C^2 at the joints.
    std::vector<Piece> pieces;
    auto add = [&](double dtau, std::function<void(double, Vec2&, Vec2&, Vec2&)> f,
                   bool is_wall) {
        Piece p;
        p.dtau = dtau;
        p.map = std::move(f);
        p.is_wall = is_wall;
        pieces.push_back(std::move(p));
    };
    double Lxw = xw1 - xw0;
    add(1.0,
        [spline, xw0, Lxw](double s, Vec2& p, Vec2& d, Vec2& dd) {
            double x = xw0 + Lxw * s;
            p = Vec2(x, spline->eval(x));
            d = Vec2(Lxw, spline->deriv(x) * Lxw);
            dd = Vec2(0.0, spline->deriv2(x) * Lxw * Lxw);
        },
        true);
    auto patch_map = [](QuinticPatch q) {
        return [q](double s, Vec2& p, Vec2& d, Vec2& dd) {
            p = q.eval(s);
            d = q.deriv(s);
            dd = q.deriv2(s);
        };
    };
    auto line_map = [](Vec2 p0, Vec2 dir) {
        return [p0, dir](double s, Vec2& p, Vec2& d, Vec2& dd) {
            p = p0 + dir * s;
            d = dir;
            dd = Vec2::Zero();
        };
    };
    add(z_br, patch_map(c_br), true);
    add(1.0, line_map(br_hi, Vec2(0, side_r_len)), false);
    add(z_tr, patch_map(c_tr), false);
    add(1.0, line_map(tr_hi, Vec2(-top_len, 0)), false);
    add(z_tl, patch_map(c_tl), false);
    add(1.0, line_map(tl_hi, Vec2(0, -side_l_len)), false);
    add(z_bl, patch_map(c_bl), true);

    double T = 0.0;
    for (auto& p : pieces) {
        p.tau0 = T;
        T += p.dtau;
    }
    const double scale = T / kTwoPi; // tau = t * scale

    ParametricMap global = [pieces, T, scale](double t, Vec2& p, Vec2& d, Vec2& dd) {
        double tau = t * scale;
        tau = std::fmod(tau, T);
        if (tau < 0) tau += T;
        // find piece
        int idx = static_cast<int>(pieces.size()) - 1;
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            if (tau < pieces[i].tau0 + pieces[i].dtau) {
                idx = static_cast<int>(i);
                break;
            }
        }
        const Piece& pc = pieces[idx];
        double s = (tau - pc.tau0) / pc.dtau;
        Vec2 ds, dds;
        pc.map(s, p, ds, dds);
        double j1 = scale / pc.dtau; // ds/dt
        d = ds * j1;
        dd = dds * j1 * j1;
    };

    MicroDomain md;
    md.curve = discretize_parametric(global, J);
    md.map = global;
    for (const auto& p : pieces) md.joints_t.push_back(p.tau0 / scale);
    md.wall_mean = 0.0;
    // Node classification by provisional parameter: wall + bottom corners -> 0.
    md.node_class.resize(J, 1);
    double wall_end_1 = pieces[1].tau0 + pieces[1].dtau; // end of corner BR
    double wall_start_2 = pieces[7].tau0;                // start of corner BL
    for (int j = 0; j < J; ++j) {
        double tau = md.curve.t[j] * scale;
        if (tau < wall_end_1 - 1e-12 || tau >= wall_start_2 - 1e-12) md.node_class[j] = 0;
    }

    // Evaluation segment: spans the box at line_offset, inset so its endpoints
    // stay clear of the side walls.
    double inset = std::max(r, 0.05 * W);
    md.segment = LineSegment::make(Vec2(x_left + inset, spec.line_offset),
                                   Vec2(x_right - inset, spec.line_offset));
    return md;
}

} // namespace rws
