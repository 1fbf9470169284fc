#include "rws/riesz.hpp"

#include <cmath>
#include <complex>
#include <limits>

namespace rws {

namespace {
constexpr double kPi = 3.1415926535897932384626433832795;
using Cplx = std::complex<double>;

Cplx to_c(const Vec2& v) { return {v.x(), v.y()}; }

// First-kind intermediate representor at a boundary point xi with unit normal
// n, for the segment a->b, as an integral (not yet length-normalized).
// Complex-variable closed form; real vector recovered as (Im c, -Re c).
// Only the quotient (xi-a)/(xi-b) enters the logarithm, so the principal
// branch is safe for segments strictly inside the domain.
Cplx rt1_closed(Cplx xi, Cplx n, Cplx za, Cplx zb, Cplx t) {
    Cplx znl = -Cplx(0, 1) * t; // line normal (t_y, -t_x)
    Cplx lg = std::log((xi - za) / (xi - zb));
    Cplx da = xi - za, db = xi - zb;
    Cplx cn = std::conj(n), cznl = std::conj(znl);
    return (1.0 / kPi) *
           ((Cplx(0, 1) * znl / 2.0) *
                ((n / znl) * lg + (n / znl - 2.0 * cn / cznl) * std::conj(lg)) +
            cn * std::imag(da * std::conj(db)) / (std::conj(da) * std::conj(db)));
}

// Second-kind intermediate representor (adjoint of the n_L-directional
// derivative of the double layer), same conventions.
Cplx rt2_closed(Cplx xi, Cplx n, Cplx za, Cplx zb, Cplx t) {
    Cplx ct = std::conj(t);
    Cplx e = Cplx(0, 1) * n, ce = std::conj(e);
    Cplx da = xi - za, db = xi - zb;
    Cplx cda = std::conj(da), cdb = std::conj(db);
    Cplx E1 = 1.0 / db - 1.0 / da;
    Cplx cE1 = 1.0 / cdb - 1.0 / cda;
    Cplx E2 = 1.0 / (cdb * cdb) - 1.0 / (cda * cda);
    Cplx c0 = da - (t / ct) * cda;
    return (Cplx(0, 1) / (2.0 * kPi)) *
           (-e * t * E1 + e * ct * cE1 - 2.0 * ce * cE1 / ct - 2.0 * ce * t * cE1 -
            ce * ct * c0 * E2);
}

} // namespace

void gauss_legendre_01(int n, std::vector<double>& xs, std::vector<double>& ws) {
    Eigen::MatrixXd Jm = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) {
        double b = i / std::sqrt(4.0 * i * i - 1.0);
        Jm(i, i - 1) = b;
        Jm(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Jm);
    xs.resize(n);
    ws.resize(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = 0.5 * (es.eigenvalues()(i) + 1.0);
        double v = es.eigenvectors()(0, i);
        ws[i] = v * v;
    }
}

std::pair<BoundaryField, BoundaryField> intermediate_representors(const Curve& c,
                                                                  const LineSegment& seg) {
    const double L = seg.length();
    // The closed forms are exact at any resolution; reject only genuinely
    // degenerate geometry where an endpoint (where rt2 has a 1/d^2 profile)
    // essentially touches the boundary.
    for (const Vec2& e : {seg.a, seg.b}) {
        double d = distance_to_curve(c, e);
        if (d < 0.01 * L) throw GeometryError("segment endpoint too close to the boundary");
    }
    Cplx za = to_c(seg.a), zb = to_c(seg.b), t = to_c(seg.tangent_L);
    BoundaryField rt1 = BoundaryField::zero(c), rt2 = BoundaryField::zero(c);
    for (int j = 0; j < c.J; ++j) {
        Cplx xi = to_c(c.x[j]), n = to_c(c.normal[j]);
        Cplx c1 = rt1_closed(xi, n, za, zb, t);
        Cplx c2 = rt2_closed(xi, n, za, zb, t);
        // integral -> segment average
        rt1.set(j, Vec2(c1.imag(), -c1.real()) / L);
        rt2.set(j, Vec2(c2.imag(), -c2.real()) / L);
    }
    return {rt1, rt2};
}

std::pair<BoundaryField, BoundaryField> intermediate_representors_quadrature(
    const Curve& c, const LineSegment& seg, int nq) {
    std::vector<double> xs, ws;
    gauss_legendre_01(nq, xs, ws);
    const double L = seg.length();
    const Vec2 t = seg.tangent_L, nl = seg.normal_L;
    BoundaryField rt1 = BoundaryField::zero(c), rt2 = BoundaryField::zero(c);
#pragma omp parallel for schedule(static)
    for (int j = 0; j < c.J; ++j) {
        const Vec2 y = c.x[j], ny = c.normal[j];
        Vec2 a1 = Vec2::Zero(), a2 = Vec2::Zero();
        for (int q = 0; q < nq; ++q) {
            Vec2 z = seg.a + xs[q] * (seg.b - seg.a);
            double wq = ws[q] * L;
            Vec2 d = z - y;
            double r2 = d.squaredNorm();
            double dn = d.dot(ny), dt = d.dot(t), da = d.dot(nl);
            double ta = t.dot(nl), na = ny.dot(nl);
            a1 += (2.0 * (-1.0 / kPi) * dt * dn / (r2 * r2) * wq) * d;
            Vec2 v = ((ta * dn + na * dt) * d + (dt * dn) * nl) / (r2 * r2) -
                     (4.0 * dt * dn * da / (r2 * r2 * r2)) * d;
            a2 += (2.0 * (-1.0 / kPi) * wq) * v;
        }
        rt1.set(j, a1 / L);
        rt2.set(j, a2 / L);
    }
    return {rt1, rt2};
}

BoundaryField solve_adjoint(const NystromSystem& sys, const Curve& c,
                            const BoundaryField& rt, double tol, GmresStats* stats) {
    if (sys.curve_id != c.id) throw SolverError("system/curve mismatch");
    Eigen::VectorXd wr(2 * c.J);
    for (int j = 0; j < c.J; ++j) {
        wr(2 * j) = c.w[j] * rt.v(2 * j);
        wr(2 * j + 1) = c.w[j] * rt.v(2 * j + 1);
    }
    Eigen::VectorXd s = gmres_transpose(sys.matrix, wr, tol, 500, stats);
    BoundaryField r;
    r.curve_id = c.id;
    r.v.resize(2 * c.J);
    for (int j = 0; j < c.J; ++j) {
        r.v(2 * j) = s(2 * j) / c.w[j];
        r.v(2 * j + 1) = s(2 * j + 1) / c.w[j];
    }
    return r;
}

RieszPair compute_riesz_pair(const NystromSystem& sys, const Curve& c,
                             const LineSegment& seg, double tol) {
    auto [rt1, rt2] = intermediate_representors(c, seg);
    RieszPair p;
    p.curve_id = c.id;
    p.segment = seg;
    p.rt1 = rt1;
    p.rt2 = rt2;
    p.r1 = solve_adjoint(sys, c, rt1, tol);
    p.r2 = solve_adjoint(sys, c, rt2, tol);
    return p;
}

double slip_amount(const Curve& c, const RieszPair& pair, const BoundaryField& h) {
    // The representor pairing is dual to the forward solve only on the
    // zero-flux subspace; remove the net-flux component first, exactly as
    // solve_dirichlet does on the forward path.
    BoundaryField n = BoundaryField::zero(c);
    for (int j = 0; j < c.J; ++j) n.set(j, c.normal[j]);
    BoundaryField hp = h;
    const double flux = inner_w(c, h, n);
    const double nn = inner_w(c, n, n);
    hp.v -= (flux / nn) * n.v;
    const double num = inner_w(c, hp, pair.r1);
    const double den = inner_w(c, hp, pair.r2);
    double hs = std::sqrt(inner_w(c, hp, hp));
    double rs = std::sqrt(inner_w(c, pair.r2, pair.r2));
    if (std::abs(den) < 1e-12 * hs * rs)
        throw SolverError("degenerate flow: slip denominator underflow");
    return -num / den;
}

LineAverages forward_line_averages(const NystromSystem& sys, const Curve& c,
                                   const LineSegment& seg, const BoundaryField& h,
                                   double tol) {
    BoundaryField omega = solve_dirichlet(sys, c, h, tol);
    std::vector<double> xs, ws;
    gauss_legendre_01(seg.nq, xs, ws);
    std::vector<Vec2> pts(seg.nq);
    for (int q = 0; q < seg.nq; ++q) pts[q] = seg.a + xs[q] * (seg.b - seg.a);
    auto u = eval_interior(c, omega, pts);
    auto du = eval_interior_derivative(c, omega, pts, seg.normal_L);
    LineAverages la;
    for (int q = 0; q < seg.nq; ++q) {
        la.u_t += ws[q] * u[q].dot(seg.tangent_L);
        la.dnu_t += ws[q] * du[q].dot(seg.tangent_L);
    }
    return la;
}

double slip_amount_direct(const NystromSystem& sys, const Curve& c, const LineSegment& seg,
                          const BoundaryField& h, double tol) {
    LineAverages la = forward_line_averages(sys, c, seg, h, tol);
    if (la.dnu_t == 0.0) throw SolverError("degenerate flow in direct slip");
    return -la.u_t / la.dnu_t;
}

double micro_error(const std::vector<RieszPair>& pred, const std::vector<RieszPair>& ref,
                   const std::vector<const Curve*>& curves) {
    if (pred.size() != ref.size() || pred.size() != curves.size())
        throw SolverError("micro_error: size mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const Curve& c = *curves[i];
        auto nrm = [&](const BoundaryField& f) { return std::sqrt(inner_w(c, f, f)); };
        BoundaryField d1 = pred[i].r1, d2 = pred[i].r2;
        d1.v -= ref[i].r1.v;
        d2.v -= ref[i].r2.v;
        double e = nrm(d1) / nrm(ref[i].r1) + nrm(d2) / nrm(ref[i].r2);
        worst = std::max(worst, e);
    }
    return worst;
}

} // namespace rws
