#include "rws/stokes_bie.hpp"

#include <cmath>
#include <limits>

namespace rws {

namespace {
constexpr double kInvPi = 0.31830988618379067153776752674503;
}

BoundaryField BoundaryField::zero(const Curve& c) {
    BoundaryField f;
    f.v = Eigen::VectorXd::Zero(2 * c.J);
    f.curve_id = c.id;
    return f;
}

double inner_w(const Curve& c, const BoundaryField& u, const BoundaryField& v) {
    double s = 0.0;
    for (int j = 0; j < c.J; ++j) s += c.w[j] * u.at(j).dot(v.at(j));
    return s;
}

std::array<std::array<std::array<double, 2>, 2>, 2> stresslet(const Vec2& d) {
    double r2 = d.squaredNorm();
    if (r2 == 0.0) throw SingularEvalError("stresslet at d = 0");
    double f = -kInvPi / (r2 * r2);
    std::array<std::array<std::array<double, 2>, 2>, 2> T;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) T[i][j][k] = f * d(i) * d(j) * d(k);
    return T;
}

Eigen::Matrix2d diagonal_limit(const Curve& c, int j) {
    // lim_{y->y_j} T(y - y_j) n(y_j) = (kappa_j / (2*pi)) t t^T.
    const Vec2& t = c.tangent[j];
    return (c.kappa[j] * 0.5 * kInvPi) * (t * t.transpose());
}

namespace {

void assemble_row(const Curve& c, Eigen::MatrixXd& A, int i) {
    for (int j = 0; j < c.J; ++j) {
        Eigen::Matrix2d M;
        if (i == j) {
            M = diagonal_limit(c, j);
        } else {
            Vec2 d = c.x[i] - c.x[j];
            double r2 = d.squaredNorm();
            double f = -kInvPi / (r2 * r2);
            double dn = d.dot(c.normal[j]);
            M = (f * dn) * (d * d.transpose());
        }
        A.block<2, 2>(2 * i, 2 * j) = (2.0 * c.w[j]) * M;
    }
    A(2 * i, 2 * i) += 1.0;
    A(2 * i + 1, 2 * i + 1) += 1.0;
}

NystromSystem assemble_impl(const Curve& c, bool parallel) {
    const int J = c.J;
    if (J < 16 || J % 2 != 0) throw GeometryError("assemble: J must be even and >= 16");
    for (int j = 0; j < J; ++j)
        if ((c.x[j] - c.x[(j + 1) % J]).squaredNorm() == 0.0)
            throw GeometryError("assemble: repeated nodes");
    NystromSystem sys;
    sys.curve_id = c.id;
    Eigen::MatrixXd& A = sys.matrix;
    A.resize(2 * J, 2 * J);

    if (parallel) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < J; ++i) assemble_row(c, A, i);
    } else {
        for (int i = 0; i < J; ++i) assemble_row(c, A, i);
    }
    return sys;
}

} // namespace

NystromSystem assemble(const Curve& c) { return assemble_impl(c, true); }
NystromSystem assemble_serial(const Curve& c) { return assemble_impl(c, false); }

namespace {

// Arnoldi-based GMRES with Givens rotations; apply_A is a matvec closure.
template <typename MatVec>
Eigen::VectorXd gmres_impl(const MatVec& apply_A, const Eigen::VectorXd& b, double tol,
                           int max_iter, GmresStats* stats) {
    const int n = static_cast<int>(b.size());
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        if (stats) *stats = {0, 0.0};
        return Eigen::VectorXd::Zero(n);
    }
    max_iter = std::min(max_iter, n);
    Eigen::MatrixXd V(n, max_iter + 1);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(max_iter + 1, max_iter);
    Eigen::VectorXd cs(max_iter), sn(max_iter), g = Eigen::VectorXd::Zero(max_iter + 1);
    V.col(0) = b / bnorm;
    g(0) = bnorm;
    int k = 0;
    double res = 1.0;
    for (; k < max_iter; ++k) {
        Eigen::VectorXd w = apply_A(V.col(k));
        for (int i = 0; i <= k; ++i) {
            H(i, k) = w.dot(V.col(i));
            w -= H(i, k) * V.col(i);
        }
        // one pass of reorthogonalization for stability
        for (int i = 0; i <= k; ++i) {
            double h2 = w.dot(V.col(i));
            H(i, k) += h2;
            w -= h2 * V.col(i);
        }
        H(k + 1, k) = w.norm();
        if (H(k + 1, k) > 1e-300) V.col(k + 1) = w / H(k + 1, k);
        for (int i = 0; i < k; ++i) {
            double t = cs(i) * H(i, k) + sn(i) * H(i + 1, k);
            H(i + 1, k) = -sn(i) * H(i, k) + cs(i) * H(i + 1, k);
            H(i, k) = t;
        }
        double denom = std::hypot(H(k, k), H(k + 1, k));
        cs(k) = H(k, k) / denom;
        sn(k) = H(k + 1, k) / denom;
        H(k, k) = denom;
        H(k + 1, k) = 0.0;
        g(k + 1) = -sn(k) * g(k);
        g(k) = cs(k) * g(k);
        res = std::abs(g(k + 1)) / bnorm;
        if (res <= tol) {
            ++k;
            break;
        }
    }
    Eigen::VectorXd y = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    Eigen::VectorXd x = V.leftCols(k) * y;
    if (stats) *stats = {k, res};
    if (res > tol) throw SolverError("GMRES failed to converge: residual " + std::to_string(res));
    return x;
}

} // namespace

Eigen::VectorXd gmres(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double tol,
                      int max_iter, GmresStats* stats) {
    return gmres_impl([&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return A * v; }, b,
                      tol, max_iter, stats);
}

Eigen::VectorXd gmres_transpose(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                double tol, int max_iter, GmresStats* stats) {
    return gmres_impl(
        [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return A.transpose() * v; }, b, tol,
        max_iter, stats);
}

BoundaryField solve_dirichlet(const NystromSystem& sys, const Curve& c,
                              const BoundaryField& h, double tol, GmresStats* stats) {
    if (sys.curve_id != c.id) throw SolverError("system/curve mismatch");
    BoundaryField n_field = BoundaryField::zero(c);
    for (int j = 0; j < c.J; ++j) n_field.set(j, c.normal[j]);
    double flux = inner_w(c, h, n_field);
    double hn = std::sqrt(inner_w(c, h, h)) * std::sqrt(inner_w(c, n_field, n_field));
    BoundaryField hp = h;
    if (hn > 0.0) {
        double rel = std::abs(flux) / hn;
        if (rel >= 1e-6)
            throw SolverError("incompatible boundary data: relative net flux " +
                              std::to_string(rel));
        double nn = inner_w(c, n_field, n_field);
        hp.v -= (flux / nn) * n_field.v;
    }
    BoundaryField omega;
    omega.curve_id = c.id;
    omega.v = gmres(sys.matrix, hp.v, tol, 500, stats);
    return omega;
}

namespace {

Vec2 eval_point(const Curve& c, const BoundaryField& density, const Vec2& p) {
    Vec2 acc = Vec2::Zero();
    for (int j = 0; j < c.J; ++j) {
        Vec2 d = p - c.x[j];
        double r2 = d.squaredNorm();
        double f = -kInvPi / (r2 * r2);
        double dn = d.dot(c.normal[j]);
        double dk = d.dot(density.at(j));
        acc += (2.0 * c.w[j] * f * dn * dk) * d;
    }
    return acc;
}

std::vector<Vec2> eval_interior_impl(const Curve& c, const BoundaryField& density,
                                     const std::vector<Vec2>& points, bool parallel) {
    const double guard = near_boundary_guard(c);
    for (const Vec2& p : points)
        if (distance_to_curve(c, p) < guard)
            throw SingularEvalError("evaluation point too close to the boundary (distance " +
                                    std::to_string(distance_to_curve(c, p)) + ")");
    std::vector<Vec2> out(points.size());
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t q = 0; q < static_cast<std::ptrdiff_t>(points.size()); ++q)
            out[q] = eval_point(c, density, points[q]);
    } else {
        for (std::size_t q = 0; q < points.size(); ++q)
            out[q] = eval_point(c, density, points[q]);
    }
    return out;
}

} // namespace

std::vector<Vec2> eval_interior(const Curve& c, const BoundaryField& density,
                                const std::vector<Vec2>& points) {
    return eval_interior_impl(c, density, points, true);
}

std::vector<Vec2> eval_interior_serial(const Curve& c, const BoundaryField& density,
                                       const std::vector<Vec2>& points) {
    return eval_interior_impl(c, density, points, false);
}

std::vector<Vec2> eval_interior_derivative(const Curve& c, const BoundaryField& density,
                                           const std::vector<Vec2>& points, const Vec2& a) {
    const double guard = near_boundary_guard(c);
    for (const Vec2& p : points)
        if (distance_to_curve(c, p) < guard)
            throw SingularEvalError("evaluation point too close to the boundary");
    std::vector<Vec2> out(points.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t q = 0; q < static_cast<std::ptrdiff_t>(points.size()); ++q) {
        const Vec2& p = points[q];
        Vec2 acc = Vec2::Zero();
        for (int j = 0; j < c.J; ++j) {
            Vec2 d = p - c.x[j];
            double r2 = d.squaredNorm();
            double inv4 = 1.0 / (r2 * r2);
            double dn = d.dot(c.normal[j]);
            double dk = d.dot(density.at(j));
            double da = d.dot(a);
            double na = c.normal[j].dot(a);
            double ka = density.at(j).dot(a);
            // a . grad of T contracted with n_j and the density:
            // [(n.a)(d.om) + (om.a)(d.n)] d + (d.n)(d.om) a, all /|d|^4,
            // minus 4 (d.n)(d.om)(d.a) d / |d|^6.
            Vec2 v = ((na * dk + ka * dn) * d + (dn * dk) * a) * inv4 -
                     (4.0 * dn * dk * da * inv4 / r2) * d;
            acc += (2.0 * c.w[j] * (-kInvPi)) * v;
        }
        out[q] = acc;
    }
    return out;
}

double near_boundary_guard(const Curve& c) {
    double max_sp = 0.0;
    for (const auto& d : c.dx) max_sp = std::max(max_sp, d.norm());
    return 5.0 * (2.0 * M_PI / c.J) * max_sp;
}

double distance_to_curve(const Curve& c, const Vec2& p) {
    double best = std::numeric_limits<double>::max();
    for (const auto& x : c.x) best = std::min(best, (p - x).norm());
    return best;
}

} // namespace rws
