#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "rws/geometry.hpp"

namespace rws {

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SingularEvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// 2-vector field at curve nodes, stored interleaved (x0,y0,x1,y1,...).
struct BoundaryField {
    Eigen::VectorXd v;
    std::uint64_t curve_id = 0;

    int J() const { return static_cast<int>(v.size()) / 2; }
    Vec2 at(int j) const { return Vec2(v(2 * j), v(2 * j + 1)); }
    void set(int j, const Vec2& u) { v(2 * j) = u.x(); v(2 * j + 1) = u.y(); }
    static BoundaryField zero(const Curve& c);
};

// Weighted inner product <u,v>_W = sum_j u_j . v_j * w_j.
double inner_w(const Curve& c, const BoundaryField& u, const BoundaryField& v);

// Stresslet T_ijk(d) = -(1/pi) d_i d_j d_k / |d|^4.
// Returned as T[i][j][k].
std::array<std::array<std::array<double, 2>, 2>, 2> stresslet(const Vec2& d);

// Continuous limit of T_klm(y - y_j) n_l(y_j) along the curve:
// (kappa_j / (2*pi)) * t t^T (constant pinned numerically against the
// near-limit kernel; see tests).
Eigen::Matrix2d diagonal_limit(const Curve& c, int j);

// Dense Nystrom operator: identity plus the compact double-layer part with
// quadrature weights folded in. Block (i,j) for i != j holds
// 2*T(x_i - x_j) contracted with n(x_j), times w_j; the diagonal block comes
// from diagonal_limit. The double-layer jump of this kernel normalization is
// a full identity, so the system is (I + D).
struct NystromSystem {
    Eigen::MatrixXd matrix;
    std::uint64_t curve_id = 0;
    double assembly_tolerance = 1e-12;
};

NystromSystem assemble(const Curve& c);

struct GmresStats {
    int iterations = 0;
    double residual = 0.0;
};

// Restart-free GMRES with max 500 iterations.
Eigen::VectorXd gmres(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double tol,
                      int max_iter, GmresStats* stats = nullptr);
// Same, but solves A^T x = b without forming the transpose.
Eigen::VectorXd gmres_transpose(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                double tol, int max_iter, GmresStats* stats = nullptr);

// Solve (I + D) omega = h by GMRES. Data is projected onto the zero-flux
// subspace when |<h,n>_W| / (|h| |n|) < 1e-6, rejected otherwise.
BoundaryField solve_dirichlet(const NystromSystem& sys, const Curve& c,
                              const BoundaryField& h, double tol = 1e-10,
                              GmresStats* stats = nullptr);

// Interior velocity of the double layer potential.
std::vector<Vec2> eval_interior(const Curve& c, const BoundaryField& density,
                                const std::vector<Vec2>& points);

// Directional derivative d_a u at interior points.
std::vector<Vec2> eval_interior_derivative(const Curve& c, const BoundaryField& density,
                                           const std::vector<Vec2>& points, const Vec2& a);

// Serial reference implementations of the OpenMP kernels above (identical
// arithmetic and summation order; the benchmark target compares them).
NystromSystem assemble_serial(const Curve& c);
std::vector<Vec2> eval_interior_serial(const Curve& c, const BoundaryField& density,
                                       const std::vector<Vec2>& points);

// Minimum allowed distance from the boundary for interior evaluation.
double near_boundary_guard(const Curve& c);
double distance_to_curve(const Curve& c, const Vec2& p);

} // namespace rws
