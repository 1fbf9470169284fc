#pragma once

#include <functional>

#include <Eigen/Dense>

#include "rws/geometry.hpp"
#include "rws/stokes_bie.hpp"

namespace rws {

struct MacroError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ChannelGeometry {
    double L_per = 2.0; // period in x
    double y0 = 0.12;   // smoothed wall (top of the roughness envelope)
    double y_top = 1.0;
};

// Positive periodic slip coefficient as a one-sided trigonometric polynomial.
struct SlipFunction {
    Eigen::VectorXcd coef; // one-sided modes; synthesis weights in dbl
    Eigen::VectorXd dbl;   // 1 for mean (and Nyquist when N even), else 2
    double L_per = 2.0;
    double alpha_min = 1e-6;
    bool clamped = false; // true if any collocation value was floored

    double eval(double x) const;
    static SlipFunction constant(double c, double L_per = 2.0);
};

// Trigonometric interpolation through (x_n, alpha_n) at N_slip uniform points
// on the period; values below alpha_min are clamped first.
SlipFunction interpolate_slip(const std::vector<double>& xs, const std::vector<double>& alphas,
                              double L_per, double alpha_min = 1e-6);

// Fourier(x) x Chebyshev(y) solution of the Stokes channel with a Navier-slip
// wall at y0 and Dirichlet data at the top. Stored per x-mode as velocity
// values and y-derivatives at the Chebyshev nodes; evaluation is barycentric
// in y and a mode sum in x. The per-mode solve is a streamfunction
// (biharmonic) collocation, so the field is divergence-free by construction;
// the pointwise Robin condition for varying alpha is enforced through a dense
// wall influence matrix over the collocation points.
struct SpectralField {
    ChannelGeometry geom;
    int Nx = 21, Ny = 21;
    Eigen::VectorXd ycheb;            // Chebyshev nodes on [y0, y_top]
    Eigen::MatrixXcd u, v, uy, vy;    // Ny x K mode columns, K = (Nx+1)/2
    Eigen::MatrixXcd p;               // pressure modes (derived, diagnostic)

    Vec2 velocity(double x, double y) const;
    Eigen::Matrix2d velocity_gradient(double x, double y) const; // d u_i / d x_j
    double pressure(double x, double y) const;
};

SpectralField solve_macro(const SlipFunction& slip, const std::function<Vec2(double)>& g_top,
                          const ChannelGeometry& geom, int Nx = 21, int Ny = 21);

// Max residual of the slip condition u_t + alpha * (t . d_n u) = 0 and of
// u . n = 0 on the wall; n_samples = 0 evaluates on the solve's own
// collocation grid, otherwise on n uniform points shifted off-grid.
double robin_residual(const SpectralField& f, const SlipFunction& slip, int n_samples = 0);

// H1 seminorm of the difference of two fields over the channel, by tensor
// trapezoid quadrature on an nx x ny sampling grid.
double h1_seminorm_difference(const SpectralField& a, const SpectralField& b, int nx = 96,
                              int ny = 96);

// Boundary data for a micro problem from the macro field: macro trace on the
// part of the micro boundary inside the macro domain (y >= y0), zero on the
// rough wall (node_class 0), and on the remaining gaps a degree-5 polynomial
// in the boundary parameter minimizing the parameter-derivative energy with
// endpoint value/derivative matching; the net flux through the whole micro
// boundary is constrained to zero exactly.
BoundaryField reconstruct_bc(const SpectralField& macro, const Curve& c,
                             const std::vector<int>& node_class, double y0);

} // namespace rws
