#pragma once

#include <functional>

#include <Eigen/Dense>

#include "rws/geometry.hpp"

namespace rws {

struct ReferenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Periodic rough channel {w(x) < y < y_top} with no-slip on the rough wall,
// Dirichlet (g1, 0) on the flat top and a prescribed mean pressure gradient G.
struct RoughChannelSpec {
    double L_per = 2.0;
    double y_top = 1.0;
    std::function<double(double)> wall;    // w(x), C^2 periodic, w < y_top
    std::function<double(double)> wall_d1; // w'(x)
    std::function<double(double)> wall_d2; // w''(x)
    std::function<double(double)> g1_top;  // tangential top velocity
    double G = 0.0;                        // mean pressure gradient d<p>/dx
    double min_wavelength = 0.0;           // if > 0, nx must give >= 16 cells per wave
    // Wall-clustered grid grading: eta = (e^{g xi} - 1)/(e^g - 1) on a uniform
    // xi grid; 0 keeps the uniform grid. Larger g concentrates cells at the
    // wall (needed when the roughness is deep relative to the channel).
    double grading = 0.0;
};

// Vorticity-streamfunction finite differences on the boundary-fitted map
// y = w(x) + eta (y_top - w(x)), uniform periodic x and (optionally graded)
// eta in [0,1],
// second order, solved monolithically (psi, omega, flux constant Q) with a
// sparse LU. The pressure-gradient closure couples G to the wall-normal
// vorticity derivative along the flat top, where grad p = (-omega_y, omega_x).
struct ReferenceField {
    double L_per = 2.0, y_top = 1.0;
    int nx = 0, ny = 0; // cells; nodes are nx periodic by (ny+1)
    std::function<double(double)> wall;
    Eigen::MatrixXd psi, om, u, v; // (ny+1) x nx nodal values
    double Q = 0.0;                // volume flux (top streamfunction value)
    double grading = 0.0;          // eta-grid grading used by the solve

    Vec2 velocity(double x, double y) const; // bilinear in (x, eta)
    double vorticity(double x, double y) const;
};

ReferenceField solve_reference(const RoughChannelSpec& spec, int nx, int ny);

// Sharp Fourier cutoff in x of a uniformly sampled periodic line of vectors:
// modes with wavelength < eps are dropped.
std::vector<Vec2> lowpass_x(const std::vector<Vec2>& line, double L_per, double eps);

} // namespace rws
