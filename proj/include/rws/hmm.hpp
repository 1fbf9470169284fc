#pragma once

#include <functional>
#include <string>

#include "rws/fno.hpp"
#include "rws/macro_channel.hpp"
#include "rws/riesz.hpp"

namespace rws {

struct HmmError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct HmmConfig {
    double epsilon = 0.05;   // roughness scale; micro boxes live in units of it
    int N_micro = 13;        // slip collocation sites per period
    MicroDomainSpec box;     // unit-scale micro box (gp field unused)
    int n_wall_samples = 33; // wall samples across the box width
    std::string backend = "bie"; // "bie" or "fno"
    int J = 128;                 // boundary nodes per micro box
    int nq = 64;                 // Gauss-Legendre order for the forward slip path
    const TrainState* model = nullptr; // required for the fno backend
    double solve_tol = 1e-12;
    double tol = 1e-8;   // relative sup-norm slip increment for convergence
    int max_iter = 50;
    double alpha_min = 1e-6;
    int Nx = 41, Ny = 29; // macro resolution
    ChannelGeometry geom; // y0 must sit at/above the wall top
    std::function<double(double)> wall;  // physical rough wall y = wall(x)
    std::function<Vec2(double)> g_top;
};

struct MicroSite {
    double x = 0.0;     // site abscissa
    Vec2 origin;        // physical origin of the unit box (x, eps * wall mean)
    MicroDomain md;     // unit-scale geometry
    Curve phys;         // same curve scaled to physical coordinates
    NystromSystem sys;  // assembled once per site (bie backend)
    RieszPair pair;     // unit-scale representors
};

// Build the micro geometries at N_micro uniform sites and compute their
// Riesz representors with the configured backend.
std::vector<MicroSite> precompute_representors(const HmmConfig& cfg);

struct HmmResult {
    SpectralField macro;
    SlipFunction slip;
    std::vector<double> site_x;
    std::vector<double> alpha; // converged physical slip per site
    std::vector<std::vector<double>> history; // slip after each iteration
    int iterations = 0;
    bool converged = false;
};

// Fixed-point iteration macro solve -> micro boundary data -> slip update.
// use_forward = false pairs the data with the precomputed representors;
// use_forward = true re-solves each micro problem and measures the line
// averages directly (identical up to solver tolerances).
HmmResult run_hmm(const HmmConfig& cfg, std::vector<MicroSite>& sites,
                  bool use_forward = false);

} // namespace rws
