#pragma once

#include "rws/hmm.hpp"
#include "rws/reference.hpp"

namespace rws {

// Canonical periodic rough channel used by the CLI and acceptance runs:
// wall(x) = eps * (mean + amp * sin(2 pi x / eps + phase)), driven from the
// top by g1(x) = g1_const + g1_sin * sin(2 pi x / L_per) and g2 = 0, with
// the coupling level at y0 = y0_over_eps * eps.
struct SineChannelScenario {
    double eps = 0.04;
    double mean = 2.0;  // units of eps
    double amp = -1.0;  // units of eps; amp=-1 puts the wall in [eps, 3*eps]
    double phase = 0.0;
    double y0_over_eps = 3.0;
    double L_per = 2.0, y_top = 1.0;
    double g1_const = 2.0, g1_sin = 1.0;

    std::function<double(double)> wall() const;
    std::function<double(double)> wall_d1() const;
    std::function<double(double)> wall_d2() const;
    std::function<Vec2(double)> g_top() const;

    // Wide flat micro boxes (8 roughness wavelengths across) with the
    // evaluation line half a box-width unit above the crests.
    HmmConfig hmm(int N_micro = 5, int J = 256) const;

    RoughChannelSpec reference() const;
};

} // namespace rws
