#include "rws/scenario.hpp"

#include <cmath>

namespace rws {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

std::function<double(double)> SineChannelScenario::wall() const {
    const double e = eps, m = mean, a = amp, p = phase;
    return [e, m, a, p](double x) { return e * (m + a * std::sin(2.0 * kPi * x / e + p)); };
}

std::function<double(double)> SineChannelScenario::wall_d1() const {
    const double e = eps, a = amp, p = phase;
    return [e, a, p](double x) {
        return 2.0 * kPi * a * std::cos(2.0 * kPi * x / e + p);
    };
}

std::function<double(double)> SineChannelScenario::wall_d2() const {
    const double e = eps, a = amp, p = phase;
    return [e, a, p](double x) {
        return -(2.0 * kPi) * (2.0 * kPi) * a / e * std::sin(2.0 * kPi * x / e + p);
    };
}

std::function<Vec2(double)> SineChannelScenario::g_top() const {
    const double b = 2.0 * kPi / L_per, c0 = g1_const, c1 = g1_sin;
    return [b, c0, c1](double x) { return Vec2(c0 + c1 * std::sin(b * x), 0.0); };
}

HmmConfig SineChannelScenario::hmm(int N_micro, int J) const {
    HmmConfig cfg;
    cfg.epsilon = eps;
    cfg.N_micro = N_micro;
    cfg.J = J;
    cfg.box.width = 8.0;
    cfg.box.corner_radius = 0.25;
    cfg.box.line_offset = std::abs(amp) + 0.5;
    cfg.box.height = cfg.box.line_offset + 0.7;
    cfg.box.gp.curvature_bound = 2000.0; // corner patches meet a steep wall
    cfg.n_wall_samples = 129;            // 16 per unit roughness wavelength
    cfg.geom.L_per = L_per;
    cfg.geom.y_top = y_top;
    cfg.geom.y0 = y0_over_eps * eps;
    cfg.wall = wall();
    cfg.g_top = g_top();
    return cfg;
}

RoughChannelSpec SineChannelScenario::reference() const {
    RoughChannelSpec spec;
    spec.L_per = L_per;
    spec.y_top = y_top;
    spec.wall = wall();
    spec.wall_d1 = wall_d1();
    spec.wall_d2 = wall_d2();
    const double b = 2.0 * kPi / L_per, c0 = g1_const, c1 = g1_sin;
    spec.g1_top = [b, c0, c1](double x) { return c0 + c1 * std::sin(b * x); };
    spec.min_wavelength = eps;
    return spec;
}

} // namespace rws
