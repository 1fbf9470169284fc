#include "rws/hmm.hpp"

#include <cmath>

namespace rws {

namespace {

// The unit-scale box mapped into the macro frame: x -> origin + eps * x.
// Normals and tangents are unchanged; weights and derivatives scale by eps.
Curve scale_curve(const Curve& c, const Vec2& origin, double eps) {
    Curve s = c;
    s.id = c.id ^ 0x9e3779b97f4a7c15ull;
    for (int j = 0; j < c.J; ++j) {
        s.x[j] = origin + eps * c.x[j];
        s.dx[j] = eps * c.dx[j];
        s.ddx[j] = eps * c.ddx[j];
        s.kappa[j] = c.kappa[j] / eps;
        s.w[j] = eps * c.w[j];
    }
    return s;
}

void validate(const HmmConfig& cfg) {
    if (!cfg.wall || !cfg.g_top) throw HmmError("wall/top data callbacks missing");
    if (cfg.epsilon <= 0.0) throw HmmError("epsilon must be positive");
    if (cfg.N_micro < 3) throw HmmError("N_micro must be >= 3");
    if (cfg.backend != "bie" && cfg.backend != "fno")
        throw HmmError("unknown micro backend: " + cfg.backend);
    if (cfg.backend == "fno" && cfg.model == nullptr)
        throw HmmError("fno backend needs a trained model");
}

} // namespace

std::vector<MicroSite> precompute_representors(const HmmConfig& cfg) {
    validate(cfg);
    const double L = cfg.geom.L_per, eps = cfg.epsilon, W = cfg.box.width;
    std::vector<MicroSite> sites(cfg.N_micro);
    for (int s = 0; s < cfg.N_micro; ++s) {
        MicroSite& site = sites[s];
        site.x = L * s / cfg.N_micro;
        // local wall in units of eps, mean removed
        const int n = cfg.n_wall_samples;
        std::vector<double> wu(n);
        double mean = 0.0;
        for (int i = 0; i < n; ++i) {
            const double xi = -W / 2.0 + W * i / (n - 1.0);
            wu[i] = cfg.wall(site.x + eps * xi) / eps;
            mean += wu[i];
        }
        mean /= n;
        double wmax = -std::numeric_limits<double>::infinity();
        for (double& v : wu) {
            v -= mean;
            wmax = std::max(wmax, v);
        }
        const double ybox_top = eps * (mean + cfg.box.height);
        if (eps * (mean + wmax) > cfg.geom.y0 + 1e-12)
            throw HmmError("rough wall pierces the macro boundary level");
        if (ybox_top <= cfg.geom.y0 || ybox_top >= cfg.geom.y_top)
            throw HmmError("micro box does not straddle the macro boundary level");
        site.origin = Vec2(site.x, eps * mean);
        site.md = build_micro_domain(cfg.box, wu, cfg.J);
        site.md.segment.nq = cfg.nq;
        site.phys = scale_curve(site.md.curve, site.origin, eps);
        if (cfg.backend == "bie") {
            site.sys = assemble(site.md.curve);
            site.pair =
                compute_riesz_pair(site.sys, site.md.curve, site.md.segment, cfg.solve_tol);
        } else {
            auto [rt1, rt2] = intermediate_representors(site.md.curve, site.md.segment);
            auto [r1, r2] = geo_fno_eval(*cfg.model, site.md.curve, rt1, rt2);
            site.pair.r1 = r1;
            site.pair.r2 = r2;
            site.pair.rt1 = rt1;
            site.pair.rt2 = rt2;
            site.pair.curve_id = site.md.curve.id;
            site.pair.segment = site.md.segment;
            site.sys = assemble(site.md.curve); // kept for forward diagnostics
        }
    }
    return sites;
}

HmmResult run_hmm(const HmmConfig& cfg, std::vector<MicroSite>& sites, bool use_forward) {
    validate(cfg);
    if (static_cast<int>(sites.size()) != cfg.N_micro)
        throw HmmError("site count does not match the configuration");
    const double L = cfg.geom.L_per, eps = cfg.epsilon;

    HmmResult res;
    for (const MicroSite& s : sites) res.site_x.push_back(s.x);
    res.alpha.assign(cfg.N_micro, eps); // initial guess: slip of the order of eps

    double prev_change = std::numeric_limits<double>::infinity();
    int growth = 0;
    for (int it = 0; it < cfg.max_iter; ++it) {
        res.slip = interpolate_slip(res.site_x, res.alpha, L, cfg.alpha_min);
        res.macro = solve_macro(res.slip, cfg.g_top, cfg.geom, cfg.Nx, cfg.Ny);
        std::vector<double> next(cfg.N_micro);
        for (int s = 0; s < cfg.N_micro; ++s) {
            MicroSite& site = sites[s];
            const BoundaryField h =
                reconstruct_bc(res.macro, site.phys, site.md.node_class, cfg.geom.y0);
            const double a_unit =
                use_forward
                    ? slip_amount_direct(site.sys, site.md.curve, site.md.segment, h,
                                         cfg.solve_tol)
                    : slip_amount(site.md.curve, site.pair, h);
            // The micro problem measures the slip at the evaluation line in
            // box units; the macro Robin condition lives at y0, so shift the
            // no-slip extrapolation level accordingly.
            const double y_line = site.origin.y() + eps * cfg.box.line_offset;
            next[s] = eps * a_unit - (y_line - cfg.geom.y0);
        }
        double change = 0.0, scale = 0.0;
        for (int s = 0; s < cfg.N_micro; ++s) {
            change = std::max(change, std::abs(next[s] - res.alpha[s]));
            scale = std::max(scale, std::abs(next[s]));
        }
        res.alpha = next;
        res.history.push_back(next);
        res.iterations = it + 1;
        if (change <= cfg.tol * std::max(scale, 1e-300)) {
            res.converged = true;
            break;
        }
        // only meaningful growth counts: wobble at the solver noise floor
        // just above the convergence threshold is not divergence
        growth = (change > prev_change && change > 100.0 * cfg.tol * scale) ? growth + 1 : 0;
        if (growth >= 3) throw HmmError("slip fixed-point iteration is diverging");
        prev_change = change;
    }
    if (!res.converged) throw HmmError("slip fixed-point iteration did not converge");
    // final macro solve with the converged slip
    res.slip = interpolate_slip(res.site_x, res.alpha, L, cfg.alpha_min);
    res.macro = solve_macro(res.slip, cfg.g_top, cfg.geom, cfg.Nx, cfg.Ny);
    return res;
}

} // namespace rws
