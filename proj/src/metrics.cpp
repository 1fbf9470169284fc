#include "rws/metrics.hpp"

#include <cmath>
#include <random>

#include "rws/reference.hpp"
#include "rws/stokes_bie.hpp"

namespace rws {

namespace {

std::vector<Vec2> sample_line(const PlaneField& f, const LevelLine& M) {
    std::vector<Vec2> s(M.n);
    for (int i = 0; i < M.n; ++i) s[i] = f(M.L_per * i / M.n, M.y);
    return s;
}

// ||a - b|| / ||b|| on uniformly sampled periodic lines (trapezoid = mean).
double sampled_error(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]).squaredNorm();
        den += b[i].squaredNorm();
    }
    if (den <= 0.0) throw MetricsError("normalized error: reference norm vanishes");
    return std::sqrt(num / den);
}

} // namespace

double normalized_error(const PlaneField& u, const PlaneField& v, const LevelLine& M) {
    if (M.n < 2) throw MetricsError("normalized error: need at least two samples");
    return sampled_error(sample_line(u, M), sample_line(v, M));
}

ErrorReport error_family(const SolutionBundle& b, const std::vector<double>& deltas,
                         int n_samples) {
    if (n_samples < 2) throw MetricsError("error family: need at least two samples");
    ErrorReport rep;
    for (double d : deltas) {
        const LevelLine M{b.y0 + d, b.L_per, n_samples};
        ErrorReport::Entry e;
        e.delta = d;
        std::vector<Vec2> fno, bie, nai, ref;
        if (b.fno_hmm) fno = sample_line(b.fno_hmm, M);
        if (b.bie_hmm) bie = sample_line(b.bie_hmm, M);
        if (b.naive) nai = sample_line(b.naive, M);
        if (b.reference) ref = sample_line(b.reference, M);
        if (!bie.empty() && !ref.empty()) e.e_mdl = sampled_error(bie, ref);
        if (!fno.empty() && !bie.empty()) e.e_cpl = sampled_error(fno, bie);
        if (!fno.empty() && !ref.empty()) e.e_tot = sampled_error(fno, ref);
        if (!nai.empty() && !ref.empty()) e.e_hi = sampled_error(nai, ref);
        if (!bie.empty() && !ref.empty() && b.eps > 0.0)
            e.e_lo = sampled_error(bie, lowpass_x(ref, b.L_per, b.eps));
        rep.entries.push_back(e);
    }
    return rep;
}

RatioLemmaReport check_ratio_lemma(const RatioLemmaConfig& cfg) {
    if (cfg.trials < 1) throw MetricsError("ratio lemma: need at least one trial");
    if (cfg.a2 == 0.0) throw MetricsError("ratio lemma: a2 must be nonzero");
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> N(0.0, 1.0);
    const double rho = cfg.a1 / cfg.a2;
    double sum = 0.0, sum2 = 0.0;
    long degenerate = 0, counted = 0;
    for (long t = 0; t < cfg.trials; ++t) {
        const double b1 = cfg.a1 * (1.0 + cfg.delta1 * N(rng));
        const double b2 = cfg.a2 * (1.0 + cfg.delta2 * N(rng));
        if (std::abs(b2) < 1e-8 * std::abs(cfg.a2)) {
            ++degenerate;
            continue;
        }
        const double err = std::abs(rho - b1 / b2) / std::abs(rho);
        sum += err;
        sum2 += err * err;
        ++counted;
    }
    RatioLemmaReport rep;
    rep.degenerate = degenerate;
    if (counted > 0) {
        rep.estimate = sum / counted;
        const double var =
            std::max(0.0, sum2 / counted - rep.estimate * rep.estimate);
        rep.stderr_ = std::sqrt(var / counted);
    }
    rep.bound = cfg.C * (cfg.delta1 + cfg.delta2 + cfg.delta1 * cfg.delta2);
    rep.pass = counted > 0 && rep.estimate + 2.576 * rep.stderr_ <= rep.bound;
    return rep;
}

SlipBoundReport check_slip_error_bound(const std::vector<RieszPair>& pred,
                                       const std::vector<RieszPair>& ref,
                                       const std::vector<const Curve*>& curves,
                                       int trials_per_sample, double C,
                                       std::uint64_t seed) {
    if (pred.size() != ref.size() || pred.size() != curves.size())
        throw MetricsError("slip bound: size mismatch");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> Uamp(0.5, 2.0);
    SlipBoundReport rep;
    long within = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const Curve& c = *curves[i];
        auto nrm = [&](const BoundaryField& f) { return std::sqrt(inner_w(c, f, f)); };
        BoundaryField d1 = pred[i].r1, d2 = pred[i].r2;
        d1.v -= ref[i].r1.v;
        d2.v -= ref[i].r2.v;
        const double delta =
            std::max(nrm(d1) / nrm(ref[i].r1), nrm(d2) / nrm(ref[i].r2));
        rep.worst_delta = std::max(rep.worst_delta, delta);

        double ymin = c.x[0].y(), ymax = c.x[0].y();
        for (const Vec2& x : c.x) {
            ymin = std::min(ymin, x.y());
            ymax = std::max(ymax, x.y());
        }
        std::uniform_real_distribution<double> Uc(ymin, ymax);
        BoundaryField n = BoundaryField::zero(c);
        for (int j = 0; j < c.J; ++j) n.set(j, c.normal[j]);
        const double nn = inner_w(c, n, n);

        for (int t = 0; t < trials_per_sample; ++t) {
            // Couette-like shear data with a random level and strength,
            // flux-projected exactly as slip_amount does internally.
            const double U = Uamp(rng), yc = Uc(rng);
            BoundaryField h = BoundaryField::zero(c);
            for (int j = 0; j < c.J; ++j) h.set(j, Vec2(U * (c.x[j].y() - yc), 0.0));
            h.v -= (inner_w(c, h, n) / nn) * n.v;
            const double hs = nrm(h);
            const double g1 = std::abs(inner_w(c, h, ref[i].r1));
            const double g2 = std::abs(inner_w(c, h, ref[i].r2));
            const double eta1 = g1 / (hs * nrm(ref[i].r1));
            const double eta2 = g2 / (hs * nrm(ref[i].r2));
            if (eta1 < 1e-10 || eta2 < 1e-10 || delta / eta2 >= 0.5 ||
                g2 < 1e-12 * hs * nrm(ref[i].r2)) {
                ++rep.degenerate;
                continue;
            }
            rep.min_eta1 = std::min(rep.min_eta1, eta1);
            rep.min_eta2 = std::min(rep.min_eta2, eta2);
            double a_ref, a_pred;
            try {
                a_ref = slip_amount(c, ref[i], h);
                a_pred = slip_amount(c, pred[i], h);
            } catch (const SolverError&) {
                ++rep.degenerate;
                continue;
            }
            if (std::abs(a_ref) < 1e-12) {
                ++rep.degenerate;
                continue;
            }
            const double rel = std::abs(a_pred - a_ref) / std::abs(a_ref);
            const double bound =
                C * (delta * (1.0 / eta1 + 1.0 / eta2) + delta * delta / (eta1 * eta2));
            rep.worst_rel_err = std::max(rep.worst_rel_err, rel);
            ++rep.counted;
            if (rel <= bound) ++within;
        }
    }
    rep.frac_within = rep.counted > 0 ? double(within) / rep.counted : 0.0;
    rep.pass = rep.counted > 0 && rep.frac_within >= 0.99;
    return rep;
}

} // namespace rws
