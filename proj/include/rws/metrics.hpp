#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "rws/geometry.hpp"
#include "rws/riesz.hpp"

namespace rws {

struct MetricsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Planar velocity field u(x, y).
using PlaneField = std::function<Vec2(double, double)>;

// Horizontal evaluation line y = const spanning one period, n uniform
// samples (periodic trapezoid rule).
struct LevelLine {
    double y = 0.0;
    double L_per = 2.0;
    int n = 256;
};

// ||u - v||_M / ||v||_M. Throws MetricsError when ||v||_M vanishes.
double normalized_error(const PlaneField& u, const PlaneField& v, const LevelLine& M);

// Sources for the error family; any field may be left empty, in which case
// the metrics that need it stay at -1 in the report (explicit gaps).
struct SolutionBundle {
    PlaneField fno_hmm;   // learned-backend HMM macro field
    PlaneField bie_hmm;   // classical-backend HMM macro field
    PlaneField naive;     // no-slip macro field (no micro correction)
    PlaneField reference; // fully resolved field
    double L_per = 2.0;
    double eps = 0.0; // low-pass cutoff scale for e_lo (<= 0 disables e_lo)
    double y0 = 0.0;  // lines sit at y0 + delta
};

struct ErrorReport {
    struct Entry {
        double delta = 0.0;
        double e_mdl = -1.0; // bie_hmm vs reference
        double e_cpl = -1.0; // fno_hmm vs bie_hmm
        double e_tot = -1.0; // fno_hmm vs reference
        double e_lo = -1.0;  // bie_hmm vs x-low-passed reference
        double e_hi = -1.0;  // naive vs reference
    };
    std::vector<Entry> entries;
};

ErrorReport error_family(const SolutionBundle& b, const std::vector<double>& deltas,
                         int n_samples = 256);

// Monte-Carlo check of E|a1/a2 - b1/b2| / |a1/a2| <= C (d1 + d2 + d1 d2)
// for b_i = a_i (1 + d_i X_i), X_i standard normal.
struct RatioLemmaConfig {
    double a1 = 1.3, a2 = 0.7;
    double delta1 = 0.01, delta2 = 0.01;
    double C = 1.0;
    long trials = 1000000;
    std::uint64_t seed = 1;
};

struct RatioLemmaReport {
    double estimate = 0.0;  // Monte-Carlo mean of the relative ratio error
    double stderr_ = 0.0;   // standard error of the mean
    double bound = 0.0;     // C (d1 + d2 + d1 d2)
    long degenerate = 0;    // trials dropped for a near-zero denominator
    bool pass = false;      // estimate + 2.576 stderr <= bound
};

RatioLemmaReport check_ratio_lemma(const RatioLemmaConfig& cfg);

// Empirical slip-error bound: for predicted vs reference representor pairs
// and random Couette-like boundary data h, the relative slip error obeys
// |da/a| <= C (d (1/eta1 + 1/eta2) + d^2 / (eta1 eta2)) with d the larger
// relative representor error and eta_i the alignment of h with r_i.
struct SlipBoundReport {
    double worst_delta = 0.0;   // largest relative representor error seen
    double min_eta1 = 1.0, min_eta2 = 1.0;
    double worst_rel_err = 0.0; // largest relative slip error seen
    double frac_within = 1.0;   // fraction of counted trials inside the bound
    long counted = 0;
    long degenerate = 0; // excluded: tiny slip, tiny alignment, or d/eta2 >= 1/2
    bool pass = false;   // frac_within >= 0.99 over counted trials
};

SlipBoundReport check_slip_error_bound(const std::vector<RieszPair>& pred,
                                       const std::vector<RieszPair>& ref,
                                       const std::vector<const Curve*>& curves,
                                       int trials_per_sample = 20, double C = 2.0,
                                       std::uint64_t seed = 0);

} // namespace rws
