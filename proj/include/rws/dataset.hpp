#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rws/geometry.hpp"
#include "rws/riesz.hpp"
#include "rws/stokes_bie.hpp"

namespace rws {

struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One supervised pair: micro-domain boundary plus intermediate representors
// as inputs, solved representors as targets.
struct Sample {
    Curve curve;
    LineSegment segment;
    BoundaryField rt1, rt2; // closed-form inputs
    BoundaryField r1, r2;   // adjoint-solved targets
    std::uint64_t seed = 0; // per-sample RNG stream seed
    double wall_mean = 0.0;
    double height = 0.0;
    double line_offset = 0.0;
};

struct DatasetConfig {
    int J = 128;
    double width = 1.0;
    double corner_radius = 0.1;
    double height_min = 0.5, height_max = 1.0;
    double line_min = 0.15, line_max = 0.35;
    // seed field ignored; per-sample seeds derived from (seed, index)
    GpConfig gp{0.002, 0.25, 64, 200.0, 0};
    double solve_tol = 1e-10;
};

struct DatasetManifest {
    std::string version = "RWS1";
    int K = 0;
    int J = 0;
    int skipped = 0;
    std::uint64_t seed = 0;
    DatasetConfig cfg;
    // Per-channel statistics over the train split, channel order:
    // x, y, x', y', rt1x, rt1y, rt2x, rt2y, r1x, r1y, r2x, r2y.
    std::array<double, 12> mean{}, stdev{};
    std::vector<int> train_idx, test_idx;
    // Per-sample metadata needed to rebuild segments and provenance.
    struct SampleMeta {
        std::uint64_t seed = 0;
        double ax = 0, ay = 0, bx = 0, by = 0;
        double wall_mean = 0, height = 0, line_offset = 0;
    };
    std::vector<SampleMeta> samples;
    std::uint64_t crc = 0;
};

constexpr int kChannels = 12;

// CRC-64/XZ (reflected, poly 0xC96C5795D7870F42 in reflected form).
std::uint64_t crc64(const void* data, std::size_t n, std::uint64_t crc = 0);

// Generate K samples under per-sample RNG streams derived from (seed, index);
// failed micro solves are skipped and counted. Writes <dir>/manifest.json and
// <dir>/data.bin (LE float64, sample-major, node-major, channel-minor, with a
// trailing LE CRC64 of the array bytes). Resumes from a partial data file if
// one is present. Returns the manifest.
DatasetManifest generate_dataset(const DatasetConfig& cfg, int K, std::uint64_t seed,
                                 const std::string& dir, double train_frac = 0.9);

std::pair<std::vector<Sample>, DatasetManifest> load_dataset(const std::string& dir);

// Recompute per-channel mean/std over the given sample indices (independent
// second pass used by tests and by generate_dataset itself).
void compute_statistics(const std::vector<Sample>& samples, const std::vector<int>& idx,
                        std::array<double, 12>& mean, std::array<double, 12>& stdev);

// Flatten a sample into the 12-channel record (J*12 doubles).
std::vector<double> sample_record(const Sample& s);

} // namespace rws
