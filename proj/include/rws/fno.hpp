#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rws/dataset.hpp"
#include "rws/geometry.hpp"
#include "rws/stokes_bie.hpp"

namespace rws {

struct FnoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Signals are (channels x J) real matrices sampled at the uniform circle
// grid t_j = 2*pi*j/J. Retained spectrum: modes 0..K_max-1 of the analytic
// (one-sided) expansion; synthesis doubles modes k >= 1 and takes the real
// part, so an identity spectral kernel acts as the ideal low-pass.

struct FnoConfig {
    int d_in = 8;
    int d_out = 4;
    int L = 4;      // blocks
    int d = 32;     // hidden width
    int K_max = 16; // retained modes
    std::string activation = "gelu";
};

struct FnoParams {
    FnoConfig cfg;
    Eigen::MatrixXd P; // d x d_in lifting
    std::vector<Eigen::MatrixXd> W;                   // L of d x d
    std::vector<std::vector<Eigen::MatrixXcd>> Khat;  // L x K_max of d x d
    std::vector<Eigen::MatrixXcd> bhat;               // L of d x K_max bias coefficients
    Eigen::MatrixXd Q; // d_out x d projection

    static FnoParams init(const FnoConfig& cfg, std::uint64_t seed);
    static FnoParams zeros_like(const FnoParams& p);
    // Elementwise traversal used by the optimizer (complex entries visited as
    // two reals). Order is fixed, so reductions are deterministic.
    void for_each(const std::function<void(double&)>& f);
    std::size_t parameter_count() const;
};

// DFT helper matrices for grid size J and K retained modes:
// analysis  zhat = (1/J) * Z * conj(E),  E(j,k) = exp(i k t_j)
// synthesis Y = Re((Zhat * C) * E^T),    C = diag(1, 2, 2, ...)
Eigen::MatrixXcd dft_matrix(int J, int K);

Eigen::MatrixXd spectral_conv(const Eigen::MatrixXd& Z,
                              const std::vector<Eigen::MatrixXcd>& Khat);

Eigen::MatrixXd fno_forward(const FnoParams& p, const Eigen::MatrixXd& X);

// Spectral differentiation matrix d/dt on the uniform grid (J even).
Eigen::MatrixXd spectral_diff_matrix(int J);

// Relative H1 loss: ||p - t||^2/||t||^2 + ||D(p - t)||^2/||D t||^2 with
// uniform-grid (trapezoid) norms and spectral D.
double h1_relative_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);

// Loss plus exact parameter gradients for a batch of (input, target) pairs.
double fno_loss_and_gradients(const FnoParams& p,
                              const std::vector<Eigen::MatrixXd>& inputs,
                              const std::vector<Eigen::MatrixXd>& targets,
                              FnoParams& grads);

struct TrainConfig {
    int epochs = 200;
    int batch = 32;
    double lr = 1e-3;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::uint64_t seed = 0;
    bool verbose = false;
};

struct TrainState {
    FnoParams params;
    FnoParams m, v; // Adam moments
    long step = 0;
    std::vector<double> train_loss, test_loss; // per epoch
    std::array<double, 12> mean{}, stdev{};    // dataset standardization
    std::uint64_t dataset_crc = 0;
};

// Standardized input/target matrices for a sample (channels 0..7 / 8..11).
Eigen::MatrixXd sample_input(const Sample& s, const std::array<double, 12>& mean,
                             const std::array<double, 12>& stdev);
Eigen::MatrixXd sample_target(const Sample& s, const std::array<double, 12>& mean,
                              const std::array<double, 12>& stdev);

TrainState train_fno(const std::vector<Sample>& samples, const DatasetManifest& manifest,
                     const FnoConfig& cfg, const TrainConfig& tc);

// Evaluate the trained operator on a physical boundary: assemble the input
// channels from the curve and the closed-form intermediate representors, run
// the network on the parameter circle, and attach the de-standardized outputs
// to the physical nodes.
std::pair<BoundaryField, BoundaryField> geo_fno_eval(const TrainState& st, const Curve& c,
                                                     const BoundaryField& rt1,
                                                     const BoundaryField& rt2);

// Model file: <path>.json (hyperparameters, statistics, dataset hash) and
// <path>.bin (LE float64 blob in for_each order, trailing CRC64).
void save_model(const TrainState& st, const std::string& path);
TrainState load_model(const std::string& path);

} // namespace rws
