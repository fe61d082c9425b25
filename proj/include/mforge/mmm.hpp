#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mforge/rng.hpp"
#include "mforge/signal.hpp"

namespace mforge::mmm {

/// Mixture of fixed-length diagonal-Gaussian motifs plus a background
/// component. Component 0 is the background: a single broad Gaussian applied
/// at every position, with variance at least the dataset's global variance so
/// it stays the poorly conserved component.
struct MotifModel {
    int n_motifs = 0;  // M, excluding background
    int motif_len = 0;
    std::vector<double> gamma;                    // M+1 mixing weights, [0] = background
    std::vector<std::vector<double>> means;       // [M][motif_len]
    std::vector<std::vector<double>> variances;   // [M][motif_len]
    double background_mean = 0.0;
    double background_variance = 1.0;
    double variance_floor = 1e-4;

    // fit metadata
    std::uint64_t seed = 0;
    int iterations = 0;
    double final_log_likelihood = 0.0;

    /// log N(window; theta_z) for component z in [0, M].
    double component_log_pdf(const double* window, int z) const;
};

struct MotifLabeling {
    std::size_t segment_index = 0;
    std::vector<int> labels;  // one per non-overlapping motif window
};

struct EmConfig {
    double tol = 1e-6;      // relative log-likelihood change
    int max_iters = 500;
    double variance_floor = 1e-4;
    int threads = 1;
};

MotifModel fit_mmm(const std::vector<signal::DaySegment>& segments, int n_motifs, int motif_len,
                   const EmConfig& cfg, std::uint64_t seed);

/// Sum over the segment's non-overlapping windows of the mixture log density.
double mmm_log_likelihood(const MotifModel& model, const signal::DaySegment& segment);

/// Per-window maximum-likelihood labels; ties broken toward smaller id.
MotifLabeling assign_motifs(const MotifModel& model, const signal::DaySegment& segment,
                            std::size_t segment_index = 0);

std::pair<signal::DaySegment, MotifLabeling> sample_mmm(const MotifModel& model, int n_windows,
                                                        Rng& rng);

/// The model's non-overlapping window tiling of a value sequence.
std::vector<const double*> tile_windows(const std::vector<double>& values, int motif_len);

}  // namespace mforge::mmm
