#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mforge/mmm.hpp"
#include "mforge/signal.hpp"

namespace mforge::context {

struct ContextSequence {
    std::size_t segment_index = 0;
    bool per_sample = true;  // false: one label per context window of length l_c
    int n_contexts = 1;
    std::vector<int> labels;
};

/// Hand-defined rule: the mean of the last k successive differences crosses a
/// rise threshold (in signal units per sample step).
struct ExpertRule {
    double rise_threshold = 10.0;
};

/// Binary post-meal context. Samples whose k-step mean rise reaches the
/// threshold trigger, and each trigger marks the surrounding +/-dilation
/// samples as context 1. The first k samples cannot trigger.
ContextSequence expert_context(const signal::DaySegment& seg, int k, const ExpertRule& rule,
                               int dilation, std::size_t segment_index = 0);

/// Gaussian-emission HMM over the per-sample features (value, first
/// difference), z-normalized with dataset statistics stored in the model.
struct HmmModel {
    int n_states = 0;
    std::vector<double> initial;
    std::vector<std::vector<double>> transition;
    std::vector<std::array<double, 2>> emission_mean;
    std::vector<std::array<double, 2>> emission_var;
    std::array<double, 2> feature_mean{0.0, 0.0};
    std::array<double, 2> feature_scale{1.0, 1.0};

    std::uint64_t seed = 0;
    int iterations = 0;
    double final_log_likelihood = 0.0;
};

struct HmmConfig {
    double tol = 1e-6;
    int max_iters = 500;
    double variance_floor = 1e-6;
};

HmmModel hmm_fit(const std::vector<signal::DaySegment>& segments, int n_states,
                 std::uint64_t seed, const HmmConfig& cfg = {});

/// Viterbi maximum-a-posteriori state path; ties toward the smaller state id.
ContextSequence hmm_decode(const HmmModel& model, const signal::DaySegment& seg,
                           std::size_t segment_index = 0);

struct MotifTopicResult {
    std::vector<std::vector<double>> gamma;  // n_contexts x (M+1)
    std::vector<ContextSequence> contexts;   // window resolution, one per labeling
};

/// Clusters the per-context-window empirical motif-frequency vectors
/// (add-one smoothed) with k-means, normalizes the centroids into gamma, and
/// assigns each window the multinomial maximum-likelihood context.
MotifTopicResult motif_topic_context(const std::vector<mmm::MotifLabeling>& labelings,
                                     int n_motifs, int motif_len, int context_len, int n_contexts,
                                     std::uint64_t seed);

/// Per-sample labels coarsened to one label per window by majority vote;
/// ties toward the smaller label.
std::vector<int> coarsen_to_windows(const std::vector<int>& per_sample, int window_len,
                                    int n_contexts);

/// Window-resolution labels expanded to one label per sample.
std::vector<int> expand_to_samples(const std::vector<int>& per_window, int window_len);

}  // namespace mforge::context
