#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mforge/mmm.hpp"
#include "mforge/rng.hpp"
#include "mforge/signal.hpp"

namespace mforge::cmmm {

struct Priors {
    double dirichlet_alpha = 1.0;  // symmetric Dirichlet on alpha
    double dirichlet_gamma = 1.0;  // symmetric Dirichlet on each gamma_c
    double mean_loc = 0.0;         // Normal prior on Gaussian means
    double mean_scale2 = 100.0;
    double var_shape = 2.0;        // Inverse-Gamma prior on variances
    double var_scale = 1.0;
};

/// Dimensions and hard constraints of a CMMM instance. The context mixing
/// vector is kept sorted non-increasing (label-switching ordering) with every
/// entry at least alpha_floor, so all contexts keep non-negligible mass.
struct ModelDims {
    int n_contexts = 2;
    int n_motifs = 20;   // M, excluding background
    int motif_len = 8;   // l_m
    int context_len = 72;  // l_c, multiple of l_m
    double alpha_floor = 0.25;  // default 1/(2 n_c)
    double variance_floor = 1e-4;
    Priors priors;

    int windows_per_context() const { return context_len / motif_len; }
    void validate() const;
};

inline double default_alpha_floor(int n_contexts) { return 1.0 / (2.0 * n_contexts); }

struct CmmmModel {
    ModelDims dims;
    std::vector<double> alpha;                   // n_c, sorted non-increasing, >= floor
    std::vector<std::vector<double>> Gamma;      // n_c x (M+1), row-stochastic
    std::vector<std::vector<double>> means;      // M x l_m
    std::vector<std::vector<double>> variances;  // M x l_m, >= variance_floor
    double background_mean = 0.0;
    double background_variance = 1.0;

    // fit metadata
    std::uint64_t seed = 0;
    int n_samples = 0;
    int burn_in = 0;

    double window_log_pdf(const double* window, int z) const;
};

struct ContextualLabeling {
    std::size_t segment_index = 0;
    std::vector<int> contexts;  // one per context window
    std::vector<int> motifs;    // one per motif window
};

struct KernelStats {
    long proposed = 0;
    long accepted = 0;
    double rate() const { return proposed > 0 ? static_cast<double>(accepted) / proposed : 0.0; }
};

/// The full MCMC state: parameters, labels for every training segment, and
/// the kernel adaptation/acceptance bookkeeping.
struct SamplerState {
    std::vector<double> alpha;
    std::vector<std::vector<double>> Gamma;
    std::vector<std::vector<double>> means;
    std::vector<std::vector<double>> variances;
    double background_mean = 0.0;
    double background_variance = 1.0;

    std::vector<std::vector<int>> contexts;  // [segment][context window]
    std::vector<std::vector<int>> motifs;    // [segment][motif window]

    long iteration = 0;

    // proposal scales (frozen after burn-in)
    double alpha_scale = 0.1;
    double gamma_scale = 0.1;
    double theta_step = 0.05;

    // dual averaging for the theta step size
    double da_log_step_bar = 0.0;
    double da_h_bar = 0.0;
    double da_mu = 0.0;
    long da_t = 0;

    KernelStats stats_context, stats_motif, stats_alpha, stats_gamma, stats_theta, stats_swap;
    // windowed counters driving simplex-scale adaptation
    long adapt_alpha_prop = 0, adapt_alpha_acc = 0;
    long adapt_gamma_prop = 0, adapt_gamma_acc = 0;
};

struct SweepConfig {
    bool update_contexts = true;
    bool update_motifs = true;
    bool update_alpha = true;
    bool update_gamma = true;
    bool update_theta = true;
    bool adapt = false;
    double target_accept_simplex = 0.30;
    double target_accept_theta = 0.574;
};

/// log of the joint density p(c, z, alpha, Gamma, theta, x) including the
/// ordering/floor potentials (0 when satisfied, -inf otherwise).
double cmmm_joint_log_prob(const ModelDims& dims, const SamplerState& state,
                           const std::vector<signal::DaySegment>& data);

/// One full pass: Metropolized Gibbs over every context and motif label
/// (uniform proposal over the other categories), random-walk Metropolis on
/// the log-ratio-transformed simplex parameters, and a Metropolis-adjusted
/// Langevin update of theta with a dual-averaged step size.
void mcmc_sweep(const ModelDims& dims, SamplerState& state,
                const std::vector<signal::DaySegment>& data, Rng& rng,
                const SweepConfig& cfg = {});

/// Acceptance probabilities of single categorical moves, exposed so tests can
/// assemble the exact transition matrix of the label kernels.
double context_accept_prob(const ModelDims& dims, const SamplerState& state,
                           const std::vector<signal::DaySegment>& data, std::size_t segment,
                           std::size_t window, int proposed);
double motif_accept_prob(const ModelDims& dims, const SamplerState& state,
                         const std::vector<signal::DaySegment>& data, std::size_t segment,
                         std::size_t window, int proposed);

struct FitConfig {
    int n_samples = 2000;
    int burn_in = 1000;
    mmm::EmConfig em;  // MMM initialization
    bool record_trace = true;
};

struct Diagnostics {
    std::vector<double> joint_log_prob_trace;
    KernelStats context_kernel, motif_kernel, alpha_kernel, gamma_kernel, theta_kernel,
        swap_kernel;
    double post_burn_in_alpha_rate = 0.0;
    double post_burn_in_gamma_rate = 0.0;
    double post_burn_in_theta_rate = 0.0;
    bool tuning_warning = false;  // a Gaussian-proposal kernel left (0.01, 0.99)
};

struct FitResult {
    CmmmModel model;
    std::vector<ContextualLabeling> labelings;
    Diagnostics diagnostics;
};

/// Initializes from an MMM fit (theta, pooled gamma; contexts from k-means on
/// per-window motif-frequency vectors), runs n_samples sweeps, and derives
/// point estimates from the post-burn-in samples: means for parameters,
/// per-variable posterior modes for labels.
FitResult fit_cmmm(const std::vector<signal::DaySegment>& segments, const ModelDims& dims,
                   const FitConfig& cfg, std::uint64_t seed);

/// Exact maximum-likelihood labeling of a held-out segment: per context
/// window, the context maximizing the sum over its motif windows of the best
/// per-window joint term, then the argmax motif per window. Ties take the
/// smaller id.
ContextualLabeling assign_contextual(const CmmmModel& model, const signal::DaySegment& segment,
                                     std::size_t segment_index = 0);

std::pair<signal::DaySegment, ContextualLabeling> sample_cmmm(const CmmmModel& model,
                                                              int n_context_windows, Rng& rng);

/// Projects a probability vector onto {sorted non-increasing, entries >=
/// alpha_floor, sums to 1}.
std::vector<double> project_alpha(std::vector<double> alpha, double floor);

}  // namespace mforge::cmmm
