#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mforge/cmmm.hpp"
#include "mforge/eval.hpp"

namespace mforge::simgen {

/// A labeled synthetic dataset drawn from a ground-truth CMMM. Each
/// (motif, context) pair, background included, carries a value v in [-1, 1];
/// a signal's raw score is the sum of v over its window pairs, squashed into
/// a Bernoulli outcome parameter by the logistic at inverse temperature beta.
struct SimDataset {
    cmmm::CmmmModel true_model;
    std::vector<std::vector<double>> signals;
    std::vector<cmmm::ContextualLabeling> truth;
    std::vector<std::vector<double>> values;  // v[motif][context]; motif 0 = background
    double beta = 1.0;
    std::vector<double> scores;
    std::vector<double> probabilities;
    std::vector<int> outcomes;
    std::uint64_t seed = 0;

    static std::string signal_patient_id(std::size_t index);
};

SimDataset gen_sim_dataset(const cmmm::CmmmModel& true_model, int n_signals,
                           int windows_per_signal, double beta, std::uint64_t seed,
                           int threads = 1);

/// Recomputes a signal's raw score from the stored truth labels and v table.
double recompute_score(const SimDataset& sim, std::size_t signal_index);

double score_to_probability(double score, double beta);

enum class OracleKind { kMotifs, kMotifsContext };

/// Ground-truth feature counts per signal.
eval::FeatureMatrix oracle_features(const SimDataset& sim, OracleKind kind);

/// Default ground-truth model for the simulate CLI: well separated motif
/// shapes, a broad background, and per-context motif mixes that favor
/// disjoint motif blocks.
cmmm::CmmmModel default_sim_model(int n_motifs, int motif_len, int context_len, int n_contexts,
                                  std::uint64_t seed);

}  // namespace mforge::simgen
