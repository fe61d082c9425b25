#include "mforge/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mforge/errors.hpp"
#include "mforge/numerics.hpp"
#include "mforge/parallel.hpp"

namespace mforge::simgen {

std::string SimDataset::signal_patient_id(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "s%05zu", index);
    return buf;
}

double score_to_probability(double score, double beta) { return logistic(beta * score); }

SimDataset gen_sim_dataset(const cmmm::CmmmModel& true_model, int n_signals,
                           int windows_per_signal, double beta, std::uint64_t seed, int threads) {
    if (n_signals < 1) throw ValidationError("gen_sim_dataset: n_signals must be positive");
    if (windows_per_signal < 1)
        throw ValidationError("gen_sim_dataset: windows_per_signal must be positive");
    if (beta < 0.0) throw ValidationError("gen_sim_dataset: beta must be non-negative");

    SimDataset sim;
    sim.true_model = true_model;
    sim.beta = beta;
    sim.seed = seed;

    const int n_cats = true_model.dims.n_motifs + 1;
    const int n_ctx = true_model.dims.n_contexts;

    Rng root(seed);
    sim.values.assign(n_cats, std::vector<double>(n_ctx, 0.0));
    for (int m = 0; m < n_cats; ++m)
        for (int c = 0; c < n_ctx; ++c) sim.values[m][c] = root.uniform(-1.0, 1.0);

    sim.signals.resize(static_cast<std::size_t>(n_signals));
    sim.truth.resize(static_cast<std::size_t>(n_signals));
    sim.scores.resize(static_cast<std::size_t>(n_signals));
    sim.probabilities.resize(static_cast<std::size_t>(n_signals));
    sim.outcomes.resize(static_cast<std::size_t>(n_signals));

    // Per-signal rng streams derived from (seed, index): bit-identical output
    // for any thread count.
    parallel_for(static_cast<std::size_t>(n_signals), threads, [&](std::size_t i) {
        Rng rng = root.derive(1000 + i);
        auto [seg, lab] = cmmm::sample_cmmm(true_model, windows_per_signal, rng);
        lab.segment_index = i;
        const int wpc = true_model.dims.windows_per_context();
        double s = 0.0;
        for (std::size_t j = 0; j < lab.motifs.size(); ++j)
            s += sim.values[lab.motifs[j]][lab.contexts[j / static_cast<std::size_t>(wpc)]];
        sim.signals[i] = std::move(seg.values);
        sim.truth[i] = std::move(lab);
        sim.scores[i] = s;
        sim.probabilities[i] = score_to_probability(s, beta);
        sim.outcomes[i] = rng.bernoulli(sim.probabilities[i]);
    });
    return sim;
}

double recompute_score(const SimDataset& sim, std::size_t signal_index) {
    const auto& lab = sim.truth[signal_index];
    const int wpc = sim.true_model.dims.windows_per_context();
    double s = 0.0;
    for (std::size_t j = 0; j < lab.motifs.size(); ++j)
        s += sim.values[lab.motifs[j]][lab.contexts[j / static_cast<std::size_t>(wpc)]];
    return s;
}

eval::FeatureMatrix oracle_features(const SimDataset& sim, OracleKind kind) {
    const int n_cats = sim.true_model.dims.n_motifs + 1;
    const int n_ctx = sim.true_model.dims.n_contexts;
    const int wpc = sim.true_model.dims.windows_per_context();

    eval::FeatureMatrix m;
    if (kind == OracleKind::kMotifs) {
        for (int z = 0; z < n_cats; ++z) m.columns.push_back("m" + std::to_string(z));
    } else {
        for (int z = 0; z < n_cats; ++z)
            for (int c = 0; c < n_ctx; ++c)
                m.columns.push_back("m" + std::to_string(z) + "_c" + std::to_string(c));
    }
    for (std::size_t i = 0; i < sim.truth.size(); ++i) {
        const auto& lab = sim.truth[i];
        std::vector<double> x(m.columns.size(), 0.0);
        for (std::size_t j = 0; j < lab.motifs.size(); ++j) {
            int z = lab.motifs[j];
            int c = lab.contexts[j / static_cast<std::size_t>(wpc)];
            std::size_t col = kind == OracleKind::kMotifs
                                  ? static_cast<std::size_t>(z)
                                  : static_cast<std::size_t>(z * n_ctx + c);
            x[col] += 1.0;
        }
        m.x.push_back(std::move(x));
        m.y.push_back(sim.outcomes[i]);
        m.group.push_back(SimDataset::signal_patient_id(i));
        m.row_id.push_back(SimDataset::signal_patient_id(i));
    }
    return m;
}

cmmm::CmmmModel default_sim_model(int n_motifs, int motif_len, int context_len, int n_contexts,
                                  std::uint64_t seed) {
    cmmm::ModelDims dims;
    dims.n_motifs = n_motifs;
    dims.motif_len = motif_len;
    dims.context_len = context_len;
    dims.n_contexts = n_contexts;
    dims.alpha_floor = cmmm::default_alpha_floor(n_contexts);
    dims.validate();

    cmmm::CmmmModel model;
    model.dims = dims;
    model.seed = seed;
    model.background_mean = 0.0;
    model.background_variance = 4.0;

    Rng rng(seed);
    model.means.assign(n_motifs, std::vector<double>(motif_len, 0.0));
    model.variances.assign(n_motifs, std::vector<double>(motif_len, 0.04));
    for (int z = 0; z < n_motifs; ++z) {
        for (int attempt = 0; attempt < 100; ++attempt) {
            std::vector<double> shape(motif_len);
            for (double& v : shape) v = rng.uniform(-3.0, 3.0);
            double min_dist = 1e18;
            for (int prev = 0; prev < z; ++prev)
                min_dist = std::min(min_dist,
                                    std::sqrt(squared_distance(shape, model.means[prev])));
            if (min_dist >= 2.0 || attempt == 99) {
                model.means[z] = std::move(shape);
                break;
            }
        }
    }

    // alpha_c proportional to 1/(c+1): sorted, non-uniform, above the floor.
    model.alpha.assign(n_contexts, 0.0);
    double norm = 0.0;
    for (int c = 0; c < n_contexts; ++c) norm += 1.0 / (c + 1.0);
    for (int c = 0; c < n_contexts; ++c) model.alpha[c] = 1.0 / ((c + 1.0) * norm);
    model.alpha = cmmm::project_alpha(model.alpha, dims.alpha_floor);

    // Each context concentrates on its own block of motifs.
    const double bg_mass = 0.1, in_mass = 0.7, out_mass = 0.2;
    model.Gamma.assign(n_contexts, std::vector<double>(n_motifs + 1, 0.0));
    for (int c = 0; c < n_contexts; ++c) {
        model.Gamma[c][0] = bg_mass;
        int in_count = 0;
        for (int z = 1; z <= n_motifs; ++z)
            if ((z - 1) * n_contexts / n_motifs == c) ++in_count;
        int out_count = n_motifs - in_count;
        for (int z = 1; z <= n_motifs; ++z) {
            bool in_block = (z - 1) * n_contexts / n_motifs == c;
            model.Gamma[c][z] = in_block ? (in_count > 0 ? in_mass / in_count : 0.0)
                                         : (out_count > 0 ? out_mass / out_count : 0.0);
        }
        if (out_count == 0) model.Gamma[c][0] = 1.0 - in_mass;  // degenerate tiny M
    }
    return model;
}

}  // namespace mforge::simgen
