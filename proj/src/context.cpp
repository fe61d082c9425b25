#include "mforge/context.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mforge/errors.hpp"
#include "mforge/numerics.hpp"

namespace mforge::context {

// ---------------------------------------------------------------------------
// Expert rule
// ---------------------------------------------------------------------------

ContextSequence expert_context(const signal::DaySegment& seg, int k, const ExpertRule& rule,
                               int dilation, std::size_t segment_index) {
    const int t_len = static_cast<int>(seg.values.size());
    if (k < 1) throw ValidationError("expert_context: k must be positive");
    if (k >= t_len) throw ValidationError("expert_context: k must be smaller than the segment");
    if (dilation < 0) throw ValidationError("expert_context: dilation must be non-negative");

    ContextSequence out;
    out.segment_index = segment_index;
    out.per_sample = true;
    out.n_contexts = 2;
    out.labels.assign(static_cast<std::size_t>(t_len), 0);

    // Mean of the last k successive differences telescopes to (x_t - x_{t-k})/k.
    for (int t = k; t < t_len; ++t) {
        double mean_rise = (seg.values[t] - seg.values[t - k]) / static_cast<double>(k);
        if (mean_rise >= rule.rise_threshold) {
            int lo = std::max(0, t - dilation);
            int hi = std::min(t_len - 1, t + dilation);
            for (int i = lo; i <= hi; ++i) out.labels[static_cast<std::size_t>(i)] = 1;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// HMM
// ---------------------------------------------------------------------------

namespace {

using Feature = std::array<double, 2>;

std::vector<Feature> segment_features(const signal::DaySegment& seg) {
    std::vector<Feature> f(seg.values.size());
    for (std::size_t t = 0; t < seg.values.size(); ++t) {
        f[t][0] = seg.values[t];
        f[t][1] = t == 0 ? 0.0 : seg.values[t] - seg.values[t - 1];
    }
    return f;
}

void normalize_features(std::vector<Feature>& f, const HmmModel& model) {
    for (auto& x : f)
        for (int d = 0; d < 2; ++d) x[d] = (x[d] - model.feature_mean[d]) / model.feature_scale[d];
}

double emission_log_pdf(const HmmModel& model, int state, const Feature& x) {
    double lp = 0.0;
    for (int d = 0; d < 2; ++d)
        lp += normal_log_pdf(x[d], model.emission_mean[state][d], model.emission_var[state][d]);
    return lp;
}

struct ForwardBackward {
    double log_likelihood = 0.0;
    std::vector<std::vector<double>> gamma_post;           // [t][s]
    std::vector<std::vector<double>> xi_sum;               // [r][s], summed over t
};

ForwardBackward forward_backward(const HmmModel& model, const std::vector<Feature>& seq) {
    const int n = model.n_states;
    const std::size_t t_len = seq.size();
    ForwardBackward fb;
    fb.gamma_post.assign(t_len, std::vector<double>(n, 0.0));
    fb.xi_sum.assign(n, std::vector<double>(n, 0.0));

    std::vector<std::vector<double>> b(t_len, std::vector<double>(n, 0.0));
    std::vector<double> bmax(t_len, 0.0);
    for (std::size_t t = 0; t < t_len; ++t) {
        double m = -std::numeric_limits<double>::infinity();
        for (int s = 0; s < n; ++s) {
            b[t][s] = emission_log_pdf(model, s, seq[t]);
            m = std::max(m, b[t][s]);
        }
        bmax[t] = m;
        for (int s = 0; s < n; ++s) b[t][s] = std::exp(b[t][s] - m);
    }

    std::vector<std::vector<double>> alpha(t_len, std::vector<double>(n, 0.0));
    std::vector<double> scale(t_len, 0.0);
    for (int s = 0; s < n; ++s) alpha[0][s] = model.initial[s] * b[0][s];
    double sum0 = std::accumulate(alpha[0].begin(), alpha[0].end(), 0.0);
    if (sum0 <= 0.0) throw std::runtime_error("hmm: zero forward mass");
    scale[0] = sum0;
    for (int s = 0; s < n; ++s) alpha[0][s] /= sum0;
    for (std::size_t t = 1; t < t_len; ++t) {
        for (int s = 0; s < n; ++s) {
            double acc = 0.0;
            for (int r = 0; r < n; ++r) acc += alpha[t - 1][r] * model.transition[r][s];
            alpha[t][s] = acc * b[t][s];
        }
        double sum = std::accumulate(alpha[t].begin(), alpha[t].end(), 0.0);
        if (sum <= 0.0) throw std::runtime_error("hmm: zero forward mass");
        scale[t] = sum;
        for (int s = 0; s < n; ++s) alpha[t][s] /= sum;
    }

    std::vector<std::vector<double>> beta(t_len, std::vector<double>(n, 1.0));
    for (std::size_t ti = t_len - 1; ti-- > 0;) {
        for (int r = 0; r < n; ++r) {
            double acc = 0.0;
            for (int s = 0; s < n; ++s)
                acc += model.transition[r][s] * b[ti + 1][s] * beta[ti + 1][s];
            beta[ti][r] = acc / scale[ti + 1];
        }
    }

    for (std::size_t t = 0; t < t_len; ++t) {
        double norm = 0.0;
        for (int s = 0; s < n; ++s) {
            fb.gamma_post[t][s] = alpha[t][s] * beta[t][s];
            norm += fb.gamma_post[t][s];
        }
        for (int s = 0; s < n; ++s) fb.gamma_post[t][s] /= norm;
    }
    for (std::size_t t = 0; t + 1 < t_len; ++t) {
        double norm = 0.0;
        std::vector<std::vector<double>> xi(n, std::vector<double>(n, 0.0));
        for (int r = 0; r < n; ++r)
            for (int s = 0; s < n; ++s) {
                xi[r][s] = alpha[t][r] * model.transition[r][s] * b[t + 1][s] * beta[t + 1][s];
                norm += xi[r][s];
            }
        for (int r = 0; r < n; ++r)
            for (int s = 0; s < n; ++s) fb.xi_sum[r][s] += xi[r][s] / norm;
    }

    fb.log_likelihood = 0.0;
    for (std::size_t t = 0; t < t_len; ++t) fb.log_likelihood += std::log(scale[t]) + bmax[t];
    return fb;
}

}  // namespace

HmmModel hmm_fit(const std::vector<signal::DaySegment>& segments, int n_states,
                 std::uint64_t seed, const HmmConfig& cfg) {
    if (n_states < 1) throw ValidationError("hmm_fit: n_states must be positive");
    if (segments.empty()) throw ValidationError("hmm_fit: no segments");

    std::vector<std::vector<Feature>> seqs;
    seqs.reserve(segments.size());
    for (const auto& seg : segments) seqs.push_back(segment_features(seg));

    HmmModel base;
    base.n_states = n_states;
    base.seed = seed;

    // Dataset feature normalization.
    for (int d = 0; d < 2; ++d) {
        std::vector<double> col;
        for (const auto& seq : seqs)
            for (const auto& x : seq) col.push_back(x[d]);
        auto [mean, var] = mean_variance(col);
        if (var <= 0.0)
            throw ValidationError("hmm_fit: feature " + std::to_string(d) +
                                  " has zero variance across the dataset");
        base.feature_mean[d] = mean;
        base.feature_scale[d] = std::sqrt(var);
    }
    for (auto& seq : seqs) normalize_features(seq, base);

    base.initial.assign(n_states, 1.0 / n_states);
    base.transition.assign(n_states, std::vector<double>(n_states, 0.0));
    for (int r = 0; r < n_states; ++r)
        for (int s = 0; s < n_states; ++s)
            base.transition[r][s] = n_states == 1 ? 1.0 : (r == s ? 0.8 : 0.2 / (n_states - 1));
    base.emission_mean.assign(n_states, {0.0, 0.0});
    base.emission_var.assign(n_states, {1.0, 1.0});

    std::vector<std::vector<double>> rows;
    for (const auto& seq : seqs)
        for (const auto& x : seq) rows.push_back({x[0], x[1]});

    // Several principled emission initializations (full-feature k-means,
    // each single feature, value quantiles); Baum-Welch from each, keep the
    // best final likelihood. Guards against locking onto a transient-spike
    // state when a level structure explains the data better.
    Rng rng(seed);
    std::vector<HmmModel> inits;
    {
        HmmModel m = base;
        auto km = kmeans(rows, n_states, rng, KMeansEmptyPolicy::kFixFarthest, 10);
        for (int s = 0; s < n_states; ++s)
            m.emission_mean[s] = {km.centroids[s][0], km.centroids[s][1]};
        inits.push_back(std::move(m));
    }
    for (int d = 0; d < 2 && n_states > 1; ++d) {
        std::vector<std::vector<double>> col(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) col[i] = {rows[i][d]};
        HmmModel m = base;
        auto km = kmeans(col, n_states, rng, KMeansEmptyPolicy::kFixFarthest, 10);
        for (int s = 0; s < n_states; ++s) m.emission_mean[s][d] = km.centroids[s][0];
        inits.push_back(std::move(m));
    }
    if (n_states > 1) {
        std::vector<double> values;
        for (const auto& row : rows) values.push_back(row[0]);
        std::sort(values.begin(), values.end());
        HmmModel m = base;
        for (int s = 0; s < n_states; ++s) {
            std::size_t q = (2 * static_cast<std::size_t>(s) + 1) * values.size() /
                            (2 * static_cast<std::size_t>(n_states));
            m.emission_mean[s][0] = values[std::min(q, values.size() - 1)];
        }
        inits.push_back(std::move(m));
    }

    HmmModel best;
    bool have_best = false;
    for (HmmModel model : inits) {
        double prev_ll = -std::numeric_limits<double>::infinity();
        for (int it = 0; it < cfg.max_iters; ++it) {
            double ll = 0.0;
            std::vector<double> pi_acc(n_states, 0.0);
            std::vector<std::vector<double>> xi_acc(n_states, std::vector<double>(n_states, 0.0));
            std::vector<double> gamma_trans(n_states, 0.0);  // occupancy over t < T-1
            std::vector<double> occ(n_states, 0.0);
            std::vector<Feature> mean_acc(n_states, {0.0, 0.0});
            std::vector<Feature> sq_acc(n_states, {0.0, 0.0});

            for (const auto& seq : seqs) {
                auto fb = forward_backward(model, seq);
                ll += fb.log_likelihood;
                for (int s = 0; s < n_states; ++s) pi_acc[s] += fb.gamma_post[0][s];
                for (int r = 0; r < n_states; ++r)
                    for (int s = 0; s < n_states; ++s) xi_acc[r][s] += fb.xi_sum[r][s];
                for (std::size_t t = 0; t < seq.size(); ++t) {
                    for (int s = 0; s < n_states; ++s) {
                        double g = fb.gamma_post[t][s];
                        occ[s] += g;
                        if (t + 1 < seq.size()) gamma_trans[s] += g;
                        for (int d = 0; d < 2; ++d) {
                            mean_acc[s][d] += g * seq[t][d];
                            sq_acc[s][d] += g * seq[t][d] * seq[t][d];
                        }
                    }
                }
            }

            if (std::isfinite(prev_ll) && ll < prev_ll - 1e-8 * (std::abs(prev_ll) + 1.0))
                throw std::logic_error("hmm_fit: log-likelihood decreased during Baum-Welch");

            for (int s = 0; s < n_states; ++s)
                model.initial[s] = pi_acc[s] / static_cast<double>(seqs.size());
            for (int r = 0; r < n_states; ++r) {
                if (gamma_trans[r] < 1e-12) continue;
                for (int s = 0; s < n_states; ++s)
                    model.transition[r][s] = xi_acc[r][s] / gamma_trans[r];
            }
            for (int s = 0; s < n_states; ++s) {
                if (occ[s] < 1e-12) continue;
                for (int d = 0; d < 2; ++d) {
                    double mu = mean_acc[s][d] / occ[s];
                    double var = sq_acc[s][d] / occ[s] - mu * mu;
                    model.emission_mean[s][d] = mu;
                    model.emission_var[s][d] = std::max(var, cfg.variance_floor);
                }
            }

            model.iterations = it + 1;
            model.final_log_likelihood = ll;
            if (std::isfinite(prev_ll) && std::abs(ll - prev_ll) <= cfg.tol * (std::abs(ll) + 1.0))
                break;
            prev_ll = ll;
        }
        if (!have_best || model.final_log_likelihood > best.final_log_likelihood) {
            best = std::move(model);
            have_best = true;
        }
    }
    return best;
}

ContextSequence hmm_decode(const HmmModel& model, const signal::DaySegment& seg,
                           std::size_t segment_index) {
    auto seq = segment_features(seg);
    normalize_features(seq, model);
    const int n = model.n_states;
    const std::size_t t_len = seq.size();

    ContextSequence out;
    out.segment_index = segment_index;
    out.per_sample = true;
    out.n_contexts = n;
    if (t_len == 0) return out;

    std::vector<std::vector<double>> delta(t_len, std::vector<double>(n, 0.0));
    std::vector<std::vector<int>> from(t_len, std::vector<int>(n, 0));
    auto safe_log = [](double p) {
        return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
    };
    for (int s = 0; s < n; ++s)
        delta[0][s] = safe_log(model.initial[s]) + emission_log_pdf(model, s, seq[0]);
    for (std::size_t t = 1; t < t_len; ++t) {
        for (int s = 0; s < n; ++s) {
            int best_r = 0;
            double best = -std::numeric_limits<double>::infinity();
            for (int r = 0; r < n; ++r) {
                double cand = delta[t - 1][r] + safe_log(model.transition[r][s]);
                if (cand > best) {  // strict: ties go to the smaller r
                    best = cand;
                    best_r = r;
                }
            }
            delta[t][s] = best + emission_log_pdf(model, s, seq[t]);
            from[t][s] = best_r;
        }
    }
    int state = 0;
    for (int s = 1; s < n; ++s)
        if (delta[t_len - 1][s] > delta[t_len - 1][state]) state = s;
    out.labels.assign(t_len, 0);
    for (std::size_t t = t_len; t-- > 0;) {
        out.labels[t] = state;
        if (t > 0) state = from[t][state];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Motif-topic context
// ---------------------------------------------------------------------------

MotifTopicResult motif_topic_context(const std::vector<mmm::MotifLabeling>& labelings,
                                     int n_motifs, int motif_len, int context_len, int n_contexts,
                                     std::uint64_t seed) {
    if (labelings.empty()) throw ValidationError("motif_topic_context: no labelings");
    if (context_len % motif_len != 0)
        throw ValidationError("motif_topic_context: context length must be a multiple of the motif length");
    if (n_contexts < 1) throw ValidationError("motif_topic_context: n_contexts must be positive");
    const int per_window = context_len / motif_len;
    const int n_cats = n_motifs + 1;

    // Empirical motif-frequency vector (add-one smoothed) per context window.
    std::vector<std::vector<double>> points;
    std::vector<std::vector<std::vector<int>>> counts_per_window(labelings.size());
    for (std::size_t li = 0; li < labelings.size(); ++li) {
        const auto& lab = labelings[li];
        const std::size_t n_windows = lab.labels.size() / static_cast<std::size_t>(per_window);
        counts_per_window[li].resize(n_windows, std::vector<int>(n_cats, 0));
        for (std::size_t wi = 0; wi < n_windows; ++wi) {
            auto& counts = counts_per_window[li][wi];
            for (int j = 0; j < per_window; ++j) {
                int z = lab.labels[wi * per_window + j];
                if (z < 0 || z >= n_cats)
                    throw ValidationError("motif_topic_context: label outside [0, M]");
                ++counts[z];
            }
            std::vector<double> freq(n_cats);
            double denom = static_cast<double>(per_window + n_cats);
            for (int z = 0; z < n_cats; ++z) freq[z] = (counts[z] + 1.0) / denom;
            points.push_back(std::move(freq));
        }
    }
    if (points.size() < static_cast<std::size_t>(n_contexts))
        throw ValidationError("motif_topic_context: fewer context windows than contexts");

    MotifTopicResult res;
    Rng rng(seed);
    auto km = kmeans(points, n_contexts, rng, KMeansEmptyPolicy::kReseed);

    if (km.degenerate) {
        // Duplicated-centroid fallback: one shared profile, every label 0.
        std::vector<double> mean(n_cats, 0.0);
        for (const auto& p : points)
            for (int z = 0; z < n_cats; ++z) mean[z] += p[z];
        double norm = 0.0;
        for (int z = 0; z < n_cats; ++z) norm += mean[z];
        for (int z = 0; z < n_cats; ++z) mean[z] /= norm;
        res.gamma.assign(n_contexts, mean);
    } else {
        res.gamma.reserve(n_contexts);
        for (const auto& c : km.centroids) {
            std::vector<double> row = c;
            double norm = std::accumulate(row.begin(), row.end(), 0.0);
            for (double& v : row) v /= norm;
            res.gamma.push_back(std::move(row));
        }
    }

    // Multinomial MLE context per window from the returned gamma (so the
    // labels are a fixed point of re-running this assignment).
    for (std::size_t li = 0; li < labelings.size(); ++li) {
        ContextSequence cs;
        cs.segment_index = labelings[li].segment_index;
        cs.per_sample = false;
        cs.n_contexts = n_contexts;
        for (const auto& counts : counts_per_window[li]) {
            int best = 0;
            double best_score = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < n_contexts; ++c) {
                double score = 0.0;
                for (int z = 0; z < n_cats; ++z)
                    if (counts[z] > 0) score += counts[z] * std::log(res.gamma[c][z]);
                if (score > best_score) {
                    best_score = score;
                    best = c;
                }
            }
            cs.labels.push_back(best);
        }
        res.contexts.push_back(std::move(cs));
    }
    return res;
}

std::vector<int> coarsen_to_windows(const std::vector<int>& per_sample, int window_len,
                                    int n_contexts) {
    const std::size_t n_windows = per_sample.size() / static_cast<std::size_t>(window_len);
    std::vector<int> out;
    out.reserve(n_windows);
    for (std::size_t w = 0; w < n_windows; ++w) {
        std::vector<int> votes(static_cast<std::size_t>(n_contexts), 0);
        for (int i = 0; i < window_len; ++i)
            ++votes[static_cast<std::size_t>(per_sample[w * window_len + i])];
        int best = 0;
        for (int c = 1; c < n_contexts; ++c)
            if (votes[c] > votes[best]) best = c;
        out.push_back(best);
    }
    return out;
}

std::vector<int> expand_to_samples(const std::vector<int>& per_window, int window_len) {
    std::vector<int> out;
    out.reserve(per_window.size() * static_cast<std::size_t>(window_len));
    for (int label : per_window)
        for (int i = 0; i < window_len; ++i) out.push_back(label);
    return out;
}

}  // namespace mforge::context
