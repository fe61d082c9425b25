#include "mforge/mmm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mforge/errors.hpp"
#include "mforge/numerics.hpp"
#include "mforge/parallel.hpp"

namespace mforge::mmm {

namespace {

constexpr double kRespTol = 1e-9;

std::vector<const double*> collect_windows(const std::vector<signal::DaySegment>& segments,
                                           int motif_len) {
    std::vector<const double*> windows;
    for (const auto& seg : segments) {
        auto w = tile_windows(seg.values, motif_len);
        windows.insert(windows.end(), w.begin(), w.end());
    }
    return windows;
}

}  // namespace

std::vector<const double*> tile_windows(const std::vector<double>& values, int motif_len) {
    std::vector<const double*> out;
    const std::size_t n = values.size() / static_cast<std::size_t>(motif_len);
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(values.data() + i * motif_len);
    return out;
}

double MotifModel::component_log_pdf(const double* window, int z) const {
    double lp = 0.0;
    if (z == 0) {
        for (int k = 0; k < motif_len; ++k)
            lp += normal_log_pdf(window[k], background_mean, background_variance);
    } else {
        const auto& mu = means[z - 1];
        const auto& var = variances[z - 1];
        for (int k = 0; k < motif_len; ++k) lp += normal_log_pdf(window[k], mu[k], var[k]);
    }
    return lp;
}

MotifModel fit_mmm(const std::vector<signal::DaySegment>& segments, int n_motifs, int motif_len,
                   const EmConfig& cfg, std::uint64_t seed) {
    if (n_motifs < 1) throw ValidationError("fit_mmm: need at least one motif component");
    if (motif_len < 1) throw ValidationError("fit_mmm: motif length must be positive");

    auto windows = collect_windows(segments, motif_len);
    const std::size_t n = windows.size();
    if (n < static_cast<std::size_t>(n_motifs) + 1)
        throw ValidationError("fit_mmm: fewer windows than mixture components");

    // Global moments: scalar cap/floor anchors shared by every iteration, so
    // the constrained M-step stays an ascent step.
    double gsum = 0.0, gsq = 0.0;
    for (const double* w : windows)
        for (int k = 0; k < motif_len; ++k) {
            if (!std::isfinite(w[k])) throw ValidationError("fit_mmm: non-finite value in data");
            gsum += w[k];
            gsq += w[k] * w[k];
        }
    const double total_obs = static_cast<double>(n) * motif_len;
    const double gmean = gsum / total_obs;
    const double gvar = std::max(gsq / total_obs - gmean * gmean, 0.0);
    const double floor = cfg.variance_floor;
    const double motif_var_cap = std::max(gvar, floor);
    const double background_floor = std::max(gvar, floor);

    const int m_total = n_motifs + 1;
    MotifModel model;
    model.n_motifs = n_motifs;
    model.motif_len = motif_len;
    model.variance_floor = floor;
    model.seed = seed;
    model.background_mean = gmean;
    model.background_variance = background_floor;

    // k-means++ initialization of the motif components.
    {
        Rng rng(seed);
        std::vector<std::vector<double>> points(n);
        for (std::size_t i = 0; i < n; ++i)
            points[i].assign(windows[i], windows[i] + motif_len);
        auto km = kmeans(points, n_motifs, rng, KMeansEmptyPolicy::kFixFarthest, 10);

        model.means.assign(n_motifs, std::vector<double>(motif_len, gmean));
        model.variances.assign(n_motifs, std::vector<double>(motif_len, motif_var_cap));
        std::vector<double> counts(n_motifs, 0.0);
        std::vector<std::vector<double>> sums(n_motifs, std::vector<double>(motif_len, 0.0));
        std::vector<std::vector<double>> sqs(n_motifs, std::vector<double>(motif_len, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            int c = km.assignment[i];
            counts[c] += 1.0;
            for (int k = 0; k < motif_len; ++k) {
                sums[c][k] += points[i][k];
                sqs[c][k] += points[i][k] * points[i][k];
            }
        }
        model.gamma.assign(m_total, 0.0);
        model.gamma[0] = 1.0 / m_total;
        for (int z = 0; z < n_motifs; ++z) {
            if (counts[z] > 0.0) {
                for (int k = 0; k < motif_len; ++k) {
                    double mu = sums[z][k] / counts[z];
                    double var = sqs[z][k] / counts[z] - mu * mu;
                    model.means[z][k] = mu;
                    model.variances[z][k] = std::clamp(var, floor, motif_var_cap);
                }
            }
            model.gamma[z + 1] = (1.0 - model.gamma[0]) * counts[z] / static_cast<double>(n);
        }
    }

    // EM.
    std::vector<double> resp(n * m_total);
    double prev_ll = -std::numeric_limits<double>::infinity();
    const int workers = std::max(1, cfg.threads);

    std::vector<double> log_gamma(m_total);
    for (int it = 0; it < cfg.max_iters; ++it) {
        for (int z = 0; z < m_total; ++z)
            log_gamma[z] = model.gamma[z] > 0.0 ? std::log(model.gamma[z])
                                                : -std::numeric_limits<double>::infinity();

        // E-step.
        std::vector<double> ll_partial(parallel_workers(n, workers), 0.0);
        std::atomic<bool> resp_violation{false};
        parallel_chunks(n, workers, [&](std::size_t lo, std::size_t hi, std::size_t worker) {
            std::vector<double> lp(m_total);
            double ll_local = 0.0;
            for (std::size_t i = lo; i < hi; ++i) {
                double* r = resp.data() + i * m_total;
                for (int z = 0; z < m_total; ++z)
                    lp[z] = log_gamma[z] + model.component_log_pdf(windows[i], z);
                double denom = log_sum_exp(lp);
                double sum = 0.0;
                for (int z = 0; z < m_total; ++z) {
                    r[z] = std::exp(lp[z] - denom);
                    sum += r[z];
                }
                if (std::abs(sum - 1.0) > kRespTol) resp_violation = true;
                ll_local += denom;
            }
            ll_partial[worker] = ll_local;
        });
        if (resp_violation)
            throw std::logic_error("fit_mmm: responsibilities do not sum to 1");
        double ll = 0.0;
        for (double p : ll_partial) ll += p;

        if (std::isfinite(prev_ll) && ll < prev_ll - 1e-8 * (std::abs(prev_ll) + 1.0))
            throw std::logic_error("fit_mmm: log-likelihood decreased during EM");

        // M-step.
        std::vector<double> nz(m_total, 0.0);
        std::vector<std::vector<double>> sums(n_motifs, std::vector<double>(motif_len, 0.0));
        std::vector<std::vector<double>> sqs(n_motifs, std::vector<double>(motif_len, 0.0));
        double bg_sum = 0.0, bg_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double* r = resp.data() + i * m_total;
            const double* w = windows[i];
            for (int z = 0; z < m_total; ++z) nz[z] += r[z];
            for (int k = 0; k < motif_len; ++k) {
                bg_sum += r[0] * w[k];
                bg_sq += r[0] * w[k] * w[k];
            }
            for (int z = 1; z < m_total; ++z) {
                for (int k = 0; k < motif_len; ++k) {
                    sums[z - 1][k] += r[z] * w[k];
                    sqs[z - 1][k] += r[z] * w[k] * w[k];
                }
            }
        }
        for (int z = 0; z < m_total; ++z) model.gamma[z] = nz[z] / static_cast<double>(n);
        for (int z = 1; z < m_total; ++z) {
            if (nz[z] < 1e-12) continue;  // dead component: parameters frozen
            for (int k = 0; k < motif_len; ++k) {
                double mu = sums[z - 1][k] / nz[z];
                double var = sqs[z - 1][k] / nz[z] - mu * mu;
                model.means[z - 1][k] = mu;
                model.variances[z - 1][k] = std::clamp(var, floor, motif_var_cap);
            }
        }
        if (nz[0] > 1e-12) {
            double denom = nz[0] * motif_len;
            double mu = bg_sum / denom;
            double var = bg_sq / denom - mu * mu;
            model.background_mean = mu;
            model.background_variance = std::max(var, background_floor);
        }

        model.iterations = it + 1;
        model.final_log_likelihood = ll;
        if (std::isfinite(prev_ll) && std::abs(ll - prev_ll) <= cfg.tol * (std::abs(ll) + 1.0))
            break;
        prev_ll = ll;
    }
    return model;
}

double mmm_log_likelihood(const MotifModel& model, const signal::DaySegment& segment) {
    auto windows = tile_windows(segment.values, model.motif_len);
    const int m_total = model.n_motifs + 1;
    std::vector<double> lp(m_total);
    double ll = 0.0;
    for (const double* w : windows) {
        for (int z = 0; z < m_total; ++z) {
            double lg = model.gamma[z] > 0.0 ? std::log(model.gamma[z])
                                             : -std::numeric_limits<double>::infinity();
            lp[z] = lg + model.component_log_pdf(w, z);
        }
        ll += log_sum_exp(lp);
    }
    return ll;
}

MotifLabeling assign_motifs(const MotifModel& model, const signal::DaySegment& segment,
                            std::size_t segment_index) {
    auto windows = tile_windows(segment.values, model.motif_len);
    MotifLabeling out;
    out.segment_index = segment_index;
    out.labels.reserve(windows.size());
    const int m_total = model.n_motifs + 1;
    for (const double* w : windows) {
        int best = 0;
        double best_lp = -std::numeric_limits<double>::infinity();
        for (int z = 0; z < m_total; ++z) {
            if (model.gamma[z] <= 0.0) continue;
            double lp = std::log(model.gamma[z]) + model.component_log_pdf(w, z);
            if (lp > best_lp) {
                best_lp = lp;
                best = z;
            }
        }
        out.labels.push_back(best);
    }
    return out;
}

std::pair<signal::DaySegment, MotifLabeling> sample_mmm(const MotifModel& model, int n_windows,
                                                        Rng& rng) {
    if (n_windows < 1) throw ValidationError("sample_mmm: n_windows must be positive");
    signal::DaySegment seg;
    seg.patient_id = "sampled";
    seg.values.reserve(static_cast<std::size_t>(n_windows) * model.motif_len);
    MotifLabeling lab;
    lab.labels.reserve(n_windows);
    for (int i = 0; i < n_windows; ++i) {
        int z = rng.categorical(model.gamma);
        lab.labels.push_back(z);
        for (int k = 0; k < model.motif_len; ++k) {
            double mu = z == 0 ? model.background_mean : model.means[z - 1][k];
            double var = z == 0 ? model.background_variance : model.variances[z - 1][k];
            seg.values.push_back(rng.normal(mu, std::sqrt(var)));
        }
    }
    return {std::move(seg), std::move(lab)};
}

}  // namespace mforge::mmm
