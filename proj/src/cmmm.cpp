#include "mforge/cmmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mforge/errors.hpp"
#include "mforge/numerics.hpp"

namespace mforge::cmmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

struct ThetaView {
    const std::vector<std::vector<double>>* means;
    const std::vector<std::vector<double>>* variances;
    double bg_mean;
    double bg_var;
    int motif_len;
};

double window_log_pdf_impl(const ThetaView& th, const double* w, int z) {
    double lp = 0.0;
    if (z == 0) {
        for (int k = 0; k < th.motif_len; ++k)
            lp += normal_log_pdf(w[k], th.bg_mean, th.bg_var);
    } else {
        const auto& mu = (*th.means)[static_cast<std::size_t>(z - 1)];
        const auto& var = (*th.variances)[static_cast<std::size_t>(z - 1)];
        for (int k = 0; k < th.motif_len; ++k) lp += normal_log_pdf(w[k], mu[k], var[k]);
    }
    return lp;
}

ThetaView theta_of(const SamplerState& s, int motif_len) {
    return {&s.means, &s.variances, s.background_mean, s.background_variance, motif_len};
}

bool alpha_satisfies(const std::vector<double>& alpha, const ModelDims& dims) {
    for (std::size_t c = 0; c < alpha.size(); ++c) {
        if (alpha[c] < dims.alpha_floor) return false;
        if (c + 1 < alpha.size() && alpha[c] < alpha[c + 1]) return false;
    }
    return true;
}

bool variances_satisfy(const SamplerState& s, const ModelDims& dims) {
    for (const auto& row : s.variances)
        for (double v : row)
            if (v < dims.variance_floor) return false;
    return s.background_variance >= dims.variance_floor;
}

// Additive log-ratio transform of a simplex point and its inverse. The
// Jacobian log-determinant of the inverse map is the sum of log components.
std::vector<double> alr(const std::vector<double>& p) {
    std::vector<double> v(p.size() - 1);
    for (std::size_t i = 0; i + 1 < p.size(); ++i) v[i] = std::log(p[i + 1] / p[0]);
    return v;
}

std::vector<double> alr_inverse(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, x);
    double denom = std::exp(-m);
    for (double x : v) denom += std::exp(x - m);
    std::vector<double> p(v.size() + 1);
    p[0] = std::exp(-m) / denom;
    for (std::size_t i = 0; i < v.size(); ++i) p[i + 1] = std::exp(v[i] - m) / denom;
    return p;
}

double log_simplex_jacobian(const std::vector<double>& p) {
    double lj = 0.0;
    for (double x : p) lj += safe_log(x);
    return lj;
}

int n_context_windows(const ModelDims& dims, const signal::DaySegment& seg) {
    return static_cast<int>(seg.values.size() / static_cast<std::size_t>(dims.context_len));
}

void check_state_dims(const ModelDims& dims, const SamplerState& state,
                      const std::vector<signal::DaySegment>& data) {
    if (static_cast<int>(state.alpha.size()) != dims.n_contexts ||
        static_cast<int>(state.Gamma.size()) != dims.n_contexts ||
        static_cast<int>(state.means.size()) != dims.n_motifs ||
        static_cast<int>(state.variances.size()) != dims.n_motifs ||
        state.contexts.size() != data.size() || state.motifs.size() != data.size())
        throw ValidationError("cmmm: sampler state dimensions do not match the data");
    for (const auto& row : state.Gamma)
        if (static_cast<int>(row.size()) != dims.n_motifs + 1)
            throw ValidationError("cmmm: Gamma row dimension mismatch");
    for (std::size_t s = 0; s < data.size(); ++s) {
        int nc = n_context_windows(dims, data[s]);
        if (static_cast<int>(state.contexts[s].size()) != nc ||
            static_cast<int>(state.motifs[s].size()) != nc * dims.windows_per_context())
            throw ValidationError("cmmm: label dimensions do not match segment " +
                                  std::to_string(s));
    }
}

// ---------------------------------------------------------------------------
// Theta block: packed parameter vector, sufficient statistics, target, grad
// ---------------------------------------------------------------------------

struct ThetaStats {
    std::vector<double> n;                // [M] window counts
    std::vector<std::vector<double>> s;   // [M][l_m] sums
    std::vector<std::vector<double>> q;   // [M][l_m] sums of squares
    double n_bg = 0.0;                    // background observation count
    double s_bg = 0.0;
    double q_bg = 0.0;
};

ThetaStats accumulate_theta_stats(const ModelDims& dims, const SamplerState& state,
                                  const std::vector<signal::DaySegment>& data) {
    ThetaStats st;
    st.n.assign(dims.n_motifs, 0.0);
    st.s.assign(dims.n_motifs, std::vector<double>(dims.motif_len, 0.0));
    st.q.assign(dims.n_motifs, std::vector<double>(dims.motif_len, 0.0));
    for (std::size_t si = 0; si < data.size(); ++si) {
        const double* values = data[si].values.data();
        for (std::size_t j = 0; j < state.motifs[si].size(); ++j) {
            const double* w = values + j * static_cast<std::size_t>(dims.motif_len);
            int z = state.motifs[si][j];
            if (z == 0) {
                st.n_bg += dims.motif_len;
                for (int k = 0; k < dims.motif_len; ++k) {
                    st.s_bg += w[k];
                    st.q_bg += w[k] * w[k];
                }
            } else {
                st.n[z - 1] += 1.0;
                for (int k = 0; k < dims.motif_len; ++k) {
                    st.s[z - 1][k] += w[k];
                    st.q[z - 1][k] += w[k] * w[k];
                }
            }
        }
    }
    return st;
}

std::size_t theta_dim(const ModelDims& dims) {
    return 2 * static_cast<std::size_t>(dims.n_motifs) * dims.motif_len + 2;
}

std::vector<double> pack_theta(const ModelDims& dims, const SamplerState& state) {
    std::vector<double> phi;
    phi.reserve(theta_dim(dims));
    for (const auto& row : state.means) phi.insert(phi.end(), row.begin(), row.end());
    for (const auto& row : state.variances)
        for (double v : row) phi.push_back(std::log(v));
    phi.push_back(state.background_mean);
    phi.push_back(std::log(state.background_variance));
    return phi;
}

void unpack_theta(const ModelDims&, const std::vector<double>& phi, SamplerState& state) {
    std::size_t idx = 0;
    for (auto& row : state.means)
        for (double& v : row) v = phi[idx++];
    for (auto& row : state.variances)
        for (double& v : row) v = std::exp(phi[idx++]);
    state.background_mean = phi[idx++];
    state.background_variance = std::exp(phi[idx++]);
}

// Log target over (means, log-variances): data likelihood given the current
// labels plus the theta priors, with the exp-transform Jacobian so the chain
// leaves the joint density over variances invariant. Fills `grad` when given.
double theta_target(const ModelDims& dims, const std::vector<double>& phi, const ThetaStats& st,
                    std::vector<double>* grad) {
    const Priors& pr = dims.priors;
    const int m = dims.n_motifs;
    const int l = dims.motif_len;
    const double log_floor = std::log(dims.variance_floor);
    const std::size_t var_base = static_cast<std::size_t>(m) * l;
    const std::size_t bg_mean_idx = 2 * var_base;
    const std::size_t bg_var_idx = bg_mean_idx + 1;

    for (std::size_t i = var_base; i < bg_mean_idx; ++i)
        if (phi[i] < log_floor) return kNegInf;
    if (phi[bg_var_idx] < log_floor) return kNegInf;

    if (grad) std::fill(grad->begin(), grad->end(), 0.0);
    double lp = 0.0;

    auto add_block = [&](std::size_t mean_idx, std::size_t var_idx, double n, double s, double q) {
        const double mu = phi[mean_idx];
        const double lambda = phi[var_idx];
        const double inv_var = std::exp(-lambda);
        const double a = q - 2.0 * mu * s + n * mu * mu;
        // data
        lp += -0.5 * n * (kLog2Pi + lambda) - 0.5 * inv_var * a;
        // mean prior
        lp += -0.5 * (kLog2Pi + std::log(pr.mean_scale2)) -
              (mu - pr.mean_loc) * (mu - pr.mean_loc) / (2.0 * pr.mean_scale2);
        // variance prior in log space (Inverse-Gamma density plus Jacobian)
        lp += pr.var_shape * std::log(pr.var_scale) - std::lgamma(pr.var_shape) -
              pr.var_shape * lambda - pr.var_scale * inv_var;
        if (grad) {
            (*grad)[mean_idx] += inv_var * (s - n * mu) - (mu - pr.mean_loc) / pr.mean_scale2;
            (*grad)[var_idx] += -0.5 * n + 0.5 * inv_var * a - pr.var_shape + pr.var_scale * inv_var;
        }
    };

    for (int z = 0; z < m; ++z)
        for (int k = 0; k < l; ++k)
            add_block(static_cast<std::size_t>(z) * l + k, var_base + static_cast<std::size_t>(z) * l + k,
                      st.n[z], st.s[z][k], st.q[z][k]);
    add_block(bg_mean_idx, bg_var_idx, st.n_bg, st.s_bg, st.q_bg);
    return lp;
}

// ---------------------------------------------------------------------------
// Count statistics for the simplex kernels
// ---------------------------------------------------------------------------

std::vector<double> context_counts(const ModelDims& dims, const SamplerState& state) {
    std::vector<double> n(dims.n_contexts, 0.0);
    for (const auto& seg : state.contexts)
        for (int c : seg) n[c] += 1.0;
    return n;
}

std::vector<std::vector<double>> motif_counts(const ModelDims& dims, const SamplerState& state) {
    std::vector<std::vector<double>> n(dims.n_contexts,
                                       std::vector<double>(dims.n_motifs + 1, 0.0));
    const int wpc = dims.windows_per_context();
    for (std::size_t s = 0; s < state.motifs.size(); ++s)
        for (std::size_t j = 0; j < state.motifs[s].size(); ++j) {
            int c = state.contexts[s][j / static_cast<std::size_t>(wpc)];
            n[c][state.motifs[s][j]] += 1.0;
        }
    return n;
}

}  // namespace

void ModelDims::validate() const {
    if (n_contexts < 1) throw ValidationError("cmmm: n_contexts must be positive");
    if (n_motifs < 1) throw ValidationError("cmmm: n_motifs must be positive");
    if (motif_len < 1) throw ValidationError("cmmm: motif length must be positive");
    if (context_len % motif_len != 0)
        throw ValidationError("cmmm: context length must be a multiple of the motif length");
    if (alpha_floor < 0.0 || alpha_floor * n_contexts > 1.0)
        throw ValidationError("cmmm: alpha floor must satisfy n_contexts * floor <= 1");
    if (variance_floor <= 0.0) throw ValidationError("cmmm: variance floor must be positive");
}

double CmmmModel::window_log_pdf(const double* window, int z) const {
    ThetaView th{&means, &variances, background_mean, background_variance, dims.motif_len};
    return window_log_pdf_impl(th, window, z);
}

double cmmm_joint_log_prob(const ModelDims& dims, const SamplerState& state,
                           const std::vector<signal::DaySegment>& data) {
    check_state_dims(dims, state, data);
    if (!alpha_satisfies(state.alpha, dims)) return kNegInf;
    if (!variances_satisfy(state, dims)) return kNegInf;

    const Priors& pr = dims.priors;
    double lp = dirichlet_symmetric_log_pdf(state.alpha, pr.dirichlet_alpha);
    for (const auto& row : state.Gamma) lp += dirichlet_symmetric_log_pdf(row, pr.dirichlet_gamma);
    for (int z = 0; z < dims.n_motifs; ++z)
        for (int k = 0; k < dims.motif_len; ++k) {
            lp += normal_log_pdf(state.means[z][k], pr.mean_loc, pr.mean_scale2);
            lp += inverse_gamma_log_pdf(state.variances[z][k], pr.var_shape, pr.var_scale);
        }
    lp += normal_log_pdf(state.background_mean, pr.mean_loc, pr.mean_scale2);
    lp += inverse_gamma_log_pdf(state.background_variance, pr.var_shape, pr.var_scale);

    const ThetaView th = theta_of(state, dims.motif_len);
    const int wpc = dims.windows_per_context();
    for (std::size_t si = 0; si < data.size(); ++si) {
        const double* values = data[si].values.data();
        for (int c : state.contexts[si]) lp += safe_log(state.alpha[c]);
        for (std::size_t j = 0; j < state.motifs[si].size(); ++j) {
            int c = state.contexts[si][j / static_cast<std::size_t>(wpc)];
            int z = state.motifs[si][j];
            lp += safe_log(state.Gamma[c][z]);
            lp += window_log_pdf_impl(th, values + j * static_cast<std::size_t>(dims.motif_len), z);
        }
    }
    return lp;
}

double context_accept_prob(const ModelDims& dims, const SamplerState& state,
                           const std::vector<signal::DaySegment>& data, std::size_t segment,
                           std::size_t window, int proposed) {
    const int cur = state.contexts[segment][window];
    if (proposed == cur) return 1.0;
    const int wpc = dims.windows_per_context();
    double delta = safe_log(state.alpha[proposed]) - safe_log(state.alpha[cur]);
    for (int j = 0; j < wpc; ++j) {
        int z = state.motifs[segment][window * static_cast<std::size_t>(wpc) + j];
        delta += safe_log(state.Gamma[proposed][z]) - safe_log(state.Gamma[cur][z]);
    }
    (void)data;
    return std::min(1.0, std::exp(delta));
}

double motif_accept_prob(const ModelDims& dims, const SamplerState& state,
                         const std::vector<signal::DaySegment>& data, std::size_t segment,
                         std::size_t window, int proposed) {
    const int cur = state.motifs[segment][window];
    if (proposed == cur) return 1.0;
    const int wpc = dims.windows_per_context();
    const int c = state.contexts[segment][window / static_cast<std::size_t>(wpc)];
    const ThetaView th = theta_of(state, dims.motif_len);
    const double* w =
        data[segment].values.data() + window * static_cast<std::size_t>(dims.motif_len);
    double delta = safe_log(state.Gamma[c][proposed]) - safe_log(state.Gamma[c][cur]) +
                   window_log_pdf_impl(th, w, proposed) - window_log_pdf_impl(th, w, cur);
    return std::min(1.0, std::exp(delta));
}

void mcmc_sweep(const ModelDims& dims, SamplerState& state,
                const std::vector<signal::DaySegment>& data, Rng& rng, const SweepConfig& cfg) {
    check_state_dims(dims, state, data);

    // Metropolized Gibbs on context labels.
    if (cfg.update_contexts && dims.n_contexts > 1) {
        for (std::size_t s = 0; s < data.size(); ++s) {
            for (std::size_t i = 0; i < state.contexts[s].size(); ++i) {
                int cur = state.contexts[s][i];
                int r = static_cast<int>(rng.uniform_index(dims.n_contexts - 1));
                int prop = r >= cur ? r + 1 : r;
                double a = context_accept_prob(dims, state, data, s, i, prop);
                ++state.stats_context.proposed;
                if (rng.uniform01() < a) {
                    state.contexts[s][i] = prop;
                    ++state.stats_context.accepted;
                }
            }
        }
    }

    // Global relabeling move: swap one context pair's Gamma rows together
    // with every label of those contexts, keeping alpha fixed. The swap is a
    // symmetric involution, accepted with the posterior ratio, and lets the
    // chain leave a label-switched mode that single-site updates cannot.
    if (cfg.update_contexts && dims.n_contexts > 1) {
        int c1 = static_cast<int>(rng.uniform_index(dims.n_contexts));
        int r = static_cast<int>(rng.uniform_index(dims.n_contexts - 1));
        int c2 = r >= c1 ? r + 1 : r;
        auto counts = context_counts(dims, state);
        // Only the sum of log alpha over context draws changes: the Gamma
        // prior is exchangeable across rows and p(z | Gamma, c) is invariant
        // under the joint swap.
        double delta = (counts[c2] - counts[c1]) *
                       (safe_log(state.alpha[c1]) - safe_log(state.alpha[c2]));
        ++state.stats_swap.proposed;
        if (std::log(std::max(rng.uniform01(), 1e-300)) < delta) {
            std::swap(state.Gamma[c1], state.Gamma[c2]);
            for (auto& seg : state.contexts)
                for (int& c : seg) {
                    if (c == c1)
                        c = c2;
                    else if (c == c2)
                        c = c1;
                }
            ++state.stats_swap.accepted;
        }
    }

    // Metropolized Gibbs on motif labels.
    if (cfg.update_motifs) {
        for (std::size_t s = 0; s < data.size(); ++s) {
            for (std::size_t j = 0; j < state.motifs[s].size(); ++j) {
                int cur = state.motifs[s][j];
                int r = static_cast<int>(rng.uniform_index(dims.n_motifs));
                int prop = r >= cur ? r + 1 : r;
                double a = motif_accept_prob(dims, state, data, s, j, prop);
                ++state.stats_motif.proposed;
                if (rng.uniform01() < a) {
                    state.motifs[s][j] = prop;
                    ++state.stats_motif.accepted;
                }
            }
        }
    }

    // Random-walk Metropolis on alpha, in log-ratio space.
    if (cfg.update_alpha && dims.n_contexts > 1) {
        auto counts = context_counts(dims, state);
        auto target = [&](const std::vector<double>& a) {
            if (!alpha_satisfies(a, dims)) return kNegInf;
            double lp = dirichlet_symmetric_log_pdf(a, dims.priors.dirichlet_alpha);
            for (int c = 0; c < dims.n_contexts; ++c) lp += counts[c] * safe_log(a[c]);
            return lp + log_simplex_jacobian(a);
        };
        std::vector<double> v = alr(state.alpha);
        for (double& x : v) x += state.alpha_scale * rng.normal();
        std::vector<double> prop = alr_inverse(v);
        double log_ratio = target(prop) - target(state.alpha);
        ++state.stats_alpha.proposed;
        ++state.adapt_alpha_prop;
        if (std::log(std::max(rng.uniform01(), 1e-300)) < log_ratio) {
            state.alpha = std::move(prop);
            ++state.stats_alpha.accepted;
            ++state.adapt_alpha_acc;
        }
        if (cfg.adapt && state.adapt_alpha_prop >= 50) {
            double rate = static_cast<double>(state.adapt_alpha_acc) / state.adapt_alpha_prop;
            state.alpha_scale =
                std::clamp(state.alpha_scale * std::exp(rate - cfg.target_accept_simplex), 1e-4, 10.0);
            state.adapt_alpha_prop = state.adapt_alpha_acc = 0;
        }
    }

    // Random-walk Metropolis on each gamma_c, in log-ratio space.
    if (cfg.update_gamma) {
        auto counts = motif_counts(dims, state);
        for (int c = 0; c < dims.n_contexts; ++c) {
            auto target = [&](const std::vector<double>& g) {
                double lp = dirichlet_symmetric_log_pdf(g, dims.priors.dirichlet_gamma);
                for (int z = 0; z <= dims.n_motifs; ++z) lp += counts[c][z] * safe_log(g[z]);
                return lp + log_simplex_jacobian(g);
            };
            std::vector<double> v = alr(state.Gamma[c]);
            for (double& x : v) x += state.gamma_scale * rng.normal();
            std::vector<double> prop = alr_inverse(v);
            double log_ratio = target(prop) - target(state.Gamma[c]);
            ++state.stats_gamma.proposed;
            ++state.adapt_gamma_prop;
            if (std::log(std::max(rng.uniform01(), 1e-300)) < log_ratio) {
                state.Gamma[c] = std::move(prop);
                ++state.stats_gamma.accepted;
                ++state.adapt_gamma_acc;
            }
        }
        if (cfg.adapt && state.adapt_gamma_prop >= 50) {
            double rate = static_cast<double>(state.adapt_gamma_acc) / state.adapt_gamma_prop;
            state.gamma_scale =
                std::clamp(state.gamma_scale * std::exp(rate - cfg.target_accept_simplex), 1e-4, 10.0);
            state.adapt_gamma_prop = state.adapt_gamma_acc = 0;
        }
    }

    // Metropolis-adjusted Langevin on theta with a dual-averaged step size.
    if (cfg.update_theta) {
        const ThetaStats st = accumulate_theta_stats(dims, state, data);
        const std::size_t dim = theta_dim(dims);
        std::vector<double> phi = pack_theta(dims, state);
        std::vector<double> grad(dim), grad_prop(dim);
        double lp0 = theta_target(dims, phi, st, &grad);

        const double eps = state.theta_step;
        std::vector<double> mean_fwd(dim), prop(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            mean_fwd[i] = phi[i] + 0.5 * eps * eps * grad[i];
            prop[i] = mean_fwd[i] + eps * rng.normal();
        }
        double lp1 = theta_target(dims, prop, st, &grad_prop);
        double accept = 0.0;
        if (std::isfinite(lp1)) {
            double logq_fwd = 0.0, logq_rev = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                double df = prop[i] - mean_fwd[i];
                logq_fwd -= df * df;
                double mean_rev = prop[i] + 0.5 * eps * eps * grad_prop[i];
                double dr = phi[i] - mean_rev;
                logq_rev -= dr * dr;
            }
            logq_fwd /= 2.0 * eps * eps;
            logq_rev /= 2.0 * eps * eps;
            accept = std::min(1.0, std::exp(lp1 - lp0 + logq_rev - logq_fwd));
        }
        ++state.stats_theta.proposed;
        if (rng.uniform01() < accept) {
            unpack_theta(dims, prop, state);
            ++state.stats_theta.accepted;
        }

        if (cfg.adapt) {
            // Dual averaging (Nesterov-style) of log step size.
            const double t0 = 10.0, gamma_da = 0.05, kappa = 0.75;
            ++state.da_t;
            double t = static_cast<double>(state.da_t);
            state.da_h_bar = (1.0 - 1.0 / (t + t0)) * state.da_h_bar +
                             (cfg.target_accept_theta - accept) / (t + t0);
            double log_eps =
                std::clamp(state.da_mu - std::sqrt(t) / gamma_da * state.da_h_bar,
                           std::log(1e-8), std::log(1e2));
            double eta = std::pow(t, -kappa);
            state.da_log_step_bar = eta * log_eps + (1.0 - eta) * state.da_log_step_bar;
            state.theta_step = std::exp(log_eps);
        }
    }

    ++state.iteration;
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

std::vector<double> project_alpha(std::vector<double> alpha, double floor) {
    const std::size_t k = alpha.size();
    double sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    if (sum <= 0.0) {
        std::fill(alpha.begin(), alpha.end(), 1.0 / static_cast<double>(k));
        return alpha;
    }
    for (double& a : alpha) a /= sum;
    for (std::size_t pass = 0; pass < k; ++pass) {
        double deficit_mass = 0.0;
        double free_mass = 0.0;
        for (double a : alpha) {
            if (a < floor)
                deficit_mass += floor;
            else
                free_mass += a;
        }
        if (deficit_mass == 0.0) break;
        double scale = (1.0 - deficit_mass) / free_mass;
        bool changed = false;
        for (double& a : alpha) {
            if (a < floor) {
                a = floor;
            } else {
                a *= scale;
                if (a < floor) changed = true;
            }
        }
        if (!changed) break;
    }
    std::sort(alpha.begin(), alpha.end(), std::greater<double>());
    return alpha;
}

FitResult fit_cmmm(const std::vector<signal::DaySegment>& segments, const ModelDims& dims,
                   const FitConfig& cfg, std::uint64_t seed) {
    dims.validate();
    if (segments.empty()) throw ValidationError("fit_cmmm: no segments");
    const int wpc = dims.windows_per_context();

    std::size_t total_ctx_windows = 0;
    for (const auto& seg : segments)
        total_ctx_windows += static_cast<std::size_t>(n_context_windows(dims, seg));
    if (total_ctx_windows < static_cast<std::size_t>(dims.n_contexts))
        throw ValidationError("fit_cmmm: fewer context windows than contexts");

    Rng root(seed);

    // --- Initialization from an MMM fit ---
    mmm::EmConfig em = cfg.em;
    em.variance_floor = dims.variance_floor;
    mmm::MotifModel init =
        mmm::fit_mmm(segments, dims.n_motifs, dims.motif_len, em, root.derive(1).seed());

    SamplerState state;
    state.means = init.means;
    state.variances = init.variances;
    for (auto& row : state.variances)
        for (double& v : row) v = std::max(v, dims.variance_floor);
    state.background_mean = init.background_mean;
    state.background_variance = std::max(init.background_variance, dims.variance_floor);

    state.contexts.resize(segments.size());
    state.motifs.resize(segments.size());
    const int n_cats = dims.n_motifs + 1;
    std::vector<std::vector<double>> freq_points;
    std::vector<std::pair<std::size_t, std::size_t>> window_owner;  // (segment, window)
    for (std::size_t si = 0; si < segments.size(); ++si) {
        const int nc = n_context_windows(dims, segments[si]);
        signal::DaySegment trimmed;  // drop any trailing partial context window
        trimmed.values.assign(segments[si].values.begin(),
                              segments[si].values.begin() +
                                  static_cast<std::size_t>(nc) * dims.context_len);
        auto lab = mmm::assign_motifs(init, trimmed, si);
        state.motifs[si] = lab.labels;
        state.contexts[si].assign(static_cast<std::size_t>(nc), 0);
        for (int i = 0; i < nc; ++i) {
            std::vector<double> freq(n_cats, 0.0);
            for (int j = 0; j < wpc; ++j)
                freq[lab.labels[static_cast<std::size_t>(i) * wpc + j]] += 1.0;
            for (double& f : freq) f = (f + 1.0) / static_cast<double>(wpc + n_cats);
            freq_points.push_back(std::move(freq));
            window_owner.emplace_back(si, static_cast<std::size_t>(i));
        }
    }

    {
        Rng km_rng = root.derive(2);
        std::vector<int> cluster_of(freq_points.size(), 0);
        if (dims.n_contexts > 1 &&
            freq_points.size() >= static_cast<std::size_t>(dims.n_contexts)) {
            auto km = kmeans(freq_points, dims.n_contexts, km_rng);
            cluster_of = km.assignment;
        }
        std::vector<double> share(dims.n_contexts, 0.0);
        for (int c : cluster_of) share[c] += 1.0;
        // Relabel clusters so share order matches the alpha ordering.
        std::vector<int> order(dims.n_contexts);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return share[a] > share[b]; });
        std::vector<int> relabel(dims.n_contexts);
        for (int rank = 0; rank < dims.n_contexts; ++rank) relabel[order[rank]] = rank;
        for (std::size_t w = 0; w < window_owner.size(); ++w)
            state.contexts[window_owner[w].first][window_owner[w].second] =
                relabel[cluster_of[w]];

        std::vector<double> alpha0(dims.n_contexts, 0.0);
        for (int c = 0; c < dims.n_contexts; ++c)
            alpha0[relabel[c]] = share[c] / std::max<double>(1.0, cluster_of.size());
        state.alpha = project_alpha(alpha0, dims.alpha_floor);

        auto counts = motif_counts(dims, state);
        state.Gamma.assign(dims.n_contexts, std::vector<double>(n_cats, 0.0));
        for (int c = 0; c < dims.n_contexts; ++c) {
            double total = std::accumulate(counts[c].begin(), counts[c].end(), 0.0);
            for (int z = 0; z < n_cats; ++z)
                state.Gamma[c][z] = (counts[c][z] + 1.0) / (total + n_cats);
        }
    }

    const std::size_t dim = theta_dim(dims);
    state.theta_step = 0.1 / std::cbrt(static_cast<double>(dim));
    state.da_mu = std::log(10.0 * state.theta_step);
    state.da_log_step_bar = std::log(state.theta_step);

    // --- Sampling ---
    Rng chain = root.derive(3);
    FitResult result;
    Diagnostics& diag = result.diagnostics;

    std::vector<double> alpha_sum(dims.n_contexts, 0.0);
    std::vector<std::vector<double>> gamma_sum(dims.n_contexts, std::vector<double>(n_cats, 0.0));
    std::vector<std::vector<double>> mean_sum(dims.n_motifs,
                                              std::vector<double>(dims.motif_len, 0.0));
    std::vector<std::vector<double>> var_sum(dims.n_motifs,
                                             std::vector<double>(dims.motif_len, 0.0));
    double bg_mean_sum = 0.0, bg_var_sum = 0.0;
    std::vector<std::vector<std::vector<int>>> ctx_votes(segments.size());
    std::vector<std::vector<std::vector<int>>> motif_votes(segments.size());
    for (std::size_t si = 0; si < segments.size(); ++si) {
        ctx_votes[si].assign(state.contexts[si].size(), std::vector<int>(dims.n_contexts, 0));
        motif_votes[si].assign(state.motifs[si].size(), std::vector<int>(n_cats, 0));
    }

    KernelStats alpha_before, gamma_before, theta_before;
    int recorded = 0;
    for (int it = 0; it < cfg.n_samples; ++it) {
        SweepConfig sweep_cfg;
        sweep_cfg.adapt = it < cfg.burn_in;
        if (it == cfg.burn_in) {
            state.theta_step = std::exp(state.da_log_step_bar);
            alpha_before = state.stats_alpha;
            gamma_before = state.stats_gamma;
            theta_before = state.stats_theta;
        }
        mcmc_sweep(dims, state, segments, chain, sweep_cfg);
        if (cfg.record_trace)
            diag.joint_log_prob_trace.push_back(cmmm_joint_log_prob(dims, state, segments));
        if (it < cfg.burn_in) continue;

        // Every recorded sample must satisfy the ordering/floor constraints.
        if (!alpha_satisfies(state.alpha, dims))
            throw std::logic_error("fit_cmmm: post-burn-in alpha violates ordering/floor");

        ++recorded;
        for (int c = 0; c < dims.n_contexts; ++c) {
            alpha_sum[c] += state.alpha[c];
            for (int z = 0; z < n_cats; ++z) gamma_sum[c][z] += state.Gamma[c][z];
        }
        for (int z = 0; z < dims.n_motifs; ++z)
            for (int k = 0; k < dims.motif_len; ++k) {
                mean_sum[z][k] += state.means[z][k];
                var_sum[z][k] += state.variances[z][k];
            }
        bg_mean_sum += state.background_mean;
        bg_var_sum += state.background_variance;
        for (std::size_t si = 0; si < segments.size(); ++si) {
            for (std::size_t i = 0; i < state.contexts[si].size(); ++i)
                ++ctx_votes[si][i][state.contexts[si][i]];
            for (std::size_t j = 0; j < state.motifs[si].size(); ++j)
                ++motif_votes[si][j][state.motifs[si][j]];
        }
    }
    if (recorded == 0) throw ValidationError("fit_cmmm: no post-burn-in samples");

    // --- Point estimates ---
    CmmmModel model;
    model.dims = dims;
    model.seed = seed;
    model.n_samples = cfg.n_samples;
    model.burn_in = cfg.burn_in;
    model.alpha.assign(dims.n_contexts, 0.0);
    model.Gamma.assign(dims.n_contexts, std::vector<double>(n_cats, 0.0));
    for (int c = 0; c < dims.n_contexts; ++c) {
        model.alpha[c] = alpha_sum[c] / recorded;
        for (int z = 0; z < n_cats; ++z) model.Gamma[c][z] = gamma_sum[c][z] / recorded;
    }
    // Every recorded sample satisfies the ordering, so the means already do;
    // re-sorting here is a no-op safety net that keeps Gamma rows aligned.
    {
        std::vector<int> order(dims.n_contexts);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return model.alpha[a] > model.alpha[b]; });
        std::vector<double> alpha_sorted(dims.n_contexts);
        std::vector<std::vector<double>> gamma_sorted(dims.n_contexts);
        for (int rank = 0; rank < dims.n_contexts; ++rank) {
            alpha_sorted[rank] = model.alpha[order[rank]];
            gamma_sorted[rank] = model.Gamma[order[rank]];
        }
        model.alpha = std::move(alpha_sorted);
        model.Gamma = std::move(gamma_sorted);
    }
    model.means.assign(dims.n_motifs, std::vector<double>(dims.motif_len, 0.0));
    model.variances.assign(dims.n_motifs, std::vector<double>(dims.motif_len, 0.0));
    for (int z = 0; z < dims.n_motifs; ++z)
        for (int k = 0; k < dims.motif_len; ++k) {
            model.means[z][k] = mean_sum[z][k] / recorded;
            model.variances[z][k] = var_sum[z][k] / recorded;
        }
    model.background_mean = bg_mean_sum / recorded;
    model.background_variance = bg_var_sum / recorded;

    result.labelings.reserve(segments.size());
    for (std::size_t si = 0; si < segments.size(); ++si) {
        ContextualLabeling lab;
        lab.segment_index = si;
        for (const auto& votes : ctx_votes[si])
            lab.contexts.push_back(static_cast<int>(
                std::max_element(votes.begin(), votes.end()) - votes.begin()));
        for (const auto& votes : motif_votes[si])
            lab.motifs.push_back(static_cast<int>(
                std::max_element(votes.begin(), votes.end()) - votes.begin()));
        result.labelings.push_back(std::move(lab));
    }

    diag.context_kernel = state.stats_context;
    diag.motif_kernel = state.stats_motif;
    diag.alpha_kernel = state.stats_alpha;
    diag.gamma_kernel = state.stats_gamma;
    diag.theta_kernel = state.stats_theta;
    diag.swap_kernel = state.stats_swap;
    auto post_rate = [](const KernelStats& now, const KernelStats& before) {
        long prop = now.proposed - before.proposed;
        long acc = now.accepted - before.accepted;
        return prop > 0 ? static_cast<double>(acc) / prop : 0.0;
    };
    diag.post_burn_in_alpha_rate = post_rate(state.stats_alpha, alpha_before);
    diag.post_burn_in_gamma_rate = post_rate(state.stats_gamma, gamma_before);
    diag.post_burn_in_theta_rate = post_rate(state.stats_theta, theta_before);
    for (double r : {diag.post_burn_in_alpha_rate, diag.post_burn_in_gamma_rate,
                     diag.post_burn_in_theta_rate})
        if ((r <= 0.01 || r >= 0.99) && dims.n_contexts > 1) diag.tuning_warning = true;

    result.model = std::move(model);
    return result;
}

ContextualLabeling assign_contextual(const CmmmModel& model, const signal::DaySegment& segment,
                                     std::size_t segment_index) {
    const ModelDims& dims = model.dims;
    const int wpc = dims.windows_per_context();
    const int nc = n_context_windows(dims, segment);
    const int n_cats = dims.n_motifs + 1;

    ContextualLabeling lab;
    lab.segment_index = segment_index;
    lab.contexts.reserve(static_cast<std::size_t>(nc));
    lab.motifs.reserve(static_cast<std::size_t>(nc) * wpc);

    for (int i = 0; i < nc; ++i) {
        // Per candidate context, the best achievable joint term of each motif
        // window; windows are conditionally independent given the context.
        int best_c = 0;
        double best_score = kNegInf;
        std::vector<std::vector<int>> best_z(dims.n_contexts, std::vector<int>(wpc, 0));
        for (int c = 0; c < dims.n_contexts; ++c) {
            double score = 0.0;
            for (int j = 0; j < wpc; ++j) {
                const double* w = segment.values.data() +
                                  (static_cast<std::size_t>(i) * wpc + j) *
                                      static_cast<std::size_t>(dims.motif_len);
                int zbest = 0;
                double zscore = kNegInf;
                for (int z = 0; z < n_cats; ++z) {
                    double lp = safe_log(model.Gamma[c][z]) + model.window_log_pdf(w, z);
                    if (lp > zscore) {
                        zscore = lp;
                        zbest = z;
                    }
                }
                best_z[c][j] = zbest;
                score += zscore;
            }
            if (score > best_score) {
                best_score = score;
                best_c = c;
            }
        }
        lab.contexts.push_back(best_c);
        for (int j = 0; j < wpc; ++j) lab.motifs.push_back(best_z[best_c][j]);
    }
    return lab;
}

std::pair<signal::DaySegment, ContextualLabeling> sample_cmmm(const CmmmModel& model,
                                                              int n_context_windows, Rng& rng) {
    if (n_context_windows < 1)
        throw ValidationError("sample_cmmm: n_context_windows must be positive");
    const ModelDims& dims = model.dims;
    const int wpc = dims.windows_per_context();

    signal::DaySegment seg;
    seg.patient_id = "sampled";
    seg.values.reserve(static_cast<std::size_t>(n_context_windows) * dims.context_len);
    ContextualLabeling lab;
    for (int i = 0; i < n_context_windows; ++i) {
        int c = rng.categorical(model.alpha);
        lab.contexts.push_back(c);
        for (int j = 0; j < wpc; ++j) {
            int z = rng.categorical(model.Gamma[c]);
            lab.motifs.push_back(z);
            for (int k = 0; k < dims.motif_len; ++k) {
                double mu = z == 0 ? model.background_mean : model.means[z - 1][k];
                double var = z == 0 ? model.background_variance : model.variances[z - 1][k];
                seg.values.push_back(rng.normal(mu, std::sqrt(var)));
            }
        }
    }
    return {std::move(seg), std::move(lab)};
}

}  // namespace mforge::cmmm
