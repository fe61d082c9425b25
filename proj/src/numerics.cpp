#include "mforge/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mforge {

double log_sum_exp(std::span<const double> v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

double normal_log_pdf(double x, double mu, double var) {
    double d = x - mu;
    return -0.5 * (kLog2Pi + std::log(var)) - d * d / (2.0 * var);
}

double logistic(double x) {
    if (x >= 0.0) {
        double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

double inv_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("inv_normal_cdf: p must lie in (0,1)");

    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};

    const double p_low = 0.02425;
    double x;
    if (p < p_low) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // One Halley step against the exact CDF expressed through erfc.
    double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    double u = e * std::sqrt(2.0 * kPi) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

std::pair<double, double> mean_variance(std::span<const double> v) {
    if (v.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) {
        double d = x - mean;
        var += d * d;
    }
    var /= static_cast<double>(v.size());
    return {mean, var};
}

std::vector<double> znormalize(std::span<const double> v) {
    auto [mean, var] = mean_variance(v);
    std::vector<double> out(v.size());
    if (var <= 0.0) return out;
    double inv_sd = 1.0 / std::sqrt(var);
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mean) * inv_sd;
    return out;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double znorm_distance(std::span<const double> a, std::span<const double> b) {
    std::vector<double> za = znormalize(a);
    std::vector<double> zb = znormalize(b);
    return std::sqrt(squared_distance(za, zb));
}

double dirichlet_symmetric_log_pdf(std::span<const double> x, double a) {
    std::size_t k = x.size();
    double lp = std::lgamma(a * static_cast<double>(k)) - static_cast<double>(k) * std::lgamma(a);
    for (double xi : x) {
        if (xi <= 0.0) return -std::numeric_limits<double>::infinity();
        lp += (a - 1.0) * std::log(xi);
    }
    return lp;
}

double inverse_gamma_log_pdf(double x, double shape, double scale) {
    if (x <= 0.0) return -std::numeric_limits<double>::infinity();
    return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

// ---------------------------------------------------------------------------
// k-means
// ---------------------------------------------------------------------------

namespace {

std::vector<std::vector<double>> seed_plus_plus(const std::vector<std::vector<double>>& points,
                                                int k, Rng& rng) {
    std::vector<std::vector<double>> centroids;
    centroids.reserve(static_cast<std::size_t>(k));
    centroids.push_back(points[rng.uniform_index(points.size())]);
    std::vector<double> d2(points.size());
    while (static_cast<int>(centroids.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centroids) best = std::min(best, squared_distance(points[i], c));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            // All points coincide with existing centroids; duplicate one.
            centroids.push_back(centroids.back());
            continue;
        }
        double u = rng.uniform01() * total;
        std::size_t pick = points.size() - 1;
        double acc = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            acc += d2[i];
            if (u < acc) {
                pick = i;
                break;
            }
        }
        centroids.push_back(points[pick]);
    }
    return centroids;
}

}  // namespace

KMeansResult kmeans(const std::vector<std::vector<double>>& points, int k, Rng& rng,
                    KMeansEmptyPolicy empty_policy, int max_iters, int reseed_attempts) {
    if (points.empty()) throw std::invalid_argument("kmeans: no points");
    if (k < 1) throw std::invalid_argument("kmeans: k must be positive");
    if (static_cast<std::size_t>(k) > points.size())
        throw std::invalid_argument("kmeans: more clusters than points");

    const std::size_t n = points.size();
    const std::size_t dim = points[0].size();

    for (int attempt = 0;; ++attempt) {
        KMeansResult res;
        res.centroids = seed_plus_plus(points, k, rng);
        res.assignment.assign(n, 0);

        bool empty_cluster = false;
        for (int iter = 0; iter < max_iters; ++iter) {
            res.iterations = iter + 1;
            bool changed = false;
            for (std::size_t i = 0; i < n; ++i) {
                int best = 0;
                double best_d = std::numeric_limits<double>::infinity();
                for (int c = 0; c < k; ++c) {
                    double d = squared_distance(points[i], res.centroids[c]);
                    if (d < best_d) {
                        best_d = d;
                        best = c;
                    }
                }
                if (best != res.assignment[i]) {
                    res.assignment[i] = best;
                    changed = true;
                }
            }

            std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
            std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
            for (std::size_t i = 0; i < n; ++i) {
                int c = res.assignment[i];
                ++counts[c];
                for (std::size_t j = 0; j < dim; ++j) sums[c][j] += points[i][j];
            }

            empty_cluster = false;
            for (int c = 0; c < k; ++c) {
                if (counts[c] == 0) {
                    empty_cluster = true;
                    continue;
                }
                for (std::size_t j = 0; j < dim; ++j)
                    res.centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
            }

            if (empty_cluster) {
                if (empty_policy == KMeansEmptyPolicy::kFixFarthest) {
                    for (int c = 0; c < k; ++c) {
                        if (counts[c] > 0) continue;
                        std::size_t far_i = 0;
                        double far_d = -1.0;
                        for (std::size_t i = 0; i < n; ++i) {
                            double d = squared_distance(points[i], res.centroids[res.assignment[i]]);
                            if (d > far_d) {
                                far_d = d;
                                far_i = i;
                            }
                        }
                        res.centroids[c] = points[far_i];
                    }
                    changed = true;
                    empty_cluster = false;
                } else {
                    break;  // reseed
                }
            }
            if (!changed && iter > 0) break;
        }

        if (!empty_cluster) return res;
        if (empty_policy == KMeansEmptyPolicy::kReseed && attempt + 1 >= reseed_attempts) {
            res.degenerate = true;
            return res;
        }
    }
}

std::vector<double> solve_linear(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-300)
            throw std::runtime_error("solve_linear: singular matrix");
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t ri = n; ri-- > 0;) {
        double s = b[ri];
        for (std::size_t c = ri + 1; c < n; ++c) s -= a[ri][c] * x[c];
        x[ri] = s / a[ri][ri];
    }
    return x;
}

}  // namespace mforge
