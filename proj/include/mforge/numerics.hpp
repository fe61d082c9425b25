#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "mforge/rng.hpp"

namespace mforge {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kLog2Pi = 1.8378770664093454835606594728112353;

double log_sum_exp(std::span<const double> v);

/// log N(x; mu, var) for a scalar observation.
double normal_log_pdf(double x, double mu, double var);

/// Quantile function of the standard normal (Acklam's rational approximation
/// plus one Halley refinement; accurate to near machine precision).
double inv_normal_cdf(double p);

double logistic(double x);

/// Population mean and variance (divides by n).
std::pair<double, double> mean_variance(std::span<const double> v);

/// Standardizes to mean 0 / variance 1; a constant input maps to all zeros.
std::vector<double> znormalize(std::span<const double> v);

double squared_distance(std::span<const double> a, std::span<const double> b);

/// Euclidean distance between the z-normalized forms of two windows.
double znorm_distance(std::span<const double> a, std::span<const double> b);

/// log Dirichlet(x; a, .., a) for a symmetric concentration a.
double dirichlet_symmetric_log_pdf(std::span<const double> x, double a);

/// log InvGamma(x; shape, scale).
double inverse_gamma_log_pdf(double x, double shape, double scale);

// ---------------------------------------------------------------------------
// k-means (Lloyd's algorithm with k-means++ seeding)
// ---------------------------------------------------------------------------

enum class KMeansEmptyPolicy {
    kFixFarthest,  // reassign the farthest point to each empty cluster
    kReseed,       // restart with a fresh seeding (bounded attempts)
};

struct KMeansResult {
    std::vector<std::vector<double>> centroids;
    std::vector<int> assignment;
    int iterations = 0;
    bool degenerate = false;  // reseed attempts exhausted with empty clusters
};

KMeansResult kmeans(const std::vector<std::vector<double>>& points, int k, Rng& rng,
                    KMeansEmptyPolicy empty_policy = KMeansEmptyPolicy::kFixFarthest,
                    int max_iters = 100, int reseed_attempts = 10);

/// Solves A x = b in place by Gaussian elimination with partial pivoting.
std::vector<double> solve_linear(std::vector<std::vector<double>> a, std::vector<double> b);

}  // namespace mforge
