#pragma once

// Test-only oracles, independent of the library's implementation paths.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace oracles {

// O(n^2) pairwise AUC: (concordant + 0.5 * tied) / (n_pos * n_neg).
inline double brute_force_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    double num = 0.0;
    double n_pos = 0.0, n_neg = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i]) {
            n_pos += 1.0;
            continue;
        }
        n_neg += 1.0;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (!labels[j]) continue;
            if (scores[j] > scores[i])
                num += 1.0;
            else if (scores[j] == scores[i])
                num += 0.5;
        }
    }
    return num / (n_pos * n_neg);
}

inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
    double tv = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
    return 0.5 * tv;
}

// Minimal total squared distance over all assignments of rows(a) to rows(b);
// brute force over permutations, fine for the small models tested here.
// Returns the permutation perm with perm[i] = index into b matched to a[i].
inline std::vector<int> best_permutation(const std::vector<std::vector<double>>& a,
                                         const std::vector<std::vector<double>>& b) {
    std::vector<int> perm(b.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = perm;
    double best_cost = 1e300;
    do {
        double cost = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            double d = 0.0;
            for (std::size_t k = 0; k < a[i].size(); ++k) {
                double diff = a[i][k] - b[perm[i]][k];
                d += diff * diff;
            }
            cost += d;
        }
        if (cost < best_cost) {
            best_cost = cost;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// Exhaustive best state path for an HMM given log-domain tables.
// Returns (best log prob, lexicographically smallest argmax path).
inline std::pair<double, std::vector<int>> brute_force_best_path(
    const std::vector<double>& log_initial, const std::vector<std::vector<double>>& log_transition,
    const std::vector<std::vector<double>>& log_emission /* [t][s] */) {
    const int n = static_cast<int>(log_initial.size());
    const std::size_t t_len = log_emission.size();
    std::vector<int> path(t_len, 0), best_path;
    double best = -1e300;
    for (;;) {
        double lp = log_initial[path[0]] + log_emission[0][path[0]];
        for (std::size_t t = 1; t < t_len; ++t)
            lp += log_transition[path[t - 1]][path[t]] + log_emission[t][path[t]];
        if (lp > best) {
            best = lp;
            best_path = path;
        }
        // next path in lexicographic order
        std::size_t pos = t_len;
        while (pos > 0) {
            --pos;
            if (++path[pos] < n) break;
            path[pos] = 0;
            if (pos == 0) return {best, best_path};
        }
    }
}

// SAX cutlines for the standard normal, alphabet sizes 2..20 (the classic
// lookup table used across SAX implementations). Oracle for the quantile
// computation, frozen independently of inv_normal_cdf.
inline const std::map<int, std::vector<double>>& sax_cutpoint_table() {
    static const std::map<int, std::vector<double>> table = {
        {2, {0.0}},
        {3, {-0.4307273, 0.4307273}},
        {4, {-0.6744898, 0.0, 0.6744898}},
        {5, {-0.841621233572914, -0.2533471031358, 0.2533471031358, 0.841621233572914}},
        {6, {-0.967421566101701, -0.430727299295457, 0.0, 0.430727299295457, 0.967421566101701}},
        {7,
         {-1.06757052387814, -0.565948821932863, -0.180012369792705, 0.180012369792705,
          0.565948821932863, 1.06757052387814}},
        {8,
         {-1.15034938037601, -0.674489750196082, -0.318639363964375, 0.0, 0.318639363964375,
          0.674489750196082, 1.15034938037601}},
        {9,
         {-1.22064034884735, -0.764709673786387, -0.430727299295457, -0.139710298881862,
          0.139710298881862, 0.430727299295457, 0.764709673786387, 1.22064034884735}},
        {10,
         {-1.2815515655446, -0.841621233572914, -0.524400512708041, -0.2533471031358, 0.0,
          0.2533471031358, 0.524400512708041, 0.841621233572914, 1.2815515655446}},
        {11,
         {-1.33517773611894, -0.908457868537385, -0.604585346583237, -0.348755695517045,
          -0.114185294321428, 0.114185294321428, 0.348755695517045, 0.604585346583237,
          0.908457868537385, 1.33517773611894}},
        {12,
         {-1.38299412710064, -0.967421566101701, -0.674489750196082, -0.430727299295457,
          -0.210428394247925, 0.0, 0.210428394247925, 0.430727299295457, 0.674489750196082,
          0.967421566101701, 1.38299412710064}},
        {13,
         {-1.42607687227285, -1.0200762327862, -0.736315917376129, -0.502402223373355,
          -0.293381232121193, -0.0965586152896391, 0.0965586152896394, 0.293381232121194,
          0.502402223373355, 0.73631591737613, 1.0200762327862, 1.42607687227285}},
        {14,
         {-1.46523379268552, -1.06757052387814, -0.791638607743375, -0.565948821932863,
          -0.36610635680057, -0.180012369792705, 0.0, 0.180012369792705, 0.36610635680057,
          0.565948821932863, 0.791638607743375, 1.06757052387814, 1.46523379268552}},
        {15,
         {-1.50108594604402, -1.11077161663679, -0.841621233572914, -0.622925723210088,
          -0.430727299295457, -0.2533471031358, -0.0836517339071291, 0.0836517339071291,
          0.2533471031358, 0.430727299295457, 0.622925723210088, 0.841621233572914,
          1.11077161663679, 1.50108594604402}},
        {16,
         {-1.53412054435255, -1.15034938037601, -0.887146559018876, -0.674489750196082,
          -0.488776411114669, -0.318639363964375, -0.157310684610171, 0.0, 0.157310684610171,
          0.318639363964375, 0.488776411114669, 0.674489750196082, 0.887146559018876,
          1.15034938037601, 1.53412054435255}},
        {17,
         {-1.5647264713618, -1.18683143275582, -0.928899491647271, -0.721522283982343,
          -0.541395085129088, -0.377391943828554, -0.223007830940367, -0.0737912738082727,
          0.0737912738082727, 0.223007830940367, 0.377391943828554, 0.541395085129088,
          0.721522283982343, 0.928899491647271, 1.18683143275582, 1.5647264713618}},
        {18,
         {-1.59321881802305, -1.22064034884735, -0.967421566101701, -0.764709673786387,
          -0.589455797849779, -0.430727299295457, -0.282216147062508, -0.139710298881862, 0.0,
          0.139710298881862, 0.282216147062508, 0.430727299295457, 0.589455797849779,
          0.764709673786387, 0.967421566101701, 1.22064034884735, 1.59321881802305}},
        {19,
         {-1.61985625863827, -1.25211952026522, -1.00314796766253, -0.8045963803603,
          -0.633640000779701, -0.47950565333095, -0.336038140371823, -0.199201324789267,
          -0.0660118123758407, 0.0660118123758407, 0.199201324789267, 0.336038140371823,
          0.47950565333095, 0.633640000779701, 0.8045963803603, 1.00314796766253,
          1.25211952026522, 1.61985625863827}},
        {20,
         {-1.64485362695147, -1.2815515655446, -1.03643338949379, -0.841621233572914,
          -0.674489750196082, -0.524400512708041, -0.385320466407568, -0.2533471031358,
          -0.125661346855074, 0.0, 0.125661346855074, 0.2533471031358, 0.385320466407568,
          0.524400512708041, 0.674489750196082, 0.841621233572914, 1.03643338949379,
          1.2815515655446, 1.64485362695147}},
    };
    return table;
}

// Two-sided critical value of Student's t at alpha = 0.01 is not needed;
// the acceptance test uses the one-sided 0.99 quantile for df = 24.
inline double t_crit_99_df24() { return 2.492; }

}  // namespace oracles
