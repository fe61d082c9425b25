#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mforge/context.hpp"
#include "mforge/errors.hpp"
#include "mforge/numerics.hpp"
#include "support/oracles.hpp"

using namespace mforge;
using namespace mforge::context;
using mforge::signal::DaySegment;

namespace {

DaySegment segment_of(std::vector<double> values) {
    DaySegment seg;
    seg.patient_id = "p";
    seg.values = std::move(values);
    return seg;
}

}  // namespace

// ---------------------------------------------------------------------------
// Expert rule
// ---------------------------------------------------------------------------

TEST_CASE("expert_context: constant segment is all context 0") {
    auto seg = segment_of(std::vector<double>(288, 120.0));
    auto ctx = expert_context(seg, 6, {}, 6);
    for (int c : ctx.labels) CHECK(c == 0);
}

TEST_CASE("expert_context: a ramp above threshold triggers everywhere past k") {
    std::vector<double> values;
    for (int i = 0; i < 60; ++i) values.push_back(i * 11.0);  // rise 11 > tau = 10
    auto ctx = expert_context(segment_of(values), 6, {}, 0);
    for (int t = 0; t < 60; ++t) CHECK(ctx.labels[t] == (t >= 6 ? 1 : 0));
}

TEST_CASE("expert_context: single step rise of 60 at t=100 marks samples 94..111") {
    std::vector<double> values(288, 100.0);
    for (int t = 100; t < 288; ++t) values[t] = 160.0;
    auto ctx = expert_context(segment_of(values), 6, ExpertRule{10.0}, 6);
    for (int t = 0; t < 288; ++t) {
        bool expected = t >= 94 && t <= 111;
        CHECK(ctx.labels[t] == (expected ? 1 : 0));
    }
}

TEST_CASE("expert_context: invariant to adding a constant") {
    Rng rng(61);
    std::vector<double> values;
    for (int i = 0; i < 120; ++i) values.push_back(rng.uniform(80.0, 250.0));
    auto base = expert_context(segment_of(values), 6, {}, 6);
    std::vector<double> shifted;
    for (double v : values) shifted.push_back(v + 37.5);
    auto moved = expert_context(segment_of(shifted), 6, {}, 6);
    CHECK(base.labels == moved.labels);
}

TEST_CASE("expert_context: argument validation") {
    auto seg = segment_of(std::vector<double>(10, 1.0));
    CHECK_THROWS_AS(expert_context(seg, 10, {}, 0), ValidationError);
    CHECK_THROWS_AS(expert_context(seg, 0, {}, 0), ValidationError);
}

// ---------------------------------------------------------------------------
// HMM
// ---------------------------------------------------------------------------

namespace {

struct ChainSpec {
    std::vector<double> initial{0.5, 0.5};
    std::vector<std::vector<double>> transition{{0.9, 0.1}, {0.2, 0.8}};
    std::vector<double> level{80.0, 200.0};
    double sigma = 3.0;
};

DaySegment sample_chain(const ChainSpec& spec, int t_len, Rng& rng, std::vector<int>* path) {
    DaySegment seg;
    int state = rng.categorical(spec.initial);
    for (int t = 0; t < t_len; ++t) {
        if (t > 0) state = rng.categorical(spec.transition[state]);
        if (path) path->push_back(state);
        seg.values.push_back(rng.normal(spec.level[state], spec.sigma));
    }
    return seg;
}

}  // namespace

TEST_CASE("hmm_fit: recovers the transition matrix of a separated 2-state chain") {
    ChainSpec spec;
    Rng rng(62);
    std::vector<DaySegment> segments;
    for (int s = 0; s < 20; ++s) segments.push_back(sample_chain(spec, 288, rng, nullptr));
    auto model = hmm_fit(segments, 2, 5);

    // Match fitted states to generating states by value level.
    int lo = model.emission_mean[0][0] < model.emission_mean[1][0] ? 0 : 1;
    int hi = 1 - lo;
    int remap[2] = {lo, hi};
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
            CHECK(std::abs(model.transition[remap[r]][remap[c]] - spec.transition[r][c]) < 0.1);
}

TEST_CASE("hmm_fit: a single state degenerates to global moments") {
    Rng rng(63);
    std::vector<DaySegment> segments;
    for (int s = 0; s < 3; ++s) segments.push_back(sample_chain({}, 100, rng, nullptr));
    auto model = hmm_fit(segments, 1, 0);
    REQUIRE(model.n_states == 1);
    CHECK(model.transition == std::vector<std::vector<double>>{{1.0}});
    CHECK(model.initial == std::vector<double>{1.0});
    // In normalized feature units the global moments are (0, 1).
    for (int d = 0; d < 2; ++d) {
        CHECK(std::abs(model.emission_mean[0][d]) < 1e-6);
        CHECK(model.emission_var[0][d] == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("hmm_fit: Baum-Welch log-likelihood trace is non-decreasing (asserted in fit)") {
    Rng rng(64);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<DaySegment> segments;
        for (int s = 0; s < 3; ++s) {
            DaySegment seg;
            for (int i = 0; i < 60; ++i) seg.values.push_back(rng.uniform(60.0, 300.0));
            segments.push_back(std::move(seg));
        }
        int states = 1 + static_cast<int>(rng.uniform_index(3));
        CHECK_NOTHROW(hmm_fit(segments, states, rng.next_u64()));
    }
}

TEST_CASE("hmm_fit: zero-variance feature is an error") {
    std::vector<DaySegment> segments{segment_of(std::vector<double>(50, 120.0))};
    CHECK_THROWS_AS(hmm_fit(segments, 2, 0), ValidationError);
}

TEST_CASE("hmm_decode: fully separated emissions recover the generating path") {
    ChainSpec spec;
    spec.sigma = 1.0;
    Rng rng(65);
    std::vector<DaySegment> segments;
    std::vector<std::vector<int>> paths(6);
    for (int s = 0; s < 6; ++s) segments.push_back(sample_chain(spec, 288, rng, &paths[s]));
    auto model = hmm_fit(segments, 2, 9);
    int lo = model.emission_mean[0][0] < model.emission_mean[1][0] ? 0 : 1;

    int correct = 0, total = 0;
    for (int s = 0; s < 6; ++s) {
        auto decoded = hmm_decode(model, segments[s], s);
        for (std::size_t t = 0; t < decoded.labels.size(); ++t) {
            int mapped = decoded.labels[t] == lo ? 0 : 1;
            correct += mapped == paths[s][t];
            ++total;
        }
    }
    CHECK(static_cast<double>(correct) / total > 0.99);
}

TEST_CASE("hmm_decode: a length-1 sequence is the argmax of initial times emission") {
    HmmModel m;
    m.n_states = 2;
    m.initial = {0.3, 0.7};
    m.transition = {{0.5, 0.5}, {0.5, 0.5}};
    m.emission_mean = {{0.0, 0.0}, {1.0, 0.0}};
    m.emission_var = {{1.0, 1.0}, {1.0, 1.0}};
    m.feature_mean = {0.0, 0.0};
    m.feature_scale = {1.0, 1.0};

    auto seg = segment_of({0.9});  // feature (0.9, 0)
    double s0 = std::log(0.3) + normal_log_pdf(0.9, 0.0, 1.0);
    double s1 = std::log(0.7) + normal_log_pdf(0.9, 1.0, 1.0);
    REQUIRE(s1 > s0);
    CHECK(hmm_decode(m, seg).labels == std::vector<int>{1});
}

TEST_CASE("hmm_decode: Viterbi equals exhaustive best path on short sequences") {
    Rng rng(66);
    for (int trial = 0; trial < 30; ++trial) {
        int n = 2 + static_cast<int>(rng.uniform_index(2));
        HmmModel m;
        m.n_states = n;
        m.feature_mean = {0.0, 0.0};
        m.feature_scale = {1.0, 1.0};
        double pi_sum = 0.0;
        for (int s = 0; s < n; ++s) {
            m.initial.push_back(rng.uniform(0.05, 1.0));
            pi_sum += m.initial.back();
        }
        for (double& p : m.initial) p /= pi_sum;
        for (int r = 0; r < n; ++r) {
            std::vector<double> row;
            double sum = 0.0;
            for (int c = 0; c < n; ++c) {
                row.push_back(rng.uniform(0.05, 1.0));
                sum += row.back();
            }
            for (double& p : row) p /= sum;
            m.transition.push_back(std::move(row));
            m.emission_mean.push_back({rng.uniform(-2.0, 2.0), rng.uniform(-1.0, 1.0)});
            m.emission_var.push_back({rng.uniform(0.2, 2.0), rng.uniform(0.2, 2.0)});
        }

        int t_len = 1 + static_cast<int>(rng.uniform_index(8));
        std::vector<double> values;
        for (int t = 0; t < t_len; ++t) values.push_back(rng.uniform(-2.0, 2.0));
        DaySegment seg = segment_of(values);

        // Independent tables for the exhaustive search.
        std::vector<double> log_pi;
        for (double p : m.initial) log_pi.push_back(std::log(p));
        std::vector<std::vector<double>> log_a(n, std::vector<double>(n));
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) log_a[r][c] = std::log(m.transition[r][c]);
        std::vector<std::vector<double>> log_b(t_len, std::vector<double>(n));
        for (int t = 0; t < t_len; ++t) {
            double f0 = values[t];
            double f1 = t == 0 ? 0.0 : values[t] - values[t - 1];
            for (int s = 0; s < n; ++s)
                log_b[t][s] = normal_log_pdf(f0, m.emission_mean[s][0], m.emission_var[s][0]) +
                              normal_log_pdf(f1, m.emission_mean[s][1], m.emission_var[s][1]);
        }
        auto [best_lp, best_path] = oracles::brute_force_best_path(log_pi, log_a, log_b);

        auto decoded = hmm_decode(m, seg);
        double decoded_lp = log_pi[decoded.labels[0]] + log_b[0][decoded.labels[0]];
        for (int t = 1; t < t_len; ++t)
            decoded_lp += log_a[decoded.labels[t - 1]][decoded.labels[t]] +
                          log_b[t][decoded.labels[t]];
        CHECK(decoded_lp == doctest::Approx(best_lp).epsilon(1e-9));
        CHECK(decoded.labels == best_path);
    }
}

// ---------------------------------------------------------------------------
// Motif-topic context
// ---------------------------------------------------------------------------

namespace {

mmm::MotifLabeling labeling_from(const std::vector<int>& labels, std::size_t idx = 0) {
    mmm::MotifLabeling lab;
    lab.segment_index = idx;
    lab.labels = labels;
    return lab;
}

}  // namespace

TEST_CASE("motif_topic_context: identical profiles collapse to a duplicated centroid") {
    std::vector<mmm::MotifLabeling> labelings;
    for (int s = 0; s < 10; ++s)
        labelings.push_back(labeling_from({1, 1, 2, 1, 1, 1, 2, 1}, s));  // same every window
    auto res = motif_topic_context(labelings, 2, 4, 16, 2, 5);
    REQUIRE(res.gamma.size() == 2);
    CHECK(res.gamma[0] == res.gamma[1]);
    for (const auto& cs : res.contexts)
        for (int c : cs.labels) CHECK(c == 0);
}

TEST_CASE("motif_topic_context: planted frequency profiles are separated") {
    // Profile A draws mostly motif 1, profile B mostly motif 2.
    Rng rng(71);
    std::vector<double> profile_a{0.1, 0.8, 0.1};
    std::vector<double> profile_b{0.1, 0.1, 0.8};
    std::vector<mmm::MotifLabeling> labelings;
    std::vector<int> truth;  // per context window
    const int wpc = 9;
    for (int s = 0; s < 60; ++s) {
        std::vector<int> labels;
        for (int w = 0; w < 4; ++w) {
            int which = rng.bernoulli(0.5);
            truth.push_back(which);
            const auto& profile = which == 0 ? profile_a : profile_b;
            for (int j = 0; j < wpc; ++j) labels.push_back(rng.categorical(profile));
        }
        labelings.push_back(labeling_from(labels, s));
    }
    auto res = motif_topic_context(labelings, 2, 8, 72, 2, 13);

    std::vector<int> assigned;
    for (const auto& cs : res.contexts)
        assigned.insert(assigned.end(), cs.labels.begin(), cs.labels.end());
    REQUIRE(assigned.size() == truth.size());
    int direct = 0, flipped = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        direct += assigned[i] == truth[i];
        flipped += assigned[i] == 1 - truth[i];
    }
    double accuracy = static_cast<double>(std::max(direct, flipped)) / truth.size();
    CHECK(accuracy >= 0.95);
}

TEST_CASE("motif_topic_context: a single context gives global frequencies") {
    std::vector<mmm::MotifLabeling> labelings{labeling_from({0, 1, 2, 2, 1, 1, 0, 2})};
    auto res = motif_topic_context(labelings, 2, 4, 16, 1, 3);
    REQUIRE(res.gamma.size() == 1);
    double sum = 0.0;
    for (double g : res.gamma[0]) sum += g;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    for (const auto& cs : res.contexts)
        for (int c : cs.labels) CHECK(c == 0);
}

TEST_CASE("motif_topic_context: labels are a fixed point of the MLE step") {
    Rng rng(72);
    std::vector<mmm::MotifLabeling> labelings;
    for (int s = 0; s < 30; ++s) {
        std::vector<int> labels;
        for (int j = 0; j < 18; ++j) labels.push_back(static_cast<int>(rng.uniform_index(4)));
        labelings.push_back(labeling_from(labels, s));
    }
    auto res = motif_topic_context(labelings, 3, 4, 12, 2, 9);
    for (const auto& row : res.gamma) {
        double sum = 0.0;
        for (double g : row) {
            CHECK(g > 0.0);
            sum += g;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }

    // Re-run the multinomial MLE assignment from the returned gamma.
    const int wpc = 3;
    for (std::size_t li = 0; li < labelings.size(); ++li) {
        const auto& labels = labelings[li].labels;
        for (std::size_t w = 0; w < res.contexts[li].labels.size(); ++w) {
            std::vector<int> counts(4, 0);
            for (int j = 0; j < wpc; ++j) ++counts[labels[w * wpc + j]];
            int best = 0;
            double best_score = -1e300;
            for (int c = 0; c < 2; ++c) {
                double score = 0.0;
                for (int z = 0; z < 4; ++z)
                    if (counts[z] > 0) score += counts[z] * std::log(res.gamma[c][z]);
                if (score > best_score) {
                    best_score = score;
                    best = c;
                }
            }
            CHECK(best == res.contexts[li].labels[w]);
        }
    }
}

TEST_CASE("coarsen_to_windows: majority vote with ties to the smaller label") {
    std::vector<int> per_sample{0, 0, 1, 1, 1, 1, 0, 1, 1, 0, 0, 1};
    auto windows = coarsen_to_windows(per_sample, 4, 2);
    CHECK(windows == std::vector<int>{0, 1, 0});
    CHECK(expand_to_samples(windows, 2) == std::vector<int>{0, 0, 1, 1, 0, 0});
}
