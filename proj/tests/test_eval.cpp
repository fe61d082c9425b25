#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mforge/errors.hpp"
#include "mforge/eval.hpp"
#include "mforge/numerics.hpp"
#include "support/oracles.hpp"

using namespace mforge;
using namespace mforge::eval;
using mforge::signal::DaySegment;

namespace {

DaySegment day(const std::string& patient, std::int64_t index, std::vector<double> values) {
    DaySegment seg;
    seg.patient_id = patient;
    seg.day_index = index;
    seg.values = std::move(values);
    return seg;
}

std::vector<double> flat_day(double level = 100.0) { return std::vector<double>(288, level); }

}  // namespace

TEST_CASE("label_events: a flat in-range day has no events") {
    TaskSpec hypo = parse_task("long_hypo");
    TaskSpec hyper = parse_task("long_hyper");
    auto seg = day("p", 0, flat_day(100.0));
    CHECK(label_events(seg, hypo).empty());
    CHECK(label_events(seg, hyper).empty());
}

TEST_CASE("label_events: four consecutive low samples are one hypo event") {
    auto values = flat_day(100.0);
    for (int i = 40; i < 44; ++i) values[i] = 60.0;
    auto runs = label_events(day("p", 0, values), parse_task("long_hypo"));
    REQUIRE(runs.size() == 1);
    CHECK(runs[0].begin == 40);
    CHECK(runs[0].end == 44);
}

TEST_CASE("label_events: short high excursions below min duration do not count") {
    auto values = flat_day(100.0);
    values[50] = 250.0;
    values[52] = 250.0;
    CHECK(label_events(day("p", 0, values), parse_task("long_hyper")).empty());
}

TEST_CASE("make_task_rows: one next-day hyper event is below the two-event threshold") {
    auto next = flat_day(100.0);
    for (int i = 10; i < 20; ++i) next[i] = 250.0;  // exactly one hyper event
    std::vector<DaySegment> segments{day("p", 0, flat_day()), day("p", 1, next)};
    auto rows = make_task_rows(segments, parse_task("long_hyper"));
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].y == 0);
    CHECK(rows[0].feature_day == 0);

    // Two events flip the label.
    auto next2 = next;
    for (int i = 100; i < 110; ++i) next2[i] = 260.0;
    std::vector<DaySegment> segments2{day("p", 0, flat_day()), day("p", 1, next2)};
    auto rows2 = make_task_rows(segments2, parse_task("long_hyper"));
    REQUIRE(rows2.size() == 1);
    CHECK(rows2[0].y == 1);
}

TEST_CASE("make_task_rows: a hypo onset within the next 40 minutes labels the short row") {
    auto values = flat_day(100.0);
    for (int i = 100; i < 105; ++i) values[i] = 60.0;  // onset at sample 100
    std::vector<DaySegment> segments{day("p", 0, values)};
    auto rows = make_task_rows(segments, parse_task("short_hypo"));
    REQUIRE(!rows.empty());
    for (const auto& row : rows) {
        bool onset_in_horizon = 100 >= row.cutoff && 100 < row.cutoff + 8;
        CHECK(row.y == (onset_in_horizon ? 1 : 0));
    }
    int positives = 0;
    for (const auto& row : rows) positives += row.y;
    CHECK(positives == 1);  // exactly one grid cell contains the onset
}

TEST_CASE("make_task_rows: a fully normal next day is negative for both long tasks") {
    std::vector<DaySegment> segments{day("p", 0, flat_day()), day("p", 1, flat_day())};
    CHECK(make_task_rows(segments, parse_task("long_hypo"))[0].y == 0);
    CHECK(make_task_rows(segments, parse_task("long_hyper"))[0].y == 0);
}

TEST_CASE("make_task_rows: a patient with a single day contributes no long rows") {
    std::vector<DaySegment> segments{day("p", 0, flat_day()), day("q", 3, flat_day()),
                                     day("q", 4, flat_day())};
    auto rows = make_task_rows(segments, parse_task("long_hypo"));
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].patient_id == "q");
}

TEST_CASE("featurize: motif counts") {
    AtomMap atoms;
    atoms[{"p", 0}] = {{3, -1, 8}, {3, -1, 16}, {0, -1, 24}};
    std::vector<TaskRow> rows{{"p", 0, 288, 1}};
    RepresentationSpec spec{Representation::kMotifs, 4, 1, 0};
    auto m = featurize(rows, atoms, spec, 0);
    REQUIRE(m.columns.size() == 4);
    CHECK(m.x[0] == std::vector<double>{1.0, 0.0, 0.0, 2.0});
}

TEST_CASE("featurize: (motif, context) columns have (M+1) x n_c dimensions") {
    AtomMap atoms;
    atoms[{"p", 0}] = {{1, 0, 8}, {1, 1, 16}, {2, 0, 24}};
    std::vector<TaskRow> rows{{"p", 0, 288, 0}};
    RepresentationSpec spec{Representation::kMotifsContext, 3, 2, 0};
    auto m = featurize(rows, atoms, spec, 0);
    CHECK(m.columns.size() == 6);
    CHECK(m.x[0][1 * 2 + 0] == 1.0);
    CHECK(m.x[0][1 * 2 + 1] == 1.0);
    CHECK(m.x[0][2 * 2 + 0] == 1.0);
}

TEST_CASE("featurize: cutoff drops atoms ending after the prediction time") {
    AtomMap atoms;
    atoms[{"p", 0}] = {{1, -1, 8}, {1, -1, 200}};
    std::vector<TaskRow> rows{{"p", 0, 100, 0}, {"p", 0, 288, 0}};
    RepresentationSpec spec{Representation::kMotifs, 2, 1, 0};
    auto m = featurize(rows, atoms, spec, 0);
    CHECK(m.x[0][1] == 1.0);
    CHECK(m.x[1][1] == 2.0);
}

TEST_CASE("featurize: noise categories are independent of the outcome") {
    Rng rng(91);
    AtomMap atoms;
    std::vector<TaskRow> rows;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
        std::string pid = "p" + std::to_string(i);
        atoms[{pid, 0}] = {{1, 0, 8}};
        rows.push_back({pid, 0, 288, rng.bernoulli(0.5)});
    }
    RepresentationSpec spec{Representation::kMotifsNoise, 2, 2, 2};
    auto m = featurize(rows, atoms, spec, 1234);

    // Correlation of each noise-split column with y stays at chance level.
    for (std::size_t j = 0; j < m.columns.size(); ++j) {
        std::vector<double> col;
        for (const auto& row : m.x) col.push_back(row[j]);
        auto [cm, cv] = mean_variance(col);
        std::vector<double> yv(m.y.begin(), m.y.end());
        auto [ym, yvar] = mean_variance(yv);
        if (cv <= 0.0) continue;
        double cov = 0.0;
        for (int i = 0; i < n; ++i) cov += (col[i] - cm) * (yv[i] - ym);
        cov /= n;
        double corr = cov / std::sqrt(cv * yvar);
        CHECK(std::abs(corr) < 4.0 / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("patient_aware_split: two patients at a half fraction get one side each") {
    FeatureMatrix m;
    for (int i = 0; i < 10; ++i) {
        m.x.push_back({0.0});
        m.y.push_back(i % 2);
        m.group.push_back(i < 5 ? "a" : "b");
    }
    Rng rng(3);
    auto split = patient_aware_split(m, 0.5, rng);
    CHECK(split.train.size() == 5);
    CHECK(split.test.size() == 5);
    CHECK(m.group[split.train[0]] != m.group[split.test[0]]);
}

TEST_CASE("patient_aware_split: no patient appears on both sides") {
    Rng data_rng(4);
    FeatureMatrix m;
    for (int p = 0; p < 12; ++p) {
        int rows = 3 + static_cast<int>(data_rng.uniform_index(10));
        for (int i = 0; i < rows; ++i) {
            m.x.push_back({0.0});
            m.y.push_back(0);
            m.group.push_back("p" + std::to_string(p));
        }
    }
    for (int trial = 0; trial < 50; ++trial) {
        Rng rng(100 + trial);
        auto split = patient_aware_split(m, 0.25, rng);
        std::set<std::string> test_patients;
        for (auto i : split.test) test_patients.insert(m.group[i]);
        for (auto i : split.train) CHECK(!test_patients.count(m.group[i]));
        CHECK(!split.train.empty());
        CHECK(!split.test.empty());
    }
}

TEST_CASE("patient_aware_split: ten equal patients at 0.3 give three test patients") {
    FeatureMatrix m;
    for (int p = 0; p < 10; ++p)
        for (int i = 0; i < 7; ++i) {
            m.x.push_back({0.0});
            m.y.push_back(0);
            m.group.push_back("p" + std::to_string(p));
        }
    Rng rng(5);
    auto split = patient_aware_split(m, 0.3, rng);
    std::set<std::string> test_patients;
    for (auto i : split.test) test_patients.insert(m.group[i]);
    CHECK(test_patients.size() == 3);
}

TEST_CASE("patient_aware_split: a single patient is an error") {
    FeatureMatrix m;
    m.x.push_back({0.0});
    m.y.push_back(0);
    m.group.push_back("only");
    Rng rng(6);
    CHECK_THROWS_AS(patient_aware_split(m, 0.5, rng), ValidationError);
}

namespace {

FeatureMatrix toy_matrix(int n_patients, int rows_per_patient, bool separable, Rng& rng) {
    FeatureMatrix m;
    m.columns = {"f0", "f1"};
    for (int p = 0; p < n_patients; ++p)
        for (int i = 0; i < rows_per_patient; ++i) {
            int y = rng.bernoulli(0.5);
            double x0 = separable ? (y ? 2.0 : -2.0) + 0.1 * rng.normal()
                                  : rng.normal();
            double x1 = rng.normal();
            m.x.push_back({x0, x1});
            m.y.push_back(y);
            m.group.push_back("p" + std::to_string(p));
        }
    return m;
}

std::vector<std::size_t> all_rows(const FeatureMatrix& m) {
    std::vector<std::size_t> rows(m.x.size());
    std::iota(rows.begin(), rows.end(), 0);
    return rows;
}

}  // namespace

TEST_CASE("fit_linear_classifier: a separable problem reaches train AUC 1") {
    Rng rng(7);
    auto m = toy_matrix(8, 20, true, rng);
    auto model = fit_linear_classifier(m, all_rows(m), {1e-3}, 3, 0);
    std::vector<double> scores;
    for (const auto& x : m.x) scores.push_back(score_row(model, x));
    std::vector<int> labels(m.y.begin(), m.y.end());
    CHECK(auc(scores, labels) == 1.0);
}

TEST_CASE("fit_linear_classifier: extreme regularization collapses the weights") {
    Rng rng(8);
    auto m = toy_matrix(8, 20, true, rng);
    auto model = fit_linear_classifier(m, all_rows(m), {1e9}, 3, 0);
    for (double w : model.weights) CHECK(std::abs(w) < 1e-3);
}

TEST_CASE("fit_linear_classifier: single-class training yields a flagged constant model") {
    FeatureMatrix m;
    m.columns = {"f0"};
    for (int i = 0; i < 10; ++i) {
        m.x.push_back({static_cast<double>(i)});
        m.y.push_back(1);
        m.group.push_back("p" + std::to_string(i % 3));
    }
    auto model = fit_linear_classifier(m, all_rows(m), {1.0}, 3, 0);
    CHECK(model.degenerate);
    CHECK(score_row(model, m.x[0]) == 0.5);
}

TEST_CASE("fit_linear_classifier: matches a brute-force search of the loss surface") {
    Rng rng(9);
    FeatureMatrix m;
    m.columns = {"f0", "f1"};
    for (int i = 0; i < 40; ++i) {
        double x0 = rng.normal(), x1 = rng.normal();
        int y = rng.uniform01() < logistic(1.2 * x0 - 0.7 * x1 + 0.3) ? 1 : 0;
        m.x.push_back({x0, x1});
        m.y.push_back(y);
        m.group.push_back("p" + std::to_string(i % 5));
    }
    const double lambda = 1.0;
    auto model = fit_linear_classifier(m, all_rows(m), {lambda}, 3, 0);

    // Loss of a (w0, w1, b) triple on the standardized features.
    auto loss = [&](double w0, double w1, double b) {
        double total = 0.0;
        for (std::size_t i = 0; i < m.x.size(); ++i) {
            double eta = b;
            eta += w0 * (m.x[i][0] - model.feature_mean[0]) / model.feature_scale[0];
            eta += w1 * (m.x[i][1] - model.feature_mean[1]) / model.feature_scale[1];
            double yy = m.y[i] ? 1.0 : -1.0;
            total += std::log1p(std::exp(-yy * eta));
        }
        return total + 0.5 * lambda * (w0 * w0 + w1 * w1);
    };

    // Coarse-to-fine grid search, independent of the Newton path.
    double best[3] = {0.0, 0.0, 0.0};
    double radius = 4.0;
    double best_loss = loss(0, 0, 0);
    for (int round = 0; round < 6; ++round) {
        double step = radius / 10.0;
        double b0 = best[0], b1 = best[1], b2 = best[2];
        for (double w0 = b0 - radius; w0 <= b0 + radius + 1e-12; w0 += step)
            for (double w1 = b1 - radius; w1 <= b1 + radius + 1e-12; w1 += step)
                for (double b = b2 - radius; b <= b2 + radius + 1e-12; b += step) {
                    double l = loss(w0, w1, b);
                    if (l < best_loss) {
                        best_loss = l;
                        best[0] = w0;
                        best[1] = w1;
                        best[2] = b;
                    }
                }
        radius /= 5.0;
    }
    double fitted_loss = loss(model.weights[0], model.weights[1], model.intercept);
    CHECK(std::abs(fitted_loss - best_loss) < 1e-4);
    CHECK(fitted_loss <= best_loss + 1e-9);  // the optimizer is at least as good
}

TEST_CASE("auc: basic values") {
    CHECK(auc({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}) == 1.0);
    CHECK(auc({0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}) == 0.5);
    CHECK(auc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}) == 0.75);
    CHECK_THROWS_AS(auc({0.1, 0.2}, {1, 1}), ValidationError);
}

TEST_CASE("auc: equals the pairwise brute force exactly, ties included") {
    Rng rng(10);
    for (int trial = 0; trial < 200; ++trial) {
        int n = 2 + static_cast<int>(rng.uniform_index(40));
        std::vector<double> scores;
        std::vector<int> labels;
        int pos = 0;
        for (int i = 0; i < n; ++i) {
            // Coarse grid of score values forces plenty of ties.
            scores.push_back(std::round(rng.uniform01() * 8.0) / 8.0);
            labels.push_back(rng.bernoulli(0.5));
            pos += labels.back();
        }
        if (pos == 0 || pos == n) continue;
        CHECK(auc(scores, labels) == oracles::brute_force_auc(scores, labels));
    }
}

TEST_CASE("auc: invariant under strictly increasing transforms") {
    Rng rng(11);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 60; ++i) {
        scores.push_back(rng.normal());
        labels.push_back(rng.bernoulli(0.4));
    }
    std::vector<double> mapped;
    for (double s : scores) mapped.push_back(std::exp(2.0 * s) + 5.0);
    CHECK(auc(scores, labels) == auc(mapped, labels));
}

TEST_CASE("paired_t_statistic: detects a consistent shift") {
    std::vector<double> a{0.7, 0.72, 0.69, 0.71, 0.73, 0.7, 0.72, 0.71};
    std::vector<double> b{0.65, 0.67, 0.66, 0.66, 0.68, 0.64, 0.66, 0.67};
    CHECK(paired_t_statistic(a, b) > 5.0);
    CHECK(paired_t_statistic(b, a) < -5.0);
}

TEST_CASE("run_experiment: informative features beat noise on shared splits") {
    Rng rng(12);
    auto informative = toy_matrix(20, 10, true, rng);
    FeatureMatrix noise = informative;
    Rng noise_rng(13);
    for (auto& row : noise.x) row = {noise_rng.normal(), noise_rng.normal()};

    TaskBundle bundle;
    bundle.task = "toy";
    bundle.methods.push_back({"informative", informative});
    bundle.methods.push_back({"noise", noise});

    ExperimentProtocol protocol;
    protocol.n_splits = 8;
    protocol.seed = 99;
    auto table = run_experiment({bundle}, protocol);
    REQUIRE(table.cells.size() == 2);
    CHECK(table.cells[0].method == "informative");
    CHECK(table.cells[0].mean_auc > 0.95);
    CHECK(std::abs(table.cells[1].mean_auc - 0.5) < 0.15);
    CHECK(table.cells[0].n_splits == 8);
    REQUIRE(table.cells[0].per_split_auc.size() == 8);

    // Identical configuration and seed reproduce the table exactly.
    auto again = run_experiment({bundle}, protocol);
    for (std::size_t i = 0; i < table.cells.size(); ++i) {
        CHECK(table.cells[i].per_split_auc == again.cells[i].per_split_auc);
        CHECK(table.cells[i].mean_auc == again.cells[i].mean_auc);
    }

    // Threaded execution gives the same table.
    ExperimentProtocol threaded = protocol;
    threaded.threads = 4;
    auto parallel = run_experiment({bundle}, threaded);
    for (std::size_t i = 0; i < table.cells.size(); ++i)
        CHECK(table.cells[i].per_split_auc == parallel.cells[i].per_split_auc);
}

TEST_CASE("run_experiment: methods with mismatched rows are rejected") {
    Rng rng(14);
    auto a = toy_matrix(6, 5, true, rng);
    auto b = toy_matrix(6, 5, true, rng);
    b.y[0] = 1 - b.y[0];
    TaskBundle bundle;
    bundle.task = "bad";
    bundle.methods.push_back({"a", a});
    bundle.methods.push_back({"b", b});
    CHECK_THROWS_AS(run_experiment({bundle}, {}), ValidationError);
}

TEST_CASE("recent_atom_coverage: counts rows with an atom just before the cutoff") {
    AtomMap atoms;
    atoms[{"p", 0}] = {{1, -1, 95}};
    std::vector<TaskRow> rows{{"p", 0, 100, 0}, {"p", 0, 200, 0}};
    CHECK(recent_atom_coverage(rows, atoms, 8) == 0.5);
    auto filtered = filter_rows_by_recent_atom(rows, atoms, 8);
    REQUIRE(filtered.size() == 1);
    CHECK(filtered[0].cutoff == 100);
}
