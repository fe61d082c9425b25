#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "mforge/rng.hpp"
#include "mforge/signal.hpp"

namespace mforge::eval {

struct FeatureMatrix {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    std::vector<std::string> group;   // patient id, present on every row
    std::vector<std::string> row_id;  // detail key for per-split output
};

// ---------------------------------------------------------------------------
// Tasks and event labeling
// ---------------------------------------------------------------------------

enum class EventType { kHypo, kHyper };
enum class Horizon { kLong, kShort };

struct TaskSpec {
    EventType event = EventType::kHypo;
    Horizon horizon = Horizon::kLong;
    double hypo_level = 70.0;    // mg/dL, event when below
    double hyper_level = 180.0;  // mg/dL, event when above
    int event_min_duration = 3;  // samples (15 min at 5-min sampling)
    int long_hyper_min_events = 2;
    int short_horizon = 8;  // samples (40 min)

    std::string name() const;
};

TaskSpec parse_task(const std::string& name);

struct EventRun {
    int begin = 0;
    int end = 0;  // one past
};

/// Maximal runs of at least event_min_duration samples beyond the task's
/// threshold (below hypo_level or above hyper_level).
std::vector<EventRun> label_events(const signal::DaySegment& seg, const TaskSpec& task);

/// One classification row. Features are counted from atoms ending at or
/// before `cutoff` samples into the feature day.
struct TaskRow {
    std::string patient_id;
    std::int64_t feature_day = 0;
    int cutoff = 0;
    int y = 0;
};

/// Long horizon: one row per day with a following day, labeled by next-day
/// events. Short horizon: one row per (day, prediction time) on a
/// short_horizon grid, labeled by an event onset within the horizon.
std::vector<TaskRow> make_task_rows(const std::vector<signal::DaySegment>& segments,
                                    const TaskSpec& task);

// ---------------------------------------------------------------------------
// Featurization
// ---------------------------------------------------------------------------

/// A countable labeling atom: a motif occurrence with an optional context,
/// ending end_sample samples into its day.
struct Atom {
    int motif = 0;
    int context = -1;
    int end_sample = 0;
};

using AtomKey = std::pair<std::string, std::int64_t>;  // (patient, day)
using AtomMap = std::map<AtomKey, std::vector<Atom>>;

enum class Representation {
    kMotifs,
    kMotifsContext,
    kMotifsNoise,
    kDerivedCounts,
    kDerivedContextualCounts,
};

Representation parse_representation(const std::string& name);
std::string representation_name(Representation rep);

struct RepresentationSpec {
    Representation kind = Representation::kMotifs;
    int n_motif_ids = 0;        // motif id cardinality (M+1 for model labels)
    int n_contexts = 1;         // context cardinality for (motif, context) columns
    int noise_cardinality = 0;  // 0: same as n_contexts
};

/// Counts per feature id per row. The noise representation replaces the
/// context axis with a uniform category drawn once per atom, independent of
/// the data; noise draws are keyed on (seed, patient, day, atom index).
FeatureMatrix featurize(const std::vector<TaskRow>& rows, const AtomMap& atoms,
                        const RepresentationSpec& spec, std::uint64_t seed);

/// Builds the atom map for model labelings: one atom per motif window, with
/// the enclosing context-window label when context labels are given.
AtomMap make_atom_map(const std::vector<std::vector<int>>& motif_labels,
                      const std::vector<std::vector<int>>* context_labels,
                      const std::vector<AtomKey>& keys, int motif_len, int windows_per_context);

/// Fraction of rows with at least one atom ending within `horizon` samples
/// before the row's cutoff, plus an optional row filter keeping only those.
double recent_atom_coverage(const std::vector<TaskRow>& rows, const AtomMap& atoms, int horizon);
std::vector<TaskRow> filter_rows_by_recent_atom(const std::vector<TaskRow>& rows,
                                                const AtomMap& atoms, int horizon);

// ---------------------------------------------------------------------------
// Splitting, classifier, AUC
// ---------------------------------------------------------------------------

struct SplitResult {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Partitions patients (never rows); picks the test patient set whose row
/// count is closest to test_fraction of all rows.
SplitResult patient_aware_split(const FeatureMatrix& matrix, double test_fraction, Rng& rng);

struct LinearModel {
    std::vector<double> weights;
    double intercept = 0.0;
    std::vector<double> feature_mean;
    std::vector<double> feature_scale;
    double lambda = 1.0;
    bool degenerate = false;  // single-class training labels; scores constant 0.5
};

/// L2-regularized logistic regression on standardized features, with lambda
/// chosen by patient-aware inner-fold AUC.
LinearModel fit_linear_classifier(const FeatureMatrix& matrix,
                                  const std::vector<std::size_t>& train_rows,
                                  const std::vector<double>& lambda_grid, int inner_folds,
                                  std::uint64_t seed);

double score_row(const LinearModel& model, const std::vector<double>& x);

/// Mann-Whitney AUC: (concordant + 0.5 * tied) / (n_pos * n_neg).
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Paired t statistic of a - b (positive when a ranks higher).
double paired_t_statistic(const std::vector<double>& a, const std::vector<double>& b);

// ---------------------------------------------------------------------------
// Experiment harness
// ---------------------------------------------------------------------------

struct MethodData {
    std::string method;
    FeatureMatrix features;
};

/// Methods inside a bundle share rows (same y/groups); splits are common
/// across methods so per-split AUCs pair up.
struct TaskBundle {
    std::string task;
    double beta = std::numeric_limits<double>::quiet_NaN();
    std::vector<MethodData> methods;
};

struct ExperimentProtocol {
    int n_splits = 100;
    double test_fraction = 0.25;
    std::vector<double> lambda_grid{1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
    int inner_folds = 3;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct ResultCell {
    std::string method;
    std::string task;
    double beta = std::numeric_limits<double>::quiet_NaN();
    int n_splits = 0;
    std::vector<double> per_split_auc;
    double mean_auc = 0.0;
    double std_auc = 0.0;
};

struct ResultsTable {
    std::vector<ResultCell> cells;
    std::uint64_t seed = 0;
    std::string config_hash;
};

ResultsTable run_experiment(const std::vector<TaskBundle>& bundles,
                            const ExperimentProtocol& protocol);

}  // namespace mforge::eval
