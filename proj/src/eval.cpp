#include "mforge/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "mforge/errors.hpp"
#include "mforge/numerics.hpp"
#include "mforge/parallel.hpp"

namespace mforge::eval {

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tasks
// ---------------------------------------------------------------------------

std::string TaskSpec::name() const {
    std::string h = horizon == Horizon::kLong ? "long" : "short";
    std::string e = event == EventType::kHypo ? "hypo" : "hyper";
    return h + "_" + e;
}

TaskSpec parse_task(const std::string& name) {
    TaskSpec t;
    if (name == "long_hypo") {
        t.horizon = Horizon::kLong;
        t.event = EventType::kHypo;
    } else if (name == "long_hyper") {
        t.horizon = Horizon::kLong;
        t.event = EventType::kHyper;
    } else if (name == "short_hypo") {
        t.horizon = Horizon::kShort;
        t.event = EventType::kHypo;
    } else if (name == "short_hyper") {
        t.horizon = Horizon::kShort;
        t.event = EventType::kHyper;
    } else {
        throw ValidationError("unknown task '" + name + "'");
    }
    return t;
}

std::vector<EventRun> label_events(const signal::DaySegment& seg, const TaskSpec& task) {
    std::vector<EventRun> runs;
    const int n = static_cast<int>(seg.values.size());
    int begin = -1;
    for (int i = 0; i <= n; ++i) {
        bool in = false;
        if (i < n) {
            in = task.event == EventType::kHypo ? seg.values[i] < task.hypo_level
                                                : seg.values[i] > task.hyper_level;
        }
        if (in && begin < 0) begin = i;
        if (!in && begin >= 0) {
            if (i - begin >= task.event_min_duration) runs.push_back({begin, i});
            begin = -1;
        }
    }
    return runs;
}

std::vector<TaskRow> make_task_rows(const std::vector<signal::DaySegment>& segments,
                                    const TaskSpec& task) {
    // Group segments by patient, ordered by day.
    std::map<std::string, std::map<std::int64_t, const signal::DaySegment*>> by_patient;
    for (const auto& seg : segments) by_patient[seg.patient_id][seg.day_index] = &seg;

    std::vector<TaskRow> rows;
    for (const auto& [patient, days] : by_patient) {
        for (const auto& [day, seg] : days) {
            const int t_day = static_cast<int>(seg->values.size());
            if (task.horizon == Horizon::kLong) {
                auto next = days.find(day + 1);
                if (next == days.end()) continue;  // no following day
                auto events = label_events(*next->second, task);
                int needed = task.event == EventType::kHyper ? task.long_hyper_min_events : 1;
                rows.push_back({patient, day, t_day,
                                static_cast<int>(events.size()) >= needed ? 1 : 0});
            } else {
                auto events = label_events(*seg, task);
                const int h = task.short_horizon;
                for (int t = h; t + h <= t_day; t += h) {
                    int y = 0;
                    for (const auto& run : events)
                        if (run.begin >= t && run.begin < t + h) {
                            y = 1;
                            break;
                        }
                    rows.push_back({patient, day, t, y});
                }
            }
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Featurization
// ---------------------------------------------------------------------------

Representation parse_representation(const std::string& name) {
    if (name == "motifs") return Representation::kMotifs;
    if (name == "motifs_context") return Representation::kMotifsContext;
    if (name == "motifs_noise") return Representation::kMotifsNoise;
    if (name == "derived_counts") return Representation::kDerivedCounts;
    if (name == "derived_contextual_counts") return Representation::kDerivedContextualCounts;
    throw ValidationError("unknown representation '" + name + "'");
}

std::string representation_name(Representation rep) {
    switch (rep) {
        case Representation::kMotifs: return "motifs";
        case Representation::kMotifsContext: return "motifs_context";
        case Representation::kMotifsNoise: return "motifs_noise";
        case Representation::kDerivedCounts: return "derived_counts";
        case Representation::kDerivedContextualCounts: return "derived_contextual_counts";
    }
    return "?";
}

FeatureMatrix featurize(const std::vector<TaskRow>& rows, const AtomMap& atoms,
                        const RepresentationSpec& spec, std::uint64_t seed) {
    if (spec.n_motif_ids < 1) throw ValidationError("featurize: n_motif_ids must be positive");
    const int n_noise = spec.noise_cardinality > 0 ? spec.noise_cardinality : spec.n_contexts;

    FeatureMatrix m;
    int n_cols = 0;
    switch (spec.kind) {
        case Representation::kMotifs:
        case Representation::kDerivedCounts:
        case Representation::kDerivedContextualCounts:
            n_cols = spec.n_motif_ids;
            for (int z = 0; z < n_cols; ++z) m.columns.push_back("m" + std::to_string(z));
            break;
        case Representation::kMotifsContext:
            n_cols = spec.n_motif_ids * spec.n_contexts;
            for (int z = 0; z < spec.n_motif_ids; ++z)
                for (int c = 0; c < spec.n_contexts; ++c)
                    m.columns.push_back("m" + std::to_string(z) + "_c" + std::to_string(c));
            break;
        case Representation::kMotifsNoise:
            n_cols = spec.n_motif_ids * n_noise;
            for (int z = 0; z < spec.n_motif_ids; ++z)
                for (int k = 0; k < n_noise; ++k)
                    m.columns.push_back("m" + std::to_string(z) + "_n" + std::to_string(k));
            break;
    }

    // Noise categories attach to atoms, not rows, mimicking a per-window
    // context that is independent of the data.
    std::map<AtomKey, std::vector<int>> noise_labels;
    if (spec.kind == Representation::kMotifsNoise) {
        Rng root(seed);
        for (const auto& [key, list] : atoms) {
            Rng stream = root.derive(fnv1a(key.first) ^
                                     (static_cast<std::uint64_t>(key.second) * 0x9e3779b97f4a7c15ull));
            std::vector<int> labels(list.size());
            for (std::size_t i = 0; i < list.size(); ++i)
                labels[i] = static_cast<int>(stream.uniform_index(static_cast<std::size_t>(n_noise)));
            noise_labels[key] = std::move(labels);
        }
    }

    for (const auto& row : rows) {
        std::vector<double> x(static_cast<std::size_t>(n_cols), 0.0);
        auto it = atoms.find({row.patient_id, row.feature_day});
        if (it != atoms.end()) {
            const auto& list = it->second;
            for (std::size_t i = 0; i < list.size(); ++i) {
                const Atom& a = list[i];
                if (a.end_sample > row.cutoff) continue;
                if (a.motif < 0 || a.motif >= spec.n_motif_ids)
                    throw ValidationError("featurize: motif id outside the representation");
                int col = 0;
                switch (spec.kind) {
                    case Representation::kMotifs:
                    case Representation::kDerivedCounts:
                    case Representation::kDerivedContextualCounts:
                        col = a.motif;
                        break;
                    case Representation::kMotifsContext:
                        if (a.context < 0 || a.context >= spec.n_contexts)
                            throw ValidationError("featurize: atom lacks a context label");
                        col = a.motif * spec.n_contexts + a.context;
                        break;
                    case Representation::kMotifsNoise:
                        col = a.motif * n_noise + noise_labels[it->first][i];
                        break;
                }
                x[static_cast<std::size_t>(col)] += 1.0;
            }
        }
        m.x.push_back(std::move(x));
        m.y.push_back(row.y);
        m.group.push_back(row.patient_id);
        m.row_id.push_back(row.patient_id + "#" + std::to_string(row.feature_day) + "#" +
                           std::to_string(row.cutoff));
    }
    return m;
}

AtomMap make_atom_map(const std::vector<std::vector<int>>& motif_labels,
                      const std::vector<std::vector<int>>* context_labels,
                      const std::vector<AtomKey>& keys, int motif_len, int windows_per_context) {
    if (motif_labels.size() != keys.size())
        throw ValidationError("make_atom_map: keys must match labelings");
    AtomMap atoms;
    for (std::size_t si = 0; si < motif_labels.size(); ++si) {
        auto& list = atoms[keys[si]];
        for (std::size_t j = 0; j < motif_labels[si].size(); ++j) {
            Atom a;
            a.motif = motif_labels[si][j];
            a.end_sample = static_cast<int>(j + 1) * motif_len;
            if (context_labels)
                a.context = (*context_labels)[si][j / static_cast<std::size_t>(windows_per_context)];
            list.push_back(a);
        }
    }
    return atoms;
}

namespace {

bool has_recent_atom(const TaskRow& row, const AtomMap& atoms, int horizon) {
    auto it = atoms.find({row.patient_id, row.feature_day});
    if (it == atoms.end()) return false;
    for (const Atom& a : it->second)
        if (a.end_sample <= row.cutoff && a.end_sample > row.cutoff - horizon) return true;
    return false;
}

}  // namespace

double recent_atom_coverage(const std::vector<TaskRow>& rows, const AtomMap& atoms, int horizon) {
    if (rows.empty()) return 0.0;
    std::size_t covered = 0;
    for (const auto& row : rows) covered += has_recent_atom(row, atoms, horizon) ? 1 : 0;
    return static_cast<double>(covered) / static_cast<double>(rows.size());
}

std::vector<TaskRow> filter_rows_by_recent_atom(const std::vector<TaskRow>& rows,
                                                const AtomMap& atoms, int horizon) {
    std::vector<TaskRow> out;
    for (const auto& row : rows)
        if (has_recent_atom(row, atoms, horizon)) out.push_back(row);
    return out;
}

// ---------------------------------------------------------------------------
// Split / classifier / AUC
// ---------------------------------------------------------------------------

SplitResult patient_aware_split(const FeatureMatrix& matrix, double test_fraction, Rng& rng) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ValidationError("test_fraction must lie in (0, 1)");
    std::map<std::string, std::vector<std::size_t>> rows_of;
    for (std::size_t i = 0; i < matrix.group.size(); ++i) rows_of[matrix.group[i]].push_back(i);
    if (rows_of.size() < 2)
        throw ValidationError("patient-aware split requires at least two patients");

    std::vector<std::string> patients;
    for (const auto& [p, _] : rows_of) patients.push_back(p);
    for (std::size_t i = patients.size(); i-- > 1;)
        std::swap(patients[i], patients[rng.uniform_index(i + 1)]);

    const double target = test_fraction * static_cast<double>(matrix.group.size());
    std::set<std::string> test_patients;
    double current = 0.0;
    for (const auto& p : patients) {
        double with = current + static_cast<double>(rows_of[p].size());
        if (std::abs(with - target) < std::abs(current - target)) {
            test_patients.insert(p);
            current = with;
        }
    }
    if (test_patients.empty()) test_patients.insert(patients.front());
    if (test_patients.size() == patients.size()) test_patients.erase(patients.back());

    SplitResult split;
    for (std::size_t i = 0; i < matrix.group.size(); ++i) {
        if (test_patients.count(matrix.group[i]))
            split.test.push_back(i);
        else
            split.train.push_back(i);
    }
    // The defining property: no patient on both sides.
    for (std::size_t i : split.train)
        if (test_patients.count(matrix.group[i]))
            throw std::logic_error("patient_aware_split: patient leaked across the split");
    return split;
}

namespace {

struct LogisticFit {
    std::vector<double> w;  // weights then intercept
    double loss = 0.0;
};

// Minimizes sum_i log(1 + exp(-y~ eta)) + lambda/2 ||w||^2 by damped Newton.
LogisticFit fit_logistic(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                         double lambda, int max_iters = 200, double grad_tol = 1e-6) {
    const std::size_t n = x.size();
    const std::size_t d = x.empty() ? 0 : x[0].size();
    std::vector<double> w(d + 1, 0.0);  // last entry is the intercept

    auto eval_loss = [&](const std::vector<double>& wv) {
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double eta = wv[d];
            for (std::size_t j = 0; j < d; ++j) eta += wv[j] * x[i][j];
            double yy = y[i] ? 1.0 : -1.0;
            double m = -yy * eta;
            loss += m > 30.0 ? m : std::log1p(std::exp(m));
        }
        for (std::size_t j = 0; j < d; ++j) loss += 0.5 * lambda * wv[j] * wv[j];
        return loss;
    };

    double loss = eval_loss(w);
    for (int it = 0; it < max_iters; ++it) {
        std::vector<double> grad(d + 1, 0.0);
        std::vector<std::vector<double>> hess(d + 1, std::vector<double>(d + 1, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            double eta = w[d];
            for (std::size_t j = 0; j < d; ++j) eta += w[j] * x[i][j];
            double p = logistic(eta);
            double r = p - (y[i] ? 1.0 : 0.0);
            double dd = std::max(p * (1.0 - p), 1e-12);
            for (std::size_t j = 0; j < d; ++j) {
                grad[j] += r * x[i][j];
                for (std::size_t k = j; k < d; ++k) hess[j][k] += dd * x[i][j] * x[i][k];
                hess[j][d] += dd * x[i][j];
            }
            grad[d] += r;
            hess[d][d] += dd;
        }
        for (std::size_t j = 0; j < d; ++j) {
            grad[j] += lambda * w[j];
            hess[j][j] += lambda;
        }
        hess[d][d] += 1e-10;
        for (std::size_t j = 0; j <= d; ++j)
            for (std::size_t k = 0; k < j; ++k) hess[j][k] = hess[k][j];

        double gnorm = 0.0;
        for (double g : grad) gnorm += g * g;
        gnorm = std::sqrt(gnorm);
        if (gnorm < grad_tol) break;

        std::vector<double> rhs(d + 1);
        for (std::size_t j = 0; j <= d; ++j) rhs[j] = -grad[j];
        std::vector<double> step = solve_linear(hess, rhs);

        double gd = 0.0;
        for (std::size_t j = 0; j <= d; ++j) gd += grad[j] * step[j];
        double t = 1.0;
        std::vector<double> cand(d + 1);
        for (;;) {
            for (std::size_t j = 0; j <= d; ++j) cand[j] = w[j] + t * step[j];
            double cand_loss = eval_loss(cand);
            if (cand_loss <= loss + 1e-4 * t * gd || t < 1e-10) {
                w = cand;
                loss = cand_loss;
                break;
            }
            t *= 0.5;
        }
    }
    return {std::move(w), loss};
}

std::vector<std::vector<std::size_t>> patient_folds(const FeatureMatrix& matrix,
                                                    const std::vector<std::size_t>& rows, int k,
                                                    Rng& rng) {
    std::map<std::string, std::vector<std::size_t>> rows_of;
    for (std::size_t i : rows) rows_of[matrix.group[i]].push_back(i);
    std::vector<std::string> patients;
    for (const auto& [p, _] : rows_of) patients.push_back(p);
    for (std::size_t i = patients.size(); i-- > 1;)
        std::swap(patients[i], patients[rng.uniform_index(i + 1)]);

    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
    std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
    for (const auto& p : patients) {
        std::size_t smallest = 0;
        for (std::size_t f = 1; f < folds.size(); ++f)
            if (sizes[f] < sizes[smallest]) smallest = f;
        auto& src = rows_of[p];
        folds[smallest].insert(folds[smallest].end(), src.begin(), src.end());
        sizes[smallest] += src.size();
    }
    return folds;
}

}  // namespace

double score_row(const LinearModel& model, const std::vector<double>& x) {
    if (model.degenerate) return 0.5;
    double eta = model.intercept;
    for (std::size_t j = 0; j < model.weights.size(); ++j)
        eta += model.weights[j] * (x[j] - model.feature_mean[j]) / model.feature_scale[j];
    return logistic(eta);
}

LinearModel fit_linear_classifier(const FeatureMatrix& matrix,
                                  const std::vector<std::size_t>& train_rows,
                                  const std::vector<double>& lambda_grid, int inner_folds,
                                  std::uint64_t seed) {
    if (train_rows.empty()) throw ValidationError("fit_linear_classifier: empty training set");
    if (lambda_grid.empty()) throw ValidationError("fit_linear_classifier: empty lambda grid");
    const std::size_t d = matrix.columns.size();

    LinearModel model;
    model.feature_mean.assign(d, 0.0);
    model.feature_scale.assign(d, 1.0);

    int pos = 0;
    for (std::size_t i : train_rows) pos += matrix.y[i];
    if (pos == 0 || pos == static_cast<int>(train_rows.size())) {
        model.degenerate = true;
        model.weights.assign(d, 0.0);
        model.lambda = lambda_grid.front();
        return model;
    }

    // Standardize with training statistics only.
    for (std::size_t j = 0; j < d; ++j) {
        std::vector<double> col;
        col.reserve(train_rows.size());
        for (std::size_t i : train_rows) col.push_back(matrix.x[i][j]);
        auto [mean, var] = mean_variance(col);
        model.feature_mean[j] = mean;
        model.feature_scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    auto standardized = [&](const std::vector<std::size_t>& rows) {
        std::vector<std::vector<double>> x(rows.size(), std::vector<double>(d));
        std::vector<int> y(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            for (std::size_t j = 0; j < d; ++j)
                x[r][j] = (matrix.x[rows[r]][j] - model.feature_mean[j]) / model.feature_scale[j];
            y[r] = matrix.y[rows[r]];
        }
        return std::make_pair(std::move(x), std::move(y));
    };

    // Inner patient-aware CV over the lambda grid.
    Rng rng = Rng(seed).derive(17);
    auto folds = patient_folds(matrix, train_rows, inner_folds, rng);
    std::vector<double> grid = lambda_grid;
    std::sort(grid.begin(), grid.end());
    double best_lambda = grid[grid.size() / 2];
    double best_score = -1.0;
    for (double lambda : grid) {
        double sum = 0.0;
        int valid = 0;
        for (std::size_t f = 0; f < folds.size(); ++f) {
            if (folds[f].empty()) continue;
            std::vector<std::size_t> inner_train;
            for (std::size_t g = 0; g < folds.size(); ++g)
                if (g != f) inner_train.insert(inner_train.end(), folds[g].begin(), folds[g].end());
            if (inner_train.empty()) continue;
            int tp = 0;
            for (std::size_t i : inner_train) tp += matrix.y[i];
            if (tp == 0 || tp == static_cast<int>(inner_train.size())) continue;
            int vp = 0;
            for (std::size_t i : folds[f]) vp += matrix.y[i];
            if (vp == 0 || vp == static_cast<int>(folds[f].size())) continue;

            auto [xt, yt] = standardized(inner_train);
            auto fit = fit_logistic(xt, yt, lambda);
            std::vector<double> scores;
            std::vector<int> labels;
            for (std::size_t i : folds[f]) {
                double eta = fit.w[d];
                for (std::size_t j = 0; j < d; ++j)
                    eta += fit.w[j] * (matrix.x[i][j] - model.feature_mean[j]) /
                           model.feature_scale[j];
                scores.push_back(eta);
                labels.push_back(matrix.y[i]);
            }
            sum += auc(scores, labels);
            ++valid;
        }
        if (valid == 0) continue;
        double mean = sum / valid;
        if (mean >= best_score) {  // ties prefer the larger lambda
            best_score = mean;
            best_lambda = lambda;
        }
    }

    auto [xt, yt] = standardized(train_rows);
    auto fit = fit_logistic(xt, yt, best_lambda);
    model.weights.assign(fit.w.begin(), fit.w.begin() + static_cast<std::ptrdiff_t>(d));
    model.intercept = fit.w[d];
    model.lambda = best_lambda;
    return model;
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw ValidationError("auc: size mismatch");
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += y ? 1 : 0;
    std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw ValidationError("auc: both classes must be present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Tie-averaged ranks; rank sums stay exact half-integers in double.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1 .. j
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]]) rank_sum_pos += avg_rank;
        i = j;
    }
    double np = static_cast<double>(n_pos);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

double paired_t_statistic(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw ValidationError("paired_t_statistic: need two equal-length samples");
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    auto [mean, var] = mean_variance(diff);
    double n = static_cast<double>(diff.size());
    double sample_var = var * n / (n - 1.0);
    if (sample_var <= 0.0) return mean == 0.0 ? 0.0 : std::copysign(1e12, mean);
    return mean / std::sqrt(sample_var / n);
}

ResultsTable run_experiment(const std::vector<TaskBundle>& bundles,
                            const ExperimentProtocol& protocol) {
    ResultsTable table;
    table.seed = protocol.seed;
    Rng root(protocol.seed);

    for (std::size_t bi = 0; bi < bundles.size(); ++bi) {
        const TaskBundle& bundle = bundles[bi];
        if (bundle.methods.empty()) continue;
        const FeatureMatrix& ref = bundle.methods.front().features;
        for (const auto& method : bundle.methods) {
            if (method.features.y != ref.y || method.features.group != ref.group)
                throw ValidationError("run_experiment: methods in task '" + bundle.task +
                                      "' disagree on rows");
        }

        std::vector<std::vector<double>> split_aucs(
            bundle.methods.size(), std::vector<double>(static_cast<std::size_t>(protocol.n_splits)));
        std::vector<std::string> errors(static_cast<std::size_t>(protocol.n_splits));

        parallel_for(static_cast<std::size_t>(protocol.n_splits), protocol.threads,
                     [&](std::size_t s) {
            try {
                Rng stream = root.derive((static_cast<std::uint64_t>(bi) << 32) | s);
                Rng split_rng = stream.derive(1);
                SplitResult split = patient_aware_split(ref, protocol.test_fraction, split_rng);
                for (std::size_t mi = 0; mi < bundle.methods.size(); ++mi) {
                    const FeatureMatrix& fm = bundle.methods[mi].features;
                    LinearModel model =
                        fit_linear_classifier(fm, split.train, protocol.lambda_grid,
                                              protocol.inner_folds, stream.derive(2).seed());
                    std::vector<double> scores;
                    std::vector<int> labels;
                    scores.reserve(split.test.size());
                    for (std::size_t i : split.test) {
                        scores.push_back(score_row(model, fm.x[i]));
                        labels.push_back(fm.y[i]);
                    }
                    split_aucs[mi][s] = auc(scores, labels);
                }
            } catch (const std::exception& e) {
                errors[s] = e.what();
            }
        });
        for (std::size_t s = 0; s < errors.size(); ++s)
            if (!errors[s].empty())
                throw std::runtime_error("run_experiment: task '" + bundle.task + "' split " +
                                         std::to_string(s) + " failed: " + errors[s]);

        for (std::size_t mi = 0; mi < bundle.methods.size(); ++mi) {
            ResultCell cell;
            cell.method = bundle.methods[mi].method;
            cell.task = bundle.task;
            cell.beta = bundle.beta;
            cell.n_splits = protocol.n_splits;
            cell.per_split_auc = split_aucs[mi];
            auto [mean, var] = mean_variance(cell.per_split_auc);
            cell.mean_auc = mean;
            double n = static_cast<double>(protocol.n_splits);
            cell.std_auc = n > 1.0 ? std::sqrt(var * n / (n - 1.0)) : 0.0;
            table.cells.push_back(std::move(cell));
        }
    }
    return table;
}

}  // namespace mforge::eval
