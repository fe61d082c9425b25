#include "mforge/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "mforge/cmmm.hpp"
#include "mforge/context.hpp"
#include "mforge/derived.hpp"
#include "mforge/errors.hpp"
#include "mforge/eval.hpp"
#include "mforge/io.hpp"
#include "mforge/mmm.hpp"
#include "mforge/signal.hpp"
#include "mforge/simgen.hpp"
#include "mforge/toml_lite.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mforge::cli {

namespace {

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

std::string resolve_output_dir(std::string output, const std::string& subcommand,
                               const std::string& normalized_config) {
    if (!output.empty()) return output;
    const char* cache = std::getenv("MOTIF_FORGE_CACHE");
    if (!cache || std::string(cache).empty())
        throw ValidationError("no --output given and MOTIF_FORGE_CACHE is not set");
    return std::string(cache) + "/" + subcommand + "-" + io::config_hash(normalized_config);
}

// Refuses to reuse an output directory produced by a different configuration.
void begin_output(const std::string& dir, const std::string& command,
                  const std::string& normalized_config) {
    bool exists = false;
    if (!io::manifest_matches(dir, normalized_config, &exists))
        throw ValidationError("output directory " + dir +
                              " holds artifacts from a different configuration; "
                              "choose another directory");
    fs::create_directories(dir);
    io::write_manifest(dir, command, normalized_config);
}

std::string resolve_segments_file(const std::string& path) {
    if (fs::is_directory(path)) {
        for (const char* name : {"segments.csv", "signals.csv"}) {
            fs::path p = fs::path(path) / name;
            if (fs::exists(p)) return p.string();
        }
        throw MissingArtifactError("no segments.csv or signals.csv under " + path);
    }
    if (!fs::exists(path)) throw MissingArtifactError("missing artifact: " + path);
    return path;
}

struct Standardization {
    double mean = 0.0;
    double scale = 1.0;
};

Standardization standardize_segments(std::vector<signal::DaySegment>& segments) {
    double sum = 0.0, sq = 0.0, n = 0.0;
    for (const auto& seg : segments)
        for (double v : seg.values) {
            sum += v;
            sq += v * v;
            n += 1.0;
        }
    Standardization st;
    if (n == 0.0) return st;
    st.mean = sum / n;
    double var = sq / n - st.mean * st.mean;
    st.scale = var > 0.0 ? std::sqrt(var) : 1.0;
    for (auto& seg : segments)
        for (double& v : seg.values) v = (v - st.mean) / st.scale;
    return st;
}

std::vector<eval::AtomKey> segment_keys(const std::vector<signal::DaySegment>& segments) {
    std::vector<eval::AtomKey> keys;
    keys.reserve(segments.size());
    for (const auto& seg : segments) keys.push_back({seg.patient_id, seg.day_index});
    return keys;
}

bool maybe_print_config(bool print_config, const std::string& normalized) {
    if (print_config) std::cout << normalized << "\n";
    return print_config;
}

// ---------------------------------------------------------------------------
// preprocess
// ---------------------------------------------------------------------------

struct PreprocessArgs {
    std::string input;
    std::string output;
    double max_gap_minutes = 30.0;
    int sample_period = 300;
    double value_min = 40.0;
    double value_max = 400.0;
    std::string format = "auto";
    bool print_config = false;
};

int cmd_preprocess(const PreprocessArgs& a) {
    json cfg;
    cfg["command"] = "preprocess";
    cfg["input"] = a.input;
    cfg["max_gap_minutes"] = a.max_gap_minutes;
    cfg["sample_period"] = a.sample_period;
    cfg["value_min"] = a.value_min;
    cfg["value_max"] = a.value_max;
    cfg["format"] = a.format;
    std::string normalized = cfg.dump();
    if (maybe_print_config(a.print_config, normalized)) return 0;

    if (!fs::exists(a.input)) throw ValidationError("missing input file: " + a.input);

    signal::LoadOptions opts;
    opts.sample_period = a.sample_period;
    opts.value_min = a.value_min;
    opts.value_max = a.value_max;
    opts.format = a.format;
    auto signals = signal::load_signals(a.input, opts);

    std::vector<signal::DaySegment> segments;
    std::vector<signal::DayReport> report;
    std::set<eval::AtomKey> seen;
    for (const auto& s : signals) {
        auto interp = signal::interpolate_gaps(s);
        auto res = signal::segment_days(interp, static_cast<int>(a.max_gap_minutes * 60.0));
        for (auto& seg : res.segments) {
            if (!seen.insert({seg.patient_id, seg.day_index}).second) continue;  // first session wins
            segments.push_back(std::move(seg));
        }
        report.insert(report.end(), res.report.begin(), res.report.end());
    }
    std::sort(segments.begin(), segments.end(),
              [](const signal::DaySegment& x, const signal::DaySegment& y) {
                  return std::tie(x.patient_id, x.day_index) < std::tie(y.patient_id, y.day_index);
              });
    std::sort(report.begin(), report.end(),
              [](const signal::DayReport& x, const signal::DayReport& y) {
                  return std::tie(x.patient_id, x.day_index) < std::tie(y.patient_id, y.day_index);
              });

    std::string out = resolve_output_dir(a.output, "preprocess", normalized);
    begin_output(out, "preprocess", normalized);
    io::write_segments_csv(out + "/segments.csv", segments);
    io::write_exclusion_report(out + "/exclusions.csv", report);

    std::size_t kept = segments.size();
    std::cout << "preprocess: " << kept << " of " << report.size() << " days kept -> " << out
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// discover
// ---------------------------------------------------------------------------

struct DiscoverArgs {
    std::string method;
    std::string segments;
    std::string output;
    std::uint64_t seed = 0;
    int threads = 1;
    // mixture models
    int n_motifs = 20;
    int motif_len = 8;
    int context_len = 72;
    int n_contexts = 2;
    int n_samples = 2000;
    int burn_in = 1000;
    double alpha_floor = -1.0;  // <0: default 1/(2 n_c)
    int subset_days = 0;        // 0: fit on everything
    bool standardize = true;
    // derived discovery
    std::vector<int> lengths{8, 12, 16};
    int min_support = 10;
    double radius = 1.0;
    int alphabet = 5;
    int paa = 2;
    int hamming_merge = 1;
    // two-stage contexts
    int expert_k = 6;
    double expert_tau = 10.0;
    int expert_dilation = 6;
    int hmm_states = 2;
    bool print_config = false;
};

json discover_config_json(const DiscoverArgs& a) {
    json cfg;
    cfg["command"] = "discover";
    cfg["method"] = a.method;
    cfg["segments"] = a.segments;
    cfg["seed"] = a.seed;
    if (a.method == "mmm" || a.method == "cmmm" || a.method == "two-stage-topic") {
        cfg["n_motifs"] = a.n_motifs;
        cfg["motif_len"] = a.motif_len;
        cfg["standardize"] = a.standardize;
    }
    if (a.method == "cmmm" || a.method == "two-stage-topic") {
        cfg["context_len"] = a.context_len;
        cfg["n_contexts"] = a.n_contexts;
    }
    if (a.method == "cmmm") {
        cfg["n_samples"] = a.n_samples;
        cfg["burn_in"] = a.burn_in;
        cfg["alpha_floor"] = a.alpha_floor;
        cfg["subset_days"] = a.subset_days;
    }
    if (a.method == "derived" || a.method.rfind("two-stage-", 0) == 0) {
        if (a.method != "two-stage-topic") {
            cfg["lengths"] = a.lengths;
            cfg["min_support"] = a.min_support;
            cfg["radius"] = a.radius;
            cfg["alphabet"] = a.alphabet;
            cfg["paa"] = a.paa;
            cfg["hamming_merge"] = a.hamming_merge;
        }
    }
    if (a.method == "two-stage-expert") {
        cfg["expert_k"] = a.expert_k;
        cfg["expert_tau"] = a.expert_tau;
        cfg["expert_dilation"] = a.expert_dilation;
    }
    if (a.method == "two-stage-hmm") cfg["hmm_states"] = a.hmm_states;
    return cfg;
}

void write_derived_outputs(const std::string& out,
                           const std::vector<signal::DaySegment>& segments,
                           const std::vector<std::vector<int>>* context_labels,
                           const std::vector<derived::DerivedMotif>& motifs, double radius) {
    io::write_text_file(out + "/motifs.json", io::motifs_to_json(motifs));
    std::vector<std::vector<derived::Occurrence>> occurrences(segments.size());
    for (std::size_t si = 0; si < segments.size(); ++si) {
        for (const auto& motif : motifs) {
            auto occ = context_labels
                           ? derived::match_motif_in_context(motif, segments[si],
                                                             (*context_labels)[si], radius, si)
                           : derived::match_motif(motif, segments[si], radius, si);
            occurrences[si].insert(occurrences[si].end(), occ.begin(), occ.end());
        }
    }
    io::write_occurrences_csv(out + "/occurrences.csv", segment_keys(segments), occurrences,
                              motifs);
}

int cmd_discover(const DiscoverArgs& a) {
    static const std::set<std::string> kMethods{"derived",          "mmm",
                                                "cmmm",             "two-stage-expert",
                                                "two-stage-hmm",    "two-stage-topic"};
    if (!kMethods.count(a.method))
        throw ValidationError("unknown discover method '" + a.method +
                              "' (expected derived, mmm, cmmm, two-stage-expert, two-stage-hmm, "
                              "or two-stage-topic)");
    json cfg = discover_config_json(a);
    std::string normalized = cfg.dump();
    if (maybe_print_config(a.print_config, normalized)) return 0;

    auto segments = io::read_segments_csv(resolve_segments_file(a.segments));
    if (segments.empty()) throw ValidationError("no segments found in " + a.segments);
    auto keys = segment_keys(segments);

    std::string out = resolve_output_dir(a.output, "discover", normalized);
    begin_output(out, "discover " + a.method, normalized);

    derived::DiscoveryConfig dcfg;
    dcfg.lengths = a.lengths;
    dcfg.min_support = a.min_support;
    dcfg.radius = a.radius;
    dcfg.sax.alphabet_size = a.alphabet;
    dcfg.sax.paa_width = a.paa;
    dcfg.hamming_merge = a.hamming_merge;
    dcfg.threads = a.threads;

    if (a.method == "derived") {
        auto motifs = derived::discover_derived(segments, dcfg);
        write_derived_outputs(out, segments, nullptr, motifs, a.radius);
        std::cout << "discover derived: " << motifs.size() << " motifs -> " << out << "\n";
        return 0;
    }

    if (a.method == "two-stage-expert" || a.method == "two-stage-hmm") {
        std::vector<std::vector<int>> context_labels(segments.size());
        if (a.method == "two-stage-expert") {
            context::ExpertRule rule{a.expert_tau};
            for (std::size_t si = 0; si < segments.size(); ++si)
                context_labels[si] =
                    context::expert_context(segments[si], a.expert_k, rule, a.expert_dilation, si)
                        .labels;
        } else {
            auto hmm = context::hmm_fit(segments, a.hmm_states, a.seed);
            io::write_text_file(out + "/hmm_model.json", io::hmm_model_to_json(hmm));
            for (std::size_t si = 0; si < segments.size(); ++si)
                context_labels[si] = context::hmm_decode(hmm, segments[si], si).labels;
        }
        {
            std::ostringstream csv;
            csv << "segment_id,index,context\n";
            for (std::size_t si = 0; si < segments.size(); ++si)
                for (std::size_t t = 0; t < context_labels[si].size(); ++t)
                    csv << keys[si].first << '#' << keys[si].second << ',' << t << ','
                        << context_labels[si][t] << '\n';
            io::write_text_file(out + "/contexts.csv", csv.str());
        }
        int n_contexts = a.method == "two-stage-expert" ? 2 : a.hmm_states;
        auto motifs = derived::discover_in_context(segments, context_labels, n_contexts, dcfg);
        write_derived_outputs(out, segments, &context_labels, motifs, a.radius);
        std::cout << "discover " << a.method << ": " << motifs.size() << " motifs -> " << out
                  << "\n";
        return 0;
    }

    // Mixture-model methods operate in standardized units.
    Standardization st;
    if (a.standardize) st = standardize_segments(segments);
    {
        json sj;
        sj["mean"] = st.mean;
        sj["scale"] = st.scale;
        io::write_text_file(out + "/standardization.json", sj.dump(2) + "\n");
    }

    if (a.method == "mmm") {
        mmm::EmConfig em;
        em.threads = a.threads;
        auto model = mmm::fit_mmm(segments, a.n_motifs, a.motif_len, em, a.seed);
        io::write_text_file(out + "/model.json", io::mmm_model_to_json(model));
        io::LabeledSegments lab;
        lab.keys = keys;
        for (std::size_t si = 0; si < segments.size(); ++si)
            lab.motif_labels.push_back(mmm::assign_motifs(model, segments[si], si).labels);
        lab.context_labels.resize(segments.size());
        io::write_motif_labels_csv(out + "/labels_motifs.csv", lab);
        std::cout << "discover mmm: ll=" << model.final_log_likelihood << " after "
                  << model.iterations << " iterations -> " << out << "\n";
        return 0;
    }

    if (a.method == "two-stage-topic") {
        mmm::EmConfig em;
        em.threads = a.threads;
        auto model = mmm::fit_mmm(segments, a.n_motifs, a.motif_len, em, a.seed);
        io::write_text_file(out + "/model.json", io::mmm_model_to_json(model));
        std::vector<mmm::MotifLabeling> labelings;
        for (std::size_t si = 0; si < segments.size(); ++si)
            labelings.push_back(mmm::assign_motifs(model, segments[si], si));
        auto topic = context::motif_topic_context(labelings, a.n_motifs, a.motif_len,
                                                  a.context_len, a.n_contexts, a.seed);
        io::LabeledSegments lab;
        lab.keys = keys;
        for (std::size_t si = 0; si < segments.size(); ++si) {
            lab.motif_labels.push_back(labelings[si].labels);
            lab.context_labels.push_back(topic.contexts[si].labels);
        }
        io::write_motif_labels_csv(out + "/labels_motifs.csv", lab);
        io::write_context_labels_csv(out + "/labels_contexts.csv", lab);
        json gj;
        gj["gamma"] = topic.gamma;
        io::write_text_file(out + "/gamma.json", gj.dump(2) + "\n");
        std::cout << "discover two-stage-topic -> " << out << "\n";
        return 0;
    }

    // cmmm
    cmmm::ModelDims dims;
    dims.n_motifs = a.n_motifs;
    dims.motif_len = a.motif_len;
    dims.context_len = a.context_len;
    dims.n_contexts = a.n_contexts;
    dims.alpha_floor = a.alpha_floor >= 0.0 ? a.alpha_floor
                                            : cmmm::default_alpha_floor(a.n_contexts);
    dims.validate();

    std::vector<std::size_t> fit_indices(segments.size());
    std::iota(fit_indices.begin(), fit_indices.end(), 0);
    if (a.subset_days > 0 && static_cast<std::size_t>(a.subset_days) < segments.size()) {
        Rng rng = Rng(a.seed).derive(99);
        for (std::size_t i = fit_indices.size(); i-- > 1;)
            std::swap(fit_indices[i], fit_indices[rng.uniform_index(i + 1)]);
        fit_indices.resize(static_cast<std::size_t>(a.subset_days));
        std::sort(fit_indices.begin(), fit_indices.end());
    }
    std::vector<signal::DaySegment> fit_segments;
    for (std::size_t i : fit_indices) fit_segments.push_back(segments[i]);

    cmmm::FitConfig fcfg;
    fcfg.n_samples = a.n_samples;
    fcfg.burn_in = a.burn_in;
    fcfg.em.threads = a.threads;
    auto fit = cmmm::fit_cmmm(fit_segments, dims, fcfg, a.seed);
    io::write_text_file(out + "/model.json",
                        io::cmmm_model_to_json(fit.model, &fit.diagnostics));

    io::LabeledSegments lab;
    lab.keys = keys;
    lab.motif_labels.resize(segments.size());
    lab.context_labels.resize(segments.size());
    std::set<std::size_t> fitted(fit_indices.begin(), fit_indices.end());
    for (std::size_t fi = 0; fi < fit_indices.size(); ++fi) {
        lab.motif_labels[fit_indices[fi]] = fit.labelings[fi].motifs;
        lab.context_labels[fit_indices[fi]] = fit.labelings[fi].contexts;
    }
    for (std::size_t si = 0; si < segments.size(); ++si) {
        if (fitted.count(si)) continue;
        auto l = cmmm::assign_contextual(fit.model, segments[si], si);
        lab.motif_labels[si] = l.motifs;
        lab.context_labels[si] = l.contexts;
    }
    io::write_motif_labels_csv(out + "/labels_motifs.csv", lab);
    io::write_context_labels_csv(out + "/labels_contexts.csv", lab);

    {
        std::ostringstream trace;
        trace << "sweep,joint_log_prob\n";
        for (std::size_t i = 0; i < fit.diagnostics.joint_log_prob_trace.size(); ++i)
            trace << i << ',' << io::format_double(fit.diagnostics.joint_log_prob_trace[i])
                  << '\n';
        io::write_text_file(out + "/trace.csv", trace.str());

        json dj;
        dj["acceptance"] = {
            {"context", fit.diagnostics.context_kernel.rate()},
            {"motif", fit.diagnostics.motif_kernel.rate()},
            {"alpha", fit.diagnostics.alpha_kernel.rate()},
            {"gamma", fit.diagnostics.gamma_kernel.rate()},
            {"theta", fit.diagnostics.theta_kernel.rate()},
        };
        dj["post_burn_in_acceptance"] = {{"alpha", fit.diagnostics.post_burn_in_alpha_rate},
                                         {"gamma", fit.diagnostics.post_burn_in_gamma_rate},
                                         {"theta", fit.diagnostics.post_burn_in_theta_rate}};
        dj["tuning_warning"] = fit.diagnostics.tuning_warning;
        io::write_text_file(out + "/diagnostics.json", dj.dump(2) + "\n");
        if (fit.diagnostics.tuning_warning)
            std::cerr << "warning: a Gaussian-proposal kernel's post-burn-in acceptance rate "
                         "left (0.01, 0.99); consider retuning proposal scales\n";
    }
    std::cout << "discover cmmm: fitted on " << fit_segments.size() << " of " << segments.size()
              << " days -> " << out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
    int n_signals = 2000;
    double beta = 1.0;
    std::uint64_t seed = 0;
    std::string output;
    std::string model_path;
    int n_motifs = 20;
    int motif_len = 8;
    int context_len = 72;
    int n_contexts = 2;
    int windows_per_signal = 4;
    int threads = 1;
    bool print_config = false;
};

int cmd_simulate(const SimulateArgs& a) {
    json cfg;
    cfg["command"] = "simulate";
    cfg["n_signals"] = a.n_signals;
    cfg["beta"] = a.beta;
    cfg["seed"] = a.seed;
    cfg["model"] = a.model_path;
    cfg["n_motifs"] = a.n_motifs;
    cfg["motif_len"] = a.motif_len;
    cfg["context_len"] = a.context_len;
    cfg["n_contexts"] = a.n_contexts;
    cfg["windows_per_signal"] = a.windows_per_signal;
    std::string normalized = cfg.dump();
    if (maybe_print_config(a.print_config, normalized)) return 0;

    cmmm::CmmmModel model =
        a.model_path.empty()
            ? simgen::default_sim_model(a.n_motifs, a.motif_len, a.context_len, a.n_contexts,
                                        Rng(a.seed).derive(42).seed())
            : io::cmmm_model_from_json(io::read_text_file(a.model_path));

    auto sim = simgen::gen_sim_dataset(model, a.n_signals, a.windows_per_signal, a.beta, a.seed,
                                       a.threads);
    std::string out = resolve_output_dir(a.output, "simulate", normalized);
    begin_output(out, "simulate", normalized);
    io::write_sim_dataset(out, sim);
    std::cout << "simulate: " << a.n_signals << " signals at beta=" << a.beta << " -> " << out
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
    std::string config_path;
    std::string output;
    int splits_override = 0;
    std::int64_t seed_override = -1;
    int threads = 1;
    bool print_config = false;
};

struct MethodSpec {
    std::string name;
    std::string source;  // truth | labels | occurrences
    eval::Representation representation;
    std::string motifs_path;    // labels CSV for source=labels
    std::string contexts_path;  // contexts CSV for source=labels
    std::string model_path;     // model JSON giving dims
    std::string occurrences_path;
    std::string motif_set_path;  // motifs.json for occurrence sources
    int n_motif_ids = 0;
    int n_contexts_override = 0;
    int noise_cardinality = 0;
    int motif_len_override = 0;
    int context_len_override = 0;
};

MethodSpec parse_method(const json& j) {
    MethodSpec m;
    m.name = j.at("name").get<std::string>();
    m.source = j.at("source").get<std::string>();
    m.representation = eval::parse_representation(j.at("representation").get<std::string>());
    m.motifs_path = j.value("motifs", "");
    m.contexts_path = j.value("contexts", "");
    m.model_path = j.value("model", "");
    m.occurrences_path = j.value("occurrences", "");
    m.motif_set_path = j.value("motif_set", "");
    m.n_motif_ids = j.value("n_motif_ids", 0);
    m.n_contexts_override = j.value("n_contexts", 0);
    m.noise_cardinality = j.value("noise_cardinality", 0);
    m.motif_len_override = j.value("motif_len", 0);
    m.context_len_override = j.value("context_len", 0);
    if (m.source != "truth" && m.source != "labels" && m.source != "occurrences")
        throw ValidationError("method " + m.name + ": unknown source '" + m.source + "'");
    return m;
}

struct MethodAtoms {
    eval::AtomMap atoms;
    eval::RepresentationSpec spec;
};

MethodAtoms load_method_atoms(const MethodSpec& m, const io::SimArtifacts* sim) {
    MethodAtoms out;
    out.spec.kind = m.representation;
    out.spec.noise_cardinality = m.noise_cardinality;

    if (m.source == "truth") {
        if (!sim) throw ValidationError("method " + m.name +
                                        ": source=truth requires a simulation dataset");
        out.atoms = eval::make_atom_map(sim->motif_labels, &sim->context_labels, sim->keys,
                                        sim->motif_len, sim->context_len / sim->motif_len);
        out.spec.n_motif_ids = sim->n_motifs + 1;
        out.spec.n_contexts = sim->n_contexts;
        return out;
    }

    if (m.source == "labels") {
        if (m.motifs_path.empty())
            throw ValidationError("method " + m.name + ": source=labels requires 'motifs'");
        auto lab = io::read_labels(m.motifs_path, m.contexts_path);
        int motif_len = 0, context_len = 0, n_motifs = 0, n_contexts = 0;
        if (!m.model_path.empty()) {
            std::string text = io::read_text_file(m.model_path);
            json mj = json::parse(text);
            if (mj.value("kind", "") == "cmmm") {
                auto model = io::cmmm_model_from_json(text);
                motif_len = model.dims.motif_len;
                context_len = model.dims.context_len;
                n_motifs = model.dims.n_motifs;
                n_contexts = model.dims.n_contexts;
            } else {
                auto model = io::mmm_model_from_json(text);
                motif_len = model.motif_len;
                n_motifs = model.n_motifs;
            }
        }
        if (sim) {
            if (motif_len == 0) motif_len = sim->motif_len;
            if (context_len == 0) context_len = sim->context_len;
            if (n_motifs == 0) n_motifs = sim->n_motifs;
            if (n_contexts == 0) n_contexts = sim->n_contexts;
        }
        if (m.n_motif_ids > 0) n_motifs = m.n_motif_ids - 1;
        if (m.n_contexts_override > 0) n_contexts = m.n_contexts_override;
        if (m.motif_len_override > 0) motif_len = m.motif_len_override;
        if (m.context_len_override > 0) context_len = m.context_len_override;
        if (motif_len == 0)
            throw ValidationError("method " + m.name +
                                  ": cannot determine motif_len (give 'model')");
        bool has_contexts = !m.contexts_path.empty();
        if (has_contexts && context_len == 0)
            throw ValidationError("method " + m.name +
                                  ": cannot determine context_len (give 'model')");
        if (n_motifs == 0) {
            for (const auto& labels : lab.motif_labels)
                for (int z : labels) n_motifs = std::max(n_motifs, z);
        }
        if (n_contexts == 0) {
            for (const auto& labels : lab.context_labels)
                for (int c : labels) n_contexts = std::max(n_contexts, c + 1);
            n_contexts = std::max(n_contexts, 1);
        }
        out.atoms = eval::make_atom_map(lab.motif_labels,
                                        has_contexts ? &lab.context_labels : nullptr, lab.keys,
                                        motif_len, has_contexts ? context_len / motif_len : 1);
        out.spec.n_motif_ids = n_motifs + 1;
        out.spec.n_contexts = n_contexts;
        return out;
    }

    // occurrences
    if (m.occurrences_path.empty())
        throw ValidationError("method " + m.name + ": source=occurrences requires 'occurrences'");
    out.atoms = io::read_occurrences_csv(m.occurrences_path);
    int max_id = -1, max_ctx = -1;
    if (!m.motif_set_path.empty()) {
        auto motifs = io::motifs_from_json(io::read_text_file(m.motif_set_path));
        for (const auto& motif : motifs) {
            max_id = std::max(max_id, motif.id);
            if (motif.context_tag) max_ctx = std::max(max_ctx, *motif.context_tag);
        }
    } else {
        for (const auto& [key, atoms] : out.atoms)
            for (const auto& atom : atoms) {
                max_id = std::max(max_id, atom.motif);
                max_ctx = std::max(max_ctx, atom.context);
            }
    }
    out.spec.n_motif_ids = m.n_motif_ids > 0 ? m.n_motif_ids : max_id + 1;
    out.spec.n_contexts = m.n_contexts_override > 0 ? m.n_contexts_override
                                                    : std::max(max_ctx + 1, 1);
    if (out.spec.n_motif_ids < 1)
        throw ValidationError("method " + m.name + ": no motifs in " + m.occurrences_path);
    return out;
}

int cmd_evaluate(const EvaluateArgs& a) {
    std::string text = io::read_text_file(a.config_path);
    json cfg;
    if (a.config_path.size() >= 5 &&
        a.config_path.compare(a.config_path.size() - 5, 5, ".toml") == 0)
        cfg = toml_lite::parse(text);
    else
        cfg = json::parse(text);

    eval::ExperimentProtocol protocol;
    protocol.n_splits = cfg.value("n_splits", 100);
    protocol.test_fraction = cfg.value("test_fraction", 0.25);
    protocol.inner_folds = cfg.value("inner_folds", 3);
    protocol.seed = cfg.value("seed", std::uint64_t{0});
    if (cfg.contains("lambda_grid"))
        protocol.lambda_grid = cfg["lambda_grid"].get<std::vector<double>>();
    if (a.splits_override > 0) protocol.n_splits = a.splits_override;
    if (a.seed_override >= 0) protocol.seed = static_cast<std::uint64_t>(a.seed_override);
    protocol.threads = a.threads;

    json normalized_cfg = cfg;
    normalized_cfg["command"] = "evaluate";
    normalized_cfg["n_splits"] = protocol.n_splits;
    normalized_cfg["seed"] = protocol.seed;
    std::string normalized = normalized_cfg.dump();
    if (maybe_print_config(a.print_config, normalized)) return 0;

    if (!cfg.contains("datasets") || !cfg["datasets"].is_array() || cfg["datasets"].empty())
        throw ValidationError(a.config_path + ": config needs a non-empty 'datasets' array");

    std::vector<eval::TaskBundle> bundles;
    for (const auto& dj : cfg["datasets"]) {
        std::string name = dj.value("name", "dataset");
        std::string kind = dj.value("kind", "sim");

        if (kind == "sim") {
            io::SimArtifacts sim = io::read_sim_dataset(dj.at("dir").get<std::string>());
            double beta = dj.value("beta", sim.beta);
            std::vector<eval::TaskRow> rows;
            for (std::size_t i = 0; i < sim.keys.size(); ++i)
                rows.push_back({sim.keys[i].first, 0, std::numeric_limits<int>::max(),
                                sim.outcomes[i]});
            eval::TaskBundle bundle;
            bundle.task = name;
            bundle.beta = beta;
            for (const auto& mj : dj.at("methods")) {
                MethodSpec spec = parse_method(mj);
                auto ma = load_method_atoms(spec, &sim);
                bundle.methods.push_back(
                    {spec.name, eval::featurize(rows, ma.atoms, ma.spec, protocol.seed)});
            }
            bundles.push_back(std::move(bundle));
            continue;
        }

        if (kind != "tasks")
            throw ValidationError("dataset " + name + ": unknown kind '" + kind + "'");
        auto segments =
            io::read_segments_csv(resolve_segments_file(dj.at("segments").get<std::string>()));
        std::vector<std::string> tasks = dj.at("tasks").get<std::vector<std::string>>();
        for (const auto& task_name : tasks) {
            eval::TaskSpec task = eval::parse_task(task_name);
            if (dj.contains("event_thresholds")) {
                task.hypo_level = dj["event_thresholds"].value("hypo", task.hypo_level);
                task.hyper_level = dj["event_thresholds"].value("hyper", task.hyper_level);
            }
            auto rows = eval::make_task_rows(segments, task);
            if (dj.contains("recent_filter") && task.horizon == eval::Horizon::kShort) {
                auto filter_atoms = io::read_occurrences_csv(
                    dj["recent_filter"].at("occurrences").get<std::string>());
                int horizon = dj["recent_filter"].value("horizon", task.short_horizon);
                rows = eval::filter_rows_by_recent_atom(rows, filter_atoms, horizon);
            }
            if (rows.empty())
                throw ValidationError("dataset " + name + " task " + task_name +
                                      ": no rows (need consecutive days per patient)");
            eval::TaskBundle bundle;
            bundle.task = name + ":" + task_name;
            for (const auto& mj : dj.at("methods")) {
                MethodSpec spec = parse_method(mj);
                auto ma = load_method_atoms(spec, nullptr);
                bundle.methods.push_back(
                    {spec.name, eval::featurize(rows, ma.atoms, ma.spec, protocol.seed)});
            }
            bundles.push_back(std::move(bundle));
        }
    }

    auto table = eval::run_experiment(bundles, protocol);
    table.config_hash = io::config_hash(normalized);

    std::string out = resolve_output_dir(a.output, "evaluate", normalized);
    begin_output(out, "evaluate", normalized);
    io::write_results(out, table);

    std::cout << "method,task,beta,mean_auc,std_auc\n";
    for (const auto& c : table.cells)
        std::cout << c.method << ',' << c.task << ','
                  << (std::isnan(c.beta) ? std::string("-") : io::format_double(c.beta)) << ','
                  << io::format_double(c.mean_auc) << ',' << io::format_double(c.std_auc) << "\n";
    std::cout << "evaluate -> " << out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

struct ReportArgs {
    std::string dir;
    bool coverage = false;
    std::string segments;
    std::string occurrences;
    std::string task = "short_hypo";
    int horizon = 8;
};

int cmd_report(const ReportArgs& a) {
    if (a.coverage) {
        auto segments = io::read_segments_csv(resolve_segments_file(a.segments));
        auto atoms = io::read_occurrences_csv(a.occurrences);
        eval::TaskSpec task = eval::parse_task(a.task);
        auto rows = eval::make_task_rows(segments, task);
        double cov = eval::recent_atom_coverage(rows, atoms, a.horizon);
        std::cout << "rows," << rows.size() << "\n";
        std::cout << "recent_motif_coverage," << io::format_double(cov) << "\n";
        return 0;
    }

    fs::path results = fs::path(a.dir) / "results.json";
    fs::path exclusions = fs::path(a.dir) / "exclusions.csv";
    if (fs::exists(results)) {
        json j = json::parse(io::read_text_file(results.string()));
        std::cout << "method,task,beta,n_splits,mean_auc,std_auc\n";
        for (const auto& c : j.at("results")) {
            std::cout << c.at("method").get<std::string>() << ','
                      << c.at("task").get<std::string>() << ','
                      << (c.contains("beta") ? io::format_double(c["beta"].get<double>())
                                             : std::string("-"))
                      << ',' << c.at("n_splits").get<int>() << ','
                      << io::format_double(c.at("mean_auc").get<double>()) << ','
                      << io::format_double(c.at("std_auc").get<double>()) << "\n";
        }
        return 0;
    }
    if (fs::exists(exclusions)) {
        std::size_t kept = 0, total = 0;
        std::ifstream in(exclusions.string());
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            ++total;
            if (line.size() >= 2 && line.back() == '1') ++kept;
        }
        std::cout << "days_total," << total << "\n";
        std::cout << "days_kept," << kept << "\n";
        return 0;
    }
    throw MissingArtifactError("no results.json or exclusions.csv under " + a.dir);
}

}  // namespace

// ---------------------------------------------------------------------------
// run()
// ---------------------------------------------------------------------------

int run(const std::vector<std::string>& args) {
    CLI::App app{"motif-forge: contextual motif discovery and evaluation"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    int threads = 1;
    app.add_option("--seed", seed, "global rng seed")->capture_default_str();
    app.add_option("--threads", threads, "worker threads where contracts permit")
        ->capture_default_str();
    app.set_config("--config", "", "read options from a config file");

    PreprocessArgs pre;
    auto* p = app.add_subcommand("preprocess", "load, interpolate, and segment raw signals");
    p->add_option("--input", pre.input, "input CSV/JSON file")->required();
    p->add_option("--output", pre.output, "output directory");
    p->add_option("--max-gap-minutes", pre.max_gap_minutes)->capture_default_str();
    p->add_option("--sample-period", pre.sample_period)->capture_default_str();
    p->add_option("--value-min", pre.value_min)->capture_default_str();
    p->add_option("--value-max", pre.value_max)->capture_default_str();
    p->add_option("--format", pre.format, "csv, json, or auto")->capture_default_str();
    p->add_flag("--print-config", pre.print_config)->group("");

    DiscoverArgs dis;
    auto* d = app.add_subcommand("discover", "fit motif models / search for support motifs");
    d->add_option("method", dis.method,
                  "derived | mmm | cmmm | two-stage-expert | two-stage-hmm | two-stage-topic")
        ->required();
    d->add_option("--segments", dis.segments, "segments directory or CSV")->required();
    d->add_option("--output", dis.output, "output directory");
    d->add_option("--motifs", dis.n_motifs, "number of motifs M")->capture_default_str();
    d->add_option("--lm", dis.motif_len, "motif window length")->capture_default_str();
    d->add_option("--lc", dis.context_len, "context window length")->capture_default_str();
    d->add_option("--contexts", dis.n_contexts, "number of contexts")->capture_default_str();
    d->add_option("--samples", dis.n_samples, "MCMC samples")->capture_default_str();
    d->add_option("--burn-in", dis.burn_in, "burn-in sweeps")->capture_default_str();
    d->add_option("--alpha-floor", dis.alpha_floor, "context mass floor (default 1/(2 n_c))");
    d->add_option("--subset-days", dis.subset_days,
                  "fit the sampler on a random day subset, label the rest by MLE")
        ->capture_default_str();
    d->add_flag("--standardize,!--no-standardize", dis.standardize,
                "z-normalize the dataset before mixture fitting")
        ->capture_default_str();
    d->add_option("--lengths", dis.lengths, "motif length grid (derived)")
        ->delimiter(',')
        ->capture_default_str();
    d->add_option("--min-support", dis.min_support)->capture_default_str();
    d->add_option("--radius", dis.radius)->capture_default_str();
    d->add_option("--alphabet", dis.alphabet, "SAX alphabet size")->capture_default_str();
    d->add_option("--paa", dis.paa, "SAX paa width")->capture_default_str();
    d->add_option("--hamming-merge", dis.hamming_merge)->capture_default_str();
    d->add_option("--expert-k", dis.expert_k)->capture_default_str();
    d->add_option("--expert-tau", dis.expert_tau)->capture_default_str();
    d->add_option("--expert-dilation", dis.expert_dilation)->capture_default_str();
    d->add_option("--hmm-states", dis.hmm_states)->capture_default_str();
    d->add_flag("--print-config", dis.print_config)->group("");

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "generate a labeled dataset from a CMMM");
    s->add_option("--signals", sim.n_signals)->capture_default_str();
    s->add_option("--beta", sim.beta)->capture_default_str();
    s->add_option("--output", sim.output, "output directory");
    s->add_option("--model", sim.model_path, "ground-truth model JSON (default: built-in)");
    s->add_option("--motifs", sim.n_motifs)->capture_default_str();
    s->add_option("--lm", sim.motif_len)->capture_default_str();
    s->add_option("--lc", sim.context_len)->capture_default_str();
    s->add_option("--contexts", sim.n_contexts)->capture_default_str();
    s->add_option("--windows-per-signal", sim.windows_per_signal)->capture_default_str();
    s->add_flag("--print-config", sim.print_config)->group("");

    EvaluateArgs ev;
    auto* e = app.add_subcommand("evaluate", "run train/test experiments and report AUC");
    e->add_option("--config", ev.config_path, "experiment config (JSON or TOML)")->required();
    e->add_option("--output", ev.output, "output directory");
    e->add_option("--splits", ev.splits_override, "override n_splits");
    e->add_option("--eval-seed", ev.seed_override, "override the experiment seed");
    e->add_flag("--print-config", ev.print_config)->group("");

    ReportArgs rep;
    auto* r = app.add_subcommand("report", "summarize artifacts");
    r->add_option("dir", rep.dir, "artifact directory (results or preprocess output)");
    r->add_flag("--coverage", rep.coverage, "report recent-motif coverage for short-horizon rows");
    r->add_option("--segments", rep.segments, "segments for --coverage");
    r->add_option("--occurrences", rep.occurrences, "occurrences CSV for --coverage");
    r->add_option("--task", rep.task)->capture_default_str();
    r->add_option("--horizon-samples", rep.horizon)->capture_default_str();

    std::vector<const char*> argv;
    argv.push_back("motif-forge");
    for (const auto& arg : args) argv.push_back(arg.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& ex) {
        int code = app.exit(ex);
        return code == 0 ? 0 : 2;
    }

    try {
        pre.print_config |= false;
        sim.seed = seed;
        dis.seed = seed;
        dis.threads = threads;
        sim.threads = threads;
        ev.threads = threads;
        if (app.got_subcommand(p)) return cmd_preprocess(pre);
        if (app.got_subcommand(d)) return cmd_discover(dis);
        if (app.got_subcommand(s)) return cmd_simulate(sim);
        if (app.got_subcommand(e)) return cmd_evaluate(ev);
        if (app.got_subcommand(r)) return cmd_report(rep);
        return 2;
    } catch (const MissingArtifactError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 3;
    } catch (const ValidationError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 4;
    }
}

}  // namespace mforge::cli
