#include "mforge/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "mforge/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mforge::io {

const char* kToolVersion = "0.1.0";

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_text_file(const std::string& path, const std::string& content) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifactError("missing artifact: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError("malformed " + what + ": " + e.what());
    }
}

std::vector<std::string> split_line(const std::string& line, char sep = ',') {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

// Iterates a CSV file's data lines after checking the expected header.
void for_each_csv_row(const std::string& path, const std::string& header,
                      const std::function<void(const std::vector<std::string>&)>& fn) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("missing artifact: " + path);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            if (line != header)
                throw ValidationError(path + ": expected header '" + header + "'");
            first = false;
            continue;
        }
        fn(split_line(line));
    }
}

json matrix_to_json(const std::vector<std::vector<double>>& m) {
    json out = json::array();
    for (const auto& row : m) out.push_back(row);
    return out;
}

std::vector<std::vector<double>> matrix_from_json(const json& j) {
    std::vector<std::vector<double>> m;
    for (const auto& row : j) m.push_back(row.get<std::vector<double>>());
    return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Segments
// ---------------------------------------------------------------------------

void write_segments_csv(const std::string& path, const std::vector<signal::DaySegment>& segments) {
    std::ostringstream out;
    out << "patient_id,day,index,value\n";
    for (const auto& seg : segments)
        for (std::size_t i = 0; i < seg.values.size(); ++i)
            out << seg.patient_id << ',' << seg.day_index << ',' << i << ','
                << format_double(seg.values[i]) << '\n';
    write_text_file(path, out.str());
}

std::vector<signal::DaySegment> read_segments_csv(const std::string& path) {
    std::map<std::pair<std::string, std::int64_t>, std::vector<double>> acc;
    for_each_csv_row(path, "patient_id,day,index,value", [&](const std::vector<std::string>& f) {
        if (f.size() != 4) throw ValidationError(path + ": expected 4 fields per row");
        auto& values = acc[{f[0], std::stoll(f[1])}];
        std::size_t idx = std::stoul(f[2]);
        if (values.size() != idx)
            throw ValidationError(path + ": segment sample indices must be dense and ordered");
        values.push_back(std::stod(f[3]));
    });
    std::vector<signal::DaySegment> out;
    out.reserve(acc.size());
    for (auto& [key, values] : acc) {
        signal::DaySegment seg;
        seg.patient_id = key.first;
        seg.day_index = key.second;
        seg.values = std::move(values);
        out.push_back(std::move(seg));
    }
    return out;
}

void write_exclusion_report(const std::string& path,
                            const std::vector<signal::DayReport>& report) {
    std::ostringstream out;
    out << "patient_id,day,longest_gap_minutes,kept\n";
    for (const auto& r : report)
        out << r.patient_id << ',' << r.day_index << ',' << format_double(r.longest_gap_minutes)
            << ',' << (r.kept ? 1 : 0) << '\n';
    write_text_file(path, out.str());
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

std::string mmm_model_to_json(const mmm::MotifModel& model) {
    json j;
    j["kind"] = "mmm";
    j["n_motifs"] = model.n_motifs;
    j["motif_len"] = model.motif_len;
    j["gamma"] = model.gamma;
    j["means"] = matrix_to_json(model.means);
    j["variances"] = matrix_to_json(model.variances);
    j["background"] = {{"mean", model.background_mean}, {"variance", model.background_variance}};
    j["variance_floor"] = model.variance_floor;
    j["fit"] = {{"seed", model.seed},
                {"iterations", model.iterations},
                {"final_log_likelihood", model.final_log_likelihood}};
    return j.dump(2) + "\n";
}

mmm::MotifModel mmm_model_from_json(const std::string& text) {
    json j = parse_json(text, "MMM model JSON");
    mmm::MotifModel m;
    m.n_motifs = j.at("n_motifs").get<int>();
    m.motif_len = j.at("motif_len").get<int>();
    m.gamma = j.at("gamma").get<std::vector<double>>();
    m.means = matrix_from_json(j.at("means"));
    m.variances = matrix_from_json(j.at("variances"));
    m.background_mean = j.at("background").at("mean").get<double>();
    m.background_variance = j.at("background").at("variance").get<double>();
    m.variance_floor = j.value("variance_floor", 1e-4);
    if (j.contains("fit")) {
        m.seed = j["fit"].value("seed", std::uint64_t{0});
        m.iterations = j["fit"].value("iterations", 0);
        m.final_log_likelihood = j["fit"].value("final_log_likelihood", 0.0);
    }
    return m;
}

std::string cmmm_model_to_json(const cmmm::CmmmModel& model,
                               const cmmm::Diagnostics* diagnostics) {
    json j;
    j["kind"] = "cmmm";
    if (diagnostics) {
        j["diagnostics"] = {
            {"acceptance",
             {{"context", diagnostics->context_kernel.rate()},
              {"motif", diagnostics->motif_kernel.rate()},
              {"alpha", diagnostics->alpha_kernel.rate()},
              {"gamma", diagnostics->gamma_kernel.rate()},
              {"theta", diagnostics->theta_kernel.rate()},
              {"swap", diagnostics->swap_kernel.rate()}}},
            {"post_burn_in_acceptance",
             {{"alpha", diagnostics->post_burn_in_alpha_rate},
              {"gamma", diagnostics->post_burn_in_gamma_rate},
              {"theta", diagnostics->post_burn_in_theta_rate}}},
            {"tuning_warning", diagnostics->tuning_warning}};
    }
    j["dims"] = {{"n_contexts", model.dims.n_contexts},
                 {"n_motifs", model.dims.n_motifs},
                 {"motif_len", model.dims.motif_len},
                 {"context_len", model.dims.context_len},
                 {"alpha_floor", model.dims.alpha_floor},
                 {"variance_floor", model.dims.variance_floor}};
    j["priors"] = {{"dirichlet_alpha", model.dims.priors.dirichlet_alpha},
                   {"dirichlet_gamma", model.dims.priors.dirichlet_gamma},
                   {"mean_loc", model.dims.priors.mean_loc},
                   {"mean_scale2", model.dims.priors.mean_scale2},
                   {"var_shape", model.dims.priors.var_shape},
                   {"var_scale", model.dims.priors.var_scale}};
    j["alpha"] = model.alpha;
    j["gamma"] = matrix_to_json(model.Gamma);
    j["means"] = matrix_to_json(model.means);
    j["variances"] = matrix_to_json(model.variances);
    j["background"] = {{"mean", model.background_mean}, {"variance", model.background_variance}};
    j["fit"] = {{"seed", model.seed}, {"n_samples", model.n_samples}, {"burn_in", model.burn_in}};
    return j.dump(2) + "\n";
}

cmmm::CmmmModel cmmm_model_from_json(const std::string& text) {
    json j = parse_json(text, "CMMM model JSON");
    cmmm::CmmmModel m;
    const json& d = j.at("dims");
    m.dims.n_contexts = d.at("n_contexts").get<int>();
    m.dims.n_motifs = d.at("n_motifs").get<int>();
    m.dims.motif_len = d.at("motif_len").get<int>();
    m.dims.context_len = d.at("context_len").get<int>();
    m.dims.alpha_floor = d.at("alpha_floor").get<double>();
    m.dims.variance_floor = d.at("variance_floor").get<double>();
    if (j.contains("priors")) {
        const json& p = j["priors"];
        m.dims.priors.dirichlet_alpha = p.value("dirichlet_alpha", 1.0);
        m.dims.priors.dirichlet_gamma = p.value("dirichlet_gamma", 1.0);
        m.dims.priors.mean_loc = p.value("mean_loc", 0.0);
        m.dims.priors.mean_scale2 = p.value("mean_scale2", 100.0);
        m.dims.priors.var_shape = p.value("var_shape", 2.0);
        m.dims.priors.var_scale = p.value("var_scale", 1.0);
    }
    m.alpha = j.at("alpha").get<std::vector<double>>();
    m.Gamma = matrix_from_json(j.at("gamma"));
    m.means = matrix_from_json(j.at("means"));
    m.variances = matrix_from_json(j.at("variances"));
    m.background_mean = j.at("background").at("mean").get<double>();
    m.background_variance = j.at("background").at("variance").get<double>();
    if (j.contains("fit")) {
        m.seed = j["fit"].value("seed", std::uint64_t{0});
        m.n_samples = j["fit"].value("n_samples", 0);
        m.burn_in = j["fit"].value("burn_in", 0);
    }
    m.dims.validate();
    return m;
}

std::string hmm_model_to_json(const context::HmmModel& model) {
    json j;
    j["kind"] = "hmm";
    j["n_states"] = model.n_states;
    j["initial"] = model.initial;
    j["transition"] = matrix_to_json(model.transition);
    json em = json::array(), ev = json::array();
    for (int s = 0; s < model.n_states; ++s) {
        em.push_back({model.emission_mean[s][0], model.emission_mean[s][1]});
        ev.push_back({model.emission_var[s][0], model.emission_var[s][1]});
    }
    j["emission_mean"] = em;
    j["emission_var"] = ev;
    j["feature_mean"] = {model.feature_mean[0], model.feature_mean[1]};
    j["feature_scale"] = {model.feature_scale[0], model.feature_scale[1]};
    j["fit"] = {{"seed", model.seed},
                {"iterations", model.iterations},
                {"final_log_likelihood", model.final_log_likelihood}};
    return j.dump(2) + "\n";
}

context::HmmModel hmm_model_from_json(const std::string& text) {
    json j = parse_json(text, "HMM model JSON");
    context::HmmModel m;
    m.n_states = j.at("n_states").get<int>();
    m.initial = j.at("initial").get<std::vector<double>>();
    m.transition = matrix_from_json(j.at("transition"));
    for (const auto& row : j.at("emission_mean"))
        m.emission_mean.push_back({row[0].get<double>(), row[1].get<double>()});
    for (const auto& row : j.at("emission_var"))
        m.emission_var.push_back({row[0].get<double>(), row[1].get<double>()});
    m.feature_mean = {j.at("feature_mean")[0].get<double>(),
                      j.at("feature_mean")[1].get<double>()};
    m.feature_scale = {j.at("feature_scale")[0].get<double>(),
                       j.at("feature_scale")[1].get<double>()};
    return m;
}

std::string motifs_to_json(const std::vector<derived::DerivedMotif>& motifs) {
    json arr = json::array();
    for (const auto& m : motifs) {
        json j;
        j["id"] = m.id;
        j["length"] = m.length;
        j["representative"] = m.representative;
        j["sax_word"] = m.sax_word;
        j["support"] = m.support;
        if (m.context_tag)
            j["context_tag"] = *m.context_tag;
        else
            j["context_tag"] = nullptr;
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
}

std::vector<derived::DerivedMotif> motifs_from_json(const std::string& text) {
    json arr = parse_json(text, "motif set JSON");
    std::vector<derived::DerivedMotif> out;
    for (const auto& j : arr) {
        derived::DerivedMotif m;
        m.id = j.at("id").get<int>();
        m.length = j.at("length").get<int>();
        m.representative = j.at("representative").get<std::vector<double>>();
        m.sax_word = j.at("sax_word").get<std::vector<int>>();
        m.support = j.at("support").get<int>();
        if (j.contains("context_tag") && !j["context_tag"].is_null())
            m.context_tag = j["context_tag"].get<int>();
        out.push_back(std::move(m));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Labelings
// ---------------------------------------------------------------------------

void write_motif_labels_csv(const std::string& path, const LabeledSegments& data) {
    std::ostringstream out;
    out << "patient_id,day,window,motif\n";
    for (std::size_t si = 0; si < data.keys.size(); ++si)
        for (std::size_t w = 0; w < data.motif_labels[si].size(); ++w)
            out << data.keys[si].first << ',' << data.keys[si].second << ',' << w << ','
                << data.motif_labels[si][w] << '\n';
    write_text_file(path, out.str());
}

void write_context_labels_csv(const std::string& path, const LabeledSegments& data) {
    std::ostringstream out;
    out << "segment_id,index,context\n";
    for (std::size_t si = 0; si < data.keys.size(); ++si)
        for (std::size_t w = 0; w < data.context_labels[si].size(); ++w)
            out << data.keys[si].first << '#' << data.keys[si].second << ',' << w << ','
                << data.context_labels[si][w] << '\n';
    write_text_file(path, out.str());
}

LabeledSegments read_labels(const std::string& motifs_path, const std::string& contexts_path) {
    LabeledSegments out;
    std::map<eval::AtomKey, std::size_t> index_of;
    for_each_csv_row(motifs_path, "patient_id,day,window,motif",
                     [&](const std::vector<std::string>& f) {
                         if (f.size() != 4)
                             throw ValidationError(motifs_path + ": expected 4 fields per row");
                         eval::AtomKey key{f[0], std::stoll(f[1])};
                         auto [it, inserted] = index_of.try_emplace(key, out.keys.size());
                         if (inserted) {
                             out.keys.push_back(key);
                             out.motif_labels.emplace_back();
                         }
                         auto& labels = out.motif_labels[it->second];
                         if (labels.size() != std::stoul(f[2]))
                             throw ValidationError(motifs_path +
                                                   ": window indices must be dense and ordered");
                         labels.push_back(std::stoi(f[3]));
                     });
    out.context_labels.resize(out.keys.size());
    if (!contexts_path.empty()) {
        for_each_csv_row(
            contexts_path, "segment_id,index,context", [&](const std::vector<std::string>& f) {
                if (f.size() != 3)
                    throw ValidationError(contexts_path + ": expected 3 fields per row");
                auto hash_pos = f[0].rfind('#');
                if (hash_pos == std::string::npos)
                    throw ValidationError(contexts_path + ": segment_id must be patient#day");
                eval::AtomKey key{f[0].substr(0, hash_pos), std::stoll(f[0].substr(hash_pos + 1))};
                auto it = index_of.find(key);
                if (it == index_of.end())
                    throw ValidationError(contexts_path + ": segment " + f[0] +
                                          " has contexts but no motif labels");
                auto& labels = out.context_labels[it->second];
                if (labels.size() != std::stoul(f[1]))
                    throw ValidationError(contexts_path +
                                          ": window indices must be dense and ordered");
                labels.push_back(std::stoi(f[2]));
            });
    }
    return out;
}

void write_occurrences_csv(const std::string& path, const std::vector<eval::AtomKey>& keys,
                           const std::vector<std::vector<derived::Occurrence>>& per_segment,
                           const std::vector<derived::DerivedMotif>& motifs) {
    std::ostringstream out;
    out << "patient_id,day,offset,length,motif_id,context_tag,distance\n";
    for (std::size_t si = 0; si < keys.size(); ++si)
        for (const auto& occ : per_segment[si]) {
            const auto& motif = motifs[static_cast<std::size_t>(occ.motif_id)];
            out << keys[si].first << ',' << keys[si].second << ',' << occ.offset << ','
                << motif.length << ',' << occ.motif_id << ','
                << (motif.context_tag ? std::to_string(*motif.context_tag) : std::string()) << ','
                << format_double(occ.distance) << '\n';
        }
    write_text_file(path, out.str());
}

eval::AtomMap read_occurrences_csv(const std::string& path) {
    eval::AtomMap atoms;
    for_each_csv_row(path, "patient_id,day,offset,length,motif_id,context_tag,distance",
                     [&](const std::vector<std::string>& f) {
                         if (f.size() != 7)
                             throw ValidationError(path + ": expected 7 fields per row");
                         eval::Atom a;
                         a.motif = std::stoi(f[4]);
                         a.context = f[5].empty() ? -1 : std::stoi(f[5]);
                         a.end_sample = std::stoi(f[2]) + std::stoi(f[3]);
                         atoms[{f[0], std::stoll(f[1])}].push_back(a);
                     });
    return atoms;
}

// ---------------------------------------------------------------------------
// Simulation datasets
// ---------------------------------------------------------------------------

void write_sim_dataset(const std::string& dir, const simgen::SimDataset& sim) {
    fs::create_directories(dir);
    const auto& dims = sim.true_model.dims;

    {
        std::ostringstream out;
        out << "patient_id,day,index,value\n";
        for (std::size_t i = 0; i < sim.signals.size(); ++i) {
            std::string pid = simgen::SimDataset::signal_patient_id(i);
            for (std::size_t k = 0; k < sim.signals[i].size(); ++k)
                out << pid << ",0," << k << ',' << format_double(sim.signals[i][k]) << '\n';
        }
        write_text_file(dir + "/signals.csv", out.str());
    }
    {
        std::ostringstream out;
        out << "patient_id,kind,index,label\n";
        for (std::size_t i = 0; i < sim.truth.size(); ++i) {
            std::string pid = simgen::SimDataset::signal_patient_id(i);
            for (std::size_t w = 0; w < sim.truth[i].contexts.size(); ++w)
                out << pid << ",context," << w << ',' << sim.truth[i].contexts[w] << '\n';
            for (std::size_t w = 0; w < sim.truth[i].motifs.size(); ++w)
                out << pid << ",motif," << w << ',' << sim.truth[i].motifs[w] << '\n';
        }
        write_text_file(dir + "/truth.csv", out.str());
    }
    {
        std::ostringstream out;
        out << "motif,context,v\n";
        for (std::size_t m = 0; m < sim.values.size(); ++m)
            for (std::size_t c = 0; c < sim.values[m].size(); ++c)
                out << m << ',' << c << ',' << format_double(sim.values[m][c]) << '\n';
        write_text_file(dir + "/v.csv", out.str());
    }
    {
        std::ostringstream out;
        out << "patient_id,score,probability,outcome\n";
        for (std::size_t i = 0; i < sim.outcomes.size(); ++i)
            out << simgen::SimDataset::signal_patient_id(i) << ',' << format_double(sim.scores[i])
                << ',' << format_double(sim.probabilities[i]) << ',' << sim.outcomes[i] << '\n';
        write_text_file(dir + "/outcomes.csv", out.str());
    }
    {
        json j;
        j["kind"] = "sim_dataset";
        j["seed"] = sim.seed;
        j["beta"] = sim.beta;
        j["n_signals"] = sim.signals.size();
        j["dims"] = {{"n_contexts", dims.n_contexts},
                     {"n_motifs", dims.n_motifs},
                     {"motif_len", dims.motif_len},
                     {"context_len", dims.context_len}};
        write_text_file(dir + "/dataset.json", j.dump(2) + "\n");
    }
    write_text_file(dir + "/model.json", cmmm_model_to_json(sim.true_model));
}

SimArtifacts read_sim_dataset(const std::string& dir) {
    SimArtifacts art;
    json j = parse_json(read_text_file(dir + "/dataset.json"), "simulation dataset JSON");
    art.beta = j.at("beta").get<double>();
    art.seed = j.at("seed").get<std::uint64_t>();
    art.n_motifs = j.at("dims").at("n_motifs").get<int>();
    art.n_contexts = j.at("dims").at("n_contexts").get<int>();
    art.motif_len = j.at("dims").at("motif_len").get<int>();
    art.context_len = j.at("dims").at("context_len").get<int>();

    std::map<std::string, std::size_t> index_of;
    for_each_csv_row(dir + "/truth.csv", "patient_id,kind,index,label",
                     [&](const std::vector<std::string>& f) {
                         if (f.size() != 4)
                             throw ValidationError("truth.csv: expected 4 fields per row");
                         auto [it, inserted] = index_of.try_emplace(f[0], art.keys.size());
                         if (inserted) {
                             art.keys.push_back({f[0], 0});
                             art.motif_labels.emplace_back();
                             art.context_labels.emplace_back();
                         }
                         auto& dst = f[1] == "motif" ? art.motif_labels[it->second]
                                                     : art.context_labels[it->second];
                         if (dst.size() != std::stoul(f[2]))
                             throw ValidationError(
                                 "truth.csv: label indices must be dense and ordered");
                         dst.push_back(std::stoi(f[3]));
                     });

    art.outcomes.assign(art.keys.size(), 0);
    for_each_csv_row(dir + "/outcomes.csv", "patient_id,score,probability,outcome",
                     [&](const std::vector<std::string>& f) {
                         if (f.size() != 4)
                             throw ValidationError("outcomes.csv: expected 4 fields per row");
                         auto it = index_of.find(f[0]);
                         if (it == index_of.end())
                             throw ValidationError("outcomes.csv: unknown signal " + f[0]);
                         art.outcomes[it->second] = std::stoi(f[3]);
                     });
    return art;
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

void write_results(const std::string& dir, const eval::ResultsTable& table) {
    fs::create_directories(dir);
    {
        std::ostringstream out;
        out << "method,task,beta,n_splits,mean_auc,std_auc\n";
        for (const auto& c : table.cells)
            out << c.method << ',' << c.task << ','
                << (std::isnan(c.beta) ? std::string() : format_double(c.beta)) << ','
                << c.n_splits << ',' << format_double(c.mean_auc) << ','
                << format_double(c.std_auc) << '\n';
        write_text_file(dir + "/results.csv", out.str());
    }
    {
        // Beta-sweep plotting file (rows tagged with a beta only).
        std::ostringstream out;
        out << "method,beta,mean_auc,std_auc\n";
        for (const auto& c : table.cells) {
            if (std::isnan(c.beta)) continue;
            out << c.method << ',' << format_double(c.beta) << ',' << format_double(c.mean_auc)
                << ',' << format_double(c.std_auc) << '\n';
        }
        write_text_file(dir + "/sweep.csv", out.str());
    }
    {
        std::ostringstream out;
        out << "method,task,beta,split,auc\n";
        for (const auto& c : table.cells)
            for (std::size_t s = 0; s < c.per_split_auc.size(); ++s)
                out << c.method << ',' << c.task << ','
                    << (std::isnan(c.beta) ? std::string() : format_double(c.beta)) << ',' << s
                    << ',' << format_double(c.per_split_auc[s]) << '\n';
        write_text_file(dir + "/splits.csv", out.str());
    }
    {
        json arr = json::array();
        for (const auto& c : table.cells) {
            json j;
            j["method"] = c.method;
            j["task"] = c.task;
            if (!std::isnan(c.beta)) j["beta"] = c.beta;
            j["n_splits"] = c.n_splits;
            j["mean_auc"] = c.mean_auc;
            j["std_auc"] = c.std_auc;
            j["per_split_auc"] = c.per_split_auc;
            arr.push_back(std::move(j));
        }
        json root;
        root["results"] = std::move(arr);
        root["seed"] = table.seed;
        root["config_hash"] = table.config_hash;
        write_text_file(dir + "/results.json", root.dump(2) + "\n");
    }
}

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

std::string config_hash(const std::string& normalized_config) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : normalized_config) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_manifest(const std::string& dir, const std::string& command,
                    const std::string& normalized_config) {
    json j;
    j["tool"] = "motif-forge";
    j["version"] = kToolVersion;
    j["command"] = command;
    j["config_hash"] = config_hash(normalized_config);
    j["config"] = json::parse(normalized_config);
    write_text_file(dir + "/manifest.json", j.dump(2) + "\n");
}

bool manifest_matches(const std::string& dir, const std::string& normalized_config,
                      bool* exists) {
    fs::path p = fs::path(dir) / "manifest.json";
    if (!fs::exists(p)) {
        if (exists) *exists = false;
        return true;
    }
    if (exists) *exists = true;
    json j = parse_json(read_text_file(p.string()), "manifest");
    return j.value("config_hash", std::string()) == config_hash(normalized_config);
}

}  // namespace mforge::io
