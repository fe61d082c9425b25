#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mforge/cmmm.hpp"
#include "mforge/context.hpp"
#include "mforge/derived.hpp"
#include "mforge/eval.hpp"
#include "mforge/mmm.hpp"
#include "mforge/signal.hpp"
#include "mforge/simgen.hpp"

// Plain-file persistence. All writers are deterministic: JSON keys are
// sorted, doubles use shortest round-trip formatting, and nothing
// time-dependent is emitted, so identical inputs yield identical bytes.
namespace mforge::io {

std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);  // MissingArtifactError if absent

// --- day segments -----------------------------------------------------------
// Long CSV: patient_id,day,index,value.
void write_segments_csv(const std::string& path, const std::vector<signal::DaySegment>& segments);
std::vector<signal::DaySegment> read_segments_csv(const std::string& path);

// Exclusion report CSV: patient_id,day,longest_gap_minutes,kept.
void write_exclusion_report(const std::string& path, const std::vector<signal::DayReport>& report);

// --- models -----------------------------------------------------------------
std::string mmm_model_to_json(const mmm::MotifModel& model);
mmm::MotifModel mmm_model_from_json(const std::string& text);

std::string cmmm_model_to_json(const cmmm::CmmmModel& model,
                               const cmmm::Diagnostics* diagnostics = nullptr);
cmmm::CmmmModel cmmm_model_from_json(const std::string& text);

std::string hmm_model_to_json(const context::HmmModel& model);
context::HmmModel hmm_model_from_json(const std::string& text);

std::string motifs_to_json(const std::vector<derived::DerivedMotif>& motifs);
std::vector<derived::DerivedMotif> motifs_from_json(const std::string& text);

// --- labelings --------------------------------------------------------------
// Motif labels CSV: patient_id,day,window,motif.
// Context labels CSV (spec schema): segment_id,index,context with
// segment_id = "<patient>#<day>".
struct LabeledSegments {
    std::vector<eval::AtomKey> keys;              // (patient, day) per segment
    std::vector<std::vector<int>> motif_labels;   // per motif window
    std::vector<std::vector<int>> context_labels; // per context window (may be empty)
};

void write_motif_labels_csv(const std::string& path, const LabeledSegments& data);
void write_context_labels_csv(const std::string& path, const LabeledSegments& data);
LabeledSegments read_labels(const std::string& motifs_path, const std::string& contexts_path);

// Occurrences CSV: patient_id,day,offset,length,motif_id,context_tag,distance.
void write_occurrences_csv(const std::string& path, const std::vector<eval::AtomKey>& keys,
                           const std::vector<std::vector<derived::Occurrence>>& per_segment,
                           const std::vector<derived::DerivedMotif>& motifs);
eval::AtomMap read_occurrences_csv(const std::string& path);

// --- simulation datasets ----------------------------------------------------
void write_sim_dataset(const std::string& dir, const simgen::SimDataset& sim);
struct SimArtifacts {
    std::vector<eval::AtomKey> keys;
    std::vector<std::vector<int>> motif_labels;
    std::vector<std::vector<int>> context_labels;
    std::vector<int> outcomes;
    int n_motifs = 0;
    int n_contexts = 0;
    int motif_len = 0;
    int context_len = 0;
    double beta = 0.0;
    std::uint64_t seed = 0;
};
SimArtifacts read_sim_dataset(const std::string& dir);

// --- results ----------------------------------------------------------------
void write_results(const std::string& dir, const eval::ResultsTable& table);

// --- manifests --------------------------------------------------------------
// Every output directory carries a manifest with the tool version and a hash
// of the normalized configuration; re-running with a different configuration
// into the same directory is refused.
std::string config_hash(const std::string& normalized_config);
void write_manifest(const std::string& dir, const std::string& command,
                    const std::string& normalized_config);
bool manifest_matches(const std::string& dir, const std::string& normalized_config,
                      bool* exists = nullptr);

extern const char* kToolVersion;

}  // namespace mforge::io
