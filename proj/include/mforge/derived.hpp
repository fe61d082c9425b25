#pragma once

#include <optional>
#include <vector>

#include "mforge/signal.hpp"

namespace mforge::derived {

struct SaxConfig {
    int alphabet_size = 5;
    int paa_width = 2;  // must divide every motif length
};

struct DerivedMotif {
    int id = 0;
    int length = 0;
    std::vector<double> representative;  // raw values of the medoid window
    std::vector<int> sax_word;
    int support = 0;  // de-overlapped approximate occurrences on the training set
    std::optional<int> context_tag;
};

struct Occurrence {
    int motif_id = 0;
    std::size_t segment_index = 0;
    int offset = 0;
    double distance = 0.0;
};

struct DiscoveryConfig {
    std::vector<int> lengths{8, 12, 16};
    int min_support = 10;
    double radius = 1.0;
    SaxConfig sax;
    int hamming_merge = 1;
    int threads = 1;
};

/// Support-motif discovery: stride-1 windows are SAX-bucketed, near-identical
/// buckets merged, and each sufficiently supported group is represented by
/// its medoid. Representatives within `radius` of an already emitted motif of
/// the same length are suppressed, greedily by descending support.
std::vector<DerivedMotif> discover_derived(const std::vector<signal::DaySegment>& segments,
                                           const DiscoveryConfig& cfg);

/// All non-overlapping offsets where the window is within `radius`
/// (z-normalized Euclidean) of the representative, greedy left-to-right.
std::vector<Occurrence> match_motif(const DerivedMotif& motif, const signal::DaySegment& segment,
                                    double radius, std::size_t segment_index = 0);

/// Runs discovery separately on the data inside each context (windows lying
/// wholly in one context span), tagging motifs with their context.
/// context_labels holds one per-sample label sequence per segment.
std::vector<DerivedMotif> discover_in_context(const std::vector<signal::DaySegment>& segments,
                                              const std::vector<std::vector<int>>& context_labels,
                                              int n_contexts, const DiscoveryConfig& cfg);

/// Occurrences of a context-tagged motif restricted to spans of its context.
std::vector<Occurrence> match_motif_in_context(const DerivedMotif& motif,
                                               const signal::DaySegment& segment,
                                               const std::vector<int>& context_labels,
                                               double radius, std::size_t segment_index = 0);

}  // namespace mforge::derived
