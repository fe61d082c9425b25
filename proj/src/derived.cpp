#include "mforge/derived.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "mforge/errors.hpp"
#include "mforge/numerics.hpp"
#include "mforge/parallel.hpp"

namespace mforge::derived {

namespace {

struct Candidate {
    std::size_t segment_index;
    int offset;
    std::vector<double> znorm;  // z-normalized window values
};

int hamming(const std::vector<int>& a, const std::vector<int>& b) {
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] != b[i]);
    return d;
}

// Offsets within `radius` of the representative, greedy left-to-right
// de-overlap, restricted to the allowed offset set (empty = all).
std::vector<Occurrence> match_offsets(const std::vector<double>& representative, int motif_id,
                                      const signal::DaySegment& segment, double radius,
                                      std::size_t segment_index,
                                      const std::vector<char>* allowed) {
    const int len = static_cast<int>(representative.size());
    const int t = static_cast<int>(segment.values.size());
    std::vector<Occurrence> out;
    if (len > t) return out;
    std::vector<double> zrep = znormalize(representative);
    int next_free = 0;
    for (int off = 0; off + len <= t; ++off) {
        if (off < next_free) continue;
        if (allowed && !(*allowed)[static_cast<std::size_t>(off)]) continue;
        std::vector<double> win(segment.values.begin() + off, segment.values.begin() + off + len);
        std::vector<double> zwin = znormalize(win);
        double dist = std::sqrt(squared_distance(zwin, zrep));
        if (dist <= radius) {
            out.push_back({motif_id, segment_index, off, dist});
            next_free = off + len;
        }
    }
    return out;
}

// Allowed-offset mask for windows of `len` lying wholly inside spans of
// context `ctx` (nullptr context = everything allowed).
std::vector<char> context_mask(const signal::DaySegment& segment, int len,
                               const std::vector<int>* labels, int ctx) {
    const int t = static_cast<int>(segment.values.size());
    std::vector<char> mask(static_cast<std::size_t>(std::max(0, t - len + 1)), 1);
    if (!labels) return mask;
    for (int off = 0; off + len <= t; ++off) {
        bool inside = true;
        for (int k = 0; k < len && inside; ++k)
            inside = (*labels)[static_cast<std::size_t>(off + k)] == ctx;
        mask[static_cast<std::size_t>(off)] = inside ? 1 : 0;
    }
    return mask;
}

// Core per-length, per-context discovery over a fixed candidate set.
std::vector<DerivedMotif> discover_length(const std::vector<signal::DaySegment>& segments,
                                          const std::vector<std::vector<int>>* context_labels,
                                          int ctx, int len, const DiscoveryConfig& cfg) {
    if (len % cfg.sax.paa_width != 0)
        throw ValidationError("motif length " + std::to_string(len) +
                              " not divisible by SAX paa width " +
                              std::to_string(cfg.sax.paa_width));

    // Collect stride-1 candidate windows and bucket them by SAX word.
    std::vector<Candidate> candidates;
    std::map<std::vector<int>, std::vector<std::size_t>> buckets;
    std::vector<std::vector<char>> masks(segments.size());
    for (std::size_t si = 0; si < segments.size(); ++si) {
        const auto& seg = segments[si];
        masks[si] = context_mask(seg, len, context_labels ? &(*context_labels)[si] : nullptr, ctx);
        const int t = static_cast<int>(seg.values.size());
        for (int off = 0; off + len <= t; ++off) {
            if (!masks[si][static_cast<std::size_t>(off)]) continue;
            std::vector<double> win(seg.values.begin() + off, seg.values.begin() + off + len);
            auto word = signal::sax_encode(win, cfg.sax.alphabet_size, cfg.sax.paa_width);
            Candidate c{si, off, znormalize(win)};
            candidates.push_back(std::move(c));
            buckets[word.symbols].push_back(candidates.size() - 1);
        }
    }
    if (candidates.empty()) return {};

    // Merge each seed bucket with the unconsumed buckets whose words differ
    // from the seed's in <= hamming_merge symbols. Seeds are taken largest
    // first; no transitive chaining, which would percolate across unrelated
    // words on noisy data.
    std::vector<const std::vector<int>*> words;
    std::vector<const std::vector<std::size_t>*> members;
    for (const auto& [word, idx] : buckets) {
        words.push_back(&word);
        members.push_back(&idx);
    }
    std::vector<std::size_t> seed_order(words.size());
    std::iota(seed_order.begin(), seed_order.end(), 0);
    std::sort(seed_order.begin(), seed_order.end(), [&](std::size_t a, std::size_t b) {
        if (members[a]->size() != members[b]->size())
            return members[a]->size() > members[b]->size();
        return *words[a] < *words[b];
    });
    std::vector<char> consumed(words.size(), 0);
    std::vector<std::vector<std::size_t>> groups;  // candidate indices per group
    for (std::size_t seed : seed_order) {
        if (consumed[seed]) continue;
        std::vector<std::size_t> group(members[seed]->begin(), members[seed]->end());
        consumed[seed] = 1;
        for (std::size_t other = 0; other < words.size(); ++other) {
            if (consumed[other]) continue;
            if (hamming(*words[seed], *words[other]) <= cfg.hamming_merge) {
                group.insert(group.end(), members[other]->begin(), members[other]->end());
                consumed[other] = 1;
            }
        }
        groups.push_back(std::move(group));
    }

    struct Emitted {
        std::vector<double> representative;
        std::vector<int> sax_word;
        int support;
        std::size_t medoid_segment;
        int medoid_offset;
    };
    std::vector<Emitted> emitted;

    for (auto& idx : groups) {
        if (static_cast<int>(idx.size()) < cfg.min_support) continue;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            const auto& ca = candidates[a];
            const auto& cb = candidates[b];
            return std::tie(ca.segment_index, ca.offset) < std::tie(cb.segment_index, cb.offset);
        });

        // Medoid: minimum total z-normalized distance to the group, ties
        // broken by earliest (segment, offset) via the sort above.
        std::vector<double> totals(idx.size(), 0.0);
        parallel_for(idx.size(), cfg.threads, [&](std::size_t a) {
            double total = 0.0;
            for (std::size_t b = 0; b < idx.size(); ++b) {
                if (a == b) continue;
                total += std::sqrt(
                    squared_distance(candidates[idx[a]].znorm, candidates[idx[b]].znorm));
            }
            totals[a] = total;
        });
        std::size_t best = 0;
        for (std::size_t a = 1; a < idx.size(); ++a)
            if (totals[a] < totals[best]) best = a;

        const Candidate& medoid = candidates[idx[best]];
        std::vector<double> rep(
            segments[medoid.segment_index].values.begin() + medoid.offset,
            segments[medoid.segment_index].values.begin() + medoid.offset + len);

        // Support = de-overlapped approximate occurrences of the medoid on
        // the training data (restricted to the context when given), so the
        // stored support is recomputable by matching.
        int support = 0;
        for (std::size_t si = 0; si < segments.size(); ++si)
            support += static_cast<int>(
                match_offsets(rep, 0, segments[si], cfg.radius, si, &masks[si]).size());
        if (support < cfg.min_support) continue;

        auto word = signal::sax_encode(rep, cfg.sax.alphabet_size, cfg.sax.paa_width);
        emitted.push_back(
            {std::move(rep), word.symbols, support, medoid.segment_index, medoid.offset});
    }

    // Greedy suppression by descending support. An accepted motif claims its
    // occurrence intervals; later candidates must reach min_support on
    // unclaimed data, which removes the shifted trivial-match variants of an
    // already accepted motif. Candidates within radius of an accepted
    // representative are suppressed outright.
    std::sort(emitted.begin(), emitted.end(), [](const Emitted& a, const Emitted& b) {
        if (a.support != b.support) return a.support > b.support;
        return std::tie(a.medoid_segment, a.medoid_offset) <
               std::tie(b.medoid_segment, b.medoid_offset);
    });
    std::vector<std::vector<char>> claimed(segments.size());
    for (std::size_t si = 0; si < segments.size(); ++si)
        claimed[si].assign(segments[si].values.size(), 0);

    std::vector<DerivedMotif> out;
    for (const auto& e : emitted) {
        bool near_accepted = false;
        for (const auto& kept : out) {
            if (znorm_distance(e.representative, kept.representative) <= cfg.radius) {
                near_accepted = true;
                break;
            }
        }
        if (near_accepted) continue;

        int effective = 0;
        std::vector<std::vector<Occurrence>> occ(segments.size());
        for (std::size_t si = 0; si < segments.size(); ++si) {
            std::vector<char> allowed = masks[si];
            for (std::size_t off = 0; off < allowed.size(); ++off) {
                if (!allowed[off]) continue;
                for (int k = 0; k < len; ++k)
                    if (claimed[si][off + k]) {
                        allowed[off] = 0;
                        break;
                    }
            }
            occ[si] = match_offsets(e.representative, 0, segments[si], cfg.radius, si, &allowed);
            effective += static_cast<int>(occ[si].size());
        }
        if (effective < cfg.min_support) continue;

        for (std::size_t si = 0; si < segments.size(); ++si)
            for (const auto& o : occ[si])
                for (int k = 0; k < len; ++k) claimed[si][o.offset + k] = 1;

        DerivedMotif m;
        m.length = len;
        m.representative = e.representative;
        m.sax_word = e.sax_word;
        m.support = e.support;
        if (context_labels) m.context_tag = ctx;
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<DerivedMotif> run_discovery(const std::vector<signal::DaySegment>& segments,
                                        const std::vector<std::vector<int>>* context_labels,
                                        int n_contexts, const DiscoveryConfig& cfg) {
    if (segments.empty()) throw ValidationError("discovery requires at least one segment");
    if (cfg.lengths.empty()) throw ValidationError("discovery requires at least one length");
    if (cfg.radius < 0.0) throw ValidationError("radius must be non-negative");

    std::vector<DerivedMotif> all;
    for (int ctx = 0; ctx < n_contexts; ++ctx) {
        for (int len : cfg.lengths) {
            auto found = discover_length(segments, context_labels, ctx, len, cfg);
            all.insert(all.end(), std::make_move_iterator(found.begin()),
                       std::make_move_iterator(found.end()));
        }
    }
    // Deterministic merged order across contexts and length classes.
    std::stable_sort(all.begin(), all.end(), [](const DerivedMotif& a, const DerivedMotif& b) {
        int ca = a.context_tag.value_or(-1);
        int cb = b.context_tag.value_or(-1);
        if (ca != cb) return ca < cb;
        if (a.length != b.length) return a.length < b.length;
        return a.support > b.support;
    });
    for (std::size_t i = 0; i < all.size(); ++i) all[i].id = static_cast<int>(i);
    return all;
}

}  // namespace

std::vector<DerivedMotif> discover_derived(const std::vector<signal::DaySegment>& segments,
                                           const DiscoveryConfig& cfg) {
    return run_discovery(segments, nullptr, 1, cfg);
}

std::vector<Occurrence> match_motif(const DerivedMotif& motif, const signal::DaySegment& segment,
                                    double radius, std::size_t segment_index) {
    return match_offsets(motif.representative, motif.id, segment, radius, segment_index, nullptr);
}

std::vector<DerivedMotif> discover_in_context(const std::vector<signal::DaySegment>& segments,
                                              const std::vector<std::vector<int>>& context_labels,
                                              int n_contexts, const DiscoveryConfig& cfg) {
    if (context_labels.size() != segments.size())
        throw ValidationError("context labelings must cover every segment");
    for (std::size_t i = 0; i < segments.size(); ++i)
        if (context_labels[i].size() != segments[i].values.size())
            throw ValidationError("context labeling length mismatch on segment " +
                                  std::to_string(i));
    return run_discovery(segments, &context_labels, n_contexts, cfg);
}

std::vector<Occurrence> match_motif_in_context(const DerivedMotif& motif,
                                               const signal::DaySegment& segment,
                                               const std::vector<int>& context_labels,
                                               double radius, std::size_t segment_index) {
    if (!motif.context_tag)
        return match_motif(motif, segment, radius, segment_index);
    auto mask = context_mask(segment, motif.length, &context_labels, *motif.context_tag);
    return match_offsets(motif.representative, motif.id, segment, radius, segment_index, &mask);
}

}  // namespace mforge::derived
