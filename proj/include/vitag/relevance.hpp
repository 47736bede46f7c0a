#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "vitag/corpus.hpp"
#include "vitag/errors.hpp"
#include "vitag/index.hpp"
#include "vitag/tag.hpp"

namespace vitag {

enum class VoteKind { Binary, DistanceWeighted };

inline std::string to_string(VoteKind k) {
    return k == VoteKind::Binary ? "binary" : "distance_weighted";
}

inline std::optional<VoteKind> parse_vote_kind(const std::string& s) {
    if (s == "binary") return VoteKind::Binary;
    if (s == "distance_weighted") return VoteKind::DistanceWeighted;
    return std::nullopt;
}

// Distance-weighted votes divide by max(distance^2, epsilon) so an exact
// duplicate dominates but stays finite.
struct VoteScheme {
    VoteKind kind = VoteKind::Binary;
    double epsilon = 1e-12;
};

// A keyframe's K nearest corpus images with their distances, plus the
// union of their tags.
struct Neighborhood {
    std::string frame_id;
    struct Entry {
        const TaggedImage* image;
        double distance;
    };
    std::vector<Entry> entries;
    TagSet tag_union;

    std::size_t k() const { return entries.size(); }
};

// Joins a neighbor list with the retrieval set it was searched from.
// Rows in the list must correspond to positions in rs.images, which holds
// whenever the index was built over rs.images in order.
inline Neighborhood make_neighborhood(std::string frame_id, const NeighborList& nl,
                                      const RetrievalSet& rs) {
    Neighborhood nb;
    nb.frame_id = std::move(frame_id);
    nb.entries.reserve(nl.entries.size());
    for (const auto& n : nl.entries) {
        if (n.item >= rs.images.size() || rs.images[n.item].id != n.id)
            throw InternalError("neighbor list does not match retrieval set at item " + n.id);
        const TaggedImage& img = rs.images[n.item];
        nb.entries.push_back({&img, n.distance});
        nb.tag_union.insert(img.tags.begin(), img.tags.end());
    }
    return nb;
}

struct RelevanceScore {
    Tag tag;
    double value = 0.0;
};

// One neighbor's vote for a tag: 1 if the neighbor carries the tag
// (binary), or the inverse squared distance (distance-weighted); 0 when
// the tag is absent.
inline double vote(const Tag& tag, const TagSet& image_tags, double distance,
                   const VoteScheme& scheme) {
    if (image_tags.find(tag) == image_tags.end()) return 0.0;
    if (scheme.kind == VoteKind::Binary) return 1.0;
    return 1.0 / std::max(distance * distance, scheme.epsilon);
}

namespace detail {

// Mean neighbor vote minus the corpus prior; exactly 0 when no neighbor
// carries the tag (the prior is not applied in that case).
inline double relevance_value(double vote_sum, std::size_t carriers, std::size_t k,
                              double prior) {
    if (carriers == 0) return 0.0;
    return vote_sum / static_cast<double>(k) - prior;
}

// One pass over the neighborhood accumulating per-tag vote sums and
// carrier counts; the per-tag addition order matches tag_relevance, so
// both routes produce bit-identical values.
struct VoteTally {
    std::map<Tag, double> sums;
    std::map<Tag, std::size_t> carriers;
};

inline VoteTally tally_votes(const Neighborhood& nb, const VoteScheme& scheme) {
    VoteTally tally;
    for (const auto& e : nb.entries) {
        for (const Tag& t : e.image->tags) {
            tally.sums[t] += vote(t, e.image->tags, e.distance, scheme);
            tally.carriers[t] += 1;
        }
    }
    return tally;
}

}  // namespace detail

// Neighbor-voting relevance of a tag for the neighborhood's keyframe:
// the mean vote over the K neighbors minus the tag's retrieval-set prior.
inline RelevanceScore tag_relevance(const Tag& tag, const Neighborhood& nb,
                                    const RetrievalSet& rs, const VoteScheme& scheme) {
    if (nb.entries.empty()) throw InputError("empty neighborhood for frame " + nb.frame_id);
    if (!rs.in_vocabulary(tag)) throw InputError("tag not in vocabulary: " + tag.text());

    double sum = 0.0;
    std::size_t carriers = 0;
    for (const auto& e : nb.entries) {
        const double v = vote(tag, e.image->tags, e.distance, scheme);
        if (e.image->tags.find(tag) != e.image->tags.end()) {
            sum += v;
            ++carriers;
        }
    }
    return {tag, detail::relevance_value(sum, carriers, nb.k(), rs.prior(tag))};
}

// Scores each video tag against the keyframe's neighborhood. The
// localized set T_f is the subset with positive relevance; tags absent
// from every neighbor score exactly 0 and are not localized. Sorted by
// value descending, ties by tag ascending.
inline std::vector<RelevanceScore> localize_video_tags(const TagSet& video_tags,
                                                       const Neighborhood& nb,
                                                       const RetrievalSet& rs,
                                                       const VoteScheme& scheme) {
    if (nb.entries.empty()) throw InputError("empty neighborhood for frame " + nb.frame_id);
    std::vector<RelevanceScore> out;
    out.reserve(video_tags.size());
    for (const Tag& t : video_tags) out.push_back(tag_relevance(t, nb, rs, scheme));
    std::sort(out.begin(), out.end(), [](const RelevanceScore& a, const RelevanceScore& b) {
        if (a.value != b.value) return a.value > b.value;
        return a.tag < b.tag;
    });
    return out;
}

}  // namespace vitag
