#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vitag/corpus.hpp"
#include "vitag/relevance.hpp"
#include "vitag/tag.hpp"

namespace vitag {

// Symmetric tag co-occurrence statistics over a retrieval set's images.
struct CooccurrenceModel {
    std::map<std::pair<Tag, Tag>, double> pair_counts;  // keyed (min, max), a != b
    std::map<Tag, double> tag_totals;

    double pair(const Tag& a, const Tag& b) const {
        if (a == b) return 0.0;
        const auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
        auto it = pair_counts.find(key);
        return it == pair_counts.end() ? 0.0 : it->second;
    }

    double total(const Tag& t) const {
        auto it = tag_totals.find(t);
        return it == tag_totals.end() ? 0.0 : it->second;
    }

    bool empty() const { return pair_counts.empty(); }
};

// pair_counts[(a,b)] = number of images tagged with both a and b. Images
// from single-label sources contribute nothing to pair_counts.
inline CooccurrenceModel build_cooccurrence(const std::vector<TaggedImage>& images) {
    CooccurrenceModel model;
    for (const auto& img : images) {
        for (auto a = img.tags.begin(); a != img.tags.end(); ++a) {
            model.tag_totals[*a] += 1.0;
            for (auto b = std::next(a); b != img.tags.end(); ++b)
                model.pair_counts[{*a, *b}] += 1.0;
        }
    }
    return model;
}

// Candidate suggestions: tags of the neighborhood outside T_f whose summed
// co-occurrence with the localized tags is strictly above the average.
inline TagSet candidate_tags(const TagSet& localized, const TagSet& neighborhood_tags,
                             const CooccurrenceModel& model) {
    if (localized.empty()) return {};
    std::vector<std::pair<Tag, double>> scores;
    for (const Tag& u : neighborhood_tags) {
        if (localized.count(u)) continue;
        double c = 0.0;
        for (const Tag& t : localized) c += model.pair(t, u);
        scores.emplace_back(u, c);
    }
    if (scores.empty()) return {};
    double mean = 0.0;
    for (const auto& [u, c] : scores) mean += c;
    mean /= static_cast<double>(scores.size());

    TagSet out;
    for (const auto& [u, c] : scores)
        if (c > mean) out.insert(u);
    return out;
}

// Suggestion score for a candidate: each localized anchor tag casts a
// vote normalized by how often the anchor occurs at all.
inline double vote_plus(const Tag& candidate, const TagSet& localized,
                        const CooccurrenceModel& model) {
    double score = 0.0;
    for (const Tag& t : localized)
        score += model.pair(t, candidate) / std::max(model.total(t), 1.0);
    return score;
}

// Rank damping: full weight at rank 1, lambda/(lambda+rank-1) below.
inline double damped_score(double suggestion, std::size_t rank, double lambda) {
    return suggestion * lambda / (lambda + static_cast<double>(rank - 1));
}

struct ScoredTag {
    Tag tag;
    std::size_t relevance_rank = 0;  // position of the tag in the T_K relevance ranking
    double suggestion = 0.0;
    double final_score = 0.0;
};

struct FrameAnnotation {
    std::string frame_id;
    double timestamp_s = 0.0;
    std::vector<RelevanceScore> localized;         // every video tag, scored, desc
    std::vector<ScoredTag> suggested;              // top suggestions, final score desc
    std::vector<std::pair<Tag, double>> all_tags;  // localized T_f then suggested

    TagSet localized_set() const {
        TagSet out;
        for (const auto& r : localized)
            if (r.value > 0.0) out.insert(r.tag);
        return out;
    }
};

struct SuggestParams {
    double lambda = 20.0;
    std::size_t top_k = 5;
};

// Relevance ranking of every neighborhood tag; rank 1 is the most
// relevant. The ranking is a bijection onto 1..|T_K|.
inline std::map<Tag, std::size_t> rank_neighborhood_tags(const Neighborhood& nb,
                                                         const RetrievalSet& rs,
                                                         const VoteScheme& scheme) {
    const auto tally = detail::tally_votes(nb, scheme);
    std::vector<std::pair<Tag, double>> ranked;
    ranked.reserve(nb.tag_union.size());
    for (const Tag& t : nb.tag_union) {
        auto sum = tally.sums.find(t);
        auto carriers = tally.carriers.find(t);
        const double value = detail::relevance_value(
            sum == tally.sums.end() ? 0.0 : sum->second,
            carriers == tally.carriers.end() ? 0 : carriers->second, nb.k(), rs.prior(t));
        ranked.emplace_back(t, value);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::map<Tag, std::size_t> out;
    for (std::size_t i = 0; i < ranked.size(); ++i) out.emplace(ranked[i].first, i + 1);
    return out;
}

// Full annotation of one keyframe: localize the video tags, rank the
// neighborhood tags, and score co-occurrence candidates with the damped
// suggestion formula. Suggested tags never overlap the localized set.
inline FrameAnnotation annotate_frame(const std::string& frame_id, double timestamp_s,
                                      const TagSet& video_tags, const Neighborhood& nb,
                                      const RetrievalSet& rs, const CooccurrenceModel& model,
                                      const VoteScheme& scheme, const SuggestParams& params) {
    FrameAnnotation fa;
    fa.frame_id = frame_id;
    fa.timestamp_s = timestamp_s;
    fa.localized = localize_video_tags(video_tags, nb, rs, scheme);

    const TagSet t_f = fa.localized_set();
    const auto ranks = rank_neighborhood_tags(nb, rs, scheme);

    std::vector<ScoredTag> scored;
    for (const Tag& u : candidate_tags(t_f, nb.tag_union, model)) {
        ScoredTag st;
        st.tag = u;
        st.relevance_rank = ranks.at(u);
        st.suggestion = vote_plus(u, t_f, model);
        st.final_score = damped_score(st.suggestion, st.relevance_rank, params.lambda);
        scored.push_back(std::move(st));
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredTag& a, const ScoredTag& b) {
        if (a.final_score != b.final_score) return a.final_score > b.final_score;
        return a.tag < b.tag;
    });
    if (scored.size() > params.top_k) scored.resize(params.top_k);
    fa.suggested = std::move(scored);

    for (const auto& r : fa.localized)
        if (r.value > 0.0) fa.all_tags.emplace_back(r.tag, r.value);
    for (const auto& s : fa.suggested) fa.all_tags.emplace_back(s.tag, s.final_score);
    return fa;
}

// The refined video-level tag set: the union of every frame's localized
// and suggested tags.
inline TagSet refine_video_tags(const std::vector<FrameAnnotation>& annotations) {
    TagSet out;
    for (const auto& fa : annotations) {
        for (const auto& r : fa.localized)
            if (r.value > 0.0) out.insert(r.tag);
        for (const auto& s : fa.suggested) out.insert(s.tag);
    }
    return out;
}

}  // namespace vitag
