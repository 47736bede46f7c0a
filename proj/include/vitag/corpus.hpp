#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vitag/errors.hpp"
#include "vitag/tag.hpp"

namespace vitag {

enum class Source { Video, Flickr, Google, Bing };

inline std::string to_string(Source s) {
    switch (s) {
        case Source::Video: return "VIDEO";
        case Source::Flickr: return "FLICKR";
        case Source::Google: return "GOOGLE";
        case Source::Bing: return "BING";
    }
    return "?";
}

inline std::optional<Source> parse_source(const std::string& s) {
    if (s == "VIDEO") return Source::Video;
    if (s == "FLICKR") return Source::Flickr;
    if (s == "GOOGLE") return Source::Google;
    if (s == "BING") return Source::Bing;
    return std::nullopt;
}

// Search-engine sources carry only the query term as a label.
inline bool single_label_source(Source s) {
    return s == Source::Google || s == Source::Bing;
}

enum class DescriptorNorm { None, L1, L2 };

inline std::string to_string(DescriptorNorm n) {
    switch (n) {
        case DescriptorNorm::None: return "none";
        case DescriptorNorm::L1: return "l1";
        case DescriptorNorm::L2: return "l2";
    }
    return "?";
}

inline std::optional<DescriptorNorm> parse_descriptor_norm(const std::string& s) {
    if (s == "none") return DescriptorNorm::None;
    if (s == "l1") return DescriptorNorm::L1;
    if (s == "l2") return DescriptorNorm::L2;
    return std::nullopt;
}

inline void normalize_descriptor(std::vector<float>& v, DescriptorNorm mode) {
    if (mode == DescriptorNorm::None) return;
    double acc = 0.0;
    for (float x : v) acc += (mode == DescriptorNorm::L1) ? std::abs(double(x)) : double(x) * x;
    if (mode == DescriptorNorm::L2) acc = std::sqrt(acc);
    if (acc <= 0.0) return;
    for (float& x : v) x = static_cast<float>(double(x) / acc);
}

struct TaggedImage {
    std::string id;
    Source source = Source::Video;
    TagSet tags;
    std::vector<float> descriptor;
    std::optional<Tag> query_tag;
};

struct Keyframe {
    std::string frame_id;
    double timestamp_s = 0.0;
    std::vector<float> descriptor;
};

struct VideoManifest {
    std::string video_id;
    TagSet video_tags;
    std::vector<Keyframe> keyframes;
};

struct SynonymTable {
    std::map<Tag, TagSet> synonyms;
    double expansion_weight = 1.0 / 3.0;

    const TagSet* find(const Tag& t) const {
        auto it = synonyms.find(t);
        return it == synonyms.end() ? nullptr : &it->second;
    }
};

// The per-video pool of tagged images searched for visual neighbors,
// with its derived vocabulary and per-tag prior counts. Counts are
// fractional when synonym-expanded images contribute with reduced weight.
struct RetrievalSet {
    std::vector<TaggedImage> images;
    TagSet vocabulary;
    std::map<Tag, double> tag_counts;
    std::size_t total = 0;

    bool in_vocabulary(const Tag& t) const { return vocabulary.count(t) > 0; }

    double count_of(const Tag& t) const {
        auto it = tag_counts.find(t);
        return it == tag_counts.end() ? 0.0 : it->second;
    }

    double prior(const Tag& t) const {
        return total == 0 ? 0.0 : count_of(t) / static_cast<double>(total);
    }

    // Descriptors are only needed until the index is built; dropping
    // them halves the resident footprint for large corpora.
    void release_descriptors() {
        for (auto& img : images) {
            img.descriptor.clear();
            img.descriptor.shrink_to_fit();
        }
    }
};

namespace detail {

// Sidecar blob of little-endian float32 values, row-major. descriptor_ref
// offsets are float indices into this stream.
class DescriptorBlob {
public:
    explicit DescriptorBlob(const std::string& path) : path_(path) {
        in_.open(path, std::ios::binary);
        if (!in_) throw InputError("cannot open descriptor blob: " + path);
        in_.seekg(0, std::ios::end);
        size_floats_ = static_cast<std::uint64_t>(in_.tellg()) / 4;
    }

    std::vector<float> read(std::uint64_t offset, std::uint64_t length) {
        if (offset + length > size_floats_)
            throw InputError("descriptor_ref out of range in blob " + path_);
        std::vector<unsigned char> raw(length * 4);
        in_.seekg(static_cast<std::streamoff>(offset * 4));
        in_.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (!in_) throw InputError("short read from descriptor blob " + path_);
        std::vector<float> out(length);
        for (std::uint64_t i = 0; i < length; ++i) {
            std::uint32_t bits = std::uint32_t(raw[4 * i]) | (std::uint32_t(raw[4 * i + 1]) << 8) |
                                 (std::uint32_t(raw[4 * i + 2]) << 16) |
                                 (std::uint32_t(raw[4 * i + 3]) << 24);
            float f;
            static_assert(sizeof(f) == sizeof(bits));
            std::memcpy(&f, &bits, sizeof(f));
            out[i] = f;
        }
        return out;
    }

private:
    std::string path_;
    std::ifstream in_;
    std::uint64_t size_floats_ = 0;
};

inline std::vector<float> parse_descriptor(const nlohmann::json& rec, const std::string& blob_path,
                                           std::optional<DescriptorBlob>& blob,
                                           const std::string& where) {
    if (rec.contains("descriptor")) {
        const auto& arr = rec.at("descriptor");
        if (!arr.is_array()) throw InputError(where + ": descriptor must be an array");
        std::vector<float> v;
        v.reserve(arr.size());
        for (const auto& x : arr) v.push_back(x.get<float>());
        return v;
    }
    if (rec.contains("descriptor_ref")) {
        const auto& ref = rec.at("descriptor_ref");
        if (!ref.contains("offset") || !ref.contains("length"))
            throw InputError(where + ": descriptor_ref needs offset and length");
        if (!blob) blob.emplace(blob_path);
        return blob->read(ref.at("offset").get<std::uint64_t>(),
                          ref.at("length").get<std::uint64_t>());
    }
    throw InputError(where + ": record has neither descriptor nor descriptor_ref");
}

inline TagSet normalize_all(const nlohmann::json& arr, const FilterRules& rules,
                            const std::string& where) {
    if (!arr.is_array()) throw InputError(where + ": tags must be an array");
    TagSet out;
    for (const auto& x : arr) {
        if (!x.is_string()) throw InputError(where + ": tag entries must be strings");
        if (auto t = normalize_tag(x.get<std::string>(), rules)) out.insert(*t);
    }
    return out;
}

}  // namespace detail

// Corpus file: one JSON record per line with fields
//   {id, source, query_tag?, tags[]?, descriptor | descriptor_ref{offset,length}}
// A sidecar blob named <path>.blob backs descriptor_ref records.
inline void load_corpus_file(const std::string& path, std::size_t ddim, const FilterRules& rules,
                             DescriptorNorm norm, std::vector<TaggedImage>& out) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open corpus file: " + path);
    std::optional<detail::DescriptorBlob> blob;
    const std::string blob_path = path + ".blob";

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path + ":" + std::to_string(lineno);

        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw InputError(where + ": malformed record: " + e.what());
        }
        try {
            TaggedImage img;
            img.id = rec.at("id").get<std::string>();
            if (img.id.empty()) throw InputError(where + ": empty image id");
            auto src = parse_source(rec.at("source").get<std::string>());
            if (!src) throw InputError(where + ": unknown source");
            img.source = *src;

            if (rec.contains("query_tag"))
                img.query_tag = normalize_tag(rec.at("query_tag").get<std::string>(), rules);
            if (rec.contains("tags")) img.tags = detail::normalize_all(rec.at("tags"), rules, where);

            if (single_label_source(img.source)) {
                if (!rec.contains("query_tag"))
                    throw InputError(where + ": " + to_string(img.source) +
                                     " records must carry a query_tag");
                if (!img.query_tag) continue;  // the only label was filtered out
                if (!img.tags.empty() && img.tags != TagSet{*img.query_tag})
                    throw InputError(where + ": " + to_string(img.source) +
                                     " records may only be tagged with their query term");
                img.tags = {*img.query_tag};
            }
            if (img.tags.empty()) continue;  // all tags filtered out

            img.descriptor = detail::parse_descriptor(rec, blob_path, blob, where);
            if (img.descriptor.size() != ddim)
                throw InputError("descriptor dimension mismatch for image " + img.id + ": got " +
                                 std::to_string(img.descriptor.size()) + ", want " +
                                 std::to_string(ddim));
            normalize_descriptor(img.descriptor, norm);
            out.push_back(std::move(img));
        } catch (const nlohmann::json::exception& e) {
            throw InputError(where + ": malformed record: " + e.what());
        }
    }
}

inline std::vector<TaggedImage> load_corpus(const std::vector<std::string>& paths, std::size_t ddim,
                                            const FilterRules& rules,
                                            DescriptorNorm norm = DescriptorNorm::L1) {
    std::vector<TaggedImage> out;
    for (const auto& p : paths) load_corpus_file(p, ddim, rules, norm, out);
    return out;
}

// Video manifest: one JSON object with video_id, video_tags[] and the
// ordered keyframes [{frame_id, timestamp_s, descriptor|descriptor_ref}].
inline VideoManifest load_video_manifest(const std::string& path, std::size_t ddim,
                                         const FilterRules& rules,
                                         DescriptorNorm norm = DescriptorNorm::L1) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open video manifest: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path + ": malformed manifest: " + e.what());
    }
    std::optional<detail::DescriptorBlob> blob;
    const std::string blob_path = path + ".blob";
    try {
        VideoManifest mf;
        mf.video_id = doc.at("video_id").get<std::string>();
        if (mf.video_id.empty()) throw InputError(path + ": empty video_id");
        mf.video_tags = detail::normalize_all(doc.at("video_tags"), rules, path);

        double prev_ts = -std::numeric_limits<double>::infinity();
        for (const auto& kf : doc.at("keyframes")) {
            Keyframe frame;
            frame.frame_id = kf.at("frame_id").get<std::string>();
            frame.timestamp_s = kf.at("timestamp_s").get<double>();
            if (frame.timestamp_s <= prev_ts)
                throw InputError(path + ": keyframe timestamps must be strictly increasing at " +
                                 frame.frame_id);
            prev_ts = frame.timestamp_s;
            frame.descriptor = detail::parse_descriptor(kf, blob_path, blob, path);
            if (frame.descriptor.size() != ddim)
                throw InputError("descriptor dimension mismatch for keyframe " + frame.frame_id +
                                 ": got " + std::to_string(frame.descriptor.size()) + ", want " +
                                 std::to_string(ddim));
            normalize_descriptor(frame.descriptor, norm);
            mf.keyframes.push_back(std::move(frame));
        }
        return mf;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path + ": malformed manifest: " + e.what());
    }
}

// Synonym table: {"expansion_weight": w, "synonyms": {"tag": ["syn", ...]}}.
inline SynonymTable load_synonym_table(const std::string& path, const FilterRules& rules) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open synonym table: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path + ": malformed synonym table: " + e.what());
    }
    SynonymTable table;
    try {
        if (doc.contains("expansion_weight"))
            table.expansion_weight = doc.at("expansion_weight").get<double>();
        if (table.expansion_weight <= 0.0 || table.expansion_weight > 1.0)
            throw ConfigError("synonym expansion_weight must be in (0,1]");
        for (const auto& [key, value] : doc.at("synonyms").items()) {
            auto head = normalize_tag(key, rules);
            if (!head) continue;
            TagSet syns = detail::normalize_all(value, rules, path);
            syns.erase(*head);  // no tag maps to itself
            if (!syns.empty()) table.synonyms[*head] = std::move(syns);
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path + ": malformed synonym table: " + e.what());
    }
    return table;
}

// Assembles the retrieval set for one video: keeps images reachable from
// the video's tags (directly, or through the synonym table at reduced
// prior weight), and derives the vocabulary and per-tag counts.
inline RetrievalSet build_retrieval_set(const std::vector<TaggedImage>& images,
                                        const TagSet& video_tags,
                                        const SynonymTable* synonyms = nullptr) {
    TagSet syn_tags;
    if (synonyms) {
        for (const auto& t : video_tags) {
            if (const TagSet* s = synonyms->find(t)) {
                for (const auto& syn : *s)
                    if (!video_tags.count(syn)) syn_tags.insert(syn);
            }
        }
    }
    auto intersects = [](const TagSet& a, const TagSet& b) {
        const TagSet& small = a.size() <= b.size() ? a : b;
        const TagSet& big = a.size() <= b.size() ? b : a;
        return std::any_of(small.begin(), small.end(),
                           [&](const Tag& t) { return big.count(t) > 0; });
    };

    RetrievalSet rs;
    std::vector<double> weights;
    for (const auto& img : images) {
        bool direct, via_synonym;
        if (img.query_tag) {
            direct = video_tags.count(*img.query_tag) > 0;
            via_synonym = !direct && syn_tags.count(*img.query_tag) > 0;
        } else {
            direct = intersects(img.tags, video_tags);
            via_synonym = !direct && intersects(img.tags, syn_tags);
        }
        if (!direct && !via_synonym) continue;
        rs.images.push_back(img);
        weights.push_back(direct ? 1.0 : (synonyms ? synonyms->expansion_weight : 1.0));
    }
    if (rs.images.empty()) throw InputError("retrieval set empty");

    rs.total = rs.images.size();
    for (std::size_t i = 0; i < rs.images.size(); ++i) {
        for (const auto& t : rs.images[i].tags) {
            rs.vocabulary.insert(t);
            rs.tag_counts[t] += weights[i];
        }
    }
    return rs;
}

}  // namespace vitag
