#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "vitag/errors.hpp"

namespace vitag {

// Parameters of the hierarchical k-means tree. max_checks bounds how many
// leaf items a query scores; queries always score at least K items.
struct HkmParams {
    int branching = 32;
    int max_leaf = 64;
    int max_checks = 512;
    int restarts = 1;
    std::uint64_t seed = 0;
};

enum class IndexMode { Exact, HierKmeans };

inline std::string to_string(IndexMode m) {
    return m == IndexMode::Exact ? "exact" : "hkmeans";
}

inline std::optional<IndexMode> parse_index_mode(const std::string& s) {
    if (s == "exact") return IndexMode::Exact;
    if (s == "hkmeans") return IndexMode::HierKmeans;
    return std::nullopt;
}

struct IndexItem {
    std::string id;
    std::vector<float> descriptor;
};

struct Neighbor {
    std::string id;
    std::uint32_t item = 0;  // row in the indexed set
    double distance = 0.0;   // Euclidean
};

// K nearest items, sorted by distance, ties broken by id ascending.
struct NeighborList {
    std::vector<Neighbor> entries;
};

namespace detail {

inline double squared_distance(const float* a, const float* b, std::size_t n) noexcept {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const double d0 = double(a[i]) - double(b[i]);
        const double d1 = double(a[i + 1]) - double(b[i + 1]);
        const double d2 = double(a[i + 2]) - double(b[i + 2]);
        const double d3 = double(a[i + 3]) - double(b[i + 3]);
        s0 += d0 * d0;
        s1 += d1 * d1;
        s2 += d2 * d2;
        s3 += d3 * d3;
    }
    for (; i < n; ++i) {
        const double d = double(a[i]) - double(b[i]);
        s0 += d * d;
    }
    return (s0 + s1) + (s2 + s3);
}

// Portable deterministic RNG; std::uniform_int_distribution is
// implementation-defined, so the index never uses it.
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    std::size_t below(std::size_t bound) { return static_cast<std::size_t>(next() % bound); }
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    SplitMix64 rng(seed ^ (salt * 0xD6E8FEB86659FD93ULL));
    return rng.next();
}

}  // namespace detail

// Nearest-neighbor search over descriptors under exact Euclidean distance.
// Exact mode scans every item; HierKmeans mode recursively clusters items
// into a branching-factor tree and answers queries by best-bin-first
// traversal. Immutable after build; concurrent queries are safe.
class DescriptorIndex {
public:
    static DescriptorIndex build(std::vector<IndexItem> items, std::size_t ddim,
                                 const HkmParams& params = {},
                                 IndexMode mode = IndexMode::HierKmeans) {
        if (items.empty()) throw InputError("cannot build index from empty item list");
        if (params.branching < 2) throw ConfigError("index branching must be >= 2");
        if (params.max_leaf < 1) throw ConfigError("index max_leaf must be >= 1");
        if (params.max_checks < 1) throw ConfigError("index max_checks must be >= 1");
        if (params.restarts < 1) throw ConfigError("index restarts must be >= 1");

        DescriptorIndex idx;
        idx.mode_ = mode;
        idx.ddim_ = ddim;
        idx.params_ = params;
        idx.ids_.reserve(items.size());
        idx.data_.reserve(items.size() * ddim);

        std::unordered_set<std::string> seen;
        seen.reserve(items.size());
        for (auto& item : items) {
            if (item.descriptor.size() != ddim)
                throw InputError("descriptor dimension mismatch for item " + item.id);
            if (!seen.insert(item.id).second)
                throw InputError("duplicate item id in index build: " + item.id);
            idx.ids_.push_back(std::move(item.id));
            idx.data_.insert(idx.data_.end(), item.descriptor.begin(), item.descriptor.end());
            item.descriptor.clear();
            item.descriptor.shrink_to_fit();
        }

        if (mode == IndexMode::HierKmeans) {
            std::vector<std::uint32_t> rows(idx.ids_.size());
            for (std::uint32_t r = 0; r < rows.size(); ++r) rows[r] = r;
            idx.nodes_.emplace_back();  // root
            idx.build_node(0, std::move(rows), params.seed);
        }
        return idx;
    }

    NeighborList query_knn(std::span<const float> q, int k) const {
        if (q.size() != ddim_) throw InputError("query dimension mismatch");
        if (k < 1) throw ConfigError("K must be >= 1");
        const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(k), ids_.size());

        TopK top(*this, want);
        if (mode_ == IndexMode::Exact) {
            for (std::uint32_t r = 0; r < ids_.size(); ++r) top.offer(row_distance(q, r), r);
        } else {
            search_tree(q, want, top);
        }
        return top.finish();
    }

    IndexMode mode() const { return mode_; }
    std::size_t dim() const { return ddim_; }
    std::size_t size() const { return ids_.size(); }
    const std::vector<std::string>& item_ids() const { return ids_; }
    const HkmParams& params() const { return params_; }

    std::span<const float> descriptor_of(std::uint32_t row) const {
        return {data_.data() + std::size_t(row) * ddim_, ddim_};
    }

    // Versioned binary persistence; a loaded index reproduces identical
    // query results.
    void save(std::ostream& out) const {
        out.write(kMagic, 8);
        write_u32(out, kVersion);
        out.put(mode_ == IndexMode::Exact ? 0 : 1);
        write_u32(out, static_cast<std::uint32_t>(ddim_));
        write_u32(out, static_cast<std::uint32_t>(params_.branching));
        write_u32(out, static_cast<std::uint32_t>(params_.max_leaf));
        write_u32(out, static_cast<std::uint32_t>(params_.max_checks));
        write_u32(out, static_cast<std::uint32_t>(params_.restarts));
        write_u64(out, params_.seed);
        write_u64(out, ids_.size());
        for (const auto& id : ids_) {
            write_u32(out, static_cast<std::uint32_t>(id.size()));
            out.write(id.data(), static_cast<std::streamsize>(id.size()));
        }
        for (float f : data_) write_f32(out, f);
        write_u64(out, nodes_.size());
        for (const auto& n : nodes_) {
            out.put(n.children.empty() ? 1 : 0);
            write_u32(out, static_cast<std::uint32_t>(n.centroid.size()));
            for (float f : n.centroid) write_f32(out, f);
            write_u64(out, n.children.size());
            for (auto c : n.children) write_u32(out, c);
            write_u64(out, n.rows.size());
            for (auto r : n.rows) write_u32(out, r);
        }
        if (!out) throw InputError("failed to write index");
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw InputError("cannot open index file for writing: " + path);
        save(out);
    }

    static DescriptorIndex load(std::istream& in) {
        char magic[8] = {};
        in.read(magic, 8);
        if (!in || std::memcmp(magic, kMagic, 8) != 0)
            throw InputError("not a descriptor index file");
        if (read_u32(in) != kVersion) throw InputError("unsupported index file version");

        DescriptorIndex idx;
        idx.mode_ = in.get() == 0 ? IndexMode::Exact : IndexMode::HierKmeans;
        idx.ddim_ = read_u32(in);
        idx.params_.branching = static_cast<int>(read_u32(in));
        idx.params_.max_leaf = static_cast<int>(read_u32(in));
        idx.params_.max_checks = static_cast<int>(read_u32(in));
        idx.params_.restarts = static_cast<int>(read_u32(in));
        idx.params_.seed = read_u64(in);
        const std::uint64_t count = read_u64(in);
        idx.ids_.reserve(count);
        for (std::uint64_t i = 0; i < count; ++i) {
            std::string id(read_u32(in), '\0');
            in.read(id.data(), static_cast<std::streamsize>(id.size()));
            idx.ids_.push_back(std::move(id));
        }
        idx.data_.resize(count * idx.ddim_);
        for (auto& f : idx.data_) f = read_f32(in);
        const std::uint64_t node_count = read_u64(in);
        idx.nodes_.resize(node_count);
        for (auto& n : idx.nodes_) {
            in.get();  // leaf flag, redundant with children emptiness
            n.centroid.resize(read_u32(in));
            for (auto& f : n.centroid) f = read_f32(in);
            n.children.resize(read_u64(in));
            for (auto& c : n.children) c = read_u32(in);
            n.rows.resize(read_u64(in));
            for (auto& r : n.rows) r = read_u32(in);
        }
        if (!in) throw InputError("truncated index file");
        return idx;
    }

    static DescriptorIndex load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw InputError("cannot open index file: " + path);
        return load(in);
    }

    // Leaf row sets in tree order; used by tests to check the partition.
    std::vector<std::vector<std::uint32_t>> leaf_partition() const {
        std::vector<std::vector<std::uint32_t>> out;
        for (const auto& n : nodes_)
            if (n.children.empty()) out.push_back(n.rows);
        return out;
    }

private:
    struct Node {
        std::vector<float> centroid;          // empty for the root
        std::vector<std::uint32_t> children;  // node ids; empty for leaves
        std::vector<std::uint32_t> rows;      // leaf payload
    };

    // Bounded best-K accumulator with (distance, id) ordering.
    class TopK {
    public:
        TopK(const DescriptorIndex& idx, std::size_t cap) : cap_(cap), less_{&idx} {
            heap_.reserve(cap + 1);
        }

        void offer(double dist2, std::uint32_t row) {
            if (heap_.size() < cap_) {
                heap_.emplace_back(dist2, row);
                std::push_heap(heap_.begin(), heap_.end(), less_);
            } else if (less_({dist2, row}, heap_.front())) {
                std::pop_heap(heap_.begin(), heap_.end(), less_);
                heap_.back() = {dist2, row};
                std::push_heap(heap_.begin(), heap_.end(), less_);
            }
        }

        NeighborList finish() {
            std::sort(heap_.begin(), heap_.end(), less_);
            NeighborList out;
            out.entries.reserve(heap_.size());
            for (const auto& [d2, row] : heap_)
                out.entries.push_back({less_.idx->ids_[row], row, std::sqrt(d2)});
            return out;
        }

    private:
        using Entry = std::pair<double, std::uint32_t>;
        // (distance, id) lexicographic; never ties, ids are unique.
        struct Less {
            const DescriptorIndex* idx;
            bool operator()(const Entry& a, const Entry& b) const {
                if (a.first != b.first) return a.first < b.first;
                return idx->ids_[a.second] < idx->ids_[b.second];
            }
        };
        std::size_t cap_;
        Less less_;
        std::vector<Entry> heap_;
    };

    double row_distance(std::span<const float> q, std::uint32_t row) const {
        return detail::squared_distance(q.data(), data_.data() + std::size_t(row) * ddim_, ddim_);
    }

    double centroid_distance(std::span<const float> q, const Node& n) const {
        return detail::squared_distance(q.data(), n.centroid.data(), ddim_);
    }

    // Best-bin-first: descend to the closest leaf, queue the siblings by
    // centroid distance, and keep expanding the nearest unexplored branch
    // until the check budget is spent.
    void search_tree(std::span<const float> q, std::size_t want, TopK& top) const {
        const std::size_t budget =
            std::max<std::size_t>(static_cast<std::size_t>(params_.max_checks), want);
        using Branch = std::pair<double, std::uint32_t>;  // (centroid dist2, node)
        std::priority_queue<Branch, std::vector<Branch>, std::greater<Branch>> frontier;
        std::size_t checked = 0;

        frontier.emplace(0.0, 0);
        while (!frontier.empty() && checked < budget) {
            std::uint32_t node_id = frontier.top().second;
            frontier.pop();
            // Walk down to a leaf, deferring siblings.
            while (!nodes_[node_id].children.empty()) {
                const auto& children = nodes_[node_id].children;
                double best = std::numeric_limits<double>::infinity();
                std::uint32_t best_child = children.front();
                for (std::uint32_t c : children) {
                    const double d = centroid_distance(q, nodes_[c]);
                    if (d < best) {
                        best = d;
                        best_child = c;
                    }
                }
                for (std::uint32_t c : children)
                    if (c != best_child) frontier.emplace(centroid_distance(q, nodes_[c]), c);
                node_id = best_child;
            }
            for (std::uint32_t row : nodes_[node_id].rows) {
                if (checked >= budget) break;
                top.offer(row_distance(q, row), row);
                ++checked;
            }
        }
    }

    const float* row_ptr(std::uint32_t row) const {
        return data_.data() + std::size_t(row) * ddim_;
    }

    struct KmeansResult {
        std::vector<std::vector<float>> centers;
        double sse = std::numeric_limits<double>::infinity();
    };

    // Seeded farthest-point init followed by Lloyd iterations on a bounded
    // training sample. Large nodes train on a strided subsample and then
    // partition all rows by a single assignment pass.
    KmeansResult run_kmeans(const std::vector<std::uint32_t>& rows, std::size_t k,
                            std::uint64_t seed) const {
        static constexpr std::size_t kSampleCap = 4096;
        static constexpr int kMaxLloydIters = 25;

        std::vector<std::uint32_t> sample;
        if (rows.size() <= kSampleCap) {
            sample = rows;
        } else {
            sample.reserve(kSampleCap);
            for (std::size_t i = 0; i < kSampleCap; ++i)
                sample.push_back(rows[i * rows.size() / kSampleCap]);
        }

        detail::SplitMix64 rng(seed);
        KmeansResult result;
        result.centers.assign(k, std::vector<float>(ddim_, 0.0f));

        // Farthest-point initialization.
        std::vector<double> nearest(sample.size(), std::numeric_limits<double>::infinity());
        std::size_t pick = rng.below(sample.size());
        for (std::size_t c = 0; c < k; ++c) {
            const float* p = row_ptr(sample[pick]);
            result.centers[c].assign(p, p + ddim_);
            if (c + 1 == k) break;
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < sample.size(); ++i) {
                const double d = detail::squared_distance(row_ptr(sample[i]), p, ddim_);
                if (d < nearest[i]) nearest[i] = d;
                if (nearest[i] > far_d) {
                    far_d = nearest[i];
                    far = i;
                }
            }
            pick = far;
        }

        std::vector<std::uint32_t> assign(sample.size(), 0);
        std::vector<std::size_t> counts(k, 0);
        for (int iter = 0; iter < kMaxLloydIters; ++iter) {
            bool changed = (iter == 0);
            for (std::size_t i = 0; i < sample.size(); ++i) {
                std::uint32_t best_c = 0;
                double best_d = std::numeric_limits<double>::infinity();
                for (std::size_t c = 0; c < k; ++c) {
                    const double d =
                        detail::squared_distance(row_ptr(sample[i]), result.centers[c].data(), ddim_);
                    if (d < best_d) {
                        best_d = d;
                        best_c = static_cast<std::uint32_t>(c);
                    }
                }
                if (assign[i] != best_c || iter == 0) {
                    assign[i] = best_c;
                    changed = true;
                }
            }
            if (!changed) break;

            std::vector<std::vector<double>> sums(k, std::vector<double>(ddim_, 0.0));
            std::fill(counts.begin(), counts.end(), 0);
            for (std::size_t i = 0; i < sample.size(); ++i) {
                const float* p = row_ptr(sample[i]);
                auto& s = sums[assign[i]];
                for (std::size_t d = 0; d < ddim_; ++d) s[d] += p[d];
                ++counts[assign[i]];
            }
            for (std::size_t c = 0; c < k; ++c) {
                if (counts[c] == 0) continue;
                for (std::size_t d = 0; d < ddim_; ++d)
                    result.centers[c][d] = static_cast<float>(sums[c][d] / double(counts[c]));
            }
            // Re-seed empty clusters from the farthest point of the
            // largest cluster.
            for (std::size_t c = 0; c < k; ++c) {
                if (counts[c] != 0) continue;
                const std::size_t largest =
                    std::max_element(counts.begin(), counts.end()) - counts.begin();
                std::size_t far = sample.size();
                double far_d = -1.0;
                for (std::size_t i = 0; i < sample.size(); ++i) {
                    if (assign[i] != largest) continue;
                    const double d = detail::squared_distance(
                        row_ptr(sample[i]), result.centers[largest].data(), ddim_);
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                if (far < sample.size()) {
                    const float* p = row_ptr(sample[far]);
                    result.centers[c].assign(p, p + ddim_);
                    assign[far] = static_cast<std::uint32_t>(c);
                    counts[c] = 1;
                    --counts[largest];
                }
            }
        }

        result.sse = 0.0;
        for (std::size_t i = 0; i < sample.size(); ++i) {
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c)
                best_d = std::min(best_d, detail::squared_distance(
                                              row_ptr(sample[i]), result.centers[c].data(), ddim_));
            result.sse += best_d;
        }
        return result;
    }

    void build_node(std::uint32_t node_id, std::vector<std::uint32_t> rows, std::uint64_t seed) {
        if (rows.size() <= static_cast<std::size_t>(params_.max_leaf)) {
            nodes_[node_id].rows = std::move(rows);
            return;
        }
        const std::size_t k = std::min<std::size_t>(params_.branching, rows.size());

        KmeansResult best;
        for (int r = 0; r < params_.restarts; ++r) {
            KmeansResult run = run_kmeans(rows, k, detail::mix_seed(seed, 0x1000 + r));
            if (run.sse < best.sse) best = std::move(run);
        }

        std::vector<std::vector<std::uint32_t>> parts(k);
        for (std::uint32_t row : rows) {
            std::uint32_t best_c = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d =
                    detail::squared_distance(row_ptr(row), best.centers[c].data(), ddim_);
                if (d < best_d) {
                    best_d = d;
                    best_c = static_cast<std::uint32_t>(c);
                }
            }
            parts[best_c].push_back(row);
        }

        // Degenerate clustering (e.g. identical points): fall back to a
        // deterministic round-robin split so recursion always shrinks.
        const bool collapsed = std::any_of(parts.begin(), parts.end(), [&](const auto& p) {
            return p.size() == rows.size();
        });
        if (collapsed) {
            for (auto& p : parts) p.clear();
            for (std::size_t i = 0; i < rows.size(); ++i) parts[i % k].push_back(rows[i]);
            for (std::size_t c = 0; c < k; ++c) {
                std::vector<double> mean(ddim_, 0.0);
                for (std::uint32_t row : parts[c]) {
                    const float* p = row_ptr(row);
                    for (std::size_t d = 0; d < ddim_; ++d) mean[d] += p[d];
                }
                for (std::size_t d = 0; d < ddim_; ++d)
                    best.centers[c][d] = static_cast<float>(mean[d] / double(parts[c].size()));
            }
        }

        rows.clear();
        rows.shrink_to_fit();
        for (std::size_t c = 0; c < k; ++c) {
            if (parts[c].empty()) continue;
            const auto child_id = static_cast<std::uint32_t>(nodes_.size());
            nodes_.emplace_back();
            nodes_[child_id].centroid = best.centers[c];
            nodes_[node_id].children.push_back(child_id);
            build_node(child_id, std::move(parts[c]), detail::mix_seed(seed, c + 1));
        }
    }

    static void write_u32(std::ostream& out, std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
        out.write(reinterpret_cast<const char*>(b), 4);
    }
    static void write_u64(std::ostream& out, std::uint64_t v) {
        write_u32(out, static_cast<std::uint32_t>(v));
        write_u32(out, static_cast<std::uint32_t>(v >> 32));
    }
    static void write_f32(std::ostream& out, float f) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        write_u32(out, bits);
    }
    static std::uint32_t read_u32(std::istream& in) {
        unsigned char b[4] = {};
        in.read(reinterpret_cast<char*>(b), 4);
        return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
               (std::uint32_t(b[3]) << 24);
    }
    static std::uint64_t read_u64(std::istream& in) {
        const std::uint64_t lo = read_u32(in);
        const std::uint64_t hi = read_u32(in);
        return lo | (hi << 32);
    }
    static float read_f32(std::istream& in) {
        const std::uint32_t bits = read_u32(in);
        float f;
        std::memcpy(&f, &bits, 4);
        return f;
    }

    static constexpr const char* kMagic = "VITAGIDX";
    static constexpr std::uint32_t kVersion = 1;

    IndexMode mode_ = IndexMode::Exact;
    std::size_t ddim_ = 0;
    HkmParams params_;
    std::vector<float> data_;
    std::vector<std::string> ids_;
    std::vector<Node> nodes_;
};

}  // namespace vitag
