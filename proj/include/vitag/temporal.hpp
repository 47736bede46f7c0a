#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vitag/errors.hpp"
#include "vitag/tag.hpp"

namespace vitag {

// Normalized symmetric Gaussian weights over lags -d..+d.
struct GaussianWeights {
    int d = 0;
    double sigma = 1.0;
    std::vector<double> w;  // size 2d+1

    double at(int lag) const { return w[static_cast<std::size_t>(lag + d)]; }
};

inline GaussianWeights gaussian_weights(int d, double sigma) {
    if (d < 0) throw ConfigError("temporal window d must be >= 0");
    if (sigma <= 0.0) throw ConfigError("temporal sigma must be > 0");
    GaussianWeights gw;
    gw.d = d;
    gw.sigma = sigma;
    gw.w.resize(2 * static_cast<std::size_t>(d) + 1);
    double sum = 0.0;
    for (int i = -d; i <= d; ++i) {
        const double v = std::exp(-double(i) * double(i) / (2.0 * sigma * sigma));
        gw.w[static_cast<std::size_t>(i + d)] = v;
        sum += v;
    }
    for (double& v : gw.w) v /= sum;
    return gw;
}

// Per-frame relevance bits for one (video, tag) pair, in keyframe order.
struct RelevanceBits {
    std::string video_id;
    Tag tag;
    std::vector<std::uint8_t> bits;
};

struct LagCounts {
    std::uint64_t both = 0;          // frames where tag holds at k and k-lag
    std::uint64_t conditioning = 0;  // frames where tag holds at k-lag
};

// Exhaustive count of frame pairs `lag` apart within one video.
inline LagCounts count_transitions(const std::vector<std::uint8_t>& bits, int lag) {
    LagCounts lc;
    const auto n = static_cast<std::int64_t>(bits.size());
    for (std::int64_t k = 0; k < n; ++k) {
        const std::int64_t j = k - lag;
        if (j < 0 || j >= n) continue;
        if (bits[static_cast<std::size_t>(j)]) {
            ++lc.conditioning;
            if (bits[static_cast<std::size_t>(k)]) ++lc.both;
        }
    }
    return lc;
}

// Add-one smoothed transition probability. Preserves probability 1 for
// always-relevant tags and yields a neutral 1 when no pairs were seen.
inline double laplace_probability(const LagCounts& lc) {
    return (static_cast<double>(lc.both) + 1.0) / (static_cast<double>(lc.conditioning) + 1.0);
}

// P(tag relevant at frame k | relevant at frame k-lag), estimated from
// ground-truth bits pooled across training videos. Lag 0 is pinned to 1.
// Tags absent from training fall back to the globally pooled estimate.
class TransitionTable {
public:
    TransitionTable() = default;
    explicit TransitionTable(int d_max) : d_max_(d_max), global_(width(), 1.0) {
        if (d_max < 0) throw ConfigError("transition d_max must be >= 0");
    }

    int d_max() const { return d_max_; }

    double prob(const Tag& t, int lag) const {
        if (lag < -d_max_ || lag > d_max_)
            throw ConfigError("transition lag out of range: " + std::to_string(lag));
        auto it = probs_.find(t);
        const auto idx = static_cast<std::size_t>(lag + d_max_);
        return it == probs_.end() ? global_[idx] : it->second[idx];
    }

    bool has_tag(const Tag& t) const { return probs_.count(t) > 0; }

    void set(const Tag& t, int lag, double p) {
        auto [it, inserted] = probs_.try_emplace(t, width(), 1.0);
        it->second[static_cast<std::size_t>(lag + d_max_)] = p;
    }

    void set_global(int lag, double p) { global_[static_cast<std::size_t>(lag + d_max_)] = p; }

    // Every tag with at least one training frame, pure gating neutral (1)
    // everywhere: used when no ground truth is available.
    static TransitionTable neutral(int d_max) { return TransitionTable(d_max); }

    // Structured text rows (tag, lag, probability); '*' is the pooled
    // global fallback row.
    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw InputError("cannot open transition table for writing: " + path);
        out << "# transition table: tag<TAB>lag<TAB>probability; '*' = global fallback\n";
        out << std::setprecision(17);
        for (int lag = -d_max_; lag <= d_max_; ++lag)
            out << "*\t" << lag << '\t' << global_[static_cast<std::size_t>(lag + d_max_)] << '\n';
        for (const auto& [tag, row] : probs_)
            for (int lag = -d_max_; lag <= d_max_; ++lag)
                out << tag.text() << '\t' << lag << '\t'
                    << row[static_cast<std::size_t>(lag + d_max_)] << '\n';
        if (!out) throw InputError("failed to write transition table: " + path);
    }

    static TransitionTable load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw InputError("cannot open transition table: " + path);
        struct Row {
            std::string tag;
            int lag;
            double p;
        };
        std::vector<Row> rows;
        int d_max = 0;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ss(line);
            Row r;
            if (!(ss >> r.tag >> r.lag >> r.p))
                throw InputError(path + ":" + std::to_string(lineno) +
                                 ": malformed transition row");
            if (r.p < 0.0 || r.p > 1.0)
                throw InputError(path + ":" + std::to_string(lineno) +
                                 ": probability out of [0,1]");
            d_max = std::max(d_max, std::abs(r.lag));
            rows.push_back(std::move(r));
        }
        TransitionTable table(d_max);
        for (const auto& r : rows) {
            if (r.tag == "*")
                table.set_global(r.lag, r.p);
            else
                table.set(Tag(r.tag), r.lag, r.p);
        }
        return table;
    }

private:
    std::size_t width() const { return 2 * static_cast<std::size_t>(d_max_) + 1; }

    int d_max_ = 0;
    std::map<Tag, std::vector<double>> probs_;
    std::vector<double> global_ = {1.0};
};

inline TransitionTable estimate_transitions(const std::vector<RelevanceBits>& truth, int d_max) {
    if (d_max < 0) throw ConfigError("transition d_max must be >= 0");
    TransitionTable table(d_max);

    std::map<Tag, std::vector<LagCounts>> per_tag;
    std::vector<LagCounts> pooled(2 * static_cast<std::size_t>(d_max) + 1);
    for (const auto& rb : truth) {
        auto [it, inserted] =
            per_tag.try_emplace(rb.tag, 2 * static_cast<std::size_t>(d_max) + 1);
        for (int lag = -d_max; lag <= d_max; ++lag) {
            const LagCounts lc = count_transitions(rb.bits, lag);
            auto& acc = it->second[static_cast<std::size_t>(lag + d_max)];
            acc.both += lc.both;
            acc.conditioning += lc.conditioning;
            auto& g = pooled[static_cast<std::size_t>(lag + d_max)];
            g.both += lc.both;
            g.conditioning += lc.conditioning;
        }
    }
    for (int lag = -d_max; lag <= d_max; ++lag) {
        if (lag == 0) continue;  // pinned to exactly 1
        table.set_global(lag, laplace_probability(pooled[static_cast<std::size_t>(lag + d_max)]));
    }
    for (const auto& [tag, counts] : per_tag) {
        for (int lag = -d_max; lag <= d_max; ++lag) {
            const double p = lag == 0
                                 ? 1.0
                                 : laplace_probability(counts[static_cast<std::size_t>(lag + d_max)]);
            table.set(tag, lag, p);
        }
    }
    return table;
}

// Scores of one tag across a video's keyframes, in keyframe order.
struct FrameScoreSeries {
    Tag tag;
    std::vector<double> scores;
};

// Gaussian-weighted, transition-gated smoothing across the keyframe
// sequence. At sequence boundaries the window truncates and the
// surviving Gaussian weights are renormalized to sum 1. d=0 is the
// identity.
inline FrameScoreSeries smooth(const FrameScoreSeries& series, const TransitionTable& table,
                               const GaussianWeights& weights) {
    if (weights.d > table.d_max())
        throw ConfigError("smoothing window exceeds transition table d_max");
    FrameScoreSeries out;
    out.tag = series.tag;
    const auto n = static_cast<std::int64_t>(series.scores.size());
    out.scores.resize(series.scores.size());
    for (std::int64_t k = 0; k < n; ++k) {
        double weight_sum = 0.0;
        for (int i = -weights.d; i <= weights.d; ++i) {
            const std::int64_t j = k - i;
            if (j < 0 || j >= n) continue;
            weight_sum += weights.at(i);
        }
        double acc = 0.0;
        for (int i = -weights.d; i <= weights.d; ++i) {
            const std::int64_t j = k - i;
            if (j < 0 || j >= n) continue;
            acc += (weights.at(i) / weight_sum) * table.prob(series.tag, i) *
                   series.scores[static_cast<std::size_t>(j)];
        }
        out.scores[static_cast<std::size_t>(k)] = acc;
    }
    return out;
}

}  // namespace vitag
