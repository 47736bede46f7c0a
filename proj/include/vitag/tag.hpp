#pragma once

#include <compare>
#include <fstream>
#include <functional>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "vitag/detail/text.hpp"
#include "vitag/errors.hpp"

namespace vitag {

// A normalized annotation tag. Construct through normalize_tag() for raw
// user text; the explicit constructor is for text that is already in
// normalized form (our own files, test fixtures).
class Tag {
public:
    Tag() = default;
    explicit Tag(std::string text) : text_(std::move(text)) {}

    const std::string& text() const { return text_; }

    auto operator<=>(const Tag&) const = default;

private:
    std::string text_;
};

using TagSet = std::set<Tag>;

struct FilterRules {
    std::unordered_set<std::string> stopwords;
    std::vector<std::string> date_pattern_sources;
    std::vector<std::regex> date_patterns;

    bool is_stopword(const std::string& s) const {
        return stopwords.find(s) != stopwords.end();
    }
    bool matches_date(const std::string& s) const {
        for (const auto& re : date_patterns)
            if (std::regex_match(s, re)) return true;
        return false;
    }
};

inline const std::vector<std::string>& default_date_pattern_sources() {
    // ISO dates, day/month/year orderings, and bare 4-digit years.
    static const std::vector<std::string> sources = {
        R"(\d{4}-\d{1,2}-\d{1,2})",
        R"(\d{1,2}/\d{1,2}/\d{4})",
        R"(\d{1,2}\.\d{1,2}\.\d{4})",
        R"((19|20)\d{2})",
    };
    return sources;
}

inline const std::unordered_set<std::string>& default_stopwords() {
    static const std::unordered_set<std::string> words = {
        "a",     "about", "above", "after",  "again", "all",   "am",    "an",
        "and",   "any",   "are",   "as",     "at",    "be",    "been",  "before",
        "being", "below", "both",  "but",    "by",    "can",   "did",   "do",
        "does",  "doing", "down",  "during", "each",  "few",   "for",   "from",
        "had",   "has",   "have",  "having", "he",    "her",   "here",  "hers",
        "him",   "his",   "how",   "i",      "if",    "in",    "into",  "is",
        "it",    "its",   "just",  "me",     "more",  "most",  "my",    "no",
        "nor",   "not",   "now",   "of",     "off",   "on",    "once",  "only",
        "or",    "other", "our",   "ours",   "out",   "over",  "own",   "same",
        "she",   "so",    "some",  "such",   "than",  "that",  "the",   "their",
        "theirs","them",  "then",  "there",  "these", "they",  "this",  "those",
        "to",    "too",   "under", "until",  "up",    "very",  "was",   "we",
        "were",  "what",  "when",  "where",  "which", "while", "who",   "whom",
        "why",   "will",  "with",  "you",    "your",  "yours",
    };
    return words;
}

inline FilterRules default_filter_rules() {
    FilterRules rules;
    rules.stopwords = default_stopwords();
    rules.date_pattern_sources = default_date_pattern_sources();
    for (const auto& src : rules.date_pattern_sources)
        rules.date_patterns.emplace_back(src);
    return rules;
}

// Plain text stopword list, one word per line, '#' starts a comment.
inline std::unordered_set<std::string> load_stopword_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open stopword file: " + path);
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        std::size_t e = line.find_last_not_of(" \t\r");
        words.insert(line.substr(b, e - b + 1));
    }
    return words;
}

// Compatibility-fold, lowercase, trim, and join internal whitespace runs
// with underscores. Pure text transform, no filtering.
inline std::string fold_tag_text(std::string_view raw) {
    std::u32string folded;
    folded.reserve(raw.size());
    for (char32_t cp : detail::decode_utf8(raw)) detail::fold_compat_cp(cp, folded);

    std::u32string lowered;
    lowered.reserve(folded.size());
    for (char32_t cp : folded) lowered.push_back(detail::to_lower_cp(cp));

    // Trim and collapse whitespace runs to a single '_'.
    std::size_t begin = 0, end = lowered.size();
    while (begin < end && detail::is_space_cp(lowered[begin])) ++begin;
    while (end > begin && detail::is_space_cp(lowered[end - 1])) --end;

    std::string out;
    bool in_gap = false;
    for (std::size_t i = begin; i < end; ++i) {
        if (detail::is_space_cp(lowered[i])) {
            in_gap = true;
            continue;
        }
        if (in_gap) {
            out.push_back('_');
            in_gap = false;
        }
        detail::encode_utf8(lowered[i], out);
    }
    return out;
}

// Normalizes a raw tag and applies the filter rules. Returns nothing for
// tags that are filtered out: empty after normalization, date-shaped,
// containing digits/punctuation/symbols, or stopwords.
inline std::optional<Tag> normalize_tag(std::string_view raw, const FilterRules& rules) {
    std::string text = fold_tag_text(raw);
    if (text.empty()) return std::nullopt;
    if (rules.matches_date(text)) return std::nullopt;
    for (char32_t cp : detail::decode_utf8(text)) {
        if (detail::is_digit_cp(cp) || detail::is_punct_or_symbol_cp(cp))
            return std::nullopt;
    }
    if (rules.is_stopword(text)) return std::nullopt;
    return Tag(text);
}

}  // namespace vitag

template <>
struct std::hash<vitag::Tag> {
    std::size_t operator()(const vitag::Tag& t) const noexcept {
        return std::hash<std::string>{}(t.text());
    }
};
