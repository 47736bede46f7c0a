#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace vitag::detail {

// Minimal UTF-8 handling for tag normalization. Invalid byte sequences
// decode to U+FFFD so normalization stays total and deterministic.

inline std::vector<char32_t> decode_utf8(std::string_view s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const unsigned char b0 = static_cast<unsigned char>(s[i]);
        char32_t cp = 0xFFFD;
        std::size_t len = 1;
        if (b0 < 0x80) {
            cp = b0;
        } else if ((b0 & 0xE0) == 0xC0 && i + 1 < s.size() &&
                   (static_cast<unsigned char>(s[i + 1]) & 0xC0) == 0x80) {
            cp = (static_cast<char32_t>(b0 & 0x1F) << 6) |
                 (static_cast<unsigned char>(s[i + 1]) & 0x3F);
            len = 2;
            if (cp < 0x80) cp = 0xFFFD;
        } else if ((b0 & 0xF0) == 0xE0 && i + 2 < s.size() &&
                   (static_cast<unsigned char>(s[i + 1]) & 0xC0) == 0x80 &&
                   (static_cast<unsigned char>(s[i + 2]) & 0xC0) == 0x80) {
            cp = (static_cast<char32_t>(b0 & 0x0F) << 12) |
                 ((static_cast<char32_t>(s[i + 1]) & 0x3F) << 6) |
                 (static_cast<unsigned char>(s[i + 2]) & 0x3F);
            len = 3;
            if (cp < 0x800 || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
        } else if ((b0 & 0xF8) == 0xF0 && i + 3 < s.size() &&
                   (static_cast<unsigned char>(s[i + 1]) & 0xC0) == 0x80 &&
                   (static_cast<unsigned char>(s[i + 2]) & 0xC0) == 0x80 &&
                   (static_cast<unsigned char>(s[i + 3]) & 0xC0) == 0x80) {
            cp = (static_cast<char32_t>(b0 & 0x07) << 18) |
                 ((static_cast<char32_t>(s[i + 1]) & 0x3F) << 12) |
                 ((static_cast<char32_t>(s[i + 2]) & 0x3F) << 6) |
                 (static_cast<unsigned char>(s[i + 3]) & 0x3F);
            len = 4;
            if (cp < 0x10000 || cp > 0x10FFFF) cp = 0xFFFD;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

inline void encode_utf8(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline bool is_space_cp(char32_t c) {
    return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' ||
           c == U'\v';
}

inline bool is_digit_cp(char32_t c) {
    return (c >= U'0' && c <= U'9') ||
           (c >= 0x0660 && c <= 0x0669) ||   // Arabic-Indic
           (c >= 0x06F0 && c <= 0x06F9) ||   // extended Arabic-Indic
           (c >= 0x0966 && c <= 0x096F) ||   // Devanagari
           c == 0x00B2 || c == 0x00B3 || c == 0x00B9 ||  // superscripts 2,3,1
           (c >= 0x2070 && c <= 0x2079) ||   // superscript digits
           (c >= 0x2080 && c <= 0x2089);     // subscript digits
}

// Punctuation and symbol detection over the ranges that occur in web
// tags. Underscore is exempt: it is the canonical multi-word joiner.
inline bool is_punct_or_symbol_cp(char32_t c) {
    if (c == U'_') return false;
    if (c < 0x80) {
        return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
               (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
    }
    if (c >= 0x00A1 && c <= 0x00BF) return c != 0x00B2 && c != 0x00B3 && c != 0x00B9;
    if (c == 0x00D7 || c == 0x00F7) return true;          // multiply, divide
    if (c >= 0x2000 && c <= 0x206F) return !is_digit_cp(c);  // general punctuation
    if (c >= 0x20A0 && c <= 0x20CF) return true;          // currency
    if (c >= 0x2100 && c <= 0x2BFF) return true;          // letterlike..misc symbols
    if (c >= 0x3000 && c <= 0x303F) return true;          // CJK punctuation
    if (c >= 0xFE30 && c <= 0xFE6F) return true;          // compat forms, small forms
    if (c >= 0xFF01 && c <= 0xFF0F) return true;          // fullwidth punctuation
    if (c >= 0xFF1A && c <= 0xFF20) return true;
    if (c >= 0xFF3B && c <= 0xFF40) return true;
    if (c >= 0xFF5B && c <= 0xFF65) return true;
    if (c >= 0x1F000 && c <= 0x1FAFF) return true;        // emoji blocks
    return false;
}

inline char32_t to_lower_cp(char32_t c) {
    if (c >= U'A' && c <= U'Z') return c + 0x20;
    if (c >= 0x00C0 && c <= 0x00DE && c != 0x00D7) return c + 0x20;  // Latin-1
    if (c >= 0x0100 && c <= 0x0177) return (c % 2 == 0) ? c + 1 : c; // Latin ext-A pairs
    if (c >= 0x0391 && c <= 0x03A9 && c != 0x03A2) return c + 0x20;  // Greek
    if (c >= 0x0410 && c <= 0x042F) return c + 0x20;                 // Cyrillic
    if (c >= 0x0400 && c <= 0x040F) return c + 0x50;
    return c;
}

// Compatibility folding for the forms seen in scraped tags: fullwidth
// ASCII, typographic spaces/dashes/quotes, the fi/fl ligatures, and
// zero-width characters. Not a full Unicode NFKC pass.
inline void fold_compat_cp(char32_t c, std::u32string& out) {
    if (c >= 0xFF01 && c <= 0xFF5E) {  // fullwidth -> ASCII
        out.push_back(c - 0xFEE0);
        return;
    }
    if (c == 0x00A0 || (c >= 0x2000 && c <= 0x200A) || c == 0x202F ||
        c == 0x205F || c == 0x3000) {
        out.push_back(U' ');
        return;
    }
    if (c >= 0x2010 && c <= 0x2015) {  // hyphens and dashes
        out.push_back(U'-');
        return;
    }
    if (c == 0x2018 || c == 0x2019 || c == 0x201B) {
        out.push_back(U'\'');
        return;
    }
    if (c == 0x201C || c == 0x201D || c == 0x201F) {
        out.push_back(U'"');
        return;
    }
    if (c == 0x2044) {
        out.push_back(U'/');
        return;
    }
    if (c == 0xFB01) {  // fi
        out.push_back(U'f');
        out.push_back(U'i');
        return;
    }
    if (c == 0xFB02) {  // fl
        out.push_back(U'f');
        out.push_back(U'l');
        return;
    }
    if ((c >= 0x200B && c <= 0x200D) || c == 0xFEFF) return;  // zero width
    out.push_back(c);
}

}  // namespace vitag::detail
