// Copyright 2026 the squatwatch authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "squatwatch/similarity.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <vector>

#include "squatwatch/errors.hpp"
#include "squatwatch/text.hpp"

namespace squatwatch {

namespace phonetic {

namespace {

std::string letters_upper(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (std::isalpha(static_cast<unsigned char>(c))) out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return out;
}

char soundex_digit(char c) {
    switch (c) {
        case 'B': case 'F': case 'P': case 'V': return '1';
        case 'C': case 'G': case 'J': case 'K': case 'Q': case 'S': case 'X': case 'Z': return '2';
        case 'D': case 'T': return '3';
        case 'L': return '4';
        case 'M': case 'N': return '5';
        case 'R': return '6';
        default: return '0';  // vowels, H, W, Y
    }
}

bool is_vowel(char c) { return c == 'A' || c == 'E' || c == 'I' || c == 'O' || c == 'U'; }

}  // namespace

std::string soundex(std::string_view s) {
    const std::string w = letters_upper(s);
    if (w.empty()) return {};
    std::string out(1, w[0]);
    char last = soundex_digit(w[0]);
    for (std::size_t i = 1; i < w.size() && out.size() < 4; ++i) {
        char c = w[i];
        char d = soundex_digit(c);
        if (d != '0' && d != last) out += d;
        // H and W do not separate letters with the same code; vowels do.
        if (c != 'H' && c != 'W') last = d;
    }
    out.resize(4, '0');
    return out;
}

std::string metaphone(std::string_view s) {
    std::string w = letters_upper(s);
    if (w.empty()) return {};
    auto at = [&](std::ptrdiff_t i) -> char {
        return i >= 0 && i < static_cast<std::ptrdiff_t>(w.size()) ? w[i] : '\0';
    };
    std::string out;
    std::size_t start = 0;

    // Initial exceptions.
    std::string_view head(w.data(), std::min<std::size_t>(2, w.size()));
    if (head == "AE" || head == "GN" || head == "KN" || head == "PN" || head == "WR") {
        start = 1;
    } else if (w[0] == 'X') {
        out += 'S';
        start = 1;
    } else if (head == "WH") {
        out += 'W';
        start = 2;
    }

    for (std::size_t i = start; i < w.size(); ++i) {
        const auto k = static_cast<std::ptrdiff_t>(i);
        char c = w[i];
        if (c != 'C' && k > 0 && at(k - 1) == c) continue;
        switch (c) {
            case 'A': case 'E': case 'I': case 'O': case 'U':
                if (i == 0) out += c;
                break;
            case 'B':
                if (!(i + 1 == w.size() && at(k - 1) == 'M')) out += 'B';
                break;
            case 'C':
                if (at(k + 1) == 'I' && at(k + 2) == 'A') {
                    out += 'X';
                } else if (at(k + 1) == 'H') {
                    out += (at(k - 1) == 'S') ? 'K' : 'X';
                    ++i;
                } else if (at(k + 1) == 'I' || at(k + 1) == 'E' || at(k + 1) == 'Y') {
                    if (at(k - 1) != 'S') out += 'S';
                } else {
                    out += 'K';
                }
                break;
            case 'D':
                if (at(k + 1) == 'G' && (at(k + 2) == 'E' || at(k + 2) == 'Y' || at(k + 2) == 'I')) {
                    out += 'J';
                    ++i;
                } else {
                    out += 'T';
                }
                break;
            case 'G':
                if (at(k + 1) == 'H' && !(k + 2 >= static_cast<std::ptrdiff_t>(w.size()) || is_vowel(at(k + 2)))) {
                    break;  // silent in "GH" before a consonant
                }
                if (at(k + 1) == 'N' && (k + 2 == static_cast<std::ptrdiff_t>(w.size()) ||
                                         (at(k + 2) == 'E' && at(k + 3) == 'D' && k + 4 == static_cast<std::ptrdiff_t>(w.size())))) {
                    break;  // "GN", "GNED" endings
                }
                if ((at(k + 1) == 'I' || at(k + 1) == 'E' || at(k + 1) == 'Y') && at(k - 1) != 'G') {
                    out += 'J';
                } else {
                    out += 'K';
                }
                break;
            case 'H':
                if (is_vowel(at(k + 1)) && std::string_view("CSPTG").find(at(k - 1)) == std::string_view::npos) out += 'H';
                break;
            case 'K':
                if (at(k - 1) != 'C') out += 'K';
                break;
            case 'P':
                if (at(k + 1) == 'H') {
                    out += 'F';
                    ++i;
                } else {
                    out += 'P';
                }
                break;
            case 'Q': out += 'K'; break;
            case 'S':
                if (at(k + 1) == 'H') {
                    out += 'X';
                    ++i;
                } else if (at(k + 1) == 'I' && (at(k + 2) == 'O' || at(k + 2) == 'A')) {
                    out += 'X';
                } else {
                    out += 'S';
                }
                break;
            case 'T':
                if (at(k + 1) == 'I' && (at(k + 2) == 'O' || at(k + 2) == 'A')) {
                    out += 'X';
                } else if (at(k + 1) == 'H') {
                    out += '0';
                    ++i;
                } else if (!(at(k + 1) == 'C' && at(k + 2) == 'H')) {
                    out += 'T';
                }
                break;
            case 'V': out += 'F'; break;
            case 'W':
            case 'Y':
                if (is_vowel(at(k + 1))) out += c;
                break;
            case 'X': out += "KS"; break;
            case 'Z': out += 'S'; break;
            default: out += c; break;  // F J L M N R
        }
    }
    return out;
}

}  // namespace phonetic

std::size_t longest_common_substring(std::string_view a, std::string_view b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    std::size_t best = 0;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : 0;
            best = std::max(best, cur[j]);
        }
        std::swap(prev, cur);
    }
    return best;
}

namespace {

// Longest matching block inside a[alo,ahi) x b[blo,bhi); earliest in a, then b, on ties.
struct Block {
    std::size_t i, j, size;
};

Block longest_match(std::string_view a, std::string_view b, std::size_t alo, std::size_t ahi, std::size_t blo,
                    std::size_t bhi) {
    Block best{alo, blo, 0};
    std::vector<std::size_t> prev(bhi - blo + 1, 0), cur(bhi - blo + 1, 0);
    for (std::size_t i = alo; i < ahi; ++i) {
        for (std::size_t j = blo; j < bhi; ++j) {
            std::size_t k = a[i] == b[j] ? prev[j - blo] + 1 : 0;
            cur[j - blo + 1] = k;
            if (k > best.size) best = {i + 1 - k, j + 1 - k, k};
        }
        std::swap(prev, cur);
        std::fill(cur.begin(), cur.end(), 0);
    }
    return best;
}

std::size_t matched(std::string_view a, std::string_view b, std::size_t alo, std::size_t ahi, std::size_t blo,
                    std::size_t bhi) {
    if (alo >= ahi || blo >= bhi) return 0;
    Block m = longest_match(a, b, alo, ahi, blo, bhi);
    if (m.size == 0) return 0;
    return m.size + matched(a, b, alo, m.i, blo, m.j) + matched(a, b, m.i + m.size, ahi, m.j + m.size, bhi);
}

std::set<std::string_view> bigrams(std::string_view s) {
    std::set<std::string_view> out;
    for (std::size_t i = 0; i + 2 <= s.size(); ++i) out.insert(s.substr(i, 2));
    return out;
}

}  // namespace

std::size_t matching_characters(std::string_view a, std::string_view b) {
    return matched(a, b, 0, a.size(), 0, b.size());
}

SimilarityBreakdown typosim(std::string_view a, std::string_view b) {
    if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyString, "typosim needs two non-empty strings");
    // Canonical argument order keeps every component exactly symmetric.
    if (b < a) std::swap(a, b);
    SimilarityBreakdown s;
    const double longest = static_cast<double>(std::max(a.size(), b.size()));
    s.normalized_damerau_levenshtein = 1.0 - text::damerau_levenshtein(a, b) / longest;

    if (a.size() >= 2 && b.size() >= 2) {
        auto ga = bigrams(a), gb = bigrams(b);
        std::size_t inter = 0;
        for (auto g : ga) inter += gb.count(g);
        s.ngram_jaccard = static_cast<double>(inter) / static_cast<double>(ga.size() + gb.size() - inter);
    }

    auto code_equal = [](const std::string& x, const std::string& y, std::string_view ra, std::string_view rb) {
        if (x.empty() || y.empty()) return ra == rb;
        return x == y;
    };
    double sx = code_equal(phonetic::soundex(a), phonetic::soundex(b), a, b) ? 1.0 : 0.0;
    double mp = code_equal(phonetic::metaphone(a), phonetic::metaphone(b), a, b) ? 1.0 : 0.0;
    s.phonetic = (sx + mp) / 2.0;

    s.substring = static_cast<double>(longest_common_substring(a, b)) / longest;
    s.fuzzy_ratio = 2.0 * static_cast<double>(matching_characters(a, b)) / static_cast<double>(a.size() + b.size());
    s.max_score = std::max({s.normalized_damerau_levenshtein, s.ngram_jaccard, s.phonetic, s.substring, s.fuzzy_ratio});
    return s;
}

void to_json(nlohmann::json& j, const SimilarityBreakdown& s) {
    j = nlohmann::json{{"normalized_damerau_levenshtein", s.normalized_damerau_levenshtein},
                       {"ngram_jaccard", s.ngram_jaccard},
                       {"phonetic", s.phonetic},
                       {"substring", s.substring},
                       {"fuzzy_ratio", s.fuzzy_ratio},
                       {"max_score", s.max_score}};
}

void from_json(const nlohmann::json& j, SimilarityBreakdown& s) {
    s.normalized_damerau_levenshtein = j.at("normalized_damerau_levenshtein").get<double>();
    s.ngram_jaccard = j.at("ngram_jaccard").get<double>();
    s.phonetic = j.at("phonetic").get<double>();
    s.substring = j.at("substring").get<double>();
    s.fuzzy_ratio = j.at("fuzzy_ratio").get<double>();
    s.max_score = j.at("max_score").get<double>();
}

}  // namespace squatwatch
