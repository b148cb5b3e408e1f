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

#pragma once

#include <string>
#include <string_view>

#include "json.hpp"

namespace squatwatch {

/// Five string-similarity views of a name pair, each in [0, 1].
struct SimilarityBreakdown {
    double normalized_damerau_levenshtein = 0;
    double ngram_jaccard = 0;
    double phonetic = 0;
    double substring = 0;
    double fuzzy_ratio = 0;
    double max_score = 0;

    bool operator==(const SimilarityBreakdown&) const = default;
};

/// Throws EmptyString when either side is empty. Symmetric.
SimilarityBreakdown typosim(std::string_view a, std::string_view b);

namespace phonetic {

/// American Soundex over the letters of `s`: first letter plus three digits.
/// Empty when `s` has no letters.
std::string soundex(std::string_view s);

/// Original Metaphone key over the letters of `s`, uppercase.
std::string metaphone(std::string_view s);

}  // namespace phonetic

/// Longest common substring length.
std::size_t longest_common_substring(std::string_view a, std::string_view b);

/// Characters matched by recursive longest-block matching (difflib style).
std::size_t matching_characters(std::string_view a, std::string_view b);

void to_json(nlohmann::json& j, const SimilarityBreakdown& s);
void from_json(const nlohmann::json& j, SimilarityBreakdown& s);

}  // namespace squatwatch
