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
#include <vector>

namespace squatwatch::text {

/// Delimiters stripped from package names: "/", ":", "@", "-", "_", ".".
bool is_name_delimiter(char c);

std::string to_lower(std::string_view s);

/// Lowercases and removes every name delimiter.
std::string normalize_name(std::string_view s);

/// Lowercased, delimiter-split, non-empty tokens in order of appearance.
std::vector<std::string> split_tokens(std::string_view s);

/// Lowercased alphanumeric word tokens of free text (descriptions, READMEs).
std::vector<std::string> word_tokens(std::string_view s);

/// Token-set Jaccard similarity; 0 when both sides are empty.
double token_jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// Damerau-Levenshtein distance in its optimal-string-alignment form:
/// insertion, deletion, substitution and adjacent transposition all cost 1.
int damerau_levenshtein(std::string_view a, std::string_view b);

/// Same distance, but gives up once it is certain to exceed `limit` and
/// returns limit + 1 in that case. Only the diagonal band of width
/// 2 * limit + 1 is evaluated.
int damerau_levenshtein_bounded(std::string_view a, std::string_view b, int limit);

bool contains_ci(std::string_view haystack, std::string_view needle);

std::string trim(std::string_view s);

}  // namespace squatwatch::text
