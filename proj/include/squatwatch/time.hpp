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

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace squatwatch {

using Timestamp = std::chrono::sys_seconds;
using Duration = std::chrono::seconds;

/// Parses an RFC 3339 timestamp ("2024-05-01T12:00:00Z", fractional seconds
/// and numeric offsets accepted). Returns nullopt on malformed input.
std::optional<Timestamp> parse_rfc3339(std::string_view text);

/// Formats as UTC with a trailing "Z", second precision.
std::string format_rfc3339(Timestamp t);

Timestamp now_utc();

constexpr Duration days_of(long n) { return std::chrono::hours(24 * n); }

}  // namespace squatwatch
