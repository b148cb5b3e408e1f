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

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "squatwatch/metadata.hpp"
#include "squatwatch/registry.hpp"

namespace squatwatch {

/// Popularity thresholds deciding which packages count as trusted.
struct TrustPolicy {
    std::map<RegistryId, std::int64_t> download_threshold;
    std::map<RegistryId, double> ranking_threshold;  // trusted iff avg_ranking <= threshold
    double download_dominance = 10.0;
    double ranking_dominance = 2.0;

    static TrustPolicy defaults();

    /// Throws InvalidParams on non-positive thresholds or factors <= 1.
    void validate() const;
};

enum class TrustSignal { Downloads, Ranking, None };

struct TrustVerdict {
    bool trusted = false;
    TrustSignal signal_used = TrustSignal::None;
    std::optional<double> signal_value;
};

TrustVerdict is_trusted(const PackageMetadata& meta, const TrustPolicy& policy);

/// Higher is more popular: downloads, or 1 / (1 + avg_ranking). nullopt when
/// the registry's signal is missing.
std::optional<double> popularity_score(const PackageMetadata& meta);

/// Whether `target` dominates `suspect` in popularity (10x downloads, or a
/// ranking score at least twice as high). Throws SignalMissing when no signal
/// is present on both sides.
bool is_more_trusted(const PackageMetadata& target, const PackageMetadata& suspect,
                     const TrustPolicy& policy);

/// Trusted packages of a registry ordered by descending popularity, then
/// name. Packages on the analyst deny set are excluded. Throws NoSnapshot.
std::vector<PackageRef> trusted_set(const MetadataStore& store, RegistryId registry,
                                    const TrustPolicy& policy);

}  // namespace squatwatch
