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

#include "squatwatch/trust.hpp"

#include <algorithm>

#include "squatwatch/errors.hpp"

namespace squatwatch {

TrustPolicy TrustPolicy::defaults() {
    TrustPolicy p;
    p.download_threshold = {{RegistryId::Npm, 5000},
                            {RegistryId::Pypi, 5000},
                            {RegistryId::Rubygems, 5000},
                            {RegistryId::Nuget, 5000},
                            {RegistryId::Huggingface, 1000}};
    p.ranking_threshold = {{RegistryId::Maven, 10.0}, {RegistryId::Golang, 4.0}};
    return p;
}

void TrustPolicy::validate() const {
    for (const auto& [r, t] : download_threshold) {
        if (t <= 0) throw Error(ErrorCode::InvalidParams, "download threshold must be > 0");
    }
    for (const auto& [r, t] : ranking_threshold) {
        if (t <= 0) throw Error(ErrorCode::InvalidParams, "ranking threshold must be > 0");
    }
    if (download_dominance <= 1.0 || ranking_dominance <= 1.0) {
        throw Error(ErrorCode::InvalidParams, "dominance factors must be > 1");
    }
}

TrustVerdict is_trusted(const PackageMetadata& meta, const TrustPolicy& policy) {
    const RegistryId r = meta.ref.registry;
    TrustVerdict v;
    if (uses_download_signal(r)) {
        const auto it = policy.download_threshold.find(r);
        if (!meta.weekly_downloads || it == policy.download_threshold.end()) return v;
        v.signal_used = TrustSignal::Downloads;
        v.signal_value = static_cast<double>(*meta.weekly_downloads);
        v.trusted = *meta.weekly_downloads >= it->second;
    } else {
        const auto it = policy.ranking_threshold.find(r);
        if (!meta.avg_ranking || it == policy.ranking_threshold.end()) return v;
        v.signal_used = TrustSignal::Ranking;
        v.signal_value = *meta.avg_ranking;
        v.trusted = *meta.avg_ranking <= it->second;
    }
    return v;
}

std::optional<double> popularity_score(const PackageMetadata& meta) {
    if (uses_download_signal(meta.ref.registry)) {
        if (!meta.weekly_downloads) return std::nullopt;
        return static_cast<double>(*meta.weekly_downloads);
    }
    if (!meta.avg_ranking) return std::nullopt;
    return 1.0 / (1.0 + *meta.avg_ranking);
}

bool is_more_trusted(const PackageMetadata& target, const PackageMetadata& suspect,
                     const TrustPolicy& policy) {
    bool comparable = false;
    if (target.weekly_downloads && suspect.weekly_downloads) {
        comparable = true;
        const double t = static_cast<double>(*target.weekly_downloads);
        const double s = static_cast<double>(*suspect.weekly_downloads);
        if (t > s && t >= policy.download_dominance * s) return true;
    }
    if (target.avg_ranking && suspect.avg_ranking) {
        comparable = true;
        const double t = 1.0 / (1.0 + *target.avg_ranking);
        const double s = 1.0 / (1.0 + *suspect.avg_ranking);
        if (t > s && t >= policy.ranking_dominance * s) return true;
    }
    if (!comparable) {
        throw Error(ErrorCode::SignalMissing, "no popularity signal shared by '" + target.ref.raw +
                                                  "' and '" + suspect.ref.raw + "'");
    }
    return false;
}

std::vector<PackageRef> trusted_set(const MetadataStore& store, RegistryId registry,
                                    const TrustPolicy& policy) {
    if (!store.latest_snapshot(registry)) {
        throw Error(ErrorCode::NoSnapshot, "no snapshot ingested for " + std::string(registry_name(registry)));
    }
    const AllowLists allow = store.allow_lists();
    std::vector<std::pair<double, PackageRef>> picked;
    for (const auto& meta : store.packages(registry)) {
        if (allow.is_denied(meta.ref)) continue;
        if (is_trusted(meta, policy).trusted) picked.emplace_back(*popularity_score(meta), meta.ref);
    }
    std::sort(picked.begin(), picked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second.raw < b.second.raw;
    });
    std::vector<PackageRef> out;
    out.reserve(picked.size());
    for (auto& [score, ref] : picked) out.push_back(std::move(ref));
    return out;
}

}  // namespace squatwatch
