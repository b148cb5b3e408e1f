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
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "squatwatch/metadata.hpp"
#include "squatwatch/registry.hpp"
#include "squatwatch/trust.hpp"

namespace squatwatch::synthetic {

/// Shape of a generated multi-registry world. Names come from a technical
/// vocabulary in which groups of interchangeable spellings ("img"/"image",
/// "meta"/"facebook") are used at random, so that a trained embedder sees
/// them in the same contexts.
struct WorldParams {
    std::uint64_t seed = 7;
    std::size_t npm_flat = 4000;
    std::size_t npm_scoped = 2000;
    std::size_t huggingface = 2000;
    std::size_t golang = 2000;
    double trusted_fraction = 0.25;
    Timestamp now = Timestamp{std::chrono::sys_days{std::chrono::year{2025} / 1 / 15}};
};

struct World {
    std::vector<PackageMetadata> packages;
    Timestamp now{};

    std::vector<RegistryId> registries() const;
    std::vector<PackageMetadata> of(RegistryId registry) const;

    /// Training text for the embedder, one entry per package.
    std::vector<std::string> corpus() const;
};

World make_world(const WorldParams& params, const TrustPolicy& policy = TrustPolicy::defaults());

/// Flat, delimiter-joined names for a standalone corpus file.
std::vector<std::string> make_flat_names(std::size_t count, std::uint64_t seed);

/// One JSON record per line, as accepted by MetadataStore::ingest_snapshot.
void write_snapshot(std::ostream& out, const std::vector<PackageMetadata>& packages);

struct InjectedAttack {
    PackageMetadata package;  // the malicious look-alike (untrusted)
    PackageRef target;        // trusted package it imitates
    AttackCategory technique;
};

/// The eight confusion techniques the generator can apply (every category
/// except OtherLexical).
std::vector<AttackCategory> attack_techniques();

/// Applies `technique` to `target` and returns the look-alike raw name, or
/// nullopt when the technique does not fit the name or every attempt collides
/// with `taken`.
std::optional<std::string> mutate_name(const PackageRef& target, AttackCategory technique, std::mt19937_64& rng,
                                       const std::function<bool(const std::string&)>& taken);

/// Metadata typical of a freshly published look-alike: one recent version, no
/// downloads to speak of, a throwaway maintainer, description copied from the
/// target.
PackageMetadata attack_metadata(const PackageRef& ref, const PackageMetadata& target, Timestamp now,
                                std::mt19937_64& rng);

/// `count` attacks spread round-robin over attack_techniques(), each against a
/// random trusted package of a registry where the technique applies.
std::vector<InjectedAttack> make_attacks(const World& world, std::size_t count, std::uint64_t seed,
                                         const TrustPolicy& policy = TrustPolicy::defaults());

}  // namespace squatwatch::synthetic
