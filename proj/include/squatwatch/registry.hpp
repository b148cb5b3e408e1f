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

#include <array>
#include <compare>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace squatwatch {

enum class RegistryId { Npm, Pypi, Rubygems, Maven, Golang, Huggingface, Nuget };

inline constexpr std::array<RegistryId, 7> kAllRegistries = {
    RegistryId::Npm,    RegistryId::Pypi,        RegistryId::Rubygems, RegistryId::Maven,
    RegistryId::Golang, RegistryId::Huggingface, RegistryId::Nuget};

std::string_view registry_name(RegistryId id);

/// Throws Error{UnknownRegistry} for anything outside the seven supported names.
RegistryId parse_registry(std::string_view name);

/// Registries that publish download counts (the rest expose a ranking score).
bool uses_download_signal(RegistryId id);

enum class NamePart { Full, Namespace, Identifier };

std::string_view part_name(NamePart part);
NamePart parse_part(std::string_view name);

/// A registry-aware package name split into its components.
struct PackageRef {
    RegistryId registry = RegistryId::Npm;
    std::string raw;
    std::optional<std::string> domain;      // golang host
    std::optional<std::string> namespace_;  // scope, groupId, author, reserved prefix
    std::string identifier;
    std::string normalized;

    bool hierarchical() const { return namespace_.has_value() || domain.has_value(); }

    /// Normalized name used for name similarity. Identical to `normalized`
    /// except that golang drops the host domain.
    std::string similarity_key() const;

    /// Rebuilds the published name from its components.
    std::string reconstruct() const;

    /// Normalized text of one part. Throws MissingComponent when the part
    /// is absent (namespace of a flat name).
    std::string part_text(NamePart part) const;

    friend bool operator==(const PackageRef& a, const PackageRef& b) {
        return a.registry == b.registry && a.raw == b.raw;
    }
    friend std::strong_ordering operator<=>(const PackageRef& a, const PackageRef& b) {
        if (auto c = a.registry <=> b.registry; c != 0) return c;
        return a.raw <=> b.raw;
    }
};

/// {"registry", "name", "reserved_prefix"?} plus the parsed components for
/// readers; parsing reads only the first three.
void to_json(nlohmann::json& j, const PackageRef& ref);
/// Throws InvalidArgument, UnknownRegistry or MalformedName.
void from_json(const nlohmann::json& j, PackageRef& ref);

/// Parses a published name according to the registry's naming grammar.
/// `reserved_prefixes` only matters for nuget: a name is hierarchical when it
/// starts with one of them followed by ".".
/// Throws MalformedName on illegal characters or a wrong segment count.
PackageRef parse_name(RegistryId registry, std::string_view raw,
                      std::span<const std::string> reserved_prefixes = {});

enum class AttackCategory {
    OneStepLevenshtein,
    SequenceReordering,
    ScopeConfusion,
    SemanticSubstitution,
    AlternateSpelling,
    ImpersonationSquatting,
    CompoundSquatting,
    DomainConfusion,
    OtherLexical,
};

std::string_view category_name(AttackCategory c);
std::optional<AttackCategory> parse_category(std::string_view name);

/// Alternate spellings ("colour"/"color", "0"/"o", "rn"/"m", ...). Pairs are
/// applied in both directions.
class SubstitutionTable {
public:
    SubstitutionTable() = default;
    explicit SubstitutionTable(std::vector<std::pair<std::string, std::string>> pairs);

    /// The shipped table.
    static const SubstitutionTable& builtin();

    /// "from,to" per line, "#" starts a comment. Throws IoFailure.
    static SubstitutionTable load(const std::string& path);

    const std::vector<std::pair<std::string, std::string>>& pairs() const { return pairs_; }

    /// True when one substitution (all occurrences or a single one) turns `a`
    /// into `b` or `b` into `a`. Inputs are normalized names.
    bool links(std::string_view a, std::string_view b) const;

private:
    std::vector<std::pair<std::string, std::string>> pairs_;
};

struct CategoryRules {
    const SubstitutionTable* substitutions = &SubstitutionTable::builtin();
    double namespace_similarity_min = 0.90;
    int component_distance_max = 2;
};

/// Assigns exactly one taxonomy label to a flagged pair. The first matching
/// rule wins: domain confusion, impersonation, compound, scope confusion,
/// reordering, one-step edit, alternate spelling, semantic substitution,
/// other lexical.
AttackCategory classify_attack_category(const PackageRef& suspect, const PackageRef& target,
                                        int lexical_distance,
                                        std::optional<double> author_similarity,
                                        const CategoryRules& rules = {});

}  // namespace squatwatch
