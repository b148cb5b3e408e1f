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
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "squatwatch/registry.hpp"
#include "squatwatch/time.hpp"

namespace squatwatch {

/// READMEs longer than this are cut at a UTF-8 boundary on ingestion.
inline constexpr size_t kReadmeCapBytes = 64 * 1024;

struct VersionEntry {
    std::string version;
    Timestamp published_at;

    friend bool operator==(const VersionEntry&, const VersionEntry&) = default;
};

struct PackageMetadata {
    PackageRef ref;
    std::optional<std::string> description;
    std::optional<std::string> readme;
    bool readme_truncated = false;
    std::optional<std::string> license;
    std::vector<std::string> maintainers;
    std::optional<std::string> repository_url;
    std::vector<VersionEntry> versions;  // ascending by published_at
    std::optional<std::int64_t> weekly_downloads;
    std::optional<double> avg_ranking;  // lower is more popular
    bool verified_prefix = false;
    std::optional<PackageRef> relocation_target;
    std::optional<Timestamp> created_at;
    std::optional<Timestamp> last_updated_at;

    bool operator==(const PackageMetadata& o) const;
};

/// Serializes to the line-oriented metadata record format.
nlohmann::json metadata_to_json(const PackageMetadata& meta);

/// Parses one metadata record. Sorts versions, derives last_updated_at and
/// applies the README cap. Throws Error{MalformedName|InvalidArgument} on
/// records that cannot be used.
PackageMetadata metadata_from_json(const nlohmann::json& record,
                                   std::optional<RegistryId> expected_registry = std::nullopt);

enum class AllowListKind { Organization, MirrorDomain, CustomerPackage, DeniedPackage };
enum class AllowListAction { Add, Remove };

std::string_view allowlist_kind_name(AllowListKind kind);
AllowListKind parse_allowlist_kind(std::string_view name);
AllowListAction parse_allowlist_action(std::string_view name);

/// Allow-lists consulted by the benignity rules, plus the analyst deny set
/// that removes packages from the trusted set. Values are stored lowercased.
struct AllowLists {
    std::set<std::string> organizations;
    std::set<std::string> mirror_domains;
    std::set<std::string> customer_packages;  // "registry:name"
    std::set<std::string> denied_packages;    // "registry:name"

    bool has_organization(std::string_view ns) const;
    bool has_mirror_domain(std::string_view domain) const;
    bool is_customer_package(const PackageRef& ref) const;
    bool is_denied(const PackageRef& ref) const;

    static std::string package_key(const PackageRef& ref);

    friend bool operator==(const AllowLists&, const AllowLists&) = default;
};

struct SnapshotInfo {
    RegistryId registry = RegistryId::Npm;
    Timestamp ingested_at{};
    std::size_t package_count = 0;
    std::size_t skipped_lines = 0;
};

/// Snapshot staleness beyond which callers should warn.
inline constexpr Duration kStaleAfter = days_of(7);

/// Package metadata and allow-lists backed by a single append-only JSON-lines
/// file with an in-memory index. Readers share a lock; ingestion and allow-list
/// updates take it exclusively.
class MetadataStore {
public:
    /// In-memory store without persistence.
    MetadataStore();

    /// Opens (or creates) the log at `path` and replays it.
    explicit MetadataStore(std::filesystem::path path);

    MetadataStore(const MetadataStore&) = delete;
    MetadataStore& operator=(const MetadataStore&) = delete;

    /// Reads metadata records line by line. Malformed lines are skipped and
    /// counted. Throws IoFailure on a bad stream, EmptySnapshot when nothing
    /// valid was read.
    SnapshotInfo ingest_snapshot(RegistryId registry, std::istream& source,
                                 std::optional<Timestamp> ingested_at = std::nullopt);

    std::optional<PackageMetadata> get_metadata(const PackageRef& ref) const;
    std::optional<PackageMetadata> find(RegistryId registry, std::string_view raw) const;

    /// now - last ingestion time. Throws NoSnapshot.
    Duration staleness(RegistryId registry, Timestamp now) const;
    static bool is_stale(Duration d) { return d > kStaleAfter; }

    std::optional<SnapshotInfo> latest_snapshot(RegistryId registry) const;

    AllowLists update_allowlist(AllowListKind kind, std::string_view value, AllowListAction action);
    AllowLists allow_lists() const;

    /// All packages of a registry, ordered by raw name.
    std::vector<PackageMetadata> packages(RegistryId registry) const;
    std::size_t package_count(RegistryId registry) const;

    /// Direct insert used by fixtures and generators; persisted like ingested
    /// records.
    void upsert(PackageMetadata meta);

    /// Reserved nuget prefixes seen so far (from verified records).
    std::vector<std::string> reserved_prefixes() const;

private:
    struct Key {
        RegistryId registry;
        std::string raw;
        auto operator<=>(const Key&) const = default;
    };

    void replay();
    void append_lines(const std::vector<std::string>& lines);
    bool apply_record_locked(PackageMetadata meta);
    void apply_allowlist_locked(AllowListKind kind, const std::string& value, AllowListAction action);

    mutable std::shared_mutex mutex_;
    std::optional<std::filesystem::path> path_;
    std::map<Key, PackageMetadata> records_;
    std::map<RegistryId, SnapshotInfo> snapshots_;
    AllowLists allow_;
    std::set<std::string> reserved_prefixes_;
};

}  // namespace squatwatch
