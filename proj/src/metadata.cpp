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

#include "squatwatch/metadata.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "squatwatch/errors.hpp"
#include "squatwatch/text.hpp"

namespace squatwatch {

using nlohmann::json;

namespace {

bool same_components(const PackageRef& a, const PackageRef& b) {
    return a.registry == b.registry && a.raw == b.raw && a.domain == b.domain &&
           a.namespace_ == b.namespace_ && a.identifier == b.identifier &&
           a.normalized == b.normalized;
}

std::optional<std::string> opt_string(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) {
        throw Error(ErrorCode::InvalidArgument, std::string("field '") + key + "' must be a string");
    }
    return it->get<std::string>();
}

std::optional<Timestamp> opt_time(const json& j, const char* key) {
    const auto s = opt_string(j, key);
    if (!s) return std::nullopt;
    auto t = parse_rfc3339(*s);
    if (!t) throw Error(ErrorCode::InvalidArgument, std::string("bad timestamp in '") + key + "'");
    return t;
}

std::string cap_utf8(std::string s, size_t cap, bool& truncated) {
    truncated = false;
    if (s.size() <= cap) return s;
    size_t cut = cap;
    while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
    s.resize(cut);
    truncated = true;
    return s;
}

constexpr std::array<std::string_view, 4> kAllowKindNames = {
    "organization", "mirror_domain", "customer_package", "denied_package"};

}  // namespace

bool PackageMetadata::operator==(const PackageMetadata& o) const {
    const bool reloc_eq = relocation_target.has_value() == o.relocation_target.has_value() &&
                          (!relocation_target || same_components(*relocation_target, *o.relocation_target));
    return same_components(ref, o.ref) && description == o.description && readme == o.readme &&
           readme_truncated == o.readme_truncated && license == o.license &&
           maintainers == o.maintainers && repository_url == o.repository_url &&
           versions == o.versions && weekly_downloads == o.weekly_downloads &&
           avg_ranking == o.avg_ranking && verified_prefix == o.verified_prefix && reloc_eq &&
           created_at == o.created_at && last_updated_at == o.last_updated_at;
}

json metadata_to_json(const PackageMetadata& m) {
    json j;
    j["registry"] = std::string(registry_name(m.ref.registry));
    j["name"] = m.ref.raw;
    if (m.ref.registry == RegistryId::Nuget && m.ref.namespace_) j["reserved_prefix"] = *m.ref.namespace_;
    auto put = [&](const char* key, const std::optional<std::string>& v) {
        j[key] = v ? json(*v) : json(nullptr);
    };
    put("description", m.description);
    put("readme", m.readme);
    if (m.readme_truncated) j["readme_truncated"] = true;
    put("license", m.license);
    j["maintainers"] = m.maintainers;
    put("repository_url", m.repository_url);
    json versions = json::array();
    for (const auto& v : m.versions) {
        versions.push_back({{"version", v.version}, {"published_at", format_rfc3339(v.published_at)}});
    }
    j["versions"] = std::move(versions);
    j["weekly_downloads"] = m.weekly_downloads ? json(*m.weekly_downloads) : json(nullptr);
    j["avg_ranking"] = m.avg_ranking ? json(*m.avg_ranking) : json(nullptr);
    j["verified_prefix"] = m.verified_prefix;
    j["relocation_target"] = m.relocation_target ? json(m.relocation_target->raw) : json(nullptr);
    j["created_at"] = m.created_at ? json(format_rfc3339(*m.created_at)) : json(nullptr);
    return j;
}

PackageMetadata metadata_from_json(const json& j, std::optional<RegistryId> expected) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "record is not a JSON object");
    RegistryId registry;
    if (const auto reg = opt_string(j, "registry")) {
        registry = parse_registry(*reg);
        if (expected && registry != *expected) {
            throw Error(ErrorCode::InvalidArgument, "record registry does not match snapshot registry");
        }
    } else if (expected) {
        registry = *expected;
    } else {
        throw Error(ErrorCode::InvalidArgument, "record has no registry");
    }
    const auto name = opt_string(j, "name");
    if (!name) throw Error(ErrorCode::InvalidArgument, "record has no name");

    std::vector<std::string> prefixes;
    if (auto p = opt_string(j, "reserved_prefix")) prefixes.push_back(*p);

    PackageMetadata m;
    m.ref = parse_name(registry, *name, prefixes);
    m.description = opt_string(j, "description");
    if (auto readme = opt_string(j, "readme")) {
        bool cut = false;
        m.readme = cap_utf8(std::move(*readme), kReadmeCapBytes, cut);
        m.readme_truncated = cut || j.value("readme_truncated", false);
    }
    m.license = opt_string(j, "license");
    if (const auto it = j.find("maintainers"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw Error(ErrorCode::InvalidArgument, "maintainers must be an array");
        for (const auto& x : *it) {
            if (!x.is_string()) throw Error(ErrorCode::InvalidArgument, "maintainer ids are strings");
            m.maintainers.push_back(x.get<std::string>());
        }
    }
    m.repository_url = opt_string(j, "repository_url");
    if (const auto it = j.find("versions"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw Error(ErrorCode::InvalidArgument, "versions must be an array");
        for (const auto& v : *it) {
            const auto ver = opt_string(v, "version");
            const auto at = opt_time(v, "published_at");
            if (!ver || !at) throw Error(ErrorCode::InvalidArgument, "version entries need version and published_at");
            m.versions.push_back({*ver, *at});
        }
        std::stable_sort(m.versions.begin(), m.versions.end(),
                         [](const VersionEntry& a, const VersionEntry& b) { return a.published_at < b.published_at; });
    }
    if (const auto it = j.find("weekly_downloads"); it != j.end() && !it->is_null()) {
        if (!it->is_number() || it->get<double>() < 0) {
            throw Error(ErrorCode::InvalidArgument, "weekly_downloads must be a non-negative number");
        }
        m.weekly_downloads = it->get<std::int64_t>();
    }
    if (const auto it = j.find("avg_ranking"); it != j.end() && !it->is_null()) {
        if (!it->is_number() || it->get<double>() < 0) {
            throw Error(ErrorCode::InvalidArgument, "avg_ranking must be a non-negative number");
        }
        m.avg_ranking = it->get<double>();
    }
    if (const auto it = j.find("verified_prefix"); it != j.end() && !it->is_null()) {
        if (!it->is_boolean()) throw Error(ErrorCode::InvalidArgument, "verified_prefix must be boolean");
        m.verified_prefix = it->get<bool>();
    }
    if (const auto target = opt_string(j, "relocation_target")) {
        m.relocation_target = parse_name(registry, *target);
    }
    m.created_at = opt_time(j, "created_at");
    if (!m.versions.empty()) {
        m.last_updated_at = m.versions.back().published_at;
    } else {
        m.last_updated_at = m.created_at;
    }

    if (uses_download_signal(registry) && !m.weekly_downloads) {
        spdlog::debug("{} '{}' has no weekly_downloads", registry_name(registry), m.ref.raw);
    } else if (!uses_download_signal(registry) && !m.avg_ranking) {
        spdlog::debug("{} '{}' has no avg_ranking", registry_name(registry), m.ref.raw);
    }
    return m;
}

std::string_view allowlist_kind_name(AllowListKind kind) {
    return kAllowKindNames[static_cast<size_t>(kind)];
}

AllowListKind parse_allowlist_kind(std::string_view name) {
    for (size_t i = 0; i < kAllowKindNames.size(); ++i) {
        if (kAllowKindNames[i] == name) return static_cast<AllowListKind>(i);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown allow-list kind '" + std::string(name) + "'");
}

AllowListAction parse_allowlist_action(std::string_view name) {
    if (name == "add") return AllowListAction::Add;
    if (name == "remove") return AllowListAction::Remove;
    throw Error(ErrorCode::InvalidArgument, "allow-list action must be add or remove");
}

std::string AllowLists::package_key(const PackageRef& ref) {
    return std::string(registry_name(ref.registry)) + ":" + text::to_lower(ref.raw);
}

bool AllowLists::has_organization(std::string_view ns) const {
    return organizations.count(text::to_lower(ns)) > 0;
}

bool AllowLists::has_mirror_domain(std::string_view domain) const {
    return mirror_domains.count(text::to_lower(domain)) > 0;
}

bool AllowLists::is_customer_package(const PackageRef& ref) const {
    return customer_packages.count(package_key(ref)) > 0;
}

bool AllowLists::is_denied(const PackageRef& ref) const {
    return denied_packages.count(package_key(ref)) > 0;
}

MetadataStore::MetadataStore() = default;

MetadataStore::MetadataStore(std::filesystem::path path) : path_(std::move(path)) {
    if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
    if (std::filesystem::exists(*path_)) {
        replay();
    } else {
        std::ofstream touch(*path_, std::ios::app);
        if (!touch) throw Error(ErrorCode::IoFailure, "cannot create store '" + path_->string() + "'");
    }
}

void MetadataStore::replay() {
    std::ifstream in(*path_);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot read store '" + path_->string() + "'");
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto j = json::parse(line);
            const std::string kind = j.at("kind");
            if (kind == "record") {
                apply_record_locked(metadata_from_json(j.at("record")));
            } else if (kind == "snapshot") {
                SnapshotInfo info;
                info.registry = parse_registry(j.at("registry").get<std::string>());
                info.ingested_at = *parse_rfc3339(j.at("ingested_at").get<std::string>());
                info.package_count = j.at("package_count");
                info.skipped_lines = j.value("skipped_lines", size_t{0});
                snapshots_[info.registry] = info;
            } else if (kind == "allowlist") {
                apply_allowlist_locked(parse_allowlist_kind(j.at("list").get<std::string>()),
                                       j.at("value").get<std::string>(),
                                       parse_allowlist_action(j.at("action").get<std::string>()));
            }
        } catch (const std::exception& e) {
            // A torn final write is the only expected cause; keep what replayed.
            spdlog::warn("store {}: ignoring line {}: {}", path_->string(), lineno, e.what());
        }
    }
}

void MetadataStore::append_lines(const std::vector<std::string>& lines) {
    if (!path_ || lines.empty()) return;
    std::string buf;
    for (const auto& l : lines) {
        buf += l;
        buf.push_back('\n');
    }
    std::ofstream out(*path_, std::ios::app | std::ios::binary);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::IoFailure, "cannot append to store '" + path_->string() + "'");
}

bool MetadataStore::apply_record_locked(PackageMetadata meta) {
    if (meta.ref.registry == RegistryId::Nuget && meta.ref.namespace_) {
        reserved_prefixes_.insert(*meta.ref.namespace_);
    }
    Key key{meta.ref.registry, meta.ref.raw};
    auto it = records_.find(key);
    if (it != records_.end() && it->second == meta) return false;
    records_.insert_or_assign(std::move(key), std::move(meta));
    return true;
}

void MetadataStore::apply_allowlist_locked(AllowListKind kind, const std::string& value,
                                           AllowListAction action) {
    std::set<std::string>* target = nullptr;
    switch (kind) {
        case AllowListKind::Organization: target = &allow_.organizations; break;
        case AllowListKind::MirrorDomain: target = &allow_.mirror_domains; break;
        case AllowListKind::CustomerPackage: target = &allow_.customer_packages; break;
        case AllowListKind::DeniedPackage: target = &allow_.denied_packages; break;
    }
    const std::string v = text::to_lower(text::trim(value));
    if (action == AllowListAction::Add) {
        target->insert(v);
    } else {
        target->erase(v);
    }
}

SnapshotInfo MetadataStore::ingest_snapshot(RegistryId registry, std::istream& source,
                                            std::optional<Timestamp> ingested_at) {
    if (!source.good()) throw Error(ErrorCode::IoFailure, "snapshot stream is not readable");
    std::vector<PackageMetadata> parsed;
    size_t skipped = 0;
    std::string line;
    while (std::getline(source, line)) {
        if (text::trim(line).empty()) continue;
        try {
            parsed.push_back(metadata_from_json(json::parse(line), registry));
        } catch (const std::exception& e) {
            ++skipped;
            spdlog::debug("skipping malformed {} record: {}", registry_name(registry), e.what());
        }
    }
    if (source.bad()) throw Error(ErrorCode::IoFailure, "error while reading snapshot stream");
    if (parsed.empty()) {
        throw Error(ErrorCode::EmptySnapshot, "snapshot for " + std::string(registry_name(registry)) +
                                                  " has no valid records (" + std::to_string(skipped) +
                                                  " skipped)");
    }
    if (skipped > 0) {
        spdlog::warn("{} snapshot: skipped {} malformed line(s)", registry_name(registry), skipped);
    }

    std::unique_lock lock(mutex_);
    std::vector<std::string> log;
    std::set<std::string> distinct;
    for (auto& meta : parsed) {
        distinct.insert(meta.ref.raw);
        json rec = metadata_to_json(meta);
        if (apply_record_locked(std::move(meta))) {
            log.push_back(json{{"kind", "record"}, {"record", std::move(rec)}}.dump());
        }
    }
    SnapshotInfo info;
    info.registry = registry;
    info.ingested_at = ingested_at.value_or(now_utc());
    if (auto prev = snapshots_.find(registry); prev != snapshots_.end()) {
        info.ingested_at = std::max(info.ingested_at, prev->second.ingested_at);
    }
    info.package_count = distinct.size();
    info.skipped_lines = skipped;
    snapshots_[registry] = info;
    log.push_back(json{{"kind", "snapshot"},
                       {"registry", registry_name(registry)},
                       {"ingested_at", format_rfc3339(info.ingested_at)},
                       {"package_count", info.package_count},
                       {"skipped_lines", skipped}}
                      .dump());
    append_lines(log);
    return info;
}

std::optional<PackageMetadata> MetadataStore::get_metadata(const PackageRef& ref) const {
    return find(ref.registry, ref.raw);
}

std::optional<PackageMetadata> MetadataStore::find(RegistryId registry, std::string_view raw) const {
    std::shared_lock lock(mutex_);
    const auto it = records_.find(Key{registry, std::string(raw)});
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

Duration MetadataStore::staleness(RegistryId registry, Timestamp now) const {
    std::shared_lock lock(mutex_);
    const auto it = snapshots_.find(registry);
    if (it == snapshots_.end()) {
        throw Error(ErrorCode::NoSnapshot, "no snapshot ingested for " + std::string(registry_name(registry)));
    }
    return now - it->second.ingested_at;
}

std::optional<SnapshotInfo> MetadataStore::latest_snapshot(RegistryId registry) const {
    std::shared_lock lock(mutex_);
    const auto it = snapshots_.find(registry);
    if (it == snapshots_.end()) return std::nullopt;
    return it->second;
}

AllowLists MetadataStore::update_allowlist(AllowListKind kind, std::string_view value,
                                           AllowListAction action) {
    const std::string v = text::trim(value);
    if (v.empty()) throw Error(ErrorCode::InvalidArgument, "allow-list value must be non-empty");
    std::unique_lock lock(mutex_);
    append_lines({json{{"kind", "allowlist"},
                       {"list", allowlist_kind_name(kind)},
                       {"value", v},
                       {"action", action == AllowListAction::Add ? "add" : "remove"}}
                      .dump()});
    apply_allowlist_locked(kind, v, action);
    return allow_;
}

AllowLists MetadataStore::allow_lists() const {
    std::shared_lock lock(mutex_);
    return allow_;
}

std::vector<PackageMetadata> MetadataStore::packages(RegistryId registry) const {
    std::shared_lock lock(mutex_);
    std::vector<PackageMetadata> out;
    for (auto it = records_.lower_bound(Key{registry, ""}); it != records_.end() && it->first.registry == registry; ++it) {
        out.push_back(it->second);
    }
    return out;
}

std::size_t MetadataStore::package_count(RegistryId registry) const {
    std::shared_lock lock(mutex_);
    size_t n = 0;
    for (auto it = records_.lower_bound(Key{registry, ""}); it != records_.end() && it->first.registry == registry; ++it) {
        ++n;
    }
    return n;
}

void MetadataStore::upsert(PackageMetadata meta) {
    json rec = metadata_to_json(meta);
    meta = metadata_from_json(rec);
    std::unique_lock lock(mutex_);
    if (apply_record_locked(std::move(meta))) {
        append_lines({json{{"kind", "record"}, {"record", std::move(rec)}}.dump()});
    }
}

std::vector<std::string> MetadataStore::reserved_prefixes() const {
    std::shared_lock lock(mutex_);
    return {reserved_prefixes_.begin(), reserved_prefixes_.end()};
}

}  // namespace squatwatch
