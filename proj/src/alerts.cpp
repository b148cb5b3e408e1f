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


#include "squatwatch/alerts.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>

#include "squatwatch/errors.hpp"
#include "squatwatch/text.hpp"

namespace squatwatch {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> kStatusNames = {"open", "confirmed_active", "confirmed_stealthy",
                                                          "dismissed_benign"};

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

Timestamp time_from(const json& j, const char* key) {
    const auto t = parse_rfc3339(j.at(key).get<std::string>());
    if (!t) throw Error(ErrorCode::InvalidArgument, std::string("bad timestamp in '") + key + "'");
    return *t;
}

json event_json(const VerdictEvent& e) {
    json j{{"status", alert_status_name(e.status)}, {"at", format_rfc3339(e.at)}};
    if (e.note) j["note"] = *e.note;
    if (e.allowlist) j["allowlist"] = {{"kind", allowlist_kind_name(e.allowlist->kind)}, {"value", e.allowlist->value}};
    return j;
}

VerdictEvent event_from(const json& j) {
    VerdictEvent e;
    e.status = parse_alert_status(j.at("status").get<std::string>());
    e.at = time_from(j, "at");
    if (j.contains("note") && !j["note"].is_null()) e.note = j["note"].get<std::string>();
    if (j.contains("allowlist") && !j["allowlist"].is_null()) {
        e.allowlist = AllowListAddition{parse_allowlist_kind(j["allowlist"].at("kind").get<std::string>()),
                                        j["allowlist"].at("value").get<std::string>()};
    }
    return e;
}

bool already_listed(const AllowLists& lists, const AllowListAddition& a) {
    const std::string v = text::to_lower(text::trim(a.value));
    switch (a.kind) {
        case AllowListKind::Organization: return lists.organizations.count(v) > 0;
        case AllowListKind::MirrorDomain: return lists.mirror_domains.count(v) > 0;
        case AllowListKind::CustomerPackage: return lists.customer_packages.count(v) > 0;
        case AllowListKind::DeniedPackage: return lists.denied_packages.count(v) > 0;
    }
    return false;
}

}  // namespace

std::string_view alert_status_name(AlertStatus s) { return kStatusNames[static_cast<std::size_t>(s)]; }

AlertStatus parse_alert_status(std::string_view name) {
    for (std::size_t i = 0; i < kStatusNames.size(); ++i) {
        if (kStatusNames[i] == name) return static_cast<AlertStatus>(i);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown alert status '" + std::string(name) + "'");
}

void to_json(json& j, const Alert& a) {
    json history = json::array();
    for (const auto& e : a.history) history.push_back(event_json(e));
    j = json{{"id", a.id},
             {"created_at", format_rfc3339(a.created_at)},
             {"snapshot", a.snapshot},
             {"draft", a.draft},
             {"report", a.report},
             {"status", alert_status_name(a.status)},
             {"analyst_note", a.analyst_note ? json(*a.analyst_note) : json(nullptr)},
             {"history", std::move(history)}};
}

void from_json(const json& j, Alert& a) {
    a.id = j.at("id").get<std::string>();
    a.created_at = time_from(j, "created_at");
    a.snapshot = j.at("snapshot").get<std::string>();
    a.draft = j.at("draft").get<AlertDraft>();
    a.report = j.at("report").get<BenignityReport>();
    a.status = parse_alert_status(j.at("status").get<std::string>());
    a.analyst_note.reset();
    if (j.contains("analyst_note") && !j["analyst_note"].is_null()) a.analyst_note = j["analyst_note"].get<std::string>();
    a.history.clear();
    for (const auto& e : j.value("history", json::array())) a.history.push_back(event_from(e));
}

std::string alert_id(const PackageRef& suspect, const PackageRef& target, const std::string& snapshot) {
    const std::string key = std::string(registry_name(suspect.registry)) + "\n" + suspect.raw + "\n" + target.raw +
                            "\n" + snapshot;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(key)));
    return buf;
}

AllowListAddition implied_allowlist(const Alert& alert, AllowListKind kind) {
    const PackageRef& s = alert.report.pair.suspect;
    switch (kind) {
        case AllowListKind::Organization:
            if (!s.namespace_) throw Error(ErrorCode::InvalidArgument, "'" + s.raw + "' has no namespace");
            return {kind, text::to_lower(*s.namespace_)};
        case AllowListKind::MirrorDomain:
            if (!s.domain) throw Error(ErrorCode::InvalidArgument, "'" + s.raw + "' has no host domain");
            return {kind, text::to_lower(*s.domain)};
        case AllowListKind::CustomerPackage:
        case AllowListKind::DeniedPackage:
            return {kind, AllowLists::package_key(s)};
    }
    throw Error(ErrorCode::InvalidArgument, "unknown allow-list kind");
}

AlertStore::AlertStore() = default;

AlertStore::AlertStore(std::filesystem::path path) : path_(std::move(path)) {
    if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
    if (std::filesystem::exists(*path_)) {
        replay();
    } else {
        std::ofstream touch(*path_, std::ios::app);
        if (!touch) throw Error(ErrorCode::IoFailure, "cannot create alert log '" + path_->string() + "'");
    }
}

void AlertStore::replay() {
    std::ifstream in(*path_);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot read alert log '" + path_->string() + "'");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            const auto j = json::parse(line);
            const std::string kind = j.at("event");
            if (kind == "created") {
                apply_created(j.at("alert").get<Alert>());
            } else if (kind == "verdict") {
                apply_verdict(j.at("id").get<std::string>(), event_from(j));
            }
        } catch (const std::exception& e) {
            spdlog::warn("alert log {}: ignoring line {}: {}", path_->string(), lineno, e.what());
        }
    }
}

void AlertStore::append(const json& event) {
    if (!path_) return;
    std::ofstream out(*path_, std::ios::app | std::ios::binary);
    const std::string line = event.dump() + "\n";
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::IoFailure, "cannot append to alert log '" + path_->string() + "'");
}

void AlertStore::apply_created(Alert alert) {
    const std::string id = alert.id;
    alerts_.emplace(id, std::move(alert));
}

void AlertStore::apply_verdict(const std::string& id, const VerdictEvent& ev) {
    auto it = alerts_.find(id);
    if (it == alerts_.end()) throw Error(ErrorCode::AlertNotFound, "no alert '" + id + "'");
    it->second.status = ev.status;
    it->second.analyst_note = ev.note;
    it->second.history.push_back(ev);
}

AlertStore::Insert AlertStore::insert(const AlertDraft& draft, const BenignityReport& report,
                                      const std::string& snapshot, Timestamp created_at) {
    const std::string id = alert_id(report.pair.suspect, report.pair.target, snapshot);
    std::lock_guard writer(write_mutex_);
    {
        std::shared_lock read(mutex_);
        if (auto it = alerts_.find(id); it != alerts_.end()) return {it->second, false};
    }
    Alert a;
    a.id = id;
    a.created_at = created_at;
    a.snapshot = snapshot;
    a.draft = draft;
    a.report = report;
    append(json{{"event", "created"}, {"alert", a}});
    std::unique_lock lock(mutex_);
    apply_created(a);
    return {std::move(a), true};
}

bool AlertStore::contains(const PackageRef& suspect, const PackageRef& target, const std::string& snapshot) const {
    std::shared_lock lock(mutex_);
    return alerts_.count(alert_id(suspect, target, snapshot)) > 0;
}

Alert AlertStore::transition(const std::string& id, AlertStatus to, std::optional<std::string> note,
                             std::optional<AllowListAddition> allowlist, MetadataStore* store, Timestamp at) {
    std::lock_guard writer(write_mutex_);
    Alert current;
    {
        std::shared_lock read(mutex_);
        auto it = alerts_.find(id);
        if (it == alerts_.end()) throw Error(ErrorCode::AlertNotFound, "no alert '" + id + "'");
        current = it->second;
    }
    if (current.status != AlertStatus::Open) {
        throw Error(ErrorCode::InvalidTransition, "alert '" + id + "' is already " +
                                                      std::string(alert_status_name(current.status)));
    }
    if (to == AlertStatus::Open) throw Error(ErrorCode::InvalidTransition, "an alert cannot be reopened");
    if (allowlist) {
        if (to != AlertStatus::DismissedBenign) {
            throw Error(ErrorCode::InvalidArgument, "allow-list additions only accompany a dismissal");
        }
        if (text::trim(allowlist->value).empty()) {
            throw Error(ErrorCode::InvalidArgument, "allow-list value must be non-empty");
        }
        if (!store) throw Error(ErrorCode::InvalidArgument, "no metadata store for the allow-list addition");
        allowlist->value = text::to_lower(text::trim(allowlist->value));
    }

    VerdictEvent ev{to, at, std::move(note), allowlist};
    bool added = false;
    if (allowlist && !already_listed(store->allow_lists(), *allowlist)) {
        store->update_allowlist(allowlist->kind, allowlist->value, AllowListAction::Add);
        added = true;
    }
    try {
        json event{{"event", "verdict"}, {"id", id}};
        event.update(event_json(ev));
        append(event);
    } catch (...) {
        if (added) store->update_allowlist(allowlist->kind, allowlist->value, AllowListAction::Remove);
        throw;
    }
    std::unique_lock lock(mutex_);
    apply_verdict(id, ev);
    return alerts_.at(id);
}

Alert AlertStore::get(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = alerts_.find(id);
    if (it == alerts_.end()) throw Error(ErrorCode::AlertNotFound, "no alert '" + id + "'");
    return it->second;
}

AlertPage AlertStore::list(const AlertQuery& q) const {
    std::vector<const Alert*> hits;
    std::shared_lock lock(mutex_);
    for (const auto& [id, a] : alerts_) {
        if (q.status && a.status != *q.status) continue;
        if (q.registry && a.report.pair.suspect.registry != *q.registry) continue;
        if (q.category && a.report.pair.category != *q.category) continue;
        hits.push_back(&a);
    }
    std::stable_sort(hits.begin(), hits.end(), [](const Alert* a, const Alert* b) {
        return a->report.risk_score > b->report.risk_score;
    });
    AlertPage page;
    page.total = hits.size();
    for (std::size_t i = q.offset; i < hits.size() && page.alerts.size() < q.limit; ++i) {
        page.alerts.push_back(*hits[i]);
    }
    return page;
}

std::vector<Alert> AlertStore::all() const {
    std::shared_lock lock(mutex_);
    std::vector<Alert> out;
    out.reserve(alerts_.size());
    for (const auto& [id, a] : alerts_) out.push_back(a);
    return out;
}

std::size_t AlertStore::size() const {
    std::shared_lock lock(mutex_);
    return alerts_.size();
}

json AlertStore::stats() const {
    json by_status = json::object(), by_category = json::object(), by_registry = json::object();
    for (auto s : kStatusNames) by_status[std::string(s)] = 0;
    std::shared_lock lock(mutex_);
    for (const auto& [id, a] : alerts_) {
        const std::string status(alert_status_name(a.status));
        by_status[status] = by_status.value(status, 0) + 1;
        const std::string cat(category_name(a.report.pair.category));
        by_category[cat] = by_category.value(cat, 0) + 1;
        const std::string reg(registry_name(a.report.pair.suspect.registry));
        by_registry[reg] = by_registry.value(reg, 0) + 1;
    }
    return json{{"total", alerts_.size()},
                {"by_status", std::move(by_status)},
                {"by_category", std::move(by_category)},
                {"by_registry", std::move(by_registry)}};
}

}  // namespace squatwatch
