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

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "squatwatch/benignity.hpp"
#include "squatwatch/confusion_search.hpp"
#include "squatwatch/metadata.hpp"
#include "squatwatch/time.hpp"

namespace squatwatch {

enum class AlertStatus { Open, ConfirmedActive, ConfirmedStealthy, DismissedBenign };

std::string_view alert_status_name(AlertStatus s);
/// Throws InvalidArgument.
AlertStatus parse_alert_status(std::string_view name);

struct AllowListAddition {
    AllowListKind kind = AllowListKind::Organization;
    std::string value;
};

struct VerdictEvent {
    AlertStatus status = AlertStatus::Open;
    Timestamp at{};
    std::optional<std::string> note;
    std::optional<AllowListAddition> allowlist;
};

struct Alert {
    std::string id;
    Timestamp created_at{};
    std::string snapshot;  // ingestion time of the scanned snapshot
    AlertDraft draft;
    BenignityReport report;  // the pair this alert is about
    AlertStatus status = AlertStatus::Open;
    std::optional<std::string> analyst_note;
    std::vector<VerdictEvent> history;
};

void to_json(nlohmann::json& j, const Alert& a);
void from_json(const nlohmann::json& j, Alert& a);

/// Deterministic id for (suspect, target, snapshot).
std::string alert_id(const PackageRef& suspect, const PackageRef& target, const std::string& snapshot);

/// The allow-list entry a dismissal implies for `kind`: the suspect's
/// namespace, host domain or package key. Throws InvalidArgument when the
/// suspect has no such component.
AllowListAddition implied_allowlist(const Alert& alert, AllowListKind kind);

struct AlertQuery {
    std::optional<AlertStatus> status;
    std::optional<RegistryId> registry;
    std::optional<AttackCategory> category;
    std::size_t limit = 50;
    std::size_t offset = 0;
};

struct AlertPage {
    std::vector<Alert> alerts;  // by risk score descending, then id
    std::size_t total = 0;      // matches before pagination
};

/// Alerts as an append-only JSON-lines event log ("created" and "verdict"
/// events) with an in-memory projection. Replaying the log rebuilds the
/// projection exactly. Writes are serialized; readers share a lock.
class AlertStore {
public:
    AlertStore();
    /// Opens (or creates) the log and replays it. Throws IoFailure.
    explicit AlertStore(std::filesystem::path path);

    AlertStore(const AlertStore&) = delete;
    AlertStore& operator=(const AlertStore&) = delete;

    struct Insert {
        Alert alert;
        bool created = false;  // false when the key already had an alert
    };

    /// Opens an alert for report.pair unless one exists for the same
    /// (suspect, target, snapshot).
    Insert insert(const AlertDraft& draft, const BenignityReport& report, const std::string& snapshot,
                  Timestamp created_at = now_utc());

    bool contains(const PackageRef& suspect, const PackageRef& target, const std::string& snapshot) const;

    /// Moves an open alert to a closed status. An allow-list addition is only
    /// accepted with a dismissal; it is applied to `store` together with the
    /// transition, and undone if the transition cannot be logged. Throws
    /// AlertNotFound, InvalidTransition or InvalidArgument.
    Alert transition(const std::string& id, AlertStatus to, std::optional<std::string> note,
                     std::optional<AllowListAddition> allowlist, MetadataStore* store,
                     Timestamp at = now_utc());

    /// Throws AlertNotFound.
    Alert get(const std::string& id) const;
    AlertPage list(const AlertQuery& query) const;
    std::vector<Alert> all() const;  // by id
    std::size_t size() const;

    /// Counts by status, category and registry.
    nlohmann::json stats() const;

private:
    void replay();
    void append(const nlohmann::json& event);
    void apply_created(Alert alert);
    void apply_verdict(const std::string& id, const VerdictEvent& ev);

    mutable std::shared_mutex mutex_;
    std::mutex write_mutex_;
    std::optional<std::filesystem::path> path_;
    std::map<std::string, Alert> alerts_;
};

}  // namespace squatwatch
