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

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "squatwatch/alerts.hpp"
#include "squatwatch/benignity.hpp"
#include "squatwatch/config.hpp"
#include "squatwatch/confusion_search.hpp"
#include "squatwatch/embedder.hpp"
#include "squatwatch/evaluation.hpp"
#include "squatwatch/metadata.hpp"

namespace squatwatch {

struct ScanSummary {
    RegistryId registry = RegistryId::Npm;
    std::string snapshot;
    std::size_t packages_total = 0;
    std::size_t packages_scanned = 0;
    std::size_t skipped_trusted = 0;
    std::size_t skipped_allowlisted = 0;
    std::size_t drafts = 0;
    std::size_t already_alerted = 0;  // pairs with an alert for this snapshot
    std::size_t pairs_reviewed = 0;
    std::size_t threats = 0;
    std::size_t alerts_created = 0;
    std::vector<std::string> created_ids;
    double wall_seconds = 0;
};

void to_json(nlohmann::json& j, const ScanSummary& s);

struct PackageScan {
    PackageRef suspect;
    std::optional<AlertDraft> draft;
    std::vector<BenignityReport> reports;  // one per draft pair
};

void to_json(nlohmann::json& j, const PackageScan& s);

/// Store, embedding model, per-registry search indexes, benignity filter and
/// alert store wired together.
class Pipeline {
public:
    /// Uses make_judge(config.judge) when `judge` is null.
    Pipeline(Config config, MetadataStore& store, AlertStore& alerts,
             std::shared_ptr<const JudgeInterface> judge = nullptr);

    const Config& config() const { return config_; }
    MetadataStore& store() { return store_; }
    AlertStore& alerts() { return alerts_; }
    const BenignityFilter& filter() const { return filter_; }

    void set_model(std::shared_ptr<const EmbeddingModel> model);
    std::shared_ptr<const EmbeddingModel> model() const;

    /// Trains on every stored name plus the configured corpus file. Throws
    /// EmptyCorpus.
    std::shared_ptr<const EmbeddingModel> train_model();

    /// Builds the search index of `registry` from the current trusted set.
    /// Throws MissingInfrastructure without a model or snapshot.
    std::shared_ptr<const SearchContext> build_index(RegistryId registry);

    /// Adopts a previously saved index. Throws IndexNotBuilt when it no
    /// longer matches the trusted set.
    std::shared_ptr<const SearchContext> attach_index(RegistryId registry, AnnIndex index);

    std::shared_ptr<const SearchContext> context(RegistryId registry) const;

    /// Loads the model and every index found under the configured paths.
    /// Stale indexes are skipped with a warning.
    void load_infrastructure();

    /// Evaluation time for `registry`: its latest snapshot's ingestion time.
    std::optional<Timestamp> snapshot_time(RegistryId registry) const;

    /// Confusion search and benignity review of one package, without
    /// persisting anything. Throws MissingInfrastructure or UnknownSuspect.
    PackageScan scan_package(const PackageRef& suspect) const;

    /// Scans every untrusted, non-allow-listed package of `registry` and
    /// opens an alert for each suspected-threat pair not yet alerted for this
    /// snapshot. Throws MissingInfrastructure naming the absent parts.
    ScanSummary run_full_scan(RegistryId registry);

    /// End-to-end verdict for a labelled pair: with an index and suspect
    /// metadata the pair must first be flagged by confusion search; otherwise
    /// the pair is reviewed directly, unknown metadata leaving rules unknown.
    Verdict predict(const EvalRecord& record) const;

    /// Benignity outcomes for a labelled pair, for weight fitting.
    RuleOutcome outcomes(const EvalRecord& record) const;

    PackageRef parse(RegistryId registry, const std::string& raw) const;

private:
    void require(RegistryId registry, bool need_index) const;
    CandidatePair pair_for(const PackageRef& suspect, const PackageRef& target) const;

    Config config_;
    MetadataStore& store_;
    AlertStore& alerts_;
    BenignityFilter filter_;
    mutable std::mutex mutex_;
    std::shared_ptr<const EmbeddingModel> model_;
    std::map<RegistryId, std::shared_ptr<const SearchContext>> contexts_;
};

}  // namespace squatwatch
