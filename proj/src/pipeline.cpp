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


#include "squatwatch/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <boost/algorithm/string/join.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <thread>
#include <unordered_set>

#include "squatwatch/errors.hpp"
#include "squatwatch/text.hpp"
#include "squatwatch/trust.hpp"

namespace squatwatch {

using nlohmann::json;

namespace {

bool allow_listed(const PackageRef& ref, const AllowLists& lists) {
    if (lists.is_customer_package(ref)) return true;
    if (ref.namespace_ && lists.has_organization(*ref.namespace_)) return true;
    return ref.domain && lists.has_mirror_domain(*ref.domain);
}

template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> threads;
    for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(run);
    run();
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

void to_json(json& j, const ScanSummary& s) {
    j = json{{"registry", registry_name(s.registry)},
             {"snapshot", s.snapshot},
             {"packages_total", s.packages_total},
             {"packages_scanned", s.packages_scanned},
             {"skipped_trusted", s.skipped_trusted},
             {"skipped_allowlisted", s.skipped_allowlisted},
             {"drafts", s.drafts},
             {"already_alerted", s.already_alerted},
             {"pairs_reviewed", s.pairs_reviewed},
             {"threats", s.threats},
             {"alerts_created", s.alerts_created},
             {"created_ids", s.created_ids},
             {"wall_seconds", s.wall_seconds}};
}

void to_json(json& j, const PackageScan& s) {
    j = json{{"suspect", s.suspect}, {"flagged", s.draft.has_value()}, {"reports", s.reports}};
    if (s.draft) j["draft"] = *s.draft;
}

Pipeline::Pipeline(Config config, MetadataStore& store, AlertStore& alerts,
                   std::shared_ptr<const JudgeInterface> judge)
    : config_(std::move(config)),
      store_(store),
      alerts_(alerts),
      filter_(judge ? std::move(judge) : make_judge(config_.judge), config_.rule_weights(),
              config_.judge.parallelism) {
    config_.validate();
}

void Pipeline::set_model(std::shared_ptr<const EmbeddingModel> model) {
    std::lock_guard lock(mutex_);
    model_ = std::move(model);
    contexts_.clear();
}

std::shared_ptr<const EmbeddingModel> Pipeline::model() const {
    std::lock_guard lock(mutex_);
    return model_;
}

std::shared_ptr<const EmbeddingModel> Pipeline::train_model() {
    std::vector<std::string> corpus;
    for (RegistryId r : kAllRegistries) {
        for (const auto& meta : store_.packages(r)) corpus.push_back(corpus_entry(meta.ref));
    }
    if (config_.corpus_file) {
        std::ifstream in(*config_.corpus_file);
        if (!in) throw Error(ErrorCode::IoFailure, "cannot read corpus '" + config_.corpus_file->string() + "'");
        std::string line;
        while (std::getline(in, line)) {
            line = text::trim(line);
            if (!line.empty()) corpus.push_back(line);
        }
    }
    auto model = std::make_shared<const EmbeddingModel>(train(corpus, config_.training));
    set_model(model);
    return model;
}

std::shared_ptr<const SearchContext> Pipeline::build_index(RegistryId registry) {
    const auto model = this->model();
    std::vector<std::string> missing;
    if (!store_.latest_snapshot(registry)) missing.push_back("store snapshot");
    if (!model) missing.push_back("model");
    if (!missing.empty()) {
        throw Error(ErrorCode::MissingInfrastructure,
                    "cannot index " + std::string(registry_name(registry)) + ": missing " + boost::algorithm::join(missing, ", "));
    }
    auto ctx = std::make_shared<const SearchContext>(
        SearchContext::build(store_, registry, model, config_.trust, config_.ann));
    std::lock_guard lock(mutex_);
    contexts_[registry] = ctx;
    return ctx;
}

std::shared_ptr<const SearchContext> Pipeline::attach_index(RegistryId registry, AnnIndex index) {
    const auto model = this->model();
    if (!model) throw Error(ErrorCode::MissingInfrastructure, "missing model");
    auto ctx = std::make_shared<const SearchContext>(
        SearchContext::with_index(store_, registry, model, config_.trust, std::move(index)));
    std::lock_guard lock(mutex_);
    contexts_[registry] = ctx;
    return ctx;
}

std::shared_ptr<const SearchContext> Pipeline::context(RegistryId registry) const {
    std::lock_guard lock(mutex_);
    auto it = contexts_.find(registry);
    return it == contexts_.end() ? nullptr : it->second;
}

void Pipeline::load_infrastructure() {
    const auto model_path = config_.model_path();
    if (std::filesystem::exists(model_path)) {
        set_model(std::make_shared<const EmbeddingModel>(EmbeddingModel::load(model_path)));
    } else {
        return;
    }
    for (RegistryId r : kAllRegistries) {
        const auto path = config_.index_path(r);
        if (!store_.latest_snapshot(r) || !std::filesystem::exists(path)) continue;
        try {
            attach_index(r, AnnIndex::load(path));
        } catch (const Error& e) {
            spdlog::warn("index {} not loaded: {}", path.string(), e.what());
        }
    }
}

std::optional<Timestamp> Pipeline::snapshot_time(RegistryId registry) const {
    const auto snap = store_.latest_snapshot(registry);
    if (!snap) return std::nullopt;
    return snap->ingested_at;
}

void Pipeline::require(RegistryId registry, bool need_index) const {
    std::vector<std::string> missing;
    if (!store_.latest_snapshot(registry)) missing.push_back("store snapshot");
    if (!model()) missing.push_back("model");
    if (need_index && !context(registry)) missing.push_back("index");
    if (!missing.empty()) {
        throw Error(ErrorCode::MissingInfrastructure, "missing infrastructure for " +
                                                          std::string(registry_name(registry)) + ": " +
                                                          boost::algorithm::join(missing, ", "));
    }
}

PackageRef Pipeline::parse(RegistryId registry, const std::string& raw) const {
    const auto prefixes = store_.reserved_prefixes();
    return parse_name(registry, raw, prefixes);
}

PackageScan Pipeline::scan_package(const PackageRef& suspect) const {
    require(suspect.registry, true);
    const auto ctx = context(suspect.registry);
    PackageScan out;
    out.suspect = suspect;
    out.draft = ctx->scan_package(store_, suspect, config_.thresholds);
    if (out.draft) out.reports = filter_.review_all(out.draft->pairs, store_, *snapshot_time(suspect.registry));
    return out;
}

ScanSummary Pipeline::run_full_scan(RegistryId registry) {
    const auto started = std::chrono::steady_clock::now();
    require(registry, true);
    const auto ctx = context(registry);
    const Timestamp when = *snapshot_time(registry);

    ScanSummary summary;
    summary.registry = registry;
    summary.snapshot = format_rfc3339(when);

    std::unordered_set<std::string> trusted;
    for (const auto& ref : ctx->trusted()) trusted.insert(ref.raw);
    const AllowLists lists = store_.allow_lists();
    std::vector<PackageRef> suspects;
    for (const auto& meta : store_.packages(registry)) {
        ++summary.packages_total;
        if (trusted.count(meta.ref.raw)) {
            ++summary.skipped_trusted;
        } else if (allow_listed(meta.ref, lists)) {
            ++summary.skipped_allowlisted;
        } else {
            suspects.push_back(meta.ref);
        }
    }
    summary.packages_scanned = suspects.size();

    std::vector<std::optional<AlertDraft>> drafts(suspects.size());
    parallel_for(suspects.size(), config_.scan_workers, [&](std::size_t i) {
        drafts[i] = ctx->scan_package(store_, suspects[i], config_.thresholds);
    });

    std::vector<CandidatePair> pending;
    std::vector<std::size_t> owner;
    for (std::size_t i = 0; i < drafts.size(); ++i) {
        if (!drafts[i]) continue;
        ++summary.drafts;
        for (const auto& pair : drafts[i]->pairs) {
            if (alerts_.contains(pair.suspect, pair.target, summary.snapshot)) {
                ++summary.already_alerted;
                continue;
            }
            pending.push_back(pair);
            owner.push_back(i);
        }
    }
    summary.pairs_reviewed = pending.size();
    const auto reports = filter_.review_all(pending, store_, when);
    for (std::size_t i = 0; i < reports.size(); ++i) {
        if (reports[i].verdict != Verdict::SuspectedThreat) continue;
        ++summary.threats;
        auto inserted = alerts_.insert(*drafts[owner[i]], reports[i], summary.snapshot);
        if (inserted.created) {
            ++summary.alerts_created;
            summary.created_ids.push_back(inserted.alert.id);
        }
    }
    summary.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    spdlog::info("scan {}: {} scanned, {} drafts, {} new alerts in {:.2f}s", registry_name(registry),
                 summary.packages_scanned, summary.drafts, summary.alerts_created, summary.wall_seconds);
    return summary;
}

CandidatePair Pipeline::pair_for(const PackageRef& suspect, const PackageRef& target) const {
    return describe_pair(suspect, target, model().get());
}

RuleOutcome Pipeline::outcomes(const EvalRecord& record) const {
    const PackageRef suspect = parse(record.registry, record.suspect);
    const PackageRef target = parse(record.registry, record.target);
    const Timestamp when = snapshot_time(record.registry).value_or(now_utc());
    return filter_.outcomes(pair_for(suspect, target), store_.get_metadata(suspect), store_.get_metadata(target),
                            store_.allow_lists(), when);
}

Verdict Pipeline::predict(const EvalRecord& record) const {
    const PackageRef suspect = parse(record.registry, record.suspect);
    const PackageRef target = parse(record.registry, record.target);
    const auto suspect_meta = store_.get_metadata(suspect);
    const auto target_meta = store_.get_metadata(target);
    CandidatePair pair;
    if (const auto ctx = context(record.registry); ctx && suspect_meta) {
        const auto candidates = ctx->find_candidates(store_, suspect, config_.thresholds);
        const auto it = std::find_if(candidates.begin(), candidates.end(),
                                     [&](const CandidatePair& p) { return p.target == target; });
        if (it == candidates.end()) return Verdict::Benign;
        pair = *it;
    } else {
        pair = pair_for(suspect, target);
    }
    const Timestamp when = snapshot_time(record.registry).value_or(now_utc());
    return filter_.review(pair, suspect_meta, target_meta, store_.allow_lists(), when).verdict;
}

}  // namespace squatwatch
