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

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "squatwatch/benignity.hpp"
#include "squatwatch/registry.hpp"

namespace squatwatch {

enum class EvalLabel { Active, Stealthy, Benign };

std::string_view eval_label_name(EvalLabel l);
/// Throws InvalidArgument.
EvalLabel parse_eval_label(std::string_view name);
inline bool is_threat(EvalLabel l) { return l != EvalLabel::Benign; }

struct EvalRecord {
    std::string suspect;
    std::string target;
    RegistryId registry = RegistryId::Npm;
    EvalLabel label = EvalLabel::Benign;
    // A verdict recorded by an earlier run; evaluation then skips the
    // pipeline for this row.
    std::optional<Verdict> predicted;
};

void to_json(nlohmann::json& j, const EvalRecord& r);
void from_json(const nlohmann::json& j, EvalRecord& r);

/// One record per non-blank line. Throws IoFailure or InvalidArgument with
/// the line number.
std::vector<EvalRecord> read_eval_records(const std::filesystem::path& path);

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct MetricsRow {
    ConfusionCounts counts;
    double recall = 0;
    double precision = 0;
    double f1 = 0;
    double accuracy = 0;
};

/// Ratios with 0/0 taken as 0.
MetricsRow metrics_from_counts(const ConfusionCounts& c);

struct MetricsTable {
    std::map<EvalLabel, MetricsRow> per_label;  // rows restricted to one label
    MetricsRow overall;
};

void to_json(nlohmann::json& j, const MetricsRow& r);
void to_json(nlohmann::json& j, const MetricsTable& t);

/// Positive class: active and stealthy. Predicted positive: suspected_threat.
/// Throws EmptyDataset or InvalidArgument on length mismatch.
MetricsTable tabulate(std::span<const EvalLabel> labels, std::span<const Verdict> predictions);

/// Predicts every record (recorded verdicts are used as given) and tabulates.
/// Throws EmptyDataset.
MetricsTable evaluate(std::span<const EvalRecord> records,
                      const std::function<Verdict(const EvalRecord&)>& predict);

struct ScoredLabel {
    double score = 0;  // in [0, 1]
    bool positive = false;
};

struct GridPoint {
    double threshold = 0;  // predicted positive iff score >= threshold
    ConfusionCounts counts;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

struct GridSearchResult {
    double best_threshold = 0;
    double best_f1 = 0;
    std::vector<GridPoint> curve;  // 101 points, thresholds 0.00 to 1.00
    GridPoint operating_point;     // the curve at the configured threshold
};

void to_json(nlohmann::json& j, const GridPoint& p);
void to_json(nlohmann::json& j, const GridSearchResult& r);

inline constexpr std::size_t kGridSteps = 100;

/// Evaluates thresholds i/100 for i in 0..100 and returns the F1 argmax, ties
/// going to the lowest threshold. `operating_threshold` is snapped to the
/// nearest grid point. Throws EmptyDataset, or InvalidArgument for scores
/// outside [0, 1].
GridSearchResult grid_search_threshold(std::span<const ScoredLabel> scores, double operating_threshold = 0.93);

}  // namespace squatwatch
