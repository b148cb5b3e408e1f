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


#include "squatwatch/evaluation.hpp"

#include <array>
#include <cmath>
#include <fstream>

#include "squatwatch/errors.hpp"
#include "squatwatch/text.hpp"

namespace squatwatch {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 3> kLabelNames = {"active", "stealthy", "benign"};

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void count(ConfusionCounts& c, bool actual, bool predicted) {
    if (actual) {
        ++(predicted ? c.tp : c.fn);
    } else {
        ++(predicted ? c.fp : c.tn);
    }
}

}  // namespace

std::string_view eval_label_name(EvalLabel l) { return kLabelNames[static_cast<std::size_t>(l)]; }

EvalLabel parse_eval_label(std::string_view name) {
    const std::string n = text::to_lower(text::trim(name));
    for (std::size_t i = 0; i < kLabelNames.size(); ++i) {
        if (kLabelNames[i] == n) return static_cast<EvalLabel>(i);
    }
    throw Error(ErrorCode::InvalidArgument,
                "label must be active, stealthy or benign, got '" + std::string(name) + "'");
}

void to_json(json& j, const EvalRecord& r) {
    j = json{{"suspect", r.suspect},
             {"target", r.target},
             {"registry", registry_name(r.registry)},
             {"label", eval_label_name(r.label)}};
    if (r.predicted) j["predicted"] = verdict_name(*r.predicted);
}

void from_json(const json& j, EvalRecord& r) {
    r.suspect = j.at("suspect").get<std::string>();
    r.target = j.at("target").get<std::string>();
    r.registry = parse_registry(j.at("registry").get<std::string>());
    r.label = parse_eval_label(j.at("label").get<std::string>());
    r.predicted.reset();
    if (j.contains("predicted") && !j["predicted"].is_null()) {
        r.predicted = parse_verdict(j["predicted"].get<std::string>());
    }
}

std::vector<EvalRecord> read_eval_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot read dataset '" + path.string() + "'");
    std::vector<EvalRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            out.push_back(json::parse(line).get<EvalRecord>());
        } catch (const std::exception& e) {
            throw Error(ErrorCode::InvalidArgument,
                        path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

MetricsRow metrics_from_counts(const ConfusionCounts& c) {
    MetricsRow r;
    r.counts = c;
    r.recall = ratio(c.tp, c.tp + c.fn);
    r.precision = ratio(c.tp, c.tp + c.fp);
    r.f1 = r.precision + r.recall == 0 ? 0.0 : 2 * r.precision * r.recall / (r.precision + r.recall);
    r.accuracy = ratio(c.tp + c.tn, c.total());
    return r;
}

void to_json(json& j, const MetricsRow& r) {
    j = json{{"tp", r.counts.tp},     {"fp", r.counts.fp},   {"tn", r.counts.tn},
             {"fn", r.counts.fn},     {"recall", r.recall},  {"precision", r.precision},
             {"f1", r.f1},            {"accuracy", r.accuracy}};
}

void to_json(json& j, const MetricsTable& t) {
    json rows = json::object();
    for (const auto& [label, row] : t.per_label) rows[std::string(eval_label_name(label))] = row;
    j = json{{"per_label", std::move(rows)}, {"overall", t.overall}};
}

MetricsTable tabulate(std::span<const EvalLabel> labels, std::span<const Verdict> predictions) {
    if (labels.empty()) throw Error(ErrorCode::EmptyDataset, "no records to evaluate");
    if (labels.size() != predictions.size()) {
        throw Error(ErrorCode::InvalidArgument, "labels and predictions differ in length");
    }
    std::map<EvalLabel, ConfusionCounts> per;
    ConfusionCounts all;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool actual = is_threat(labels[i]);
        const bool predicted = predictions[i] == Verdict::SuspectedThreat;
        count(per[labels[i]], actual, predicted);
        count(all, actual, predicted);
    }
    MetricsTable t;
    for (const auto& [label, c] : per) t.per_label[label] = metrics_from_counts(c);
    t.overall = metrics_from_counts(all);
    return t;
}

MetricsTable evaluate(std::span<const EvalRecord> records, const std::function<Verdict(const EvalRecord&)>& predict) {
    if (records.empty()) throw Error(ErrorCode::EmptyDataset, "no records to evaluate");
    std::vector<EvalLabel> labels;
    std::vector<Verdict> predictions;
    labels.reserve(records.size());
    predictions.reserve(records.size());
    for (const auto& r : records) {
        labels.push_back(r.label);
        predictions.push_back(r.predicted ? *r.predicted : predict(r));
    }
    return tabulate(labels, predictions);
}

void to_json(json& j, const GridPoint& p) {
    j = json{{"threshold", p.threshold}, {"tp", p.counts.tp}, {"fp", p.counts.fp}, {"tn", p.counts.tn},
             {"fn", p.counts.fn},        {"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

void to_json(json& j, const GridSearchResult& r) {
    j = json{{"best_threshold", r.best_threshold},
             {"best_f1", r.best_f1},
             {"operating_point", r.operating_point},
             {"curve", r.curve}};
}

GridSearchResult grid_search_threshold(std::span<const ScoredLabel> scores, double operating_threshold) {
    if (scores.empty()) throw Error(ErrorCode::EmptyDataset, "no scored pairs");
    for (const auto& s : scores) {
        if (!(s.score >= 0.0 && s.score <= 1.0)) {
            throw Error(ErrorCode::InvalidArgument, "score " + std::to_string(s.score) + " outside [0, 1]");
        }
    }
    if (!(operating_threshold >= 0.0 && operating_threshold <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "operating threshold outside [0, 1]");
    }
    GridSearchResult out;
    out.curve.reserve(kGridSteps + 1);
    for (std::size_t i = 0; i <= kGridSteps; ++i) {
        GridPoint p;
        p.threshold = static_cast<double>(i) / kGridSteps;
        for (const auto& s : scores) count(p.counts, s.positive, s.score >= p.threshold);
        const MetricsRow m = metrics_from_counts(p.counts);
        p.precision = m.precision;
        p.recall = m.recall;
        p.f1 = m.f1;
        out.curve.push_back(p);
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < out.curve.size(); ++i) {
        if (out.curve[i].f1 > out.curve[best].f1) best = i;
    }
    out.best_threshold = out.curve[best].threshold;
    out.best_f1 = out.curve[best].f1;
    out.operating_point = out.curve[static_cast<std::size_t>(std::lround(operating_threshold * kGridSteps))];
    return out;
}

}  // namespace squatwatch
