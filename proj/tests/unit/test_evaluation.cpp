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


#include "doctest.h"

#include <cmath>
#include <random>

#include "squatwatch/errors.hpp"
#include "squatwatch/evaluation.hpp"

using namespace squatwatch;

namespace {

std::pair<std::vector<EvalLabel>, std::vector<Verdict>> expand(EvalLabel positive, const ConfusionCounts& c) {
    std::vector<EvalLabel> labels;
    std::vector<Verdict> preds;
    auto add = [&](std::size_t n, EvalLabel l, Verdict v) {
        labels.insert(labels.end(), n, l);
        preds.insert(preds.end(), n, v);
    };
    add(c.tp, positive, Verdict::SuspectedThreat);
    add(c.fn, positive, Verdict::Benign);
    add(c.fp, EvalLabel::Benign, Verdict::SuspectedThreat);
    add(c.tn, EvalLabel::Benign, Verdict::Benign);
    return {labels, preds};
}

}  // namespace

TEST_CASE("metric formulas") {
    const auto r = metrics_from_counts({1171, 117, 347, 184});
    CHECK(r.recall == doctest::Approx(1171.0 / 1355));
    CHECK(r.precision == doctest::Approx(1171.0 / 1288));
    CHECK(r.accuracy == doctest::Approx(1518.0 / 1819));
    CHECK(r.f1 == doctest::Approx(2 * r.precision * r.recall / (r.precision + r.recall)));
    CHECK(std::abs(r.recall - 0.86) <= 0.005);
    CHECK(std::abs(r.precision - 0.91) <= 0.005);
    CHECK(std::abs(r.f1 - 0.89) <= 0.005);
    CHECK(std::abs(r.accuracy - 0.83) <= 0.005);

    const auto zero = metrics_from_counts({});
    CHECK(zero.recall == 0);
    CHECK(zero.precision == 0);
    CHECK(zero.f1 == 0);
    CHECK(zero.accuracy == 0);
}

TEST_CASE("tabulate splits rows by label") {
    SUBCASE("all benign, nothing flagged") {
        std::vector<EvalLabel> labels(10, EvalLabel::Benign);
        std::vector<Verdict> preds(10, Verdict::Benign);
        const auto t = tabulate(labels, preds);
        CHECK(t.overall.accuracy == 1.0);
        CHECK(t.overall.recall == 0.0);
        CHECK(t.per_label.size() == 1);
    }
    SUBCASE("single detected active record") {
        const std::vector<EvalLabel> labels{EvalLabel::Active};
        const std::vector<Verdict> preds{Verdict::SuspectedThreat};
        const auto t = tabulate(labels, preds);
        CHECK(t.overall.counts == ConfusionCounts{1, 0, 0, 0});
        CHECK(t.overall.f1 == 1.0);
    }
    SUBCASE("mixed labels") {
        auto [labels, preds] = expand(EvalLabel::Active, {5, 2, 3, 1});
        labels.push_back(EvalLabel::Stealthy);
        preds.push_back(Verdict::Benign);
        const auto t = tabulate(labels, preds);
        CHECK(t.per_label.at(EvalLabel::Active).counts == ConfusionCounts{5, 0, 0, 1});
        CHECK(t.per_label.at(EvalLabel::Stealthy).counts == ConfusionCounts{0, 0, 0, 1});
        CHECK(t.per_label.at(EvalLabel::Benign).counts == ConfusionCounts{0, 2, 3, 0});
        CHECK(t.overall.counts == ConfusionCounts{5, 2, 3, 2});
    }
    const std::vector<EvalLabel> none;
    CHECK_THROWS_AS(tabulate(none, {}), Error);
    const std::vector<EvalLabel> one{EvalLabel::Active};
    CHECK_THROWS_AS(tabulate(one, {}), Error);
}

TEST_CASE("property: per-label rows sum to the overall row") {
    std::mt19937_64 rng(5);
    for (int round = 0; round < 200; ++round) {
        const std::size_t n = 1 + rng() % 60;
        std::vector<EvalLabel> labels;
        std::vector<Verdict> preds;
        for (std::size_t i = 0; i < n; ++i) {
            labels.push_back(static_cast<EvalLabel>(rng() % 3));
            preds.push_back(rng() % 2 ? Verdict::Benign : Verdict::SuspectedThreat);
        }
        const auto t = tabulate(labels, preds);
        ConfusionCounts sum;
        for (const auto& [l, row] : t.per_label) {
            sum.tp += row.counts.tp;
            sum.fp += row.counts.fp;
            sum.tn += row.counts.tn;
            sum.fn += row.counts.fn;
            CHECK(row.recall >= 0);
            CHECK(row.recall <= 1);
            CHECK(row.f1 <= std::max(row.precision, row.recall) + 1e-12);
            CHECK(row.f1 >= std::min(row.precision, row.recall) - 1e-12);
        }
        CHECK(sum == t.overall.counts);
        CHECK(t.overall.counts.total() == n);
    }
}

TEST_CASE("evaluate uses recorded verdicts and the predictor") {
    std::vector<EvalRecord> records(3);
    records[0].label = EvalLabel::Active;
    records[0].predicted = Verdict::SuspectedThreat;
    records[1].label = EvalLabel::Benign;
    records[2].label = EvalLabel::Stealthy;
    int calls = 0;
    const auto t = evaluate(records, [&](const EvalRecord&) {
        ++calls;
        return Verdict::Benign;
    });
    CHECK(calls == 2);
    CHECK(t.overall.counts == ConfusionCounts{1, 0, 1, 1});
    CHECK_THROWS_AS(evaluate({}, [](const EvalRecord&) { return Verdict::Benign; }), Error);

    EvalRecord r{"lodahs", "lodash", RegistryId::Npm, EvalLabel::Stealthy, Verdict::SuspectedThreat};
    const auto back = nlohmann::json(r).get<EvalRecord>();
    CHECK(back.suspect == "lodahs");
    CHECK(back.label == EvalLabel::Stealthy);
    CHECK(back.predicted == Verdict::SuspectedThreat);
    CHECK_THROWS_AS(parse_eval_label("malicious"), Error);
}

TEST_CASE("grid search") {
    SUBCASE("separable scores") {
        std::vector<ScoredLabel> s;
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> hi(0.9, 1.0), lo(0.0, 0.5);
        for (int i = 0; i < 300; ++i) s.push_back({i % 2 ? hi(rng) : lo(rng), i % 2 == 1});
        s.push_back({0.5, false});
        s.push_back({0.9, true});
        const auto g = grid_search_threshold(s);
        CHECK(g.curve.size() == 101);
        CHECK(g.best_f1 == 1.0);
        CHECK(g.best_threshold > 0.5);
        CHECK(g.best_threshold <= 0.9);
        CHECK(g.operating_point.threshold == doctest::Approx(0.93));
        for (std::size_t i = 0; i < g.curve.size(); ++i) CHECK(g.curve[i].threshold == doctest::Approx(i / 100.0));
    }
    SUBCASE("identical scores tie to the lowest threshold") {
        std::vector<ScoredLabel> s{{0.5, true}, {0.5, false}, {0.5, true}};
        const auto g = grid_search_threshold(s);
        CHECK(g.best_threshold == 0.0);
        CHECK(g.curve[0].f1 == g.curve[50].f1);
        CHECK(g.curve[51].f1 == 0.0);
    }
    SUBCASE("threshold boundary is inclusive") {
        std::vector<ScoredLabel> s{{0.93, true}, {0.92, false}};
        const auto g = grid_search_threshold(s);
        CHECK(g.operating_point.f1 == 1.0);
    }
    CHECK_THROWS_AS(grid_search_threshold({}), Error);
    std::vector<ScoredLabel> bad{{1.5, true}};
    CHECK_THROWS_AS(grid_search_threshold(bad), Error);
}

TEST_CASE("property: the chosen threshold dominates the curve") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int round = 0; round < 100; ++round) {
        std::vector<ScoredLabel> s;
        const std::size_t n = 1 + rng() % 40;
        for (std::size_t i = 0; i < n; ++i) s.push_back({std::round(u(rng) * 100) / 100, rng() % 2 == 0});
        const auto g = grid_search_threshold(s);
        for (const auto& p : g.curve) {
            CHECK(p.f1 <= g.best_f1);
            if (p.threshold < g.best_threshold) CHECK(p.f1 < g.best_f1);
            CHECK(p.counts.total() == n);
        }
    }
}
