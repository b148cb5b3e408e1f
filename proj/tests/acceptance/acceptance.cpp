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


// Acceptance checks. Each criterion prints one PASS or FAIL line; run with
// criterion numbers as arguments to select a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "rule_fixtures.hpp"
#include "squatwatch/alerts.hpp"
#include "squatwatch/ann_index.hpp"
#include "squatwatch/embedder.hpp"
#include "squatwatch/evaluation.hpp"
#include "squatwatch/pipeline.hpp"
#include "squatwatch/synthetic.hpp"
#include "squatwatch/text.hpp"
#include "world_fixture.hpp"

using namespace squatwatch;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances and limits.
constexpr double kTableTolerance = 0.005;
constexpr double kTableSeconds = 1.0;
constexpr double kTaxonomyRecall = 0.99;
constexpr double kTaxonomySeconds = 300.0;
constexpr double kAnnRecall = 0.95;
constexpr double kAnnSeconds = 120.0;
constexpr double kUnitNormTolerance = 1e-6;
constexpr double kSubwordShare = 0.95;
constexpr double kCvF1 = 0.95;
constexpr double kGradientRelError = 1e-5;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fixed(double x, int digits = 3) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

// 1. Published confusion counts through the metric formulas.

struct TableRow {
    const char* dataset;
    const char* tool;
    const char* type;
    ConfusionCounts counts;
    double recall, precision, f1, accuracy;
};

const std::vector<TableRow>& table_rows() {
    static const std::vector<TableRow> rows = {
        {"set-a", "filtered", "active", {1103, 0, 0, 131}, 0.89, 1.00, 0.94, 0.89},
        {"set-a", "filtered", "stealthy", {68, 0, 0, 53}, 0.56, 1.00, 0.72, 0.56},
        {"set-a", "filtered", "benign", {0, 117, 347, 0}, 0.00, 0.00, 0.00, 0.72},
        {"set-a", "filtered", "overall", {1171, 117, 347, 184}, 0.86, 0.90, 0.88, 0.83},
        {"set-a", "name-only", "active", {1000, 0, 0, 239}, 0.80, 1.00, 0.89, 0.81},
        {"set-a", "name-only", "stealthy", {121, 0, 0, 0}, 1.00, 1.00, 1.00, 1.00},
        {"set-a", "name-only", "benign", {0, 480, 0, 0}, 0.00, 0.00, 0.00, 0.00},
        {"set-a", "name-only", "overall", {1121, 480, 0, 239}, 0.82, 0.70, 0.76, 0.61},
        {"set-b", "filtered", "active", {61, 0, 0, 72}, 0.53, 1.00, 0.70, 0.53},
        {"set-b", "filtered", "stealthy", {238, 0, 0, 171}, 0.74, 1.00, 0.85, 0.73},
        {"set-b", "filtered", "benign", {0, 414, 1078, 0}, 0.00, 0.00, 0.00, 0.72},
        {"set-b", "filtered", "overall", {299, 414, 1078, 243}, 0.55, 0.42, 0.48, 0.68},
        {"set-b", "name-only", "active", {71, 0, 0, 62}, 0.53, 1.00, 0.72, 0.56},
        {"set-b", "name-only", "stealthy", {219, 0, 0, 190}, 0.64, 1.00, 0.78, 0.64},
        {"set-b", "name-only", "benign", {0, 560, 932, 0}, 0.00, 0.00, 0.00, 0.61},
        {"set-b", "name-only", "overall", {290, 560, 932, 252}, 0.62, 0.28, 0.39, 0.62},
    };
    return rows;
}

Outcome table_reproduction() {
    const auto start = Clock::now();
    std::vector<std::string> mismatches;
    std::size_t cells = 0;
    for (const auto& row : table_rows()) {
        const auto m = metrics_from_counts(row.counts);
        const std::pair<const char*, std::pair<double, double>> checks[] = {
            {"recall", {m.recall, row.recall}},
            {"precision", {m.precision, row.precision}},
            {"f1", {m.f1, row.f1}},
            {"accuracy", {m.accuracy, row.accuracy}},
        };
        for (const auto& [metric, values] : checks) {
            ++cells;
            if (std::abs(values.first - values.second) > kTableTolerance) {
                mismatches.push_back(std::string(row.dataset) + "/" + row.tool + "/" + row.type + " " + metric +
                                     " " + fixed(values.first) + " vs " + fixed(values.second, 2));
            }
        }
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    std::string detail = std::to_string(table_rows().size()) + " rows, " + std::to_string(cells - mismatches.size()) +
                         "/" + std::to_string(cells) + " cells within " + fixed(kTableTolerance) + ", " +
                         fixed(secs, 4) + " s";
    for (const auto& m : mismatches) detail += "\n    mismatch: " + m;
    return {mismatches.empty() && secs < kTableSeconds, detail};
}

// Shared 10k-package world and its trained model.

std::shared_ptr<const EmbeddingModel> model_for(const fixtures::SeededWorld& w) {
    return std::make_shared<const EmbeddingModel>(train(w.world.corpus(), TrainingParams{}));
}

struct Stack {
    MetadataStore store;
    AlertStore alerts;
    Pipeline pipeline;

    Stack() : pipeline(Config{}, store, alerts) {}

    void load(const fixtures::SeededWorld& w, std::shared_ptr<const EmbeddingModel> model) {
        w.ingest(store);
        pipeline.set_model(std::move(model));
        for (RegistryId r : kAllRegistries) {
            if (store.latest_snapshot(r)) pipeline.build_index(r);
        }
    }

    std::size_t scan_all() {
        std::size_t created = 0;
        for (RegistryId r : kAllRegistries) {
            if (store.latest_snapshot(r)) created += pipeline.run_full_scan(r).alerts_created;
        }
        return created;
    }
};

// 2. Injected attacks flagged by scan_package.

Outcome taxonomy_recall() {
    const auto start = Clock::now();
    const fixtures::SeededWorld w(synthetic::WorldParams{}, 1000, 2024);
    Stack s;
    s.load(w, model_for(w));
    std::map<AttackCategory, std::pair<std::size_t, std::size_t>> per;  // flagged, total
    std::size_t flagged = 0, aimed = 0;
    for (const auto& a : w.attacks) {
        const auto scan = s.pipeline.scan_package(a.package.ref);
        auto& [hit, total] = per[a.technique];
        ++total;
        if (!scan.draft) continue;
        ++hit;
        ++flagged;
        for (const auto& p : scan.draft->pairs) {
            if (p.target == a.target) {
                ++aimed;
                break;
            }
        }
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    const double recall = static_cast<double>(flagged) / static_cast<double>(w.attacks.size());
    std::string detail = std::to_string(flagged) + "/" + std::to_string(w.attacks.size()) + " flagged (" +
                         fixed(recall) + ", need " + fixed(kTaxonomyRecall, 2) + "), " + std::to_string(aimed) +
                         " paired with the imitated target, " + fixed(secs, 1) + " s";
    for (const auto& [cat, c] : per) {
        detail += "\n    " + std::string(category_name(cat)) + " " + std::to_string(c.first) + "/" +
                  std::to_string(c.second);
    }
    return {recall >= kTaxonomyRecall && secs < kTaxonomySeconds, detail};
}

// 3. HNSW recall against exact search.

NameEmbedding random_unit(std::mt19937_64& rng, int dim) {
    std::normal_distribution<float> nd;
    std::vector<float> v(static_cast<std::size_t>(dim));
    for (auto& x : v) x = nd(rng);
    return make_embedding(std::move(v));
}

Outcome ann_quality() {
    constexpr int kDim = 100;  // the embedder's dimension
    constexpr std::size_t kItems = 10'000, kQueries = 1'000, kK = 10;
    const auto start = Clock::now();
    std::mt19937_64 rng(31);
    std::vector<IndexItem> items;
    items.reserve(kItems);
    for (std::size_t i = 0; i < kItems; ++i) {
        items.push_back({parse_name(RegistryId::Pypi, "vec" + std::to_string(i)), NamePart::Full,
                         random_unit(rng, kDim)});
    }
    AnnParams params;
    params.M = 16;
    params.ef_construction = 200;
    const auto index = build_index(items, params);
    std::vector<NameEmbedding> queries;
    for (std::size_t i = 0; i < kQueries; ++i) queries.push_back(random_unit(rng, kDim));
    std::vector<std::vector<NeighborHit>> truth;
    for (const auto& q : queries) truth.push_back(exact_search(items, q, kK));

    auto recall_at = [&](std::size_t ef) {
        std::size_t found = 0;
        for (std::size_t i = 0; i < queries.size(); ++i) {
            const auto got = index.search(queries[i], kK, ef);
            for (const auto& t : truth[i]) {
                found += std::any_of(got.begin(), got.end(), [&](const NeighborHit& h) { return h.ref == t.ref; });
            }
        }
        return static_cast<double>(found) / static_cast<double>(kQueries * kK);
    };
    const double r100 = recall_at(100);
    const double r32 = recall_at(32), r64 = recall_at(64), r128 = recall_at(128);
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    const bool monotone = r32 <= r64 && r64 <= r128;
    return {r100 >= kAnnRecall && monotone && secs < kAnnSeconds,
            "recall@10 " + fixed(r100) + " at ef_search 100 (need " + fixed(kAnnRecall, 2) + "), ef 32/64/128: " +
                fixed(r32) + "/" + fixed(r64) + "/" + fixed(r128) + (monotone ? " monotone" : " NOT monotone") + ", d=" +
                std::to_string(kDim) + ", " + fixed(secs, 1) + " s"};
}

// 4. Embedding properties on the bundled corpus.

std::vector<std::string> bundled_corpus() {
    std::ifstream in(std::string(SQUATWATCH_DATA_DIR) + "/corpus/names_5k.txt");
    std::vector<std::string> names;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty()) names.push_back(line);
    }
    return names;
}

std::string one_edit(const std::string& s, std::mt19937_64& rng) {
    static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz";
    std::string out = s;
    while (out == s) {
        const std::size_t at = rng() % s.size();
        switch (rng() % 4) {
            case 0: out[at] = alphabet[rng() % alphabet.size()]; break;
            case 1:
                if (s.size() > 1) out.erase(at, 1);
                break;
            case 2: out.insert(at, 1, alphabet[rng() % alphabet.size()]); break;
            default:
                if (at + 1 < s.size()) std::swap(out[at], out[at + 1]);
                break;
        }
    }
    return out;
}

Outcome embedding_properties() {
    const auto corpus = bundled_corpus();
    if (corpus.size() < 5000) return {false, "bundled corpus has " + std::to_string(corpus.size()) + " names"};
    TrainingParams tp;
    const auto model = train(corpus, tp);
    const auto again = train(corpus, tp);

    std::mt19937_64 rng(77);
    double worst_norm = 0;
    bool deterministic = true;
    std::size_t wins = 0;
    constexpr std::size_t kSamples = 200;
    for (std::size_t i = 0; i < kSamples; ++i) {
        const std::string& name = corpus[rng() % corpus.size()];
        std::string other = name;
        while (other == name) other = corpus[rng() % corpus.size()];
        const auto ref = parse_name(RegistryId::Pypi, name);
        const auto base = model.embed_text(ref.normalized);
        const auto variant = model.embed_text(one_edit(ref.normalized, rng));
        const auto unrelated = model.embed_text(parse_name(RegistryId::Pypi, other).normalized);
        for (const auto* e : {&base, &variant, &unrelated}) {
            double sq = 0;
            for (float x : e->vector) sq += static_cast<double>(x) * x;
            worst_norm = std::max(worst_norm, std::abs(std::sqrt(sq) - 1.0));
        }
        deterministic &= again.embed_text(ref.normalized).vector == base.vector;
        wins += cosine(base, variant) > cosine(base, unrelated);
    }
    const double share = static_cast<double>(wins) / kSamples;
    return {worst_norm <= kUnitNormTolerance && deterministic && share >= kSubwordShare,
            "max |norm-1| " + std::to_string(worst_norm) + ", retrain identical: " + (deterministic ? "yes" : "no") +
                ", one-edit variant closer than a random name in " + std::to_string(wins) + "/" +
                std::to_string(kSamples) + " (" + fixed(share) + ", need " + fixed(kSubwordShare, 2) + ")"};
}

// 5. Lexical channel against a brute-force edit-distance scan.

PackageMetadata popular(RegistryId r, const std::string& name, std::int64_t downloads) {
    PackageMetadata m;
    m.ref = parse_name(r, name);
    m.weekly_downloads = downloads;
    m.maintainers = {"someone"};
    return m;
}

Outcome lexical_oracle() {
    const auto corpus = bundled_corpus();
    TrainingParams tp;
    tp.epochs = 5;
    const auto model = std::make_shared<const EmbeddingModel>(train(corpus, tp));

    std::vector<PackageMetadata> packages;
    std::set<std::string> seen;
    for (const auto& n : synthetic::make_flat_names(480, 5)) {
        if (seen.insert(n).second) packages.push_back(popular(RegistryId::Pypi, n, 1'000'000));
    }
    std::mt19937_64 rng(13);
    std::vector<std::string> suspects;
    const std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789-";
    while (suspects.size() < 50) {
        std::string s = packages[rng() % packages.size()].ref.raw;
        const int edits = 1 + static_cast<int>(rng() % 3);
        for (int e = 0; e < edits && s.size() > 2; ++e) {
            const std::size_t at = 1 + rng() % (s.size() - 2);
            switch (rng() % 3) {
                case 0: s[at] = alphabet[rng() % alphabet.size()]; break;
                case 1: s.erase(at, 1); break;
                default: s.insert(at, 1, alphabet[rng() % 26]); break;
            }
        }
        if (seen.insert(s).second) {
            suspects.push_back(s);
            packages.push_back(popular(RegistryId::Pypi, s, 1));
        }
    }
    MetadataStore store;
    std::stringstream ss;
    synthetic::write_snapshot(ss, packages);
    store.ingest_snapshot(RegistryId::Pypi, ss, fixtures::scan_time());
    const auto ctx = SearchContext::build(store, RegistryId::Pypi, model, TrustPolicy::defaults());
    if (ctx.trusted().size() > 500) return {false, "trusted set too large: " + std::to_string(ctx.trusted().size())};

    std::size_t equal = 0, nonempty = 0;
    for (const auto& s : suspects) {
        const auto suspect = parse_name(RegistryId::Pypi, s);
        std::set<std::string> expected, got;
        for (const auto& t : ctx.trusted()) {
            if (text::damerau_levenshtein(suspect.similarity_key(), t.similarity_key()) <= 2) expected.insert(t.raw);
        }
        for (const auto& p : ctx.find_candidates(store, suspect, {})) {
            if (p.lexical_distance <= 2) got.insert(p.target.raw);
        }
        equal += got == expected;
        nonempty += !expected.empty();
    }
    return {equal == suspects.size(), std::to_string(equal) + "/" + std::to_string(suspects.size()) +
                                          " suspects match the oracle exactly (" + std::to_string(nonempty) +
                                          " with matches), trusted set " + std::to_string(ctx.trusted().size())};
}

// 6. One crafted case per metadata rule.

Outcome rule_fixtures() {
    BenignityFilter filter(std::make_shared<const HeuristicJudge>());
    std::vector<std::string> failed;
    std::set<std::string> rules;
    const auto cases = fixtures::rule_cases();
    for (const auto& c : cases) {
        const auto base = fixtures::run(filter, c.baseline);
        const auto variant = fixtures::run(filter, c.variant);
        const bool ok = variant.verdict == c.expected && base.verdict != c.expected &&
                        !base.outcomes.is_true(c.directive) && variant.outcomes.is_true(c.directive);
        if (ok) rules.insert(c.rule.substr(0, c.rule.find('-')));
        if (!ok) failed.push_back(c.rule);
    }
    std::string detail = std::to_string(cases.size() - failed.size()) + "/" + std::to_string(cases.size()) +
                         " cases flip as expected, " + std::to_string(rules.size()) + " of 15 rules covered";
    for (const auto& f : failed) detail += "\n    failed: " + f;
    return {failed.empty() && rules.size() == 15, detail};
}

// 7. Logistic fit and its gradient.

std::vector<LabeledOutcome> separable_rows(std::size_t n, std::mt19937_64& rng) {
    std::vector<LabeledOutcome> rows;
    for (std::size_t i = 0; i < n; ++i) {
        LabeledOutcome row;
        for (Directive d : all_directives()) {
            row.outcome.set(d, static_cast<Tri>(rng() % 3),
                            is_judge_directive(d) ? OutcomeSource::Judge : OutcomeSource::Metadata);
        }
        row.label = i % 2 == 0 ? Label::Threat : Label::Benign;
        const bool threat = row.label == Label::Threat;
        row.outcome.set(Directive::HasSuspiciousIntent, tri_of(threat), OutcomeSource::Judge);
        row.outcome.set(Directive::IsKnownMaintainer, tri_of(!threat), OutcomeSource::Judge);
        rows.push_back(row);
    }
    return rows;
}

Outcome weight_fitting() {
    std::mt19937_64 rng(9);
    const auto rows = separable_rows(300, rng);
    const auto fit = fit_rule_weights(rows, 5);

    double worst = 0, worst_abs = 0;
    std::normal_distribution<double> nd;
    for (int round = 0; round < 20; ++round) {
        auto sample = separable_rows(20 + rng() % 40, rng);
        for (auto& r : sample) {
            if (rng() % 4 == 0) r.label = r.label == Label::Threat ? Label::Benign : Label::Threat;
        }
        std::vector<double> p(kDirectiveCount + 1);
        for (auto& x : p) x = nd(rng);
        const double l2 = 1e-3 * static_cast<double>(rng() % 10);
        const auto g = fit_gradient(p, sample, l2);
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double h = 1e-5;
            auto up = p, down = p;
            up[i] += h;
            down[i] -= h;
            const double numeric = (fit_objective(up, sample, l2) - fit_objective(down, sample, l2)) / (2 * h);
            const double diff = std::abs(numeric - g[i]);
            worst_abs = std::max(worst_abs, diff);
            if (diff > 1e-9) worst = std::max(worst, diff / std::max(std::abs(numeric), std::abs(g[i])));
        }
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2e (largest absolute difference %.2e)", worst, worst_abs);
    return {fit.cv_f1 >= kCvF1 && worst <= kGradientRelError,
            "CV F1 " + fixed(fit.cv_f1) + " over " + std::to_string(rows.size()) + " rows, 5 folds (need " +
                fixed(kCvF1, 2) + "), worst gradient relative error " + buf};
}

// 8. Threshold grid over separable scores.

Outcome grid_search() {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> low(0.0, 0.5), high(0.51, 1.0);
    std::vector<ScoredLabel> scores;
    for (int i = 0; i < 500; ++i) scores.push_back({low(rng), false});
    for (int i = 0; i < 500; ++i) scores.push_back({high(rng), true});
    std::shuffle(scores.begin(), scores.end(), rng);
    const auto r = grid_search_threshold(scores);
    bool steps = r.curve.size() == kGridSteps + 1;
    for (std::size_t i = 0; steps && i < r.curve.size(); ++i) {
        steps = std::abs(r.curve[i].threshold - static_cast<double>(i) / kGridSteps) < 1e-12;
    }
    return {r.best_f1 == 1.0 && steps,
            "best threshold " + fixed(r.best_threshold, 2) + " with F1 " + fixed(r.best_f1) + ", curve of " +
                std::to_string(r.curve.size()) + " points" + (steps ? " at 0.01 steps" : " with wrong steps")};
}

// 9. Rescans and analyst feedback.

Outcome idempotency_and_feedback() {
    const fixtures::SeededWorld w(synthetic::WorldParams{}, 50, 11);
    Stack s;
    s.load(w, model_for(w));
    const std::size_t first = s.scan_all();
    const std::size_t second = s.scan_all();
    const std::size_t stored = s.alerts.size();

    std::optional<Alert> chosen;
    for (const auto& a : s.alerts.all()) {
        if (a.report.pair.suspect.namespace_ && !a.report.pair.suspect.domain) {
            chosen = a;
            break;
        }
    }
    if (!chosen) return {false, "no namespaced alert to dismiss"};
    const auto org = implied_allowlist(*chosen, AllowListKind::Organization);
    s.alerts.transition(chosen->id, AlertStatus::DismissedBenign, "internal", org, &s.store);

    w.ingest(s.store, w.world.now + days_of(1));
    std::size_t third = 0, leaked = 0;
    for (RegistryId r : kAllRegistries) {
        if (!s.store.latest_snapshot(r)) continue;
        const auto summary = s.pipeline.run_full_scan(r);
        third += summary.alerts_created;
        for (const auto& id : summary.created_ids) {
            leaked += s.alerts.get(id).report.pair.suspect.namespace_.value_or("") == org.value;
        }
    }
    return {first > 0 && second == 0 && stored == first && third > 0 && leaked == 0,
            "first scan " + std::to_string(first) + " alerts, rescan " + std::to_string(second) +
                " new; after dismissing with organization '" + org.value + "', next snapshot " +
                std::to_string(third) + " new alerts, " + std::to_string(leaked) + " in that namespace"};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"published metric arithmetic", table_reproduction},
        {"attack taxonomy recall", taxonomy_recall},
        {"ANN recall", ann_quality},
        {"embedding properties", embedding_properties},
        {"lexical channel oracle", lexical_oracle},
        {"benignity rule fixtures", rule_fixtures},
        {"weight fitting", weight_fitting},
        {"threshold grid search", grid_search},
        {"idempotency and feedback", idempotency_and_feedback},
    };
    std::set<std::size_t> selected;
    for (int i = 1; i < argc; ++i) {
        const int n = std::atoi(argv[i]);
        if (n < 1 || n > static_cast<int>(criteria.size())) {
            std::fprintf(stderr, "usage: %s [criterion 1-%zu ...]\n", argv[0], criteria.size());
            return 2;
        }
        selected.insert(static_cast<std::size_t>(n));
    }
    spdlog::set_level(spdlog::level::warn);
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!selected.empty() && !selected.count(i + 1)) continue;
        const auto start = Clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(Clock::now() - start).count();
        std::printf("criterion %zu %s: %s [%s s] %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                    fixed(secs, 1).c_str(), o.detail.c_str());
        std::fflush(stdout);
        failures += !o.pass;
    }
    return failures == 0 ? 0 : 1;
}
