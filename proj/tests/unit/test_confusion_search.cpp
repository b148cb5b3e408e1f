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

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "squatwatch/confusion_search.hpp"
#include "squatwatch/errors.hpp"
#include "squatwatch/synthetic.hpp"
#include "squatwatch/text.hpp"

using namespace squatwatch;
using nlohmann::json;

namespace {

std::vector<std::string> bundled_corpus() {
    std::ifstream in(std::string(SQUATWATCH_DATA_DIR) + "/corpus/names_5k.txt");
    std::vector<std::string> names;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty()) names.push_back(line);
    }
    return names;
}

const std::vector<std::string> kFixtureNames = {
    "bz2file",       "python-nmap",      "@typescript-eslint/eslint-plugin", "@typescript-eslint/parser",
    "@scope/pkg-utils", "lodash",         "express",                          "react-dom",
    "left-pad",      "chalk",            "@babel/core",                      "@angular/core"};

std::shared_ptr<const EmbeddingModel> fixture_model() {
    static const auto model = [] {
        auto corpus = bundled_corpus();
        for (const auto& n : kFixtureNames) corpus.push_back(corpus_entry(parse_name(RegistryId::Npm, n)));
        TrainingParams p;
        p.epochs = 5;
        return std::make_shared<const EmbeddingModel>(train(corpus, p));
    }();
    return model;
}

PackageMetadata pkg(RegistryId r, const std::string& name, std::int64_t downloads,
                    std::vector<std::string> maintainers = {"someone"}) {
    PackageMetadata m;
    m.ref = parse_name(r, name);
    m.weekly_downloads = downloads;
    m.maintainers = std::move(maintainers);
    return m;
}

PackageMetadata ranked(const std::string& name, double ranking) {
    PackageMetadata m;
    m.ref = parse_name(RegistryId::Golang, name);
    m.avg_ranking = ranking;
    return m;
}

void ingest(MetadataStore& store, RegistryId r, const std::vector<PackageMetadata>& packages) {
    std::stringstream ss;
    synthetic::write_snapshot(ss, packages);
    store.ingest_snapshot(r, ss);
}

std::vector<PackageMetadata> npm_fixture() {
    std::vector<PackageMetadata> out;
    std::int64_t d = 9'000'000;
    for (const auto& n : kFixtureNames) {
        out.push_back(pkg(RegistryId::Npm, n, d));
        d -= 100'000;
    }
    out.push_back(pkg(RegistryId::Npm, "bz2fiel", 3));
    out.push_back(pkg(RegistryId::Npm, "nmap-python", 4));
    out.push_back(pkg(RegistryId::Npm, "@typescript_eslinter/eslint", 5));
    out.push_back(pkg(RegistryId::Npm, "@scope/pkg", 6));
    out.push_back(pkg(RegistryId::Npm, "@eslint-typescript/parser", 6));
    out.push_back(pkg(RegistryId::Npm, "@typescript_eslint/parser", 6));
    out.push_back(pkg(RegistryId::Npm, "lodashh", 7));
    out.push_back(pkg(RegistryId::Npm, "lodahs", 8));
    out.push_back(pkg(RegistryId::Npm, "zzqqxxvv", 9));
    // Trusted, but an order of magnitude behind "lodash" only.
    out.push_back(pkg(RegistryId::Npm, "lodasj", 6'000));
    out.push_back(pkg(RegistryId::Npm, "expresz", 8'800'000));
    return out;
}

struct Fixture {
    MetadataStore store;
    std::optional<SearchContext> ctx;
    Fixture() {
        ingest(store, RegistryId::Npm, npm_fixture());
        ctx = SearchContext::build(store, RegistryId::Npm, fixture_model(), TrustPolicy::defaults());
    }
    PackageRef ref(const std::string& n) const { return parse_name(RegistryId::Npm, n); }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

std::set<std::string> targets(const std::vector<CandidatePair>& pairs) {
    std::set<std::string> out;
    for (const auto& p : pairs) out.insert(p.target.raw);
    return out;
}

}  // namespace

TEST_CASE("thresholds validate") {
    SearchThresholds t;
    CHECK_NOTHROW(t.validate());
    t.levenshtein_max = 0;
    CHECK_THROWS_AS(t.validate(), Error);
    t = {};
    t.cosine_min = 0.995;
    CHECK_THROWS_AS(t.validate(), Error);
    t = {};
    t.top_k = 0;
    CHECK_THROWS_AS(t.validate(), Error);
}

TEST_CASE("one-edit typo flags through the lexical channel") {
    auto& f = fixture();
    const auto pairs = f.ctx->find_candidates(f.store, f.ref("bz2fiel"), {});
    REQUIRE(targets(pairs).count("bz2file") == 1);
    const auto it = std::find_if(pairs.begin(), pairs.end(), [](auto& p) { return p.target.raw == "bz2file"; });
    CHECK(it->lexical_distance == 1);
    CHECK((it->channel == Channel::Lexical || it->channel == Channel::Multiple));

    const auto draft = f.ctx->scan_package(f.store, f.ref("bz2fiel"), {});
    REQUIRE(draft.has_value());
    CHECK(draft->pairs.front().target.raw == "bz2file");
    CHECK(draft->pairs.front().category == AttackCategory::OneStepLevenshtein);
}

TEST_CASE("transposition counts as one edit") {
    auto& f = fixture();
    const auto pairs = f.ctx->find_candidates(f.store, f.ref("lodahs"), {});
    REQUIRE(targets(pairs).count("lodash") == 1);
    CHECK(pairs.front().lexical_distance == 1);
}

TEST_CASE("token reordering is categorized") {
    auto& f = fixture();
    const auto draft = f.ctx->scan_package(f.store, f.ref("nmap-python"), {});
    REQUIRE(draft.has_value());
    CHECK(draft->pairs.front().target.raw == "python-nmap");
    CHECK(draft->pairs.front().category == AttackCategory::SequenceReordering);
}

TEST_CASE("same-namespace neighbours are suppressed") {
    auto& f = fixture();
    CHECK(targets(f.ctx->find_candidates(f.store, f.ref("@scope/pkg"), {})).count("@scope/pkg-utils") == 0);
}

TEST_CASE("look-alike scope flags through the hierarchical channel") {
    auto& f = fixture();
    const auto pairs = f.ctx->find_candidates(f.store, f.ref("@eslint-typescript/parser"), {});
    auto it = std::find_if(pairs.begin(), pairs.end(),
                           [](auto& p) { return p.target.raw == "@typescript-eslint/parser"; });
    REQUIRE(it != pairs.end());
    REQUIRE(it->cosine_namespace.has_value());
    CHECK(*it->cosine_namespace >= 0.90);
    CHECK((it->channel == Channel::Hierarchical || it->channel == Channel::Multiple));
    CHECK(it->category == AttackCategory::ImpersonationSquatting);

    // A scope that differs only in its delimiter is another owner, not a
    // same-author neighbour.
    const auto delim = f.ctx->find_candidates(f.store, f.ref("@typescript_eslint/parser"), {});
    REQUIRE(targets(delim).count("@typescript-eslint/parser") == 1);
    CHECK(delim.front().lexical_distance == 0);

    // A renamed scope with a longer identifier stays below both component
    // thresholds.
    const auto far = f.ctx->find_candidates(f.store, f.ref("@typescript_eslinter/eslint"), {});
    CHECK(targets(far).count("@typescript-eslint/eslint-plugin") == 0);
}

TEST_CASE("isolated names raise nothing") {
    auto& f = fixture();
    CHECK_FALSE(f.ctx->scan_package(f.store, f.ref("zzqqxxvv"), {}).has_value());
    CHECK_FALSE(f.ctx->scan_package(f.store, f.ref("chalk"), {}).has_value());
}

TEST_CASE("trusted suspects are compared only with more-trusted targets") {
    auto& f = fixture();
    // lodasj is trusted with 6k downloads; lodash has far more.
    CHECK(targets(f.ctx->find_candidates(f.store, f.ref("lodasj"), {})).count("lodash") == 1);
    // expresz and express are both popular and close in downloads.
    CHECK(targets(f.ctx->find_candidates(f.store, f.ref("expresz"), {})).count("express") == 0);
    // The popular side never reports the smaller one.
    CHECK(targets(f.ctx->find_candidates(f.store, f.ref("lodash"), {})).count("lodasj") == 0);
}

TEST_CASE("pair invariants") {
    auto& f = fixture();
    const auto trusted = f.ctx->trusted();
    for (const auto& name : {"bz2fiel", "nmap-python", "lodashh", "lodahs", "@eslint-typescript/parser"}) {
        for (const auto& p : f.ctx->find_candidates(f.store, f.ref(name), {})) {
            CHECK(p.suspect.raw != p.target.raw);
            CHECK(std::find(trusted.begin(), trusted.end(), p.target) != trusted.end());
            const bool lexical = p.lexical_distance <= 2;
            const bool semantic = p.cosine_full >= 0.93;
            const bool hier = p.cosine_namespace && *p.cosine_namespace >= 0.90 &&
                              (p.suspect.identifier == p.target.identifier || *p.cosine_identifier >= 0.99);
            CHECK((lexical || semantic || hier));
            CHECK(p.composite.max_score >= 0);
            CHECK(p.composite.max_score <= 1);
        }
    }
}

TEST_CASE("errors") {
    auto& f = fixture();
    try {
        f.ctx->find_candidates(f.store, f.ref("never-ingested"), {});
        FAIL("expected UnknownSuspect");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownSuspect);
    }
    try {
        f.ctx->find_candidates(f.store, parse_name(RegistryId::Pypi, "requests"), {});
        FAIL("expected IndexNotBuilt");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IndexNotBuilt);
    }
    MetadataStore empty;
    CHECK_THROWS_AS(SearchContext::build(empty, RegistryId::Npm, fixture_model(), TrustPolicy::defaults()), Error);

    AnnIndex partial;
    partial.add(f.ref("lodash"), NamePart::Full, embed(*fixture_model(), f.ref("lodash"), NamePart::Full));
    try {
        SearchContext::with_index(f.store, RegistryId::Npm, fixture_model(), TrustPolicy::defaults(),
                                  std::move(partial));
        FAIL("expected IndexNotBuilt");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IndexNotBuilt);
    }
}

TEST_CASE("top_neighbors ordering") {
    auto pair = [](const std::string& target, double score, std::optional<double> pop) {
        CandidatePair p;
        p.suspect = parse_name(RegistryId::Npm, "s");
        p.target = parse_name(RegistryId::Npm, target);
        p.composite.max_score = score;
        p.target_popularity = pop;
        return p;
    };
    std::vector<CandidatePair> five = {pair("c", 0.95, 1), pair("a", 1.0, 1), pair("e", 0.8, 1),
                                       pair("b", 0.97, 1), pair("d", 0.9, 1)};
    const auto top = top_neighbors(five, 2);
    REQUIRE(top.size() == 2);
    CHECK(top[0].target.raw == "a");
    CHECK(top[1].target.raw == "b");

    const auto tied = top_neighbors({pair("x", 1.0, 100), pair("y", 1.0, 5000)}, 2);
    CHECK(tied[0].target.raw == "y");
    const auto named = top_neighbors({pair("y", 1.0, 7), pair("x", 1.0, 7)}, 2);
    CHECK(named[0].target.raw == "x");

    CHECK(top_neighbors({pair("x", 0.5, 1)}, 2).size() == 1);
    CHECK(top_neighbors({}, 2).empty());
}

TEST_CASE("property: top_neighbors is a prefix of the full ranking") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> score(0, 5), pop(0, 3), len(0, 12);
    for (int round = 0; round < 200; ++round) {
        std::vector<CandidatePair> pairs;
        const int n = len(rng);
        for (int i = 0; i < n; ++i) {
            CandidatePair p;
            p.target = parse_name(RegistryId::Npm, "t" + std::to_string(i));
            p.composite.max_score = score(rng) / 5.0;
            p.target_popularity = pop(rng);
            pairs.push_back(p);
        }
        const auto full = top_neighbors(pairs, pairs.size());
        for (std::size_t k = 1; k <= 4; ++k) {
            const auto top = top_neighbors(pairs, k);
            REQUIRE(top.size() == std::min<std::size_t>(k, pairs.size()));
            for (std::size_t i = 0; i < top.size(); ++i) CHECK(top[i].target.raw == full[i].target.raw);
        }
        for (std::size_t i = 1; i < full.size(); ++i) {
            CHECK(full[i - 1].composite.max_score >= full[i].composite.max_score);
        }
    }
}

TEST_CASE("property: lexical channel equals the brute-force oracle") {
    MetadataStore store;
    std::vector<PackageMetadata> packages;
    const auto names = synthetic::make_flat_names(400, 99);
    std::set<std::string> seen;
    for (const auto& n : names) {
        if (seen.insert(n).second) packages.push_back(pkg(RegistryId::Pypi, n, 1'000'000));
    }
    std::mt19937_64 rng(5);
    std::vector<std::string> suspects;
    const std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
    for (int i = 0; i < 50; ++i) {
        std::string s = packages[rng() % packages.size()].ref.normalized;
        const int edits = 1 + static_cast<int>(rng() % 3);
        for (int e = 0; e < edits && s.size() > 1; ++e) {
            const std::size_t at = rng() % s.size();
            switch (rng() % 3) {
                case 0: s[at] = alphabet[rng() % alphabet.size()]; break;
                case 1: s.erase(at, 1); break;
                default: s.insert(at, 1, alphabet[rng() % alphabet.size()]); break;
            }
        }
        if (seen.insert(s).second) {
            suspects.push_back(s);
            packages.push_back(pkg(RegistryId::Pypi, s, 1));
        }
    }
    ingest(store, RegistryId::Pypi, packages);
    const auto ctx = SearchContext::build(store, RegistryId::Pypi, fixture_model(), TrustPolicy::defaults());
    REQUIRE(ctx.trusted().size() <= 500);
    for (const auto& s : suspects) {
        const auto suspect = parse_name(RegistryId::Pypi, s);
        std::set<std::string> expected, got;
        for (const auto& t : ctx.trusted()) {
            if (text::damerau_levenshtein(suspect.similarity_key(), t.similarity_key()) <= 2) expected.insert(t.raw);
        }
        for (std::size_t i : ctx.lexical_matches(suspect.similarity_key(), 2)) got.insert(ctx.trusted()[i].raw);
        CHECK(got == expected);
        std::set<std::string> flagged_lexically;
        for (const auto& p : ctx.find_candidates(store, suspect, {})) {
            if (p.lexical_distance <= 2) flagged_lexically.insert(p.target.raw);
        }
        CHECK(flagged_lexically == expected);
    }
}

TEST_CASE("golang domain confusion and mirror domains") {
    MetadataStore store;
    ingest(store, RegistryId::Golang,
           {ranked("github.com/go-git/go-git", 1.0), ranked("gopkg.in/go-git/go-git", 40.0),
            ranked("gitlab.com/go-git/go-git", 40.0)});
    const auto ctx = SearchContext::build(store, RegistryId::Golang, fixture_model(), TrustPolicy::defaults());
    const auto mirror = parse_name(RegistryId::Golang, "gopkg.in/go-git/go-git");
    const auto fake = parse_name(RegistryId::Golang, "gitlab.com/go-git/go-git");

    auto draft = ctx.scan_package(store, fake, {});
    REQUIRE(draft.has_value());
    CHECK(draft->pairs.front().target.raw == "github.com/go-git/go-git");
    CHECK(draft->pairs.front().category == AttackCategory::DomainConfusion);
    CHECK(ctx.scan_package(store, mirror, {}).has_value());

    store.update_allowlist(AllowListKind::MirrorDomain, "gopkg.in", AllowListAction::Add);
    CHECK_FALSE(ctx.scan_package(store, mirror, {}).has_value());
    CHECK(ctx.scan_package(store, fake, {}).has_value());
}

TEST_CASE("alert drafts round-trip through JSON") {
    auto& f = fixture();
    const auto draft = f.ctx->scan_package(f.store, f.ref("@eslint-typescript/parser"), {});
    REQUIRE(draft.has_value());
    const json j = *draft;
    const auto back = j.get<AlertDraft>();
    CHECK(back.suspect == draft->suspect);
    REQUIRE(back.pairs.size() == draft->pairs.size());
    for (std::size_t i = 0; i < back.pairs.size(); ++i) {
        CHECK(back.pairs[i].target == draft->pairs[i].target);
        CHECK(back.pairs[i].composite == draft->pairs[i].composite);
        CHECK(back.pairs[i].category == draft->pairs[i].category);
        CHECK(back.pairs[i].channel == draft->pairs[i].channel);
        CHECK(back.pairs[i].cosine_namespace == draft->pairs[i].cosine_namespace);
    }
    CHECK_THROWS_AS(json({{"suspect", {{"registry", "npm"}}}}).get<AlertDraft>(), Error);
}

TEST_CASE("synthetic attacks are found") {
    synthetic::WorldParams wp;
    wp.npm_flat = 600;
    wp.npm_scoped = 300;
    wp.huggingface = 300;
    wp.golang = 300;
    const auto world = synthetic::make_world(wp);
    auto attacks = synthetic::make_attacks(world, 80, 3);
    MetadataStore store;
    std::map<RegistryId, std::vector<PackageMetadata>> by_registry;
    for (const auto& p : world.packages) by_registry[p.ref.registry].push_back(p);
    for (const auto& a : attacks) by_registry[a.package.ref.registry].push_back(a.package);
    for (const auto& [r, pkgs] : by_registry) ingest(store, r, pkgs);

    auto corpus = world.corpus();
    TrainingParams tp;
    tp.epochs = 25;
    const auto model = std::make_shared<const EmbeddingModel>(train(corpus, tp));
    std::map<RegistryId, SearchContext> contexts;
    for (const auto& [r, pkgs] : by_registry) {
        contexts.emplace(r, SearchContext::build(store, r, model, TrustPolicy::defaults()));
    }
    std::size_t found = 0, aimed = 0;
    for (const auto& a : attacks) {
        const auto draft = contexts.at(a.package.ref.registry).scan_package(store, a.package.ref, {});
        if (!draft) {
            MESSAGE("missed " << a.package.ref.raw << " -> " << a.target.raw << " " << category_name(a.technique));
            continue;
        }
        ++found;
        for (const auto& p : draft->pairs) aimed += p.target == a.target;
    }
    MESSAGE("found " << found << "/" << attacks.size() << ", aimed at the injected target " << aimed);
    // A small world trains weak synonym vectors; the full-size run lives in the
    // acceptance suite.
    CHECK(found >= attacks.size() * 85 / 100);
}
