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

#include "squatwatch/config.hpp"
#include "squatwatch/errors.hpp"

using namespace squatwatch;

TEST_CASE("defaults") {
    const Config c = Config::parse("", "/work");
    CHECK(c.workspace == "/work/squatwatch-data");
    CHECK(c.store_path() == "/work/squatwatch-data/metadata.jsonl");
    CHECK(c.index_path(RegistryId::Pypi) == "/work/squatwatch-data/index-pypi.hnsw");
    CHECK(c.thresholds.cosine_min == 0.93);
    CHECK(c.thresholds.top_k == 2);
    CHECK(c.trust.download_threshold.at(RegistryId::Npm) == 5000);
    CHECK(c.judge.kind == JudgeKind::Heuristic);
    CHECK(c.judge.parallelism == 4);
    CHECK(c.server.port == 8080);
    CHECK(c.rule_weights().decision_threshold == 0.5);
    CHECK(make_judge(c.judge)->name() == "heuristic");
}

TEST_CASE("every section overrides") {
    const Config c = Config::parse(R"(
[paths]
workspace = ws
model = /models/m.bin
[trust]
npm_downloads = 100
golang_ranking = 2.5
download_dominance = 4
[thresholds]
levenshtein_max = 1
cosine_min = 0.9
top_k = 5
ef_search = 64
[embedding]
dimension = 32
epochs = 3
seed = 9
[index]
m = 8
ef_construction = 50
[judge]
kind = external
url = http://127.0.0.1:9/v1
timeout_ms = 500
parallelism = 2
[weights]
decision_threshold = 0.6
[server]
host = 0.0.0.0
port = 9090
[scan]
workers = 3
)",
                                   "/etc/sw");
    CHECK(c.workspace == "/etc/sw/ws");
    CHECK(c.model_path() == "/models/m.bin");
    CHECK(c.trust.download_threshold.at(RegistryId::Npm) == 100);
    CHECK(c.trust.ranking_threshold.at(RegistryId::Golang) == 2.5);
    CHECK(c.trust.download_dominance == 4);
    CHECK(c.thresholds.levenshtein_max == 1);
    CHECK(c.thresholds.top_k == 5);
    CHECK(c.thresholds.ef_search == 64);
    CHECK(c.training.dimension == 32);
    CHECK(c.training.seed == 9);
    CHECK(c.ann.M == 8);
    CHECK(c.judge.kind == JudgeKind::External);
    CHECK(c.judge.timeout.count() == 500);
    CHECK(c.rule_weights().decision_threshold == 0.6);
    CHECK(c.server.host == "0.0.0.0");
    CHECK(c.server.port == 9090);
    CHECK(c.scan_workers == 3);
    CHECK(make_judge(c.judge)->name() == "external");
}

TEST_CASE("bad configs are rejected") {
    auto code_of = [](const std::string& ini) {
        try {
            Config::parse(ini);
        } catch (const Error& e) {
            return e.code();
        }
        FAIL("expected an error for: " << ini);
        return ErrorCode::InvalidArgument;
    };
    CHECK(code_of("[thresholds]\ncosine_mni = 0.9\n") == ErrorCode::InvalidArgument);
    CHECK(code_of("[nosuch]\nkey = 1\n") == ErrorCode::InvalidArgument);
    CHECK(code_of("[thresholds]\ntop_k = two\n") == ErrorCode::InvalidArgument);
    CHECK(code_of("[thresholds]\ntop_k = 2x\n") == ErrorCode::InvalidArgument);
    CHECK(code_of("[server]\nport = 70000\n") == ErrorCode::InvalidParams);
    CHECK(code_of("[thresholds]\ncosine_min = 1.5\n") == ErrorCode::InvalidParams);
    CHECK(code_of("[judge]\nkind = external\n") == ErrorCode::InvalidParams);
    CHECK(code_of("[judge]\nkind = oracle\n") == ErrorCode::InvalidArgument);
    CHECK(code_of("[weights]\ndecision_threshold = 1\n") == ErrorCode::InvalidParams);
    CHECK(code_of("[embedding]\nseed = -1\n") == ErrorCode::InvalidArgument);
    CHECK(code_of("not ini at all [") == ErrorCode::InvalidArgument);
    CHECK_THROWS_AS(Config::load("/nonexistent/sw.ini"), Error);
}
