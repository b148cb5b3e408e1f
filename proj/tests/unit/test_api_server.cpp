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

#include "httplib.h"
#include "squatwatch/api_server.hpp"
#include "squatwatch/errors.hpp"

using namespace squatwatch;
using nlohmann::json;

namespace {

const Timestamp kT0 = Timestamp{std::chrono::sys_days{std::chrono::year{2025} / 2 / 1}};

struct Service {
    MetadataStore store;
    AlertStore alerts;
    ApiServer server{alerts, store};
    std::unique_ptr<httplib::Client> client;

    Service() {
        server.bind("127.0.0.1", 0);
        server.start();
        client = std::make_unique<httplib::Client>("127.0.0.1", server.port());
    }

    std::string seed(const std::string& suspect, const std::string& target, double score, AttackCategory category) {
        BenignityReport r;
        r.pair.suspect = parse_name(RegistryId::Npm, suspect);
        r.pair.target = parse_name(RegistryId::Npm, target);
        r.pair.category = category;
        r.risk_score = score;
        r.verdict = Verdict::SuspectedThreat;
        r.outcomes.set(Directive::IsRelocatedPackage, Tri::False, OutcomeSource::Metadata);
        return alerts.insert(AlertDraft{r.pair.suspect, {r.pair}}, r, "snap", kT0).alert.id;
    }

    std::pair<int, json> get(const std::string& path) {
        auto res = client->Get(path);
        REQUIRE(res);
        CHECK(res->get_header_value("Content-Type") == "application/json");
        return {res->status, json::parse(res->body)};
    }

    std::pair<int, json> post(const std::string& path, const std::string& body) {
        auto res = client->Post(path, body, "application/json");
        REQUIRE(res);
        return {res->status, json::parse(res->body)};
    }
};

}  // namespace

TEST_CASE("empty store") {
    Service s;
    auto [status, body] = s.get("/api/v1/alerts?status=open");
    CHECK(status == 200);
    CHECK(body == json{{"alerts", json::array()}, {"total", 0}});
    CHECK(s.get("/api/v1/health").second["status"] == "ok");
    const auto stats = s.get("/api/v1/stats").second;
    CHECK(stats["total"] == 0);
    CHECK(stats["by_status"]["open"] == 0);
    CHECK(stats["allowlist"]["organization"] == 0);
}

TEST_CASE("alert queries") {
    Service s;
    const auto a = s.seed("lodahs", "lodash", 0.55, AttackCategory::OneStepLevenshtein);
    const auto b = s.seed("@faceb00k/react", "@facebook/react", 0.95, AttackCategory::ImpersonationSquatting);
    s.seed("expres", "express", 0.75, AttackCategory::OneStepLevenshtein);

    auto [status, body] = s.get("/api/v1/alerts");
    CHECK(status == 200);
    CHECK(body["total"] == 3);
    CHECK(body["alerts"][0]["id"] == b);
    CHECK(body["alerts"][2]["id"] == a);

    CHECK(s.get("/api/v1/alerts?category=impersonation_squatting").second["total"] == 1);
    CHECK(s.get("/api/v1/alerts?limit=2").second["alerts"].size() == 2);
    CHECK(s.get("/api/v1/alerts?limit=2&offset=2").second["alerts"].size() == 1);
    CHECK(s.get("/api/v1/alerts?registry=pypi").second["total"] == 0);

    const auto detail = s.get("/api/v1/alerts/" + a);
    CHECK(detail.first == 200);
    CHECK(detail.second["report"]["outcomes"].size() == kDirectiveCount);

    const auto missing = s.get("/api/v1/alerts/ffffffffffffffff");
    CHECK(missing.first == 404);
    CHECK(missing.second["code"] == "alert_not_found");

    for (const char* bad : {"/api/v1/alerts?status=closed", "/api/v1/alerts?limit=-1", "/api/v1/alerts?limit=x",
                            "/api/v1/alerts?category=nope", "/api/v1/alerts?registry=cpan",
                            "/api/v1/alerts?limit=100000"}) {
        const auto r = s.get(bad);
        CHECK_MESSAGE(r.first == 400, bad);
        CHECK(r.second.contains("code"));
        CHECK(r.second.contains("message"));
    }
    CHECK(s.get("/api/v1/nowhere").first == 404);
}

TEST_CASE("verdicts and allow-list feedback") {
    Service s;
    const auto a = s.seed("@faceb00k/react", "@facebook/react", 0.95, AttackCategory::ImpersonationSquatting);
    const auto b = s.seed("expres", "express", 0.75, AttackCategory::OneStepLevenshtein);

    auto [status, body] =
        s.post("/api/v1/alerts/" + a + "/verdict",
               R"({"status":"dismissed_benign","note":"our org","add_to_allowlist":"organization"})");
    CHECK(status == 200);
    CHECK(body["status"] == "dismissed_benign");
    CHECK(body["analyst_note"] == "our org");
    CHECK(s.store.allow_lists().has_organization("faceb00k"));

    const auto stats = s.get("/api/v1/stats").second;
    CHECK(stats["by_status"]["open"] == 1);
    CHECK(stats["by_status"]["dismissed_benign"] == 1);
    CHECK(stats["allowlist"]["organization"] == 1);

    const auto again = s.post("/api/v1/alerts/" + a + "/verdict", R"({"status":"confirmed_active"})");
    CHECK(again.first == 409);
    CHECK(again.second["code"] == "invalid_transition");

    CHECK(s.post("/api/v1/alerts/" + b + "/verdict", R"({"status":"confirmed_active","add_to_allowlist":"organization"})")
              .first == 400);
    CHECK(s.post("/api/v1/alerts/" + b + "/verdict", R"({"status":"dismissed_benign","add_to_allowlist":"organization"})")
              .first == 400);  // flat name: no namespace to list
    CHECK(s.post("/api/v1/alerts/" + b + "/verdict", "not json").first == 400);
    CHECK(s.post("/api/v1/alerts/" + b + "/verdict", R"({"status":7})").first == 400);
    CHECK(s.post("/api/v1/alerts/" + b + "/verdict", R"({"status":"open"})").first == 409);
    CHECK(s.get("/api/v1/alerts/" + b).second["status"] == "open");

    const auto done = s.post("/api/v1/alerts/" + b + "/verdict",
                             R"({"status":"dismissed_benign","add_to_allowlist":{"kind":"customer_package"}})");
    CHECK(done.first == 200);
    CHECK(s.store.allow_lists().customer_packages.count("npm:expres") == 1);
    CHECK(s.post("/api/v1/alerts/zzz/verdict", R"({"status":"confirmed_active"})").first == 404);
}

TEST_CASE("allow-list endpoint") {
    Service s;
    auto [status, body] = s.post("/api/v1/allowlist", R"({"kind":"mirror_domain","value":"GoPkg.in"})");
    CHECK(status == 200);
    CHECK(body["mirror_domain"] == json::array({"gopkg.in"}));
    CHECK(s.post("/api/v1/allowlist", R"({"kind":"mirror_domain","value":"gopkg.in","action":"remove"})")
              .second["mirror_domain"]
              .empty());
    CHECK(s.post("/api/v1/allowlist", R"({"kind":"galaxy","value":"x"})").first == 400);
    CHECK(s.post("/api/v1/allowlist", R"({"kind":"organization","value":"  "})").first == 400);
}

TEST_CASE("port in use") {
    Service s;
    MetadataStore store;
    AlertStore alerts;
    ApiServer other(alerts, store);
    try {
        other.bind("127.0.0.1", s.server.port());
        FAIL("expected PortInUse");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::PortInUse);
    }
}
