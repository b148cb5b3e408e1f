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

// One crafted case per metadata rule. Each case holds a baseline and a
// variant that differs only in what the rule looks at; the variant's verdict
// is the expected one and the baseline's is its opposite.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "squatwatch/benignity.hpp"
#include "squatwatch/similarity.hpp"
#include "squatwatch/text.hpp"

namespace squatwatch::fixtures {

inline Timestamp scan_time() { return Timestamp{std::chrono::sys_days{std::chrono::year{2025} / 1 / 15}}; }

struct Scenario {
    PackageMetadata suspect;
    PackageMetadata target;
    AllowLists lists;

    CandidatePair pair() const {
        CandidatePair p;
        p.suspect = suspect.ref;
        p.target = target.ref;
        p.composite = typosim(suspect.ref.similarity_key(), target.ref.similarity_key());
        p.lexical_distance = text::damerau_levenshtein(suspect.ref.similarity_key(), target.ref.similarity_key());
        return p;
    }
};

struct RuleCase {
    std::string rule;
    Directive directive;
    Scenario baseline;
    Scenario variant;
    Verdict expected;
};

inline const char* kTargetDescription = "fast utility helpers for arrays objects strings and numbers";
inline const char* kOverlapDescription = "utility helpers for arrays with extra caching layer support";
inline const char* kDistinctDescription = "command line tool to resize images then convert video formats";

inline PackageMetadata target_meta(RegistryId r, const std::string& name) {
    PackageMetadata m;
    m.ref = parse_name(r, name);
    m.description = kTargetDescription;
    m.readme = "Install it from the registry, import the helpers and call them from any module you like.";
    m.maintainers = {"alice"};
    for (int i = 0; i < 20; ++i) {
        m.versions.push_back({"1." + std::to_string(i) + ".0", scan_time() - days_of(900 - 40 * i)});
    }
    m.last_updated_at = m.versions.back().published_at;
    if (uses_download_signal(r)) {
        m.weekly_downloads = 2'000'000;
    } else {
        m.avg_ranking = 1.0;
    }
    return m;
}

// Every directive false: score exactly 0.5 with default weights, which is a
// threat at the default threshold.
inline PackageMetadata quiet_suspect(RegistryId r, const std::string& name) {
    PackageMetadata m;
    m.ref = parse_name(r, name);
    m.description = kOverlapDescription;
    m.readme = "Suspect readme covering setup steps, a worked example and every configuration flag.";
    m.maintainers = {"mallory"};
    m.versions = {{"0.1.0", scan_time() - days_of(90)}};
    m.last_updated_at = m.versions.back().published_at;
    if (uses_download_signal(r)) {
        m.weekly_downloads = 12;
    } else {
        m.avg_ranking = 900.0;
    }
    return m;
}

inline Scenario quiet(RegistryId r, const std::string& suspect, const std::string& target) {
    return {quiet_suspect(r, suspect), target_meta(r, target), {}};
}

inline void make_active(PackageMetadata& m) {
    m.versions.clear();
    for (int i = 0; i < 6; ++i) m.versions.push_back({"0." + std::to_string(i) + ".0", scan_time() - days_of(200 - i)});
    m.last_updated_at = m.versions.back().published_at;
}

inline std::vector<RuleCase> rule_cases() {
    std::vector<RuleCase> cases;
    auto add = [&](std::string rule, Directive d, Scenario base, const std::function<void(Scenario&)>& change,
                   Verdict expected) {
        Scenario variant = base;
        change(variant);
        cases.push_back({std::move(rule), d, std::move(base), std::move(variant), expected});
    };
    const auto npm = RegistryId::Npm;

    add("R1", Directive::ObviousNotTyposquat, quiet(npm, "lodahs", "lodash"),
        [](Scenario& s) { s.suspect.description = kDistinctDescription; }, Verdict::Benign);

    // An adversarial name keeps R1 silent, so only the distinct purpose acts.
    {
        Scenario base = quiet(npm, "react-router-domm", "react-router-dom");
        add("R2", Directive::HasDistinctPurpose, base,
            [](Scenario& s) { s.suspect.description = kDistinctDescription; }, Verdict::Benign);
    }

    add("R3", Directive::IsFork, quiet(npm, "lodahs", "lodash"),
        [](Scenario& s) { s.suspect.readme = s.target.readme; }, Verdict::Benign);

    add("R4", Directive::ActiveDevelopment, quiet(npm, "lodahs", "lodash"),
        [](Scenario& s) { make_active(s.suspect); }, Verdict::Benign);

    {
        Scenario base = quiet(npm, "lodahs", "lodash");
        make_active(base.suspect);
        add("R5", Directive::NoReadme, base, [](Scenario& s) { s.suspect.readme.reset(); },
            Verdict::SuspectedThreat);
    }

    add("R6", Directive::OverlappedMaintainers, quiet(npm, "lodahs", "lodash"),
        [](Scenario& s) { s.suspect.maintainers.push_back("alice"); }, Verdict::Benign);

    add("R7", Directive::NameLengthUnrelated, quiet(npm, "lodahs", "lodash"),
        [](Scenario& s) { s.suspect.ref = parse_name(RegistryId::Npm, "lodash-extended-utilities"); },
        Verdict::Benign);

    {
        Scenario base = quiet(npm, "dom-router-react", "react-router-dom");
        make_active(base.suspect);
        add("R7-judge", Directive::IsAdversarialName, base,
            [](Scenario& s) { s.suspect.ref = parse_name(RegistryId::Npm, "react-router-domm"); },
            Verdict::SuspectedThreat);
    }

    add("R8", Directive::IsKnownMaintainer, quiet(npm, "lodahs", "lodash"),
        [](Scenario& s) { s.suspect.maintainers = {"google"}; }, Verdict::Benign);

    {
        Scenario base = quiet(npm, "lodahs", "lodash");
        make_active(base.suspect);
        add("R9", Directive::NoReadme, base,
            [](Scenario& s) {
                s.suspect.readme = "tbd";
                s.suspect.description.reset();
            },
            Verdict::SuspectedThreat);
    }

    {
        Scenario base = quiet(npm, "lodahs", "lodash");
        make_active(base.suspect);
        add("R10", Directive::HasSuspiciousIntent, base,
            [](Scenario& s) { s.suspect.description = s.target.description; }, Verdict::SuspectedThreat);
    }

    add("R11", Directive::IsTest, quiet(npm, "lodahs", "lodash"),
        [](Scenario& s) { s.suspect.description = "demo utility helpers for arrays with extra caching layer"; },
        Verdict::Benign);

    add("R12", Directive::IsRelocatedPackage,
        quiet(RegistryId::Maven, "io.fnproject.fn:runtimee", "io.fnproject.fn:runtime"),
        [](Scenario& s) { s.suspect.relocation_target = s.target.ref; }, Verdict::Benign);

    {
        Scenario base = quiet(npm, "@oxc-parser/binding-darwin-arm64", "binding-darwin-arm64");
        base.suspect.readme.reset();
        add("R13", Directive::OrgAllowlisted, base,
            [](Scenario& s) { s.lists.organizations.insert("oxc-parser"); }, Verdict::Benign);
    }

    add("R14", Directive::MirrorDomain,
        quiet(RegistryId::Golang, "gopkg.in/go-git/go-git", "github.com/go-git/go-git"),
        [](Scenario& s) { s.lists.mirror_domains.insert("gopkg.in"); }, Verdict::Benign);

    add("R15", Directive::VerifiedPrefix, quiet(RegistryId::Nuget, "Newtonsoft.Json.Extras", "Newtonsoft.Json"),
        [](Scenario& s) { s.suspect.verified_prefix = true; }, Verdict::Benign);

    return cases;
}

inline BenignityReport run(const BenignityFilter& filter, const Scenario& s) {
    return filter.review(s.pair(), s.suspect, s.target, s.lists, scan_time());
}

}  // namespace squatwatch::fixtures
