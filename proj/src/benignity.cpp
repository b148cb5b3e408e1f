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

#include "squatwatch/benignity.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "builtin_data.hpp"
#include "httplib.h"
#include "squatwatch/errors.hpp"
#include "squatwatch/text.hpp"

namespace squatwatch {

using nlohmann::json;

namespace {

struct DirectiveInfo {
    Directive directive;
    std::string_view name;
    std::string_view rule;
    bool judge;
    bool threat;
};

constexpr std::array<DirectiveInfo, kDirectiveCount> kDirectives = {{
    {Directive::ObviousNotTyposquat, "obvious_not_typosquat", "R1", true, false},
    {Directive::HasDistinctPurpose, "has_distinct_purpose", "R2", true, false},
    {Directive::IsFork, "is_fork", "R3", true, false},
    {Directive::ActiveDevelopment, "active_development", "R4", false, false},
    {Directive::NoReadme, "no_readme", "R5", true, true},
    {Directive::OverlappedMaintainers, "overlapped_maintainers", "R6", false, false},
    {Directive::IsAdversarialName, "is_adversarial_name", "R7", true, true},
    {Directive::IsKnownMaintainer, "is_known_maintainer", "R8", true, false},
    {Directive::HasSuspiciousIntent, "has_suspicious_intent", "R10", true, true},
    {Directive::IsTest, "is_test", "R11", true, false},
    {Directive::IsRelocatedPackage, "is_relocated_package", "R12", true, false},
    {Directive::OrgAllowlisted, "org_allowlisted", "R13", false, false},
    {Directive::MirrorDomain, "mirror_domain", "R14", false, false},
    {Directive::VerifiedPrefix, "verified_prefix", "R15", false, false},
    {Directive::NameLengthUnrelated, "name_length_unrelated", "R7", false, false},
}};

constexpr std::array<Directive, kDirectiveCount> kDirectiveList = {
    Directive::ObviousNotTyposquat, Directive::HasDistinctPurpose,  Directive::IsFork,
    Directive::ActiveDevelopment,   Directive::NoReadme,            Directive::OverlappedMaintainers,
    Directive::IsAdversarialName,   Directive::IsKnownMaintainer,   Directive::HasSuspiciousIntent,
    Directive::IsTest,              Directive::IsRelocatedPackage,  Directive::OrgAllowlisted,
    Directive::MirrorDomain,        Directive::VerifiedPrefix,      Directive::NameLengthUnrelated};

const DirectiveInfo& info(Directive d) { return kDirectives[static_cast<std::size_t>(d)]; }

// Short-circuit benign directives, in explanation order.
constexpr std::array<Directive, 6> kBenignShortCircuit = {
    Directive::OrgAllowlisted,     Directive::MirrorDomain,          Directive::VerifiedPrefix,
    Directive::IsRelocatedPackage, Directive::OverlappedMaintainers, Directive::ObviousNotTyposquat};

std::string_view reason_for(Directive d) {
    switch (d) {
        case Directive::ObviousNotTyposquat: return "name and purpose are clearly distinct";
        case Directive::HasDistinctPurpose: return "descriptions describe different purposes";
        case Directive::IsFork: return "declared or evident fork of the target";
        case Directive::ActiveDevelopment: return "recent updates or a long version history";
        case Directive::NoReadme: return "no usable README";
        case Directive::OverlappedMaintainers: return "shares a maintainer with the target";
        case Directive::IsAdversarialName: return "name is confusable with the target";
        case Directive::IsKnownMaintainer: return "published by a reputable maintainer";
        case Directive::HasSuspiciousIntent: return "copies the target's description under other maintainers";
        case Directive::IsTest: return "test or experiment package";
        case Directive::IsRelocatedPackage: return "documented relocation of the target";
        case Directive::OrgAllowlisted: return "namespace is on the organization allow-list";
        case Directive::MirrorDomain: return "host is a recognized mirror of the target's host";
        case Directive::VerifiedPrefix: return "registry-verified reserved prefix";
        case Directive::NameLengthUnrelated: return "name lengths differ by more than 30%";
    }
    return "";
}

std::string lower_copy(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::set<std::string> parse_list(std::istream& in) {
    std::set<std::string> out;
    for (std::string line; std::getline(in, line);) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = text::trim(line);
        if (!line.empty()) out.insert(lower_copy(line));
    }
    return out;
}

// Cuts at a UTF-8 boundary so the prompt never carries half a character.
std::string cap_bytes(std::string s, std::size_t limit) {
    if (s.size() <= limit) return s;
    std::size_t cut = limit;
    while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
    s.resize(cut);
    return s;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> tokens_of(const std::optional<std::string>& s) {
    return s ? text::word_tokens(*s) : std::vector<std::string>{};
}

Tri tri_and(Tri a, Tri b) {
    if (a == Tri::False || b == Tri::False) return Tri::False;
    if (a == Tri::True && b == Tri::True) return Tri::True;
    return Tri::Unknown;
}

Tri tri_not(Tri a) { return a == Tri::Unknown ? a : (a == Tri::True ? Tri::False : Tri::True); }

}  // namespace

std::span<const Directive> all_directives() { return kDirectiveList; }
std::string_view directive_name(Directive d) { return info(d).name; }
std::string_view directive_rule(Directive d) { return info(d).rule; }
bool is_judge_directive(Directive d) { return info(d).judge; }
bool is_threat_leaning(Directive d) { return info(d).threat; }

Directive parse_directive(std::string_view name) {
    for (const auto& i : kDirectives) {
        if (i.name == name) return i.directive;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown directive '" + std::string(name) + "'");
}

std::string_view tri_name(Tri t) {
    switch (t) {
        case Tri::True: return "true";
        case Tri::False: return "false";
        case Tri::Unknown: return "unknown";
    }
    return "unknown";
}

Tri tri_of(bool b) { return b ? Tri::True : Tri::False; }

void to_json(json& j, const RuleOutcome& o) {
    j = json::object();
    for (Directive d : kDirectiveList) {
        j[std::string(directive_name(d))] = {
            {"value", std::string(tri_name(o[d].value))},
            {"source", o[d].source == OutcomeSource::Judge ? "judge" : "metadata"},
            {"rule", std::string(directive_rule(d))}};
    }
}

void from_json(const json& j, RuleOutcome& o) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "rule outcome must be an object");
    o = RuleOutcome{};
    for (auto it = j.begin(); it != j.end(); ++it) {
        const Directive d = parse_directive(it.key());
        const auto value = it->at("value").get<std::string>();
        Tri t;
        if (value == "true") {
            t = Tri::True;
        } else if (value == "false") {
            t = Tri::False;
        } else if (value == "unknown") {
            t = Tri::Unknown;
        } else {
            throw Error(ErrorCode::InvalidArgument, "bad directive value '" + value + "'");
        }
        const auto source = it->value("source", std::string("metadata"));
        if (source != "metadata" && source != "judge") {
            throw Error(ErrorCode::InvalidArgument, "bad directive source '" + source + "'");
        }
        o.set(d, t, source == "judge" ? OutcomeSource::Judge : OutcomeSource::Metadata);
    }
}

RuleOutcome deterministic_checks(const CandidatePair& pair, const MetadataStore& store, const AllowLists& lists,
                                 Timestamp scan_time) {
    return deterministic_checks(pair, store.get_metadata(pair.suspect), store.get_metadata(pair.target), lists,
                                scan_time);
}

RuleOutcome deterministic_checks(const CandidatePair& pair, const std::optional<PackageMetadata>& suspect,
                                 const std::optional<PackageMetadata>& target, const AllowLists& lists,
                                 Timestamp scan_time) {
    RuleOutcome o;
    constexpr auto M = OutcomeSource::Metadata;

    if (suspect) {
        const bool recent = suspect->last_updated_at && scan_time - *suspect->last_updated_at <= days_of(30);
        if (recent || suspect->versions.size() > 5) {
            o.set(Directive::ActiveDevelopment, Tri::True, M);
        } else if (suspect->last_updated_at || !suspect->versions.empty()) {
            o.set(Directive::ActiveDevelopment, Tri::False, M);
        }
    }

    if (suspect && target && !suspect->maintainers.empty() && !target->maintainers.empty()) {
        std::set<std::string> theirs;
        for (const auto& m : target->maintainers) theirs.insert(lower_copy(m));
        const bool shared = std::any_of(suspect->maintainers.begin(), suspect->maintainers.end(),
                                        [&](const std::string& m) { return theirs.count(lower_copy(m)) > 0; });
        o.set(Directive::OverlappedMaintainers, tri_of(shared), M);
    }

    const auto a = pair.suspect.similarity_key().size();
    const auto b = pair.target.similarity_key().size();
    const auto longest = std::max(a, b);
    if (longest > 0) {
        const double diff = static_cast<double>(a > b ? a - b : b - a) / static_cast<double>(longest);
        o.set(Directive::NameLengthUnrelated, tri_of(diff > 0.30), M);
    }

    if (suspect) {
        o.set(Directive::IsRelocatedPackage,
              tri_of(suspect->relocation_target && suspect->relocation_target->raw == pair.target.raw &&
                     suspect->relocation_target->registry == pair.target.registry),
              M);
        if (pair.suspect.registry == RegistryId::Nuget) {
            o.set(Directive::VerifiedPrefix, tri_of(suspect->verified_prefix), M);
        } else {
            o.set(Directive::VerifiedPrefix, Tri::False, M);
        }
    }

    o.set(Directive::OrgAllowlisted,
          tri_of(pair.suspect.namespace_ && lists.has_organization(*pair.suspect.namespace_)), M);
    const bool mirror = pair.suspect.domain && pair.target.domain &&
                        text::to_lower(*pair.suspect.domain) != text::to_lower(*pair.target.domain) &&
                        lists.has_mirror_domain(*pair.suspect.domain);
    o.set(Directive::MirrorDomain, tri_of(mirror), M);
    return o;
}

JudgeRequest make_judge_request(const CandidatePair& pair, const std::optional<PackageMetadata>& suspect,
                                const std::optional<PackageMetadata>& target, const RuleOutcome& deterministic) {
    JudgeRequest r;
    r.typo_name = pair.suspect.raw;
    r.legit_name = pair.target.raw;
    r.registry = std::string(registry_name(pair.suspect.registry));
    r.typo_metadata = suspect ? cap_bytes(metadata_to_json(*suspect).dump(), kJudgeMetadataBytes) : "{}";
    r.legit_metadata = target ? cap_bytes(metadata_to_json(*target).dump(), kJudgeMetadataBytes) : "{}";
    r.typo = suspect;
    r.legit = target;
    r.name_score = pair.composite.max_score;
    r.deterministic = deterministic;
    return r;
}

HeuristicConfig HeuristicConfig::defaults() {
    HeuristicConfig c;
    std::istringstream rep(builtin::kReputableMaintainers);
    c.reputable_maintainers = parse_list(rep);
    std::istringstream lex(builtin::kTestLexicon);
    c.test_lexicon = parse_list(lex);
    return c;
}

std::set<std::string> HeuristicConfig::load_list(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    return parse_list(in);
}

HeuristicJudge::HeuristicJudge(HeuristicConfig config) : config_(std::move(config)) {}

JudgeResponse HeuristicJudge::judge(const JudgeRequest& req) const {
    JudgeResponse r;
    r.judge = name();
    const auto& s = req.typo;
    const auto& t = req.legit;

    if (s) {
        const bool readme = s->readme && text::trim(*s->readme).size() >= config_.readme_min_chars;
        r[Directive::NoReadme] = tri_of(!readme);
    }

    if (s && t) {
        const auto sr = tokens_of(s->readme), tr = tokens_of(t->readme);
        const auto sd = tokens_of(s->description), td = tokens_of(t->description);
        const bool says_fork = (s->readme && text::contains_ci(*s->readme, "fork of")) ||
                               (s->description && text::contains_ci(*s->description, "fork of"));
        const bool readme_overlap = !sr.empty() && !tr.empty() && text::token_jaccard(sr, tr) > config_.fork_jaccard_min;
        const bool desc_overlap = !sd.empty() && !td.empty() && text::token_jaccard(sd, td) > config_.fork_jaccard_min;
        r[Directive::IsFork] = tri_of(says_fork || readme_overlap || desc_overlap);

        if (sd.size() >= config_.distinct_min_tokens && td.size() >= config_.distinct_min_tokens) {
            r[Directive::HasDistinctPurpose] = tri_of(text::token_jaccard(sd, td) < config_.distinct_jaccard_max);
        } else if (!sd.empty() && !td.empty()) {
            r[Directive::HasDistinctPurpose] = Tri::False;
        }

        if (!sd.empty() && !td.empty() && !s->maintainers.empty() && !t->maintainers.empty()) {
            const bool near_identical = text::token_jaccard(sd, td) >= config_.near_identical_jaccard_min;
            r[Directive::HasSuspiciousIntent] =
                tri_of(near_identical && req.deterministic[Directive::OverlappedMaintainers].value == Tri::False);
        } else if (!sd.empty() && !td.empty()) {
            r[Directive::HasSuspiciousIntent] = Tri::False;
        }
    }

    if (s) {
        bool test = false;
        for (const auto& tok : text::split_tokens(s->ref.raw)) test = test || config_.test_lexicon.count(tok) > 0;
        for (const auto& tok : tokens_of(s->description)) test = test || config_.test_lexicon.count(tok) > 0;
        r[Directive::IsTest] = tri_of(test);

        if (!s->maintainers.empty()) {
            bool known = false;
            for (const auto& m : s->maintainers) known = known || config_.reputable_maintainers.count(lower_copy(m)) > 0;
            r[Directive::IsKnownMaintainer] = tri_of(known);
        }
    }

    const Tri short_gap = tri_not(req.deterministic[Directive::NameLengthUnrelated].value);
    r[Directive::IsAdversarialName] = tri_and(tri_of(req.name_score >= config_.adversarial_score_min), short_gap);
    r[Directive::ObviousNotTyposquat] =
        tri_and(r[Directive::HasDistinctPurpose], tri_not(r[Directive::IsAdversarialName]));
    r[Directive::IsRelocatedPackage] = req.deterministic[Directive::IsRelocatedPackage].value;
    return r;
}

PromptTemplates PromptTemplates::builtin() { return {builtin::kSystemPrompt, builtin::kUserPrompt}; }

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
    return {read_file(dir / "system.txt"), read_file(dir / "user.txt")};
}

std::string PromptTemplates::render(const std::string& tmpl, const JudgeRequest& request) {
    const std::array<std::pair<std::string_view, const std::string*>, 5> slots = {{
        {"{typo_name}", &request.typo_name},
        {"{typo_metadata}", &request.typo_metadata},
        {"{legit_name}", &request.legit_name},
        {"{legit_metadata}", &request.legit_metadata},
        {"{registry}", &request.registry},
    }};
    std::string out;
    out.reserve(tmpl.size() + 2 * kJudgeMetadataBytes);
    for (std::size_t i = 0; i < tmpl.size();) {
        bool replaced = false;
        if (tmpl[i] == '{') {
            for (const auto& [key, value] : slots) {
                if (tmpl.compare(i, key.size(), key) == 0) {
                    out += *value;
                    i += key.size();
                    replaced = true;
                    break;
                }
            }
        }
        if (!replaced) out += tmpl[i++];
    }
    return out;
}

JudgeResponse parse_judge_output(std::string_view body) {
    JudgeResponse r;
    std::size_t found = 0;
    std::size_t pos = 0;
    while (pos <= body.size()) {
        std::size_t end = body.find('\n', pos);
        if (end == std::string_view::npos) end = body.size();
        std::string line = text::to_lower(body.substr(pos, end - pos));
        pos = end + 1;
        line.erase(std::remove_if(line.begin(), line.end(), [](char c) { return c == '*' || c == '`'; }),
                   line.end());
        for (Directive d : kDirectiveList) {
            if (!is_judge_directive(d)) continue;
            const auto name = directive_name(d);
            const auto at = line.find(name);
            if (at == std::string::npos) continue;
            // Longer names may contain shorter ones only as whole words.
            const std::size_t after = at + name.size();
            if (after < line.size() && (std::isalnum(static_cast<unsigned char>(line[after])) || line[after] == '_')) {
                continue;
            }
            const std::string rest = line.substr(after);
            const auto t = rest.find("true");
            const auto f = rest.find("false");
            if (t == std::string::npos && f == std::string::npos) continue;
            r[d] = (f == std::string::npos || (t != std::string::npos && t < f)) ? Tri::True : Tri::False;
            ++found;
            break;
        }
    }
    if (found == 0) throw Error(ErrorCode::MalformedJudgeOutput, "no TRUE/FALSE answer for any directive");
    return r;
}

ExternalJudge::ExternalJudge(ExternalJudgeConfig config, std::shared_ptr<const JudgeInterface> fallback)
    : config_(std::move(config)), fallback_(std::move(fallback)) {
    if (config_.url.rfind("http://", 0) != 0) {
        throw Error(ErrorCode::InvalidParams, "judge url must start with http://");
    }
    if (config_.retries < 0) throw Error(ErrorCode::InvalidParams, "judge retries must be non-negative");
}

JudgeResponse ExternalJudge::ask(const JudgeRequest& request) const {
    const auto slash = config_.url.find('/', 7);
    const std::string origin = config_.url.substr(0, slash);
    const std::string path = slash == std::string::npos ? "/" : config_.url.substr(slash);
    httplib::Client client(origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    const json body = {{"model", config_.model},
                       {"system", PromptTemplates::render(config_.prompts.system, request)},
                       {"user", PromptTemplates::render(config_.prompts.user, request)}};
    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        auto res = client.Post(path, body.dump(), "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw Error(ErrorCode::JudgeUnavailable, "judge endpoint answered status " + std::to_string(res->status));
        }
        std::string completion = res->body;
        const json parsed = json::parse(res->body, nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) {
            for (const char* key : {"completion", "text", "content", "output"}) {
                if (auto it = parsed.find(key); it != parsed.end() && it->is_string()) {
                    completion = it->get<std::string>();
                    break;
                }
            }
            if (auto c = parsed.find("choices"); c != parsed.end() && c->is_array() && !c->empty()) {
                const auto& first = (*c)[0];
                if (first.contains("message") && first["message"].contains("content")) {
                    completion = first["message"]["content"].get<std::string>();
                } else if (first.contains("text")) {
                    completion = first["text"].get<std::string>();
                }
            }
        }
        JudgeResponse r = parse_judge_output(completion);
        r.judge = name();
        return r;
    }
    throw Error(ErrorCode::JudgeUnavailable, "judge endpoint unreachable: " + last_error);
}

JudgeResponse ExternalJudge::judge(const JudgeRequest& request) const {
    try {
        return ask(request);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::MalformedJudgeOutput) {
            JudgeResponse r;
            r.judge = name();
            r.note = e.what();
            return r;
        }
        if (e.code() != ErrorCode::JudgeUnavailable || !fallback_) throw;
        spdlog::warn("external judge unavailable, using {}: {}", fallback_->name(), e.what());
        JudgeResponse r = fallback_->judge(request);
        r.fell_back = true;
        r.note = e.what();
        return r;
    }
}

RuleWeights RuleWeights::defaults() {
    RuleWeights w;
    w.weight.fill(1.0);
    w[Directive::HasDistinctPurpose] = 2.0;
    w[Directive::HasSuspiciousIntent] = 2.0;
    return w;
}

void RuleWeights::validate() const {
    if (!(decision_threshold > 0 && decision_threshold < 1)) {
        throw Error(ErrorCode::InvalidParams, "decision_threshold must be in (0, 1)");
    }
    if (!std::isfinite(bias) || !std::all_of(weight.begin(), weight.end(), [](double w) { return std::isfinite(w); })) {
        throw Error(ErrorCode::InvalidParams, "weights must be finite");
    }
}

void to_json(json& j, const RuleWeights& w) {
    json weights = json::object();
    for (Directive d : kDirectiveList) weights[std::string(directive_name(d))] = w[d];
    j = json{{"weights", weights}, {"bias", w.bias}, {"decision_threshold", w.decision_threshold}};
}

void from_json(const json& j, RuleWeights& w) {
    if (!j.is_object() || !j.contains("weights")) throw Error(ErrorCode::InvalidArgument, "weights document needs 'weights'");
    RuleWeights out = RuleWeights::defaults();
    for (auto it = j["weights"].begin(); it != j["weights"].end(); ++it) {
        out[parse_directive(it.key())] = it->get<double>();
    }
    out.bias = j.value("bias", 0.0);
    out.decision_threshold = j.value("decision_threshold", 0.5);
    out.validate();
    w = out;
}

std::array<double, kDirectiveCount> directive_features(const RuleOutcome& outcome) {
    std::array<double, kDirectiveCount> x{};
    for (Directive d : kDirectiveList) {
        if (outcome.is_true(d)) x[static_cast<std::size_t>(d)] = is_threat_leaning(d) ? 1.0 : -1.0;
    }
    return x;
}

double logistic(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double risk_score(const RuleOutcome& outcome, const RuleWeights& weights) {
    const auto x = directive_features(outcome);
    double z = weights.bias;
    for (std::size_t i = 0; i < kDirectiveCount; ++i) z += weights.weight[i] * x[i];
    return logistic(z);
}

std::string_view verdict_name(Verdict v) { return v == Verdict::Benign ? "benign" : "suspected_threat"; }

Verdict parse_verdict(std::string_view name) {
    if (name == "benign") return Verdict::Benign;
    if (name == "suspected_threat") return Verdict::SuspectedThreat;
    throw Error(ErrorCode::InvalidArgument, "unknown verdict '" + std::string(name) + "'");
}

BenignityReport verdict(const CandidatePair& pair, const RuleOutcome& outcomes, double score, double threshold) {
    BenignityReport r;
    r.pair = pair;
    r.outcomes = outcomes;
    r.risk_score = score;

    auto explain = [&](Directive d) {
        r.explanation.emplace_back(std::string(directive_rule(d)),
                                   std::string(directive_name(d)) + ": " + std::string(reason_for(d)));
    };
    std::ostringstream score_line;
    score_line.precision(3);

    for (Directive d : kBenignShortCircuit) {
        if (outcomes.is_true(d)) {
            r.verdict = Verdict::Benign;
            explain(d);
        }
    }
    if (r.verdict == Verdict::Benign) {
        score_line << "short-circuit benign; risk score " << score;
        r.explanation.emplace_back("score", score_line.str());
        return r;
    }
    if (outcomes.is_true(Directive::HasSuspiciousIntent) && !outcomes.is_true(Directive::HasDistinctPurpose)) {
        r.verdict = Verdict::SuspectedThreat;
        explain(Directive::HasSuspiciousIntent);
        score_line << "short-circuit threat; risk score " << score;
        r.explanation.emplace_back("score", score_line.str());
        return r;
    }
    r.verdict = score >= threshold ? Verdict::SuspectedThreat : Verdict::Benign;
    for (Directive d : kDirectiveList) {
        if (outcomes.is_true(d) && is_threat_leaning(d) == (r.verdict == Verdict::SuspectedThreat)) explain(d);
    }
    score_line << "risk score " << score << (r.verdict == Verdict::SuspectedThreat ? " >= " : " < ")
               << "threshold " << threshold;
    r.explanation.emplace_back("score", score_line.str());
    return r;
}

void to_json(json& j, const BenignityReport& r) {
    json explanation = json::array();
    for (const auto& [rule, reason] : r.explanation) explanation.push_back({{"rule", rule}, {"reason", reason}});
    j = json{{"pair", r.pair},
             {"outcomes", r.outcomes},
             {"risk_score", r.risk_score},
             {"verdict", std::string(verdict_name(r.verdict))},
             {"explanation", explanation},
             {"judge", r.judge},
             {"judge_fell_back", r.judge_fell_back}};
}

void from_json(const json& j, BenignityReport& r) {
    r.pair = j.at("pair").get<CandidatePair>();
    r.outcomes = j.at("outcomes").get<RuleOutcome>();
    r.risk_score = j.at("risk_score").get<double>();
    r.verdict = parse_verdict(j.at("verdict").get<std::string>());
    r.explanation.clear();
    for (const auto& e : j.at("explanation")) {
        r.explanation.emplace_back(e.at("rule").get<std::string>(), e.at("reason").get<std::string>());
    }
    r.judge = j.value("judge", std::string());
    r.judge_fell_back = j.value("judge_fell_back", false);
}

BenignityFilter::BenignityFilter(std::shared_ptr<const JudgeInterface> judge, RuleWeights weights,
                                 std::size_t parallelism)
    : judge_(std::move(judge)), weights_(weights), parallelism_(std::max<std::size_t>(1, parallelism)) {
    if (!judge_) throw Error(ErrorCode::InvalidParams, "benignity filter needs a judge");
    weights_.validate();
}

RuleOutcome BenignityFilter::outcomes(const CandidatePair& pair, const std::optional<PackageMetadata>& suspect,
                                      const std::optional<PackageMetadata>& target, const AllowLists& lists,
                                      Timestamp scan_time, JudgeResponse* response) const {
    RuleOutcome o = deterministic_checks(pair, suspect, target, lists, scan_time);
    const JudgeResponse answer = judge_->judge(make_judge_request(pair, suspect, target, o));
    for (Directive d : kDirectiveList) {
        if (!is_judge_directive(d)) continue;
        if (d == Directive::IsRelocatedPackage && o.is_true(d)) continue;
        o.set(d, answer[d], OutcomeSource::Judge);
    }
    if (response) *response = answer;
    return o;
}

BenignityReport BenignityFilter::review(const CandidatePair& pair, const MetadataStore& store,
                                        Timestamp scan_time) const {
    return review(pair, store.get_metadata(pair.suspect), store.get_metadata(pair.target), store.allow_lists(),
                  scan_time);
}

BenignityReport BenignityFilter::review(const CandidatePair& pair, const std::optional<PackageMetadata>& suspect,
                                        const std::optional<PackageMetadata>& target, const AllowLists& lists,
                                        Timestamp scan_time) const {
    JudgeResponse answer;
    const RuleOutcome o = outcomes(pair, suspect, target, lists, scan_time, &answer);
    BenignityReport r = verdict(pair, o, risk_score(o, weights_), weights_.decision_threshold);
    r.judge = answer.judge;
    r.judge_fell_back = answer.fell_back;
    return r;
}

std::vector<BenignityReport> BenignityFilter::review_all(std::span<const CandidatePair> pairs,
                                                         const MetadataStore& store, Timestamp scan_time) const {
    std::vector<BenignityReport> out(pairs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < pairs.size(); i = next++) {
            try {
                out[i] = review(pairs[i], store, scan_time);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const std::size_t n = std::min(parallelism_, pairs.size());
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t t = 0; t < n; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

namespace {

struct Row {
    std::array<double, kDirectiveCount> x;
    double y;
};

std::vector<Row> to_rows(std::span<const LabeledOutcome> rows) {
    std::vector<Row> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back({directive_features(r.outcome), r.label == Label::Threat ? 1.0 : 0.0});
    return out;
}

double margin(std::span<const double> p, const Row& r) {
    double z = p[0];
    for (std::size_t i = 0; i < kDirectiveCount; ++i) z += p[i + 1] * r.x[i];
    return z;
}

double objective(std::span<const double> p, const std::vector<Row>& rows, double l2) {
    double loss = 0;
    for (const auto& r : rows) {
        const double z = margin(p, r);
        // log(1 + e^z) - y z, written to stay finite for large |z|.
        loss += (z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z))) - r.y * z;
    }
    loss /= static_cast<double>(rows.size());
    double reg = 0;
    for (std::size_t i = 1; i < p.size(); ++i) reg += p[i] * p[i];
    return loss + 0.5 * l2 * reg;
}

std::vector<double> gradient(std::span<const double> p, const std::vector<Row>& rows, double l2) {
    std::vector<double> g(kDirectiveCount + 1, 0.0);
    for (const auto& r : rows) {
        const double e = logistic(margin(p, r)) - r.y;
        g[0] += e;
        for (std::size_t i = 0; i < kDirectiveCount; ++i) g[i + 1] += e * r.x[i];
    }
    for (auto& v : g) v /= static_cast<double>(rows.size());
    for (std::size_t i = 1; i < g.size(); ++i) g[i] += l2 * p[i];
    return g;
}

std::vector<double> descend(const std::vector<Row>& rows, const FitParams& fp) {
    std::vector<double> p(kDirectiveCount + 1, 0.0);
    for (int it = 0; it < fp.iterations; ++it) {
        const auto g = gradient(p, rows, fp.l2);
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= fp.learning_rate * g[i];
    }
    return p;
}

struct Counts {
    double tp = 0, fp = 0, fn = 0;
    double precision() const { return tp + fp == 0 ? 0 : tp / (tp + fp); }
    double recall() const { return tp + fn == 0 ? 0 : tp / (tp + fn); }
    double f1() const { return 2 * tp + fp + fn == 0 ? 0 : 2 * tp / (2 * tp + fp + fn); }
};

Counts count(const std::vector<std::pair<double, double>>& scored, double threshold) {
    Counts c;
    for (const auto& [score, y] : scored) {
        const bool predicted = score >= threshold;
        if (predicted && y == 1) c.tp += 1;
        if (predicted && y == 0) c.fp += 1;
        if (!predicted && y == 1) c.fn += 1;
    }
    return c;
}

}  // namespace

double fit_objective(std::span<const double> params, std::span<const LabeledOutcome> rows, double l2) {
    if (params.size() != kDirectiveCount + 1) throw Error(ErrorCode::InvalidParams, "parameter vector has wrong size");
    return objective(params, to_rows(rows), l2);
}

std::vector<double> fit_gradient(std::span<const double> params, std::span<const LabeledOutcome> rows, double l2) {
    if (params.size() != kDirectiveCount + 1) throw Error(ErrorCode::InvalidParams, "parameter vector has wrong size");
    return gradient(params, to_rows(rows), l2);
}

FitResult fit_rule_weights(std::span<const LabeledOutcome> labeled, int folds, const FitParams& params) {
    if (labeled.size() < 50) throw Error(ErrorCode::InvalidParams, "need at least 50 labeled rows");
    if (folds < 2 || static_cast<std::size_t>(folds) > labeled.size()) {
        throw Error(ErrorCode::InvalidParams, "folds must be between 2 and the number of rows");
    }
    if (!(params.learning_rate > 0) || params.iterations < 1 || params.l2 < 0) {
        throw Error(ErrorCode::InvalidParams, "bad fit parameters");
    }
    auto rows = to_rows(labeled);
    const auto threats = std::count_if(rows.begin(), rows.end(), [](const Row& r) { return r.y == 1; });
    if (threats == 0 || threats == static_cast<std::ptrdiff_t>(rows.size())) {
        throw Error(ErrorCode::DegenerateLabels, "labeled rows contain a single class");
    }

    // Canonical order first, then a seeded shuffle: input order cannot leak.
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(params.seed);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

    std::vector<std::pair<double, double>> held_out(rows.size());
    std::vector<std::vector<std::size_t>> fold_members(folds);
    for (std::size_t i = 0; i < order.size(); ++i) fold_members[i % folds].push_back(order[i]);
    for (int f = 0; f < folds; ++f) {
        std::vector<Row> train_rows;
        for (int g = 0; g < folds; ++g) {
            if (g == f) continue;
            for (std::size_t i : fold_members[g]) train_rows.push_back(rows[i]);
        }
        const auto p = descend(train_rows, params);
        for (std::size_t i : fold_members[f]) held_out[i] = {logistic(margin(p, rows[i])), rows[i].y};
    }

    // Best F1 over the interior grid; ties go to the threshold nearest 0.5.
    double best_threshold = 0.5, best_f1 = -1;
    for (int k = 1; k <= 99; ++k) {
        const double th = k / 100.0;
        const double f1 = count(held_out, th).f1();
        if (f1 > best_f1 + 1e-12 ||
            (std::abs(f1 - best_f1) <= 1e-12 && std::abs(th - 0.5) < std::abs(best_threshold - 0.5))) {
            best_f1 = f1;
            best_threshold = th;
        }
    }

    FitResult result;
    for (int f = 0; f < folds; ++f) {
        std::vector<std::pair<double, double>> scored;
        for (std::size_t i : fold_members[f]) scored.push_back(held_out[i]);
        const Counts c = count(scored, best_threshold);
        result.folds.push_back({c.precision(), c.recall(), c.f1()});
    }
    result.cv_f1 = best_f1;

    const auto p = descend(rows, params);
    result.weights.bias = p[0];
    for (std::size_t i = 0; i < kDirectiveCount; ++i) result.weights.weight[i] = p[i + 1];
    result.weights.decision_threshold = best_threshold;
    return result;
}

}  // namespace squatwatch
