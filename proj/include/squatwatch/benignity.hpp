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

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "squatwatch/confusion_search.hpp"
#include "squatwatch/metadata.hpp"
#include "squatwatch/time.hpp"

namespace squatwatch {

enum class Directive {
    ObviousNotTyposquat,
    HasDistinctPurpose,
    IsFork,
    ActiveDevelopment,
    NoReadme,
    OverlappedMaintainers,
    IsAdversarialName,
    IsKnownMaintainer,
    HasSuspiciousIntent,
    IsTest,
    IsRelocatedPackage,
    OrgAllowlisted,
    MirrorDomain,
    VerifiedPrefix,
    NameLengthUnrelated,
};

inline constexpr std::size_t kDirectiveCount = 15;

std::span<const Directive> all_directives();
std::string_view directive_name(Directive d);
/// Throws InvalidArgument.
Directive parse_directive(std::string_view name);
/// Metadata rule label, "R1" to "R15".
std::string_view directive_rule(Directive d);
/// The nine directives a judge answers.
bool is_judge_directive(Directive d);
/// True for directives whose firing points at an attack; every other
/// directive points at a benign package.
bool is_threat_leaning(Directive d);

enum class Tri { False, True, Unknown };
enum class OutcomeSource { Metadata, Judge };

std::string_view tri_name(Tri t);
Tri tri_of(bool b);

struct DirectiveOutcome {
    Tri value = Tri::Unknown;
    OutcomeSource source = OutcomeSource::Metadata;
};

/// One outcome per directive.
struct RuleOutcome {
    std::array<DirectiveOutcome, kDirectiveCount> directives{};

    const DirectiveOutcome& operator[](Directive d) const { return directives[static_cast<std::size_t>(d)]; }
    DirectiveOutcome& operator[](Directive d) { return directives[static_cast<std::size_t>(d)]; }
    bool is_true(Directive d) const { return (*this)[d].value == Tri::True; }
    void set(Directive d, Tri value, OutcomeSource source) { (*this)[d] = {value, source}; }
};

void to_json(nlohmann::json& j, const RuleOutcome& o);
void from_json(const nlohmann::json& j, RuleOutcome& o);

/// Metadata-only rules. Unset directives stay unknown; missing metadata on
/// either side leaves the rules that need it unknown.
RuleOutcome deterministic_checks(const CandidatePair& pair, const MetadataStore& store, const AllowLists& lists,
                                 Timestamp scan_time);

/// Same, with the metadata already fetched.
RuleOutcome deterministic_checks(const CandidatePair& pair, const std::optional<PackageMetadata>& suspect,
                                 const std::optional<PackageMetadata>& target, const AllowLists& lists,
                                 Timestamp scan_time);

inline constexpr std::size_t kJudgeMetadataBytes = 4 * 1024;

struct JudgeRequest {
    std::string typo_name;
    std::string typo_metadata;  // JSON, at most kJudgeMetadataBytes
    std::string legit_name;
    std::string legit_metadata;
    std::string registry;

    // Structured view for judges that do not read prose.
    std::optional<PackageMetadata> typo;
    std::optional<PackageMetadata> legit;
    double name_score = 0;
    RuleOutcome deterministic;
};

JudgeRequest make_judge_request(const CandidatePair& pair, const std::optional<PackageMetadata>& suspect,
                                const std::optional<PackageMetadata>& target, const RuleOutcome& deterministic);

struct JudgeResponse {
    std::array<Tri, kDirectiveCount> answers{};  // judge directives only; others stay unknown
    std::string judge;                           // which implementation answered
    bool fell_back = false;                      // external judge unreachable, heuristic answered
    std::optional<std::string> note;

    JudgeResponse() { answers.fill(Tri::Unknown); }
    Tri operator[](Directive d) const { return answers[static_cast<std::size_t>(d)]; }
    Tri& operator[](Directive d) { return answers[static_cast<std::size_t>(d)]; }
};

class JudgeInterface {
public:
    virtual ~JudgeInterface() = default;
    virtual std::string name() const = 0;
    virtual JudgeResponse judge(const JudgeRequest& request) const = 0;
};

struct HeuristicConfig {
    std::set<std::string> reputable_maintainers;  // lowercase
    std::set<std::string> test_lexicon;           // lowercase word tokens
    std::size_t readme_min_chars = 40;
    double fork_jaccard_min = 0.8;
    double distinct_jaccard_max = 0.2;
    std::size_t distinct_min_tokens = 5;
    double near_identical_jaccard_min = 0.9;
    double adversarial_score_min = 0.9;

    static HeuristicConfig defaults();
    /// One entry per line; blank lines and "#" comments are skipped. Throws
    /// IoFailure.
    static std::set<std::string> load_list(const std::filesystem::path& path);
};

/// Offline judge built from metadata comparisons.
class HeuristicJudge : public JudgeInterface {
public:
    explicit HeuristicJudge(HeuristicConfig config = HeuristicConfig::defaults());
    std::string name() const override { return "heuristic"; }
    JudgeResponse judge(const JudgeRequest& request) const override;

private:
    HeuristicConfig config_;
};

struct PromptTemplates {
    std::string system;
    std::string user;

    /// The shipped prompts.
    static PromptTemplates builtin();
    /// Reads system.txt and user.txt from `dir`. Throws IoFailure.
    static PromptTemplates load(const std::filesystem::path& dir);
    /// Replaces {typo_name}, {typo_metadata}, {legit_name}, {legit_metadata}
    /// and {registry}.
    static std::string render(const std::string& tmpl, const JudgeRequest& request);
};

struct ExternalJudgeConfig {
    std::string url;  // http://host:port/path
    std::string model = "default";
    std::chrono::milliseconds timeout{30'000};
    int retries = 1;
    PromptTemplates prompts = PromptTemplates::builtin();
};

/// Reads "name: TRUE|FALSE" answers from a completion. Lines may carry
/// numbering, markdown emphasis and trailing reasons. Throws
/// MalformedJudgeOutput when no directive can be read.
JudgeResponse parse_judge_output(std::string_view text);

/// Posts {model, system, user} to a completion endpoint and parses the reply.
/// When the endpoint cannot be reached after the retries the fallback judge
/// answers and the response is marked; unparseable replies leave every
/// directive unknown.
class ExternalJudge : public JudgeInterface {
public:
    ExternalJudge(ExternalJudgeConfig config, std::shared_ptr<const JudgeInterface> fallback);
    std::string name() const override { return "external"; }
    JudgeResponse judge(const JudgeRequest& request) const override;

    /// One POST without fallback. Throws JudgeUnavailable or
    /// MalformedJudgeOutput.
    JudgeResponse ask(const JudgeRequest& request) const;

private:
    ExternalJudgeConfig config_;
    std::shared_ptr<const JudgeInterface> fallback_;
};

struct RuleWeights {
    std::array<double, kDirectiveCount> weight{};
    double bias = 0;
    double decision_threshold = 0.5;

    /// 1.0 everywhere, 2.0 for distinct purpose and suspicious intent.
    static RuleWeights defaults();
    double& operator[](Directive d) { return weight[static_cast<std::size_t>(d)]; }
    double operator[](Directive d) const { return weight[static_cast<std::size_t>(d)]; }
    /// Throws InvalidParams.
    void validate() const;
};

void to_json(nlohmann::json& j, const RuleWeights& w);
/// Throws InvalidArgument or InvalidParams.
void from_json(const nlohmann::json& j, RuleWeights& w);

/// +1 for a threat-leaning directive that is true, -1 for a benign-leaning
/// one, 0 for false or unknown.
std::array<double, kDirectiveCount> directive_features(const RuleOutcome& outcome);

double logistic(double z);

/// logistic(bias + sum of weight * feature).
double risk_score(const RuleOutcome& outcome, const RuleWeights& weights);

enum class Verdict { Benign, SuspectedThreat };
std::string_view verdict_name(Verdict v);
Verdict parse_verdict(std::string_view name);

struct BenignityReport {
    CandidatePair pair;
    RuleOutcome outcomes;
    double risk_score = 0;
    Verdict verdict = Verdict::SuspectedThreat;
    std::vector<std::pair<std::string, std::string>> explanation;  // (rule id, reason)
    std::string judge;
    bool judge_fell_back = false;
};

void to_json(nlohmann::json& j, const BenignityReport& r);
void from_json(const nlohmann::json& j, BenignityReport& r);

BenignityReport verdict(const CandidatePair& pair, const RuleOutcome& outcomes, double score, double threshold);

/// Deterministic checks, judge and scoring for candidate pairs.
class BenignityFilter {
public:
    BenignityFilter(std::shared_ptr<const JudgeInterface> judge, RuleWeights weights = RuleWeights::defaults(),
                    std::size_t parallelism = 4);

    /// Deterministic directives keep source metadata; the judge fills the
    /// others. A deterministic relocation hit overrides the judge.
    RuleOutcome outcomes(const CandidatePair& pair, const std::optional<PackageMetadata>& suspect,
                         const std::optional<PackageMetadata>& target, const AllowLists& lists,
                         Timestamp scan_time, JudgeResponse* response = nullptr) const;

    BenignityReport review(const CandidatePair& pair, const std::optional<PackageMetadata>& suspect,
                           const std::optional<PackageMetadata>& target, const AllowLists& lists,
                           Timestamp scan_time) const;

    /// Fetches both sides and the allow-lists from `store`.
    BenignityReport review(const CandidatePair& pair, const MetadataStore& store, Timestamp scan_time) const;

    /// Reviews pairs with at most `parallelism` judge calls in flight.
    /// Results keep input order.
    std::vector<BenignityReport> review_all(std::span<const CandidatePair> pairs, const MetadataStore& store,
                                            Timestamp scan_time) const;

    const RuleWeights& weights() const { return weights_; }
    const JudgeInterface& judge() const { return *judge_; }

private:
    std::shared_ptr<const JudgeInterface> judge_;
    RuleWeights weights_;
    std::size_t parallelism_;
};

enum class Label { Benign, Threat };

struct LabeledOutcome {
    RuleOutcome outcome;
    Label label = Label::Benign;
};

struct FitParams {
    double learning_rate = 0.5;
    int iterations = 2000;
    double l2 = 1e-3;
    std::uint64_t seed = 17;
};

struct FoldReport {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

struct FitResult {
    RuleWeights weights;
    std::vector<FoldReport> folds;
    double cv_f1 = 0;  // over all held-out predictions at the chosen threshold
};

/// Mean logistic loss plus l2/2 * |w|^2 (bias unregularized). Parameter
/// layout: bias, then one weight per directive.
double fit_objective(std::span<const double> params, std::span<const LabeledOutcome> rows, double l2);
std::vector<double> fit_gradient(std::span<const double> params, std::span<const LabeledOutcome> rows, double l2);

/// Logistic regression by full-batch gradient descent. Folds are drawn from
/// a canonical ordering of the rows, so the result does not depend on input
/// order. The decision threshold maximizes F1 over the out-of-fold scores.
/// Throws InvalidParams (fewer than 50 rows, folds < 2 or folds > rows) or
/// DegenerateLabels.
FitResult fit_rule_weights(std::span<const LabeledOutcome> rows, int folds, const FitParams& params = {});

}  // namespace squatwatch
