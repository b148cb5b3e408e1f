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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "squatwatch/ann_index.hpp"
#include "squatwatch/benignity.hpp"
#include "squatwatch/confusion_search.hpp"
#include "squatwatch/embedder.hpp"
#include "squatwatch/trust.hpp"

namespace squatwatch {

enum class JudgeKind { Heuristic, External };

struct JudgeSettings {
    JudgeKind kind = JudgeKind::Heuristic;
    std::string url;
    std::string model = "default";
    std::chrono::milliseconds timeout{30'000};
    int retries = 1;
    std::size_t parallelism = 4;
    std::optional<std::filesystem::path> prompts_dir;
    std::optional<std::filesystem::path> reputable_maintainers;
    std::optional<std::filesystem::path> test_lexicon;
};

struct ServerSettings {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::optional<std::filesystem::path> static_dir;  // triage console assets
};

/// Every tunable of the pipeline. Files live under `workspace` unless given
/// explicitly.
struct Config {
    std::filesystem::path workspace = "squatwatch-data";
    std::optional<std::filesystem::path> store_file;
    std::optional<std::filesystem::path> model_file;
    std::optional<std::filesystem::path> alerts_file;
    std::optional<std::filesystem::path> index_dir;
    std::optional<std::filesystem::path> weights_file;
    std::optional<std::filesystem::path> corpus_file;  // extra training names

    TrustPolicy trust = TrustPolicy::defaults();
    SearchThresholds thresholds;
    TrainingParams training;
    AnnParams ann;
    JudgeSettings judge;
    std::optional<double> decision_threshold;  // overrides the weights file
    ServerSettings server;
    std::size_t scan_workers = 4;

    std::filesystem::path store_path() const;
    std::filesystem::path model_path() const;
    std::filesystem::path alerts_path() const;
    std::filesystem::path index_path(RegistryId registry) const;

    /// Weights from `weights_file` (defaults when unset) with the threshold
    /// override applied.
    RuleWeights rule_weights() const;

    /// Throws InvalidParams.
    void validate() const;

    /// INI file with sections paths, trust, thresholds, embedding, index,
    /// judge, weights, server and scan. Relative paths resolve against the
    /// file's directory. Unknown keys are rejected. Throws IoFailure,
    /// InvalidArgument or InvalidParams.
    static Config load(const std::filesystem::path& path);

    /// Same, from INI text; relative paths resolve against `base`.
    static Config parse(const std::string& ini, const std::filesystem::path& base = ".");
};

/// The judge the settings describe; external judges fall back to the
/// heuristic one.
std::shared_ptr<const JudgeInterface> make_judge(const JudgeSettings& settings);

}  // namespace squatwatch
