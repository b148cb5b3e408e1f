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


#include "squatwatch/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "squatwatch/errors.hpp"
#include "squatwatch/text.hpp"

namespace squatwatch {

namespace {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

template <class T>
T parse_value(const std::string& key, const std::string& raw) {
    const std::string v = text::trim(raw);
    try {
        std::size_t used = 0;
        T out{};
        if constexpr (std::is_same_v<T, double>) {
            out = std::stod(v, &used);
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
            out = std::stoull(v, &used);
        } else {
            const long long x = std::stoll(v, &used);
            out = static_cast<T>(x);
            if (static_cast<long long>(out) != x) throw std::out_of_range("range");
        }
        if (used != v.size()) throw std::invalid_argument("trailing text");
        return out;
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidArgument, "config key '" + key + "': cannot read '" + v + "'");
    }
}

fs::path resolve(const fs::path& base, const std::string& raw) {
    fs::path p(text::trim(raw));
    return p.is_absolute() ? p : base / p;
}

}  // namespace

fs::path Config::store_path() const { return store_file.value_or(workspace / "metadata.jsonl"); }
fs::path Config::model_path() const { return model_file.value_or(workspace / "model.pkgvec"); }
fs::path Config::alerts_path() const { return alerts_file.value_or(workspace / "alerts.jsonl"); }
fs::path Config::index_path(RegistryId registry) const {
    return index_dir.value_or(workspace) / ("index-" + std::string(registry_name(registry)) + ".hnsw");
}

RuleWeights Config::rule_weights() const {
    RuleWeights w = RuleWeights::defaults();
    if (weights_file) {
        std::ifstream in(*weights_file);
        if (!in) throw Error(ErrorCode::IoFailure, "cannot read weights '" + weights_file->string() + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::InvalidArgument, "weights '" + weights_file->string() + "': " + e.what());
        }
        w = j.get<RuleWeights>();
    }
    if (decision_threshold) w.decision_threshold = *decision_threshold;
    w.validate();
    return w;
}

void Config::validate() const {
    trust.validate();
    thresholds.validate();
    training.validate();
    ann.validate();
    if (judge.kind == JudgeKind::External && judge.url.empty()) {
        throw Error(ErrorCode::InvalidParams, "external judge needs a url");
    }
    if (judge.retries < 0 || judge.timeout.count() <= 0 || judge.parallelism < 1) {
        throw Error(ErrorCode::InvalidParams, "judge retries, timeout and parallelism must be positive");
    }
    if (server.port < 0 || server.port > 65535) throw Error(ErrorCode::InvalidParams, "server port out of range");
    if (scan_workers < 1) throw Error(ErrorCode::InvalidParams, "scan workers must be >= 1");
    if (decision_threshold && !(*decision_threshold > 0 && *decision_threshold < 1)) {
        throw Error(ErrorCode::InvalidParams, "decision threshold must be in (0, 1)");
    }
}

Config Config::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot read config '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.has_parent_path() ? path.parent_path() : fs::path("."));
}

Config Config::parse(const std::string& ini, const fs::path& base) {
    pt::ptree tree;
    std::istringstream in(ini);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
    }

    Config c;
    c.workspace = base / c.workspace;
    using Setter = std::function<void(const std::string&, const std::string&)>;
    std::map<std::string, Setter> keys;
    auto path_opt = [&](std::optional<fs::path>& field) {
        return [&field, &base](const std::string&, const std::string& v) { field = resolve(base, v); };
    };
    keys["paths.workspace"] = [&](const std::string&, const std::string& v) { c.workspace = resolve(base, v); };
    keys["paths.store"] = path_opt(c.store_file);
    keys["paths.model"] = path_opt(c.model_file);
    keys["paths.alerts"] = path_opt(c.alerts_file);
    keys["paths.index_dir"] = path_opt(c.index_dir);
    keys["paths.corpus"] = path_opt(c.corpus_file);
    keys["weights.path"] = path_opt(c.weights_file);
    keys["weights.decision_threshold"] = [&](const std::string& k, const std::string& v) {
        c.decision_threshold = parse_value<double>(k, v);
    };

    for (RegistryId r : kAllRegistries) {
        const std::string name(registry_name(r));
        keys["trust." + name + "_downloads"] = [&c, r](const std::string& k, const std::string& v) {
            c.trust.download_threshold[r] = parse_value<std::int64_t>(k, v);
        };
        keys["trust." + name + "_ranking"] = [&c, r](const std::string& k, const std::string& v) {
            c.trust.ranking_threshold[r] = parse_value<double>(k, v);
        };
    }
    keys["trust.download_dominance"] = [&](const std::string& k, const std::string& v) {
        c.trust.download_dominance = parse_value<double>(k, v);
    };
    keys["trust.ranking_dominance"] = [&](const std::string& k, const std::string& v) {
        c.trust.ranking_dominance = parse_value<double>(k, v);
    };

    auto& th = c.thresholds;
    keys["thresholds.levenshtein_max"] = [&](const std::string& k, const std::string& v) {
        th.levenshtein_max = parse_value<int>(k, v);
    };
    keys["thresholds.cosine_min"] = [&](const std::string& k, const std::string& v) {
        th.cosine_min = parse_value<double>(k, v);
    };
    keys["thresholds.hier_identifier_cosine_min"] = [&](const std::string& k, const std::string& v) {
        th.hier_identifier_cosine_min = parse_value<double>(k, v);
    };
    keys["thresholds.hier_namespace_cosine_min"] = [&](const std::string& k, const std::string& v) {
        th.hier_namespace_cosine_min = parse_value<double>(k, v);
    };
    keys["thresholds.top_k"] = [&](const std::string& k, const std::string& v) {
        th.top_k = parse_value<std::size_t>(k, v);
    };
    keys["thresholds.ann_candidates"] = [&](const std::string& k, const std::string& v) {
        th.ann_candidates = parse_value<std::size_t>(k, v);
    };
    keys["thresholds.ef_search"] = [&](const std::string& k, const std::string& v) {
        th.ef_search = parse_value<std::size_t>(k, v);
    };

    auto& tr = c.training;
    keys["embedding.dimension"] = [&](const std::string& k, const std::string& v) { tr.dimension = parse_value<int>(k, v); };
    keys["embedding.min_n"] = [&](const std::string& k, const std::string& v) { tr.min_n = parse_value<int>(k, v); };
    keys["embedding.max_n"] = [&](const std::string& k, const std::string& v) { tr.max_n = parse_value<int>(k, v); };
    keys["embedding.bucket_count"] = [&](const std::string& k, const std::string& v) {
        tr.bucket_count = parse_value<std::uint32_t>(k, v);
    };
    keys["embedding.epochs"] = [&](const std::string& k, const std::string& v) { tr.epochs = parse_value<int>(k, v); };
    keys["embedding.window"] = [&](const std::string& k, const std::string& v) { tr.window = parse_value<int>(k, v); };
    keys["embedding.negative_samples"] = [&](const std::string& k, const std::string& v) {
        tr.negative_samples = parse_value<int>(k, v);
    };
    keys["embedding.seed"] = [&](const std::string& k, const std::string& v) { tr.seed = parse_value<std::uint64_t>(k, v); };
    keys["embedding.learning_rate"] = [&](const std::string& k, const std::string& v) {
        tr.learning_rate = parse_value<double>(k, v);
    };

    keys["index.m"] = [&](const std::string& k, const std::string& v) { c.ann.M = parse_value<int>(k, v); };
    keys["index.ef_construction"] = [&](const std::string& k, const std::string& v) {
        c.ann.ef_construction = parse_value<int>(k, v);
    };
    keys["index.seed"] = [&](const std::string& k, const std::string& v) { c.ann.seed = parse_value<std::uint64_t>(k, v); };

    auto& j = c.judge;
    keys["judge.kind"] = [&](const std::string& k, const std::string& v) {
        const std::string kind = text::to_lower(text::trim(v));
        if (kind == "heuristic") {
            j.kind = JudgeKind::Heuristic;
        } else if (kind == "external") {
            j.kind = JudgeKind::External;
        } else {
            throw Error(ErrorCode::InvalidArgument, "config key '" + k + "': expected heuristic or external");
        }
    };
    keys["judge.url"] = [&](const std::string&, const std::string& v) { j.url = text::trim(v); };
    keys["judge.model"] = [&](const std::string&, const std::string& v) { j.model = text::trim(v); };
    keys["judge.timeout_ms"] = [&](const std::string& k, const std::string& v) {
        j.timeout = std::chrono::milliseconds(parse_value<std::int64_t>(k, v));
    };
    keys["judge.retries"] = [&](const std::string& k, const std::string& v) { j.retries = parse_value<int>(k, v); };
    keys["judge.parallelism"] = [&](const std::string& k, const std::string& v) {
        j.parallelism = parse_value<std::size_t>(k, v);
    };
    keys["judge.prompts_dir"] = path_opt(j.prompts_dir);
    keys["judge.reputable_maintainers"] = path_opt(j.reputable_maintainers);
    keys["judge.test_lexicon"] = path_opt(j.test_lexicon);

    keys["server.host"] = [&](const std::string&, const std::string& v) { c.server.host = text::trim(v); };
    keys["server.port"] = [&](const std::string& k, const std::string& v) { c.server.port = parse_value<int>(k, v); };
    keys["server.static_dir"] = path_opt(c.server.static_dir);
    keys["scan.workers"] = [&](const std::string& k, const std::string& v) {
        c.scan_workers = parse_value<std::size_t>(k, v);
    };

    for (const auto& [section, body] : tree) {
        if (body.empty()) {
            throw Error(ErrorCode::InvalidArgument, "config key '" + section + "' is outside a section");
        }
        for (const auto& [key, value] : body) {
            const std::string full = section + "." + key;
            const auto it = keys.find(full);
            if (it == keys.end()) throw Error(ErrorCode::InvalidArgument, "unknown config key '" + full + "'");
            it->second(full, value.data());
        }
    }
    c.validate();
    return c;
}

std::shared_ptr<const JudgeInterface> make_judge(const JudgeSettings& settings) {
    HeuristicConfig hc = HeuristicConfig::defaults();
    if (settings.reputable_maintainers) hc.reputable_maintainers = HeuristicConfig::load_list(*settings.reputable_maintainers);
    if (settings.test_lexicon) hc.test_lexicon = HeuristicConfig::load_list(*settings.test_lexicon);
    auto heuristic = std::make_shared<const HeuristicJudge>(std::move(hc));
    if (settings.kind == JudgeKind::Heuristic) return heuristic;
    ExternalJudgeConfig ec;
    ec.url = settings.url;
    ec.model = settings.model;
    ec.timeout = settings.timeout;
    ec.retries = settings.retries;
    if (settings.prompts_dir) ec.prompts = PromptTemplates::load(*settings.prompts_dir);
    return std::make_shared<const ExternalJudge>(std::move(ec), heuristic);
}

}  // namespace squatwatch
