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


#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "squatwatch/api_server.hpp"
#include "squatwatch/config.hpp"
#include "squatwatch/errors.hpp"
#include "squatwatch/evaluation.hpp"
#include "squatwatch/pipeline.hpp"
#include "squatwatch/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace squatwatch;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOperational = 1;
constexpr int kExitUsage = 2;

struct Options {
    std::string config;
    std::string workspace;
    bool verbose = false;
    std::string registry;
    std::string file;
    std::string package;
    std::string at;
    std::string out;
    int folds = 5;
    double operating = 0.93;
    std::string host;
    int port = -1;
    std::uint64_t seed = 7;
    std::size_t attacks = 50;
};

Config load_config(const Options& o) {
    Config c = o.config.empty() ? Config::parse("", fs::current_path()) : Config::load(o.config);
    if (!o.workspace.empty()) c.workspace = fs::absolute(o.workspace);
    return c;
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

std::vector<RegistryId> registries_of(const Options& o, const MetadataStore& store) {
    if (!o.registry.empty()) return {parse_registry(o.registry)};
    std::vector<RegistryId> out;
    for (RegistryId r : kAllRegistries) {
        if (store.latest_snapshot(r)) out.push_back(r);
    }
    if (out.empty()) throw Error(ErrorCode::MissingInfrastructure, "missing infrastructure: no snapshot ingested");
    return out;
}

std::vector<json> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot read '" + path + "'");
    std::vector<json> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::InvalidArgument, path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

// Stores and pipeline opened from the configured workspace.
struct Session {
    Config config;
    MetadataStore store;
    AlertStore alerts;
    Pipeline pipeline;

    explicit Session(Config c)
        : config(prepare(std::move(c))),
          store(config.store_path()),
          alerts(config.alerts_path()),
          pipeline(config, store, alerts) {}

    static Config prepare(Config c) {
        fs::create_directories(c.workspace);
        return c;
    }
};

int cmd_ingest(const Options& o) {
    Session s(load_config(o));
    std::ifstream in(o.file);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot read snapshot '" + o.file + "'");
    std::optional<Timestamp> at;
    if (!o.at.empty()) {
        at = parse_rfc3339(o.at);
        if (!at) throw Error(ErrorCode::InvalidArgument, "--at must be an RFC 3339 timestamp");
    }
    const auto info = s.store.ingest_snapshot(parse_registry(o.registry), in, at);
    print(json{{"registry", registry_name(info.registry)},
               {"ingested_at", format_rfc3339(info.ingested_at)},
               {"package_count", info.package_count},
               {"skipped_lines", info.skipped_lines}});
    return kExitOk;
}

int cmd_train(const Options& o) {
    Session s(load_config(o));
    const auto model = s.pipeline.train_model();
    model->save(s.config.model_path());
    const auto& meta = model->training_meta();
    print(json{{"model", s.config.model_path().string()},
               {"vocabulary", model->vocabulary_size()},
               {"dimension", model->dimension()},
               {"epochs", meta.epochs},
               {"heldout_loss", meta.heldout_loss}});
    return kExitOk;
}

int cmd_index(const Options& o) {
    Session s(load_config(o));
    if (!fs::exists(s.config.model_path())) {
        throw Error(ErrorCode::MissingInfrastructure, "missing infrastructure: model (run train first)");
    }
    s.pipeline.set_model(std::make_shared<const EmbeddingModel>(EmbeddingModel::load(s.config.model_path())));
    json out = json::array();
    for (RegistryId r : registries_of(o, s.store)) {
        const auto ctx = s.pipeline.build_index(r);
        ctx->index().save(s.config.index_path(r));
        out.push_back(json{{"registry", registry_name(r)},
                           {"trusted", ctx->trusted().size()},
                           {"entries", ctx->index().size()},
                           {"path", s.config.index_path(r).string()}});
    }
    print(out);
    return kExitOk;
}

int cmd_scan(const Options& o) {
    Session s(load_config(o));
    s.pipeline.load_infrastructure();
    const auto ref = s.pipeline.parse(parse_registry(o.registry), o.package);
    print(s.pipeline.scan_package(ref));
    return kExitOk;
}

int cmd_scan_all(const Options& o) {
    Session s(load_config(o));
    s.pipeline.load_infrastructure();
    json out = json::array();
    for (RegistryId r : registries_of(o, s.store)) out.push_back(s.pipeline.run_full_scan(r));
    print(out);
    return kExitOk;
}

int cmd_eval(const Options& o) {
    const auto records = read_eval_records(o.file);
    bool needs_pipeline = false;
    for (const auto& r : records) needs_pipeline |= !r.predicted.has_value();
    std::optional<Session> s;
    if (needs_pipeline) {
        s.emplace(load_config(o));
        s->pipeline.load_infrastructure();
    }
    print(evaluate(records, [&](const EvalRecord& r) { return s->pipeline.predict(r); }));
    return kExitOk;
}

bool positive_of(const json& label) {
    if (label.is_boolean()) return label.get<bool>();
    if (label.is_string()) return is_threat(parse_eval_label(label.get<std::string>()));
    throw Error(ErrorCode::InvalidArgument, "label must be a boolean or active/stealthy/benign");
}

int cmd_gridsearch(const Options& o) {
    const auto rows = read_jsonl(o.file);
    std::optional<Session> s;
    std::vector<ScoredLabel> scores;
    for (const auto& row : rows) {
        if (!row.contains("label")) throw Error(ErrorCode::InvalidArgument, "every row needs a label");
        ScoredLabel sl;
        sl.positive = positive_of(row["label"]);
        if (row.contains("score")) {
            sl.score = row["score"].get<double>();
        } else {
            if (!s) {
                s.emplace(load_config(o));
                s->pipeline.load_infrastructure();
                if (!s->pipeline.model()) throw Error(ErrorCode::MissingInfrastructure, "missing infrastructure: model");
            }
            const auto r = row.get<EvalRecord>();
            const auto p = describe_pair(s->pipeline.parse(r.registry, r.suspect),
                                         s->pipeline.parse(r.registry, r.target), s->pipeline.model().get());
            sl.score = std::clamp(p.cosine_full, 0.0, 1.0);
        }
        scores.push_back(sl);
    }
    print(grid_search_threshold(scores, o.operating));
    return kExitOk;
}

int cmd_fit_weights(const Options& o) {
    const auto rows = read_jsonl(o.file);
    std::optional<Session> s;
    std::vector<LabeledOutcome> labeled;
    for (const auto& row : rows) {
        LabeledOutcome lo;
        if (row.contains("outcome")) {
            lo.outcome = row["outcome"].get<RuleOutcome>();
            lo.label = positive_of(row.at("label")) ? Label::Threat : Label::Benign;
        } else {
            if (!s) {
                s.emplace(load_config(o));
                s->pipeline.load_infrastructure();
            }
            const auto r = row.get<EvalRecord>();
            lo.outcome = s->pipeline.outcomes(r);
            lo.label = is_threat(r.label) ? Label::Threat : Label::Benign;
        }
        labeled.push_back(std::move(lo));
    }
    const auto fit = fit_rule_weights(labeled, o.folds);
    json folds = json::array();
    for (const auto& f : fit.folds) folds.push_back({{"precision", f.precision}, {"recall", f.recall}, {"f1", f.f1}});
    if (!o.out.empty()) {
        std::ofstream out(o.out);
        out << json(fit.weights).dump(2) << "\n";
        if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + o.out + "'");
    }
    print(json{{"weights", fit.weights}, {"folds", folds}, {"cv_f1", fit.cv_f1}});
    return kExitOk;
}

int cmd_serve(const Options& o) {
    Config c = load_config(o);
    if (!o.host.empty()) c.server.host = o.host;
    if (o.port >= 0) c.server.port = o.port;
    Session s(c);
    ApiServer server(s.alerts, s.store, s.config.server.static_dir);
    const int port = server.bind(s.config.server.host, s.config.server.port);
    std::cerr << json{{"listening", s.config.server.host + ":" + std::to_string(port)}}.dump() << std::endl;
    server.listen();
    return kExitOk;
}

int cmd_synth(const Options& o) {
    synthetic::WorldParams wp;
    wp.seed = o.seed;
    const auto world = synthetic::make_world(wp);
    const auto attacks = synthetic::make_attacks(world, o.attacks, o.seed + 1);
    fs::create_directories(o.out);
    json files = json::object();
    for (RegistryId r : world.registries()) {
        auto pkgs = world.of(r);
        for (const auto& a : attacks) {
            if (a.package.ref.registry == r) pkgs.push_back(a.package);
        }
        const fs::path path = fs::path(o.out) / (std::string(registry_name(r)) + ".jsonl");
        std::ofstream out(path);
        synthetic::write_snapshot(out, pkgs);
        if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + path.string() + "'");
        files[std::string(registry_name(r))] = path.string();
    }
    const fs::path truth = fs::path(o.out) / "attacks.jsonl";
    std::ofstream out(truth);
    for (const auto& a : attacks) {
        json rec = EvalRecord{a.package.ref.raw, a.target.raw, a.package.ref.registry, EvalLabel::Active, {}};
        rec["technique"] = category_name(a.technique);
        out << rec.dump() << "\n";
    }
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + truth.string() + "'");
    print(json{{"snapshots", files},
               {"attacks", truth.string()},
               {"packages", world.packages.size() + attacks.size()},
               {"ingest_at", format_rfc3339(world.now)}});
    return kExitOk;
}

void report_error(std::string_view code, const std::string& message) {
    std::cerr << json{{"code", code}, {"message", message}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("squatwatch"));
    spdlog::set_level(spdlog::level::warn);

    CLI::App app{"Package-confusion detection for software registries"};
    app.require_subcommand(1);
    Options o;
    app.add_option("--config", o.config, "INI configuration file")->check(CLI::ExistingFile);
    app.add_option("--workspace", o.workspace, "Data directory (overrides the configuration)");
    app.add_flag("-v,--verbose", o.verbose, "Log progress to standard error");

    const auto registry_help = "npm, pypi, rubygems, maven, golang, huggingface or nuget";
    std::function<int()> action;

    auto* ingest = app.add_subcommand("ingest", "Load a metadata snapshot (JSON lines)");
    ingest->add_option("--registry", o.registry, registry_help)->required();
    ingest->add_option("--file", o.file, "Snapshot file")->required();
    ingest->add_option("--at", o.at, "Snapshot time, RFC 3339 (default: now)");
    ingest->callback([&] { action = [&] { return cmd_ingest(o); }; });

    auto* train = app.add_subcommand("train", "Train the name embedding model on stored names");
    train->callback([&] { action = [&] { return cmd_train(o); }; });

    auto* index = app.add_subcommand("index", "Build and save search indexes");
    index->add_option("--registry", o.registry, std::string(registry_help) + " (default: every ingested one)");
    index->callback([&] { action = [&] { return cmd_index(o); }; });

    auto* scan = app.add_subcommand("scan", "Check one package without recording alerts");
    scan->add_option("--registry", o.registry, registry_help)->required();
    scan->add_option("--package", o.package, "Published package name")->required();
    scan->callback([&] { action = [&] { return cmd_scan(o); }; });

    auto* scan_all = app.add_subcommand("scan-all", "Scan every untrusted package and record alerts");
    scan_all->add_option("--registry", o.registry, std::string(registry_help) + " (default: every ingested one)");
    scan_all->callback([&] { action = [&] { return cmd_scan_all(o); }; });

    auto* eval = app.add_subcommand("eval", "Confusion-matrix metrics over a labelled dataset");
    eval->add_option("--dataset", o.file, "JSON lines {suspect, target, registry, label[, predicted]}")->required();
    eval->callback([&] { action = [&] { return cmd_eval(o); }; });

    auto* grid = app.add_subcommand("gridsearch", "F1 over decision thresholds 0.00 to 1.00");
    grid->add_option("--dataset", o.file, "JSON lines with {score, label} or {suspect, target, registry, label}")
        ->required();
    grid->add_option("--operating-point", o.operating, "Threshold reported alongside the best")
        ->check(CLI::Range(0.0, 1.0));
    grid->callback([&] { action = [&] { return cmd_gridsearch(o); }; });

    auto* fit = app.add_subcommand("fit-weights", "Learn rule weights by cross-validated logistic regression");
    fit->add_option("--dataset", o.file, "JSON lines with {outcome, label} or labelled pairs")->required();
    fit->add_option("--folds", o.folds, "Cross-validation folds")->check(CLI::Range(2, 100));
    fit->add_option("--out", o.out, "Write the weights JSON here");
    fit->callback([&] { action = [&] { return cmd_fit_weights(o); }; });

    auto* serve = app.add_subcommand("serve", "Serve the triage API");
    serve->add_option("--host", o.host, "Bind address");
    serve->add_option("--port", o.port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
    serve->callback([&] { action = [&] { return cmd_serve(o); }; });

    auto* synth = app.add_subcommand("synth", "Write a synthetic registry with injected attacks");
    synth->add_option("--out", o.out, "Output directory")->required();
    synth->add_option("--seed", o.seed, "Generator seed");
    synth->add_option("--attacks", o.attacks, "Number of injected attacks");
    synth->callback([&] { action = [&] { return cmd_synth(o); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_error("usage", e.what());
        return kExitUsage;
    }
    if (o.verbose) spdlog::set_level(spdlog::level::info);

    try {
        return action();
    } catch (const Error& e) {
        report_error(e.code_name(), e.what());
    } catch (const std::exception& e) {
        report_error("internal", e.what());
    }
    return kExitOperational;
}
