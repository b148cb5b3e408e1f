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

#include "squatwatch/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "squatwatch/embedder.hpp"
#include "squatwatch/errors.hpp"
#include "squatwatch/text.hpp"

namespace squatwatch::synthetic {

namespace {

using Group = std::vector<std::string>;

const std::vector<std::string>& tech_words() {
    static const std::vector<std::string> words = [] {
        std::vector<std::string> w = {
            "json", "yaml", "xml", "csv", "http", "client", "server", "parser", "loader", "router", "logger",
            "cache", "queue", "stream", "buffer", "crypto", "hash", "token", "session", "cookie", "form",
            "validator", "schema", "model", "view", "template", "render", "style", "color", "theme", "icon",
            "font", "video", "audio", "chart", "graph", "table", "grid", "list", "tree", "map", "array", "date",
            "time", "timer", "clock", "event", "emitter", "hook", "plugin", "bundle", "build", "compile",
            "transform", "minify", "lint", "test", "mock", "spy", "stub", "runner", "command", "shell",
            "terminal", "prompt", "path", "file", "glob", "watch", "sync", "promise", "retry", "limit", "rate",
            "throttle", "debounce", "socket", "mqtt", "redis", "mongo", "postgres", "mysql", "sqlite", "orm",
            "query", "sql", "graphql", "rest", "api", "sdk", "core", "common", "shared", "base", "kit", "tool",
            "react", "vue", "angular", "svelte", "node", "express", "koa", "fastify", "next", "nuxt", "webpack",
            "rollup", "babel", "eslint", "prettier", "typescript", "jest", "mocha", "chai", "sinon", "lodash",
            "moment", "dayjs", "axios", "fetch", "chalk", "debug", "uuid", "semver", "dotenv", "commander",
            "yargs", "inquirer", "marked", "markdown", "html", "css", "sass", "less", "postcss", "svg", "canvas",
            "pdf", "tar", "gzip", "archive", "encode", "decode", "base64", "unicode", "emoji", "slug", "diff",
            "patch", "merge", "clone", "deep", "equal", "compare", "sort", "search", "filter", "index", "store",
            "state", "redux", "mobx", "signal", "reactive", "observable", "pipe", "worker", "thread", "pool",
            "cluster", "proxy", "gateway", "balancer", "dns", "url", "params", "header", "body", "multipart",
            "upload", "download", "storage", "bucket", "cloud", "lambda", "serverless", "docker", "kube",
            "deploy", "release", "version", "changelog", "license", "locale", "translate", "currency", "money",
            "payment", "stripe", "paypal", "email", "mail", "sms", "notify", "push", "webhook", "oauth", "jwt",
            "passport", "bcrypt", "password", "secret", "vault", "key", "cert", "tls", "geo", "location",
            "weather", "math", "stats", "random", "faker", "seed", "fixture", "snapshot", "coverage", "bench",
            "profile", "trace", "metrics", "monitor", "health", "status", "alert", "assert", "nmap", "scanner",
            "packet", "network", "websocket", "cors", "helmet", "compression", "spinner", "progress", "table",
            "editor", "highlight", "syntax", "babelify", "polyfill", "shim", "runtime", "engine", "driver",
            "adapter", "bridge", "wrapper", "binding", "native", "wasm", "parser", "lexer", "tokenizer", "ast",
            "walker", "visitor", "matcher", "regex", "glob", "color", "pretty", "print", "fast", "tiny", "micro",
            "simple", "easy", "super", "mini", "smart", "lite", "pro", "plus", "extra", "light", "dark", "open",
        };
        std::sort(w.begin(), w.end());
        w.erase(std::unique(w.begin(), w.end()), w.end());
        return w;
    }();
    return words;
}

// Interchangeable spellings of one concept.
const std::vector<Group>& tech_groups() {
    static const std::vector<Group> groups = {
        {"js", "javascript"}, {"py", "python"},     {"util", "utils", "utility"}, {"helper", "helpers"},
        {"img", "image"},     {"cfg", "config"},    {"db", "database"},           {"auth", "authentication"},
        {"msg", "message"},   {"str", "string"},    {"num", "number"},            {"fmt", "format"},
        {"env", "environment"}, {"doc", "docs"},    {"lib", "library"},           {"pkg", "package"},
        {"app", "application"}, {"btn", "button"},  {"nav", "navigation"},        {"calc", "calculator"},
        {"gen", "generator"}, {"ctrl", "controller"}, {"mgr", "manager"},         {"srv", "service"},
        {"req", "request"},   {"res", "response"},  {"err", "error"},             {"async", "asynchronous"},
        {"col", "column"},    {"dict", "dictionary"}, {"repo", "repository"},     {"admin", "administrator"},
        {"bzip", "bz2file"},  {"zip", "compress"},  {"ws", "websockets"},         {"ui", "interface"},
    };
    return groups;
}

const std::vector<Group>& org_groups() {
    static const std::vector<Group> groups = {
        {"meta", "facebook"}, {"google", "alphabet"}, {"microsoft", "msft"}, {"amazon", "aws"},
        {"nvidia", "nv"},     {"ibm", "bluemix"},     {"alibaba", "aliyun"}, {"tencent", "qq"},
    };
    return groups;
}

const std::vector<std::string>& org_words() {
    static const std::vector<std::string> w = {
        "openai", "stability", "mistralai", "tiiuae", "bigscience", "allenai", "eleutherai", "salesforce",
        "intel", "apple", "baidu", "deepmind", "cohere", "nous", "databricks", "mosaic", "cerebras", "adobe",
        "oracle", "cisco", "vmware", "redhat", "canonical", "mozilla", "netflix", "uber", "airbnb", "shopify",
        "twilio", "spotify", "hashicorp", "grafana", "prometheus", "kubernetes", "etcd", "minio", "cockroach",
        "gitlab", "atlassian", "jetbrains", "vercel", "netlify", "cloudflare", "fastly", "elastic", "confluent",
        "sentry", "datadog", "newrelic", "pinterest", "dropbox", "zalando", "yandex", "naver", "kakao", "line",
        "samsung", "sony", "huawei", "xiaomi", "bytedance", "sberbank", "unbabel", "helsinki", "stanford",
        "berkeley", "cmu", "mit", "tsinghua", "pku", "fudan", "zju", "kaist", "ethz", "epfl", "inria",
    };
    return w;
}

const std::vector<std::string>& model_families() {
    static const std::vector<std::string> w = {
        "bert", "roberta", "gpt", "llama", "mistral", "t5", "bart", "vit", "clip", "whisper", "wav2vec",
        "resnet", "yolo", "diffusion", "falcon", "phi", "gemma", "qwen", "deberta", "electra", "albert",
        "distilbert", "xlnet", "bloom", "opt", "pythia", "mpt", "stablelm", "codegen", "starcoder",
    };
    return w;
}

const std::vector<std::string>& model_tags() {
    static const std::vector<std::string> w = {
        "tiny", "small", "base", "medium", "large", "xl", "xxl", "7b", "13b", "70b", "1b", "3b", "uncased",
        "cased", "squad", "ner", "sentiment", "summarization", "translation", "qa", "finetuned", "v1", "v2",
        "v3", "hf", "gguf", "awq", "gptq", "multilingual", "en", "de", "fr", "zh", "code", "chat", "instruct",
    };
    return w;
}

const std::vector<Group>& model_groups() {
    static const std::vector<Group> groups = {
        {"chat", "conversational"}, {"instruct", "instruction"}, {"qa", "questionanswering"},
        {"ft", "finetune"},         {"multilingual", "multilang"},
    };
    return groups;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

// Skewed toward the front of the list so some words are much more common.
const std::string& zipf_pick(std::mt19937_64& rng, const std::vector<std::string>& words) {
    double u = uniform01(rng);
    auto i = static_cast<std::size_t>(u * u * static_cast<double>(words.size()));
    return words[std::min(i, words.size() - 1)];
}

const std::string& group_pick(std::mt19937_64& rng, const std::vector<Group>& groups) {
    const auto& g = groups[pick(rng, groups.size())];
    return g[pick(rng, g.size())];
}

const Group* group_of(const std::string& token) {
    for (const auto* family : {&tech_groups(), &org_groups(), &model_groups()}) {
        for (const auto& g : *family) {
            if (std::find(g.begin(), g.end(), token) != g.end()) return &g;
        }
    }
    return nullptr;
}

// Words that modify any name regardless of topic.
const std::vector<std::string>& modifiers() {
    static const std::vector<std::string> w = {"fast", "tiny", "micro", "simple", "easy", "super", "mini",
                                               "smart", "lite", "pro", "plus", "extra", "pretty", "open"};
    return w;
}

// Related words used together in names. Every interchangeable-spelling group
// belongs to one topic, so its spellings appear beside the same companions.
struct Topic {
    std::vector<const Group*> concepts;
    std::vector<std::string> companions;
};

const std::vector<Topic>& topics() {
    static const std::vector<Topic> all = [] {
        std::vector<std::string> words;
        for (const auto& w : tech_words()) {
            const auto& mods = modifiers();
            if (std::find(mods.begin(), mods.end(), w) == mods.end()) words.push_back(w);
        }
        std::mt19937_64 fixed(0x70b1c5);
        for (std::size_t i = words.size(); i > 1; --i) std::swap(words[i - 1], words[fixed() % i]);
        const std::size_t per_topic = 6;
        std::vector<Topic> out((words.size() + per_topic - 1) / per_topic);
        for (std::size_t i = 0; i < words.size(); ++i) out[i / per_topic].companions.push_back(words[i]);
        for (std::size_t g = 0; g < tech_groups().size(); ++g) out[g % out.size()].concepts.push_back(&tech_groups()[g]);
        return out;
    }();
    return all;
}

std::string topic_token(std::mt19937_64& rng, const Topic& t) {
    if (!t.concepts.empty() && uniform01(rng) < 0.4) {
        const Group& g = *t.concepts[pick(rng, t.concepts.size())];
        return g[pick(rng, g.size())];
    }
    return t.companions[pick(rng, t.companions.size())];
}

std::string tech_token(std::mt19937_64& rng) {
    return topic_token(rng, topics()[pick(rng, topics().size())]);
}

std::string org_token(std::mt19937_64& rng) {
    if (uniform01(rng) < 0.3) return group_pick(rng, org_groups());
    return zipf_pick(rng, org_words());
}

// Stable per-owner preference so an organisation, under any of its
// spellings, publishes the same kinds of things.
std::size_t affinity(const std::string& owner, std::size_t salt, std::size_t n) {
    std::string key = owner;
    if (const Group* g = [&]() -> const Group* {
            for (const auto& grp : org_groups()) {
                if (std::find(grp.begin(), grp.end(), owner) != grp.end()) return &grp;
            }
            return nullptr;
        }()) {
        key = g->front();
    }
    return (std::hash<std::string>{}(key) + salt * 0x9E3779B97F4A7C15ull) % n;
}

std::string pronounceable(std::mt19937_64& rng) {
    static const std::string cons = "bcdfghjklmnprstvwz";
    static const std::string vow = "aeiou";
    std::string s;
    std::size_t syll = 2 + pick(rng, 2);
    for (std::size_t i = 0; i < syll; ++i) {
        s += cons[pick(rng, cons.size())];
        s += vow[pick(rng, vow.size())];
    }
    if (uniform01(rng) < 0.5) s += cons[pick(rng, cons.size())];
    return s;
}

std::string join(const std::vector<std::string>& parts, char delim) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += delim;
        out += parts[i];
    }
    return out;
}

std::vector<std::string> distinct_tech_tokens(std::mt19937_64& rng, std::size_t n, const Topic& topic) {
    std::vector<std::string> out;
    const Group* used_group = nullptr;
    for (int guard = 0; out.size() < n && guard < 50; ++guard) {
        auto t = topic_token(rng, topic);
        const Group* g = group_of(t);
        if (g && g == used_group) continue;
        if (std::find(out.begin(), out.end(), t) == out.end()) {
            out.push_back(t);
            if (g) used_group = g;
        }
    }
    if (n > 1 && uniform01(rng) < 0.15) out.insert(out.begin(), modifiers()[pick(rng, modifiers().size())]);
    return out;
}

std::vector<std::string> distinct_tech_tokens(std::mt19937_64& rng, std::size_t n) {
    return distinct_tech_tokens(rng, n, topics()[pick(rng, topics().size())]);
}

std::size_t token_count(std::mt19937_64& rng) {
    double u = uniform01(rng);
    return u < 0.2 ? 1 : (u < 0.75 ? 2 : 3);
}

std::string flat_name(std::mt19937_64& rng) {
    char delim = uniform01(rng) < 0.9 ? '-' : '_';
    return join(distinct_tech_tokens(rng, token_count(rng)), delim);
}

std::string describe(const std::vector<std::string>& tokens, std::mt19937_64& rng) {
    static const std::vector<std::string> templates = {
        "A {} library.", "Utilities for {} projects.", "Fast {} implementation.", "{} helpers and tools.",
        "Lightweight {} toolkit.", "Pretrained {} model.", "{} bindings and wrappers.",
    };
    std::string t = templates[pick(rng, templates.size())];
    return t.replace(t.find("{}"), 2, join(tokens, ' '));
}

Timestamp days_before(Timestamp now, double days) {
    return now - Duration(static_cast<long>(days * 86400.0));
}

void add_popularity(PackageMetadata& m, bool trusted, const TrustPolicy& policy, std::mt19937_64& rng) {
    if (uses_download_signal(m.ref.registry)) {
        auto it = policy.download_threshold.find(m.ref.registry);
        const double thr = it != policy.download_threshold.end() ? static_cast<double>(it->second) : 5000.0;
        double lo = trusted ? std::log10(thr) : 0.0;
        double hi = trusted ? 7.0 : std::log10(thr);
        auto d = static_cast<std::int64_t>(std::pow(10.0, lo + (hi - lo) * uniform01(rng)));
        if (trusted) d = std::max<std::int64_t>(d, static_cast<std::int64_t>(thr));
        if (!trusted) d = std::min<std::int64_t>(d, static_cast<std::int64_t>(thr) - 1);
        m.weekly_downloads = d;
    } else {
        auto it = policy.ranking_threshold.find(m.ref.registry);
        const double thr = it != policy.ranking_threshold.end() ? it->second : 4.0;
        m.avg_ranking = trusted ? 1.0 + (thr - 1.0) * uniform01(rng) : thr * 1.25 + 200.0 * uniform01(rng);
    }
}

PackageMetadata make_package(PackageRef ref, const std::vector<std::string>& desc_tokens, const std::string& owner,
                             bool trusted, const TrustPolicy& policy, Timestamp now, std::mt19937_64& rng) {
    static const std::vector<std::string> licenses = {"MIT", "Apache-2.0", "BSD-3-Clause", "ISC", "GPL-3.0"};
    PackageMetadata m;
    m.description = describe(desc_tokens, rng);
    m.readme = "# " + ref.raw + "\n\n" + *m.description + "\n\n## Usage\n\nInstall and import " + ref.identifier +
               ".\n";
    m.license = licenses[pick(rng, licenses.size())];
    m.maintainers = {owner};
    if (uniform01(rng) < 0.3) m.maintainers.push_back(pronounceable(rng));
    std::string repo_owner = ref.namespace_ ? text::normalize_name(*ref.namespace_) : owner;
    m.repository_url = "https://github.com/" + repo_owner + "/" + ref.identifier;
    const double age = 60.0 + 1000.0 * uniform01(rng);
    std::size_t nver = 1 + pick(rng, trusted ? 12 : 5);
    for (std::size_t v = 0; v < nver; ++v) {
        double when = age - (age - 5.0) * static_cast<double>(v) / static_cast<double>(std::max<std::size_t>(nver, 2) - 1);
        if (nver == 1) when = age;
        m.versions.push_back({std::to_string(v / 3 + 1) + "." + std::to_string(v % 3) + ".0", days_before(now, when)});
    }
    m.created_at = days_before(now, age + 1.0);
    m.ref = std::move(ref);
    add_popularity(m, trusted, policy, rng);
    return m;
}

class NameRegistry {
public:
    bool taken(RegistryId r, const std::string& key) const { return keys_.count(tag(r, key)) > 0; }
    bool claim(RegistryId r, const std::string& key) { return keys_.insert(tag(r, key)).second; }

private:
    static std::string tag(RegistryId r, const std::string& key) { return std::string(registry_name(r)) + ":" + key; }
    std::unordered_set<std::string> keys_;
};

// Edits one letter of `s` (delete, insert, substitute or transpose) outside
// delimiters.
std::optional<std::string> one_edit(const std::string& s, std::mt19937_64& rng) {
    static const std::string letters = "abcdefghijklmnopqrstuvwxyz";
    std::vector<std::size_t> pos;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!text::is_name_delimiter(s[i])) pos.push_back(i);
    }
    if (pos.size() < 2) return std::nullopt;
    for (int attempt = 0; attempt < 20; ++attempt) {
        std::string out = s;
        std::size_t i = pos[pick(rng, pos.size())];
        switch (pick(rng, 4)) {
            case 0:
                if (pos.size() < 4) continue;
                out.erase(i, 1);
                break;
            case 1: out.insert(out.begin() + static_cast<std::ptrdiff_t>(i), letters[pick(rng, letters.size())]); break;
            case 2: out[i] = letters[pick(rng, letters.size())]; break;
            default:
                if (i + 1 >= out.size() || text::is_name_delimiter(out[i + 1]) || out[i] == out[i + 1]) continue;
                std::swap(out[i], out[i + 1]);
                break;
        }
        if (text::normalize_name(out) != text::normalize_name(s) && !out.empty() && !text::is_name_delimiter(out.front()) &&
            !text::is_name_delimiter(out.back())) {
            return out;
        }
    }
    return std::nullopt;
}

std::vector<std::string> split_keep(const std::string& s, char& delim) {
    delim = '-';
    for (char c : s) {
        if (c == '-' || c == '_' || c == '.') {
            delim = c;
            break;
        }
    }
    return text::split_tokens(s);
}

// Replaces one token that has an interchangeable spelling.
std::optional<std::string> swap_synonym(const std::string& s, std::mt19937_64& rng) {
    char delim;
    auto toks = split_keep(s, delim);
    std::vector<std::size_t> cand;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (group_of(toks[i])) cand.push_back(i);
    }
    if (cand.empty()) return std::nullopt;
    std::size_t i = cand[pick(rng, cand.size())];
    const Group& g = *group_of(toks[i]);
    std::vector<std::string> others;
    for (const auto& f : g) {
        if (f != toks[i]) others.push_back(f);
    }
    toks[i] = others[pick(rng, others.size())];
    return join(toks, delim);
}

std::optional<std::string> alternate_spelling(const std::string& s, std::mt19937_64& rng) {
    const auto& pairs = SubstitutionTable::builtin().pairs();
    std::vector<std::pair<std::string, std::string>> usable;
    for (const auto& [a, b] : pairs) {
        if (s.find(a) != std::string::npos) usable.emplace_back(a, b);
        if (s.find(b) != std::string::npos) usable.emplace_back(b, a);
    }
    // Prefer longer, more natural rewrites ("colour") over single glyphs.
    std::stable_sort(usable.begin(), usable.end(),
                     [](const auto& x, const auto& y) { return x.first.size() > y.first.size(); });
    if (usable.empty()) return std::nullopt;
    std::size_t span = std::min<std::size_t>(usable.size(), 3);
    const auto& [from, to] = usable[pick(rng, span)];
    std::vector<std::size_t> hits;
    for (auto p = s.find(from); p != std::string::npos; p = s.find(from, p + 1)) hits.push_back(p);
    std::string out = s;
    out.replace(hits[pick(rng, hits.size())], from.size(), to);
    if (text::normalize_name(out) == text::normalize_name(s)) return std::nullopt;
    return out;
}

std::string lookalike_domain(const std::string& domain, std::mt19937_64& rng) {
    auto dot = domain.rfind('.');
    std::string label = domain.substr(0, dot);
    std::string tld = dot == std::string::npos ? "" : domain.substr(dot);
    switch (pick(rng, 3)) {
        case 0: {
            auto e = one_edit(label, rng);
            return (e ? *e : label + "s") + tld;
        }
        case 1: return label + (tld == ".com" ? ".co" : ".com");
        default: return label + "-mirror" + tld;
    }
}

std::string rebuild(const PackageRef& t, const std::optional<std::string>& domain, const std::optional<std::string>& ns,
                    const std::string& id) {
    switch (t.registry) {
        case RegistryId::Npm: return ns ? "@" + *ns + "/" + id : id;
        case RegistryId::Maven: return *ns + ":" + id;
        case RegistryId::Golang: return *domain + "/" + (ns ? *ns + "/" : "") + id;
        case RegistryId::Huggingface: return ns ? *ns + "/" + id : id;
        default: return id;
    }
}

}  // namespace

std::vector<RegistryId> World::registries() const {
    std::set<RegistryId> rs;
    for (const auto& p : packages) rs.insert(p.ref.registry);
    return {rs.begin(), rs.end()};
}

std::vector<PackageMetadata> World::of(RegistryId registry) const {
    std::vector<PackageMetadata> out;
    for (const auto& p : packages) {
        if (p.ref.registry == registry) out.push_back(p);
    }
    return out;
}

std::vector<std::string> World::corpus() const {
    std::vector<std::string> out;
    out.reserve(packages.size());
    for (const auto& p : packages) out.push_back(corpus_entry(p.ref));
    return out;
}

World make_world(const WorldParams& params, const TrustPolicy& policy) {
    std::mt19937_64 rng(params.seed);
    World world;
    world.now = params.now;
    NameRegistry names;
    auto add = [&](RegistryId r, const std::string& raw, const std::vector<std::string>& desc, const std::string& owner) {
        PackageRef ref = parse_name(r, raw);
        if (!names.claim(r, ref.similarity_key())) return false;
        bool trusted = uniform01(rng) < params.trusted_fraction;
        world.packages.push_back(make_package(std::move(ref), desc, owner, trusted, policy, params.now, rng));
        return true;
    };
    auto fill = [&](std::size_t n, auto&& one) {
        std::size_t made = 0;
        for (std::size_t guard = 0; made < n && guard < n * 50; ++guard) {
            if (one()) ++made;
        }
    };

    fill(params.npm_flat, [&] {
        auto raw = flat_name(rng);
        return add(RegistryId::Npm, raw, text::split_tokens(raw), pronounceable(rng));
    });

    struct Owner {
        std::string name;
        std::string key;  // org token whose preferences apply
    };
    auto owner_topic = [&](const Owner& o) -> const Topic& {
        const auto& ts = topics();
        if (uniform01(rng) < 0.75) return ts[affinity(o.key, 1, ts.size())];
        return ts[pick(rng, ts.size())];
    };

    std::vector<Owner> scopes;
    for (std::size_t i = 0; i < std::max<std::size_t>(params.npm_scoped / 6, 1); ++i) {
        std::string key = uniform01(rng) < 0.5 ? org_token(rng) : tech_token(rng);
        std::string s = key;
        if (uniform01(rng) < 0.4) s += "-" + topic_token(rng, topics()[affinity(key, 1, topics().size())]);
        scopes.push_back({s, key});
    }
    fill(params.npm_scoped, [&] {
        const auto& scope = scopes[pick(rng, scopes.size())];
        auto id = join(distinct_tech_tokens(rng, uniform01(rng) < 0.5 ? 1 : 2, owner_topic(scope)), '-');
        return add(RegistryId::Npm, "@" + scope.name + "/" + id, text::split_tokens(id), scope.name);
    });

    const auto& families = model_families();
    auto preferred_family = [&](const std::string& key) -> const std::string& {
        if (uniform01(rng) < 0.8) return families[affinity(key, 2 + pick(rng, 3), families.size())];
        return families[pick(rng, families.size())];
    };
    std::vector<Owner> hf_orgs;
    for (std::size_t i = 0; i < std::max<std::size_t>(params.huggingface / 8, 1); ++i) {
        std::string key = uniform01(rng) < 0.7 ? org_token(rng) : pronounceable(rng);
        std::string o = key;
        if (uniform01(rng) < 0.4) o += "-" + preferred_family(key);
        hf_orgs.push_back({o, key});
    }
    fill(params.huggingface, [&] {
        const auto& org = hf_orgs[pick(rng, hf_orgs.size())];
        std::vector<std::string> parts = {preferred_family(org.key)};
        std::size_t ntags = pick(rng, 3);
        for (std::size_t t = 0; t < ntags; ++t) {
            std::string tag = uniform01(rng) < 0.25 ? group_pick(rng, model_groups())
                                                    : model_tags()[pick(rng, model_tags().size())];
            const Group* g = group_of(tag);
            bool clash = std::any_of(parts.begin(), parts.end(), [&](const std::string& p) {
                return p == tag || (g && group_of(p) == g);
            });
            if (!clash) parts.push_back(tag);
        }
        auto id = join(parts, '-');
        return add(RegistryId::Huggingface, org.name + "/" + id, parts, org.name);
    });

    std::vector<Owner> go_owners;
    for (std::size_t i = 0; i < std::max<std::size_t>(params.golang / 4, 1); ++i) {
        std::string key = uniform01(rng) < 0.4 ? org_token(rng) : pronounceable(rng);
        go_owners.push_back({key, key});
    }
    fill(params.golang, [&] {
        double u = uniform01(rng);
        std::string domain = u < 0.85 ? "github.com" : (u < 0.95 ? "gitlab.com" : "bitbucket.org");
        const auto& owner = go_owners[pick(rng, go_owners.size())];
        auto repo = join(distinct_tech_tokens(rng, uniform01(rng) < 0.6 ? 1 : 2, owner_topic(owner)), '-');
        return add(RegistryId::Golang, domain + "/" + owner.name + "/" + repo, text::split_tokens(repo), owner.name);
    });
    return world;
}

std::vector<std::string> make_flat_names(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::unordered_set<std::string> seen;
    std::vector<std::string> out;
    for (std::size_t guard = 0; out.size() < count && guard < count * 50; ++guard) {
        auto n = flat_name(rng);
        if (seen.insert(text::normalize_name(n)).second) out.push_back(n);
    }
    return out;
}

void write_snapshot(std::ostream& out, const std::vector<PackageMetadata>& packages) {
    for (const auto& p : packages) out << metadata_to_json(p).dump() << '\n';
}

std::vector<AttackCategory> attack_techniques() {
    return {AttackCategory::OneStepLevenshtein, AttackCategory::SequenceReordering,
            AttackCategory::ScopeConfusion,     AttackCategory::SemanticSubstitution,
            AttackCategory::AlternateSpelling,  AttackCategory::ImpersonationSquatting,
            AttackCategory::CompoundSquatting,  AttackCategory::DomainConfusion};
}

std::optional<std::string> mutate_name(const PackageRef& target, AttackCategory technique, std::mt19937_64& rng,
                                       const std::function<bool(const std::string&)>& taken) {
    const std::string id = text::to_lower(target.identifier);
    const std::optional<std::string> ns =
        target.namespace_ ? std::optional<std::string>(text::to_lower(*target.namespace_)) : std::nullopt;
    // Nobody but the owner publishes inside a namespace, so single-component
    // techniques land on the namespace of hierarchical names.
    const std::string& owned = ns ? *ns : id;
    auto with_owned = [&](const std::string& edited) {
        return ns ? rebuild(target, target.domain, edited, id) : rebuild(target, target.domain, ns, edited);
    };
    for (int attempt = 0; attempt < 8; ++attempt) {
        std::optional<std::string> out;
        switch (technique) {
            case AttackCategory::OneStepLevenshtein:
                if (auto e = one_edit(owned, rng)) out = with_owned(*e);
                break;
            case AttackCategory::SequenceReordering: {
                char delim;
                auto toks = split_keep(owned, delim);
                if (toks.size() < 2) return std::nullopt;
                auto shuffled = toks;
                std::rotate(shuffled.begin(), shuffled.begin() + 1 + static_cast<std::ptrdiff_t>(pick(rng, toks.size() - 1)),
                            shuffled.end());
                if (shuffled != toks) out = with_owned(join(shuffled, delim));
                break;
            }
            case AttackCategory::ScopeConfusion:
                if (target.registry != RegistryId::Npm) return std::nullopt;
                if (ns) {
                    out = *ns + "-" + id;
                } else {
                    auto toks = text::split_tokens(id);
                    if (toks.size() < 2) return std::nullopt;
                    std::vector<std::string> rest(toks.begin() + 1, toks.end());
                    out = "@" + toks[0] + "/" + join(rest, '-');
                }
                break;
            case AttackCategory::SemanticSubstitution:
                if (auto e = swap_synonym(owned, rng)) out = with_owned(*e);
                break;
            case AttackCategory::AlternateSpelling:
                if (auto e = alternate_spelling(owned, rng)) out = with_owned(*e);
                break;
            case AttackCategory::ImpersonationSquatting: {
                if (!ns) return std::nullopt;
                auto e = swap_synonym(*ns, rng);
                if (!e) e = one_edit(*ns, rng);
                if (e) out = rebuild(target, target.domain, *e, id);
                break;
            }
            case AttackCategory::CompoundSquatting: {
                if (!ns) return std::nullopt;
                std::optional<std::string> ens;
                if (ns->find('-') != std::string::npos && uniform01(rng) < 0.5) {
                    std::string swapped = *ns;
                    std::replace(swapped.begin(), swapped.end(), '-', '_');
                    ens = one_edit(swapped, rng);
                } else {
                    ens = one_edit(*ns, rng);
                }
                std::optional<std::string> eid;
                if (id.find('-') != std::string::npos && uniform01(rng) < 0.3) {
                    eid = id;
                    std::replace(eid->begin(), eid->end(), '-', '_');
                    eid = one_edit(*eid, rng);
                } else {
                    eid = one_edit(id, rng);
                }
                if (ens && eid) out = rebuild(target, target.domain, *ens, *eid);
                break;
            }
            case AttackCategory::DomainConfusion:
                if (target.registry != RegistryId::Golang || !target.domain) return std::nullopt;
                out = rebuild(target, lookalike_domain(*target.domain, rng), ns, id);
                break;
            case AttackCategory::OtherLexical: return std::nullopt;
        }
        if (!out) continue;
        try {
            PackageRef parsed = parse_name(target.registry, *out);
            if (parsed.raw == target.raw || taken(*out)) continue;
            return out;
        } catch (const Error&) {
            continue;
        }
    }
    return std::nullopt;
}

PackageMetadata attack_metadata(const PackageRef& ref, const PackageMetadata& target, Timestamp now,
                                std::mt19937_64& rng) {
    PackageMetadata m;
    m.ref = ref;
    m.description = target.description;
    if (uniform01(rng) < 0.5) m.readme = target.readme;
    m.license = target.license;
    m.maintainers = {pronounceable(rng) + std::to_string(pick(rng, 1000))};
    double age = 1.0 + 20.0 * uniform01(rng);
    m.versions = {{"1.0.0", days_before(now, age)}};
    m.created_at = days_before(now, age);
    if (uses_download_signal(ref.registry)) {
        m.weekly_downloads = static_cast<std::int64_t>(pick(rng, 50));
    } else {
        m.avg_ranking = 500.0 + 1000.0 * uniform01(rng);
    }
    return m;
}

std::vector<InjectedAttack> make_attacks(const World& world, std::size_t count, std::uint64_t seed,
                                         const TrustPolicy& policy) {
    std::mt19937_64 rng(seed);
    std::vector<const PackageMetadata*> trusted;
    // similarity key -> raw name holding it; an attack may share its target's
    // key (scope or domain confusion) but no one else's.
    std::unordered_map<std::string, std::string> keys;
    std::unordered_set<std::string> raws;
    auto key_of = [](const PackageRef& r) { return std::string(registry_name(r.registry)) + ":" + r.similarity_key(); };
    auto raw_of = [](const PackageRef& r) { return std::string(registry_name(r.registry)) + ":" + text::to_lower(r.raw); };
    for (const auto& p : world.packages) {
        keys.emplace(key_of(p.ref), p.ref.raw);
        raws.insert(raw_of(p.ref));
        if (is_trusted(p, policy).trusted) trusted.push_back(&p);
    }
    if (trusted.empty()) throw Error(ErrorCode::InvalidArgument, "world has no trusted packages to imitate");

    const auto techniques = attack_techniques();
    std::vector<InjectedAttack> out;
    for (std::size_t i = 0; i < count; ++i) {
        AttackCategory tech = techniques[i % techniques.size()];
        bool made = false;
        for (int tries = 0; tries < 2000 && !made; ++tries) {
            const PackageMetadata& target = *trusted[pick(rng, trusted.size())];
            auto taken = [&](const std::string& raw) {
                try {
                    PackageRef r = parse_name(target.ref.registry, raw);
                    if (raws.count(raw_of(r))) return true;
                    auto it = keys.find(key_of(r));
                    return it != keys.end() && it->second != target.ref.raw;
                } catch (const Error&) {
                    return true;
                }
            };
            auto name = mutate_name(target.ref, tech, rng, taken);
            if (!name) continue;
            PackageRef ref = parse_name(target.ref.registry, *name);
            keys.emplace(key_of(ref), ref.raw);
            raws.insert(raw_of(ref));
            out.push_back({attack_metadata(ref, target, world.now, rng), target.ref, tech});
            made = true;
        }
        if (!made) {
            throw Error(ErrorCode::InvalidArgument,
                        "could not apply " + std::string(category_name(tech)) + " to any trusted package");
        }
    }
    return out;
}

}  // namespace squatwatch::synthetic
