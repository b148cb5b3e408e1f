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

#include "squatwatch/registry.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "squatwatch/errors.hpp"
#include "squatwatch/text.hpp"

namespace squatwatch {

namespace {

constexpr std::array<std::string_view, 7> kRegistryNames = {
    "npm", "pypi", "rubygems", "maven", "golang", "huggingface", "nuget"};

constexpr std::array<std::string_view, 9> kCategoryNames = {
    "one_step_levenshtein", "sequence_reordering",     "scope_confusion",
    "semantic_substitution", "alternate_spelling",     "impersonation_squatting",
    "compound_squatting",    "domain_confusion",       "other_lexical"};

bool legal_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || text::is_name_delimiter(c);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    size_t start = 0;
    while (true) {
        const size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

[[noreturn]] void malformed(RegistryId r, std::string_view raw, std::string_view why) {
    throw Error(ErrorCode::MalformedName, std::string(registry_name(r)) + " name '" +
                                              std::string(raw) + "': " + std::string(why));
}

void require_no(RegistryId r, std::string_view raw, std::string_view chars) {
    if (raw.find_first_of(chars) != std::string_view::npos) {
        malformed(r, raw, "unexpected '" + std::string(chars) + "' for this registry");
    }
}

bool ieq_prefix(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    for (size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[i])) !=
            std::tolower(static_cast<unsigned char>(prefix[i]))) {
            return false;
        }
    }
    return true;
}

std::string ns_or_empty(const PackageRef& r) {
    return r.namespace_ ? text::normalize_name(*r.namespace_) : std::string();
}

/// Tokens of the name ignoring the golang host.
std::vector<std::string> name_tokens(const PackageRef& r) {
    std::vector<std::string> out;
    if (r.namespace_) {
        auto ns = text::split_tokens(*r.namespace_);
        out.insert(out.end(), ns.begin(), ns.end());
    }
    auto id = text::split_tokens(r.identifier);
    out.insert(out.end(), id.begin(), id.end());
    return out;
}

bool component_similar(const std::string& a, const std::string& b, int max_distance) {
    if (a.empty() || b.empty()) return false;
    if (a.find(b) != std::string::npos || b.find(a) != std::string::npos) return true;
    return text::damerau_levenshtein_bounded(a, b, max_distance) <= max_distance;
}

}  // namespace

std::string_view registry_name(RegistryId id) { return kRegistryNames[static_cast<size_t>(id)]; }

RegistryId parse_registry(std::string_view name) {
    const std::string lower = text::to_lower(text::trim(name));
    for (size_t i = 0; i < kRegistryNames.size(); ++i) {
        if (kRegistryNames[i] == lower) return kAllRegistries[i];
    }
    throw Error(ErrorCode::UnknownRegistry, "unknown registry '" + std::string(name) + "'");
}

bool uses_download_signal(RegistryId id) {
    return id != RegistryId::Maven && id != RegistryId::Golang;
}

std::string_view part_name(NamePart part) {
    switch (part) {
        case NamePart::Full: return "full";
        case NamePart::Namespace: return "namespace";
        case NamePart::Identifier: return "identifier";
    }
    return "full";
}

NamePart parse_part(std::string_view name) {
    if (name == "full") return NamePart::Full;
    if (name == "namespace") return NamePart::Namespace;
    if (name == "identifier") return NamePart::Identifier;
    throw Error(ErrorCode::InvalidArgument, "unknown name part '" + std::string(name) + "'");
}

std::string PackageRef::similarity_key() const {
    if (registry == RegistryId::Golang && domain) {
        return text::normalize_name(namespace_ ? *namespace_ + identifier : identifier);
    }
    return normalized;
}

std::string PackageRef::reconstruct() const {
    switch (registry) {
        case RegistryId::Npm:
            return namespace_ ? "@" + *namespace_ + "/" + identifier : identifier;
        case RegistryId::Maven:
            return namespace_.value_or("") + ":" + identifier;
        case RegistryId::Golang: {
            std::string out = domain.value_or("");
            if (namespace_) out += "/" + *namespace_;
            return out + "/" + identifier;
        }
        case RegistryId::Huggingface:
            return namespace_ ? *namespace_ + "/" + identifier : identifier;
        case RegistryId::Nuget:
            return namespace_ ? *namespace_ + "." + identifier : identifier;
        case RegistryId::Pypi:
        case RegistryId::Rubygems:
            return identifier;
    }
    return identifier;
}

std::string PackageRef::part_text(NamePart part) const {
    switch (part) {
        case NamePart::Full: return similarity_key();
        case NamePart::Identifier:
            if (!namespace_) {
                throw Error(ErrorCode::MissingComponent,
                            "'" + raw + "' is flat; use the full name instead of its identifier");
            }
            return text::normalize_name(identifier);
        case NamePart::Namespace:
            if (!namespace_) {
                throw Error(ErrorCode::MissingComponent, "'" + raw + "' has no namespace");
            }
            return text::normalize_name(*namespace_);
    }
    return normalized;
}

PackageRef parse_name(RegistryId registry, std::string_view raw,
                      std::span<const std::string> reserved_prefixes) {
    if (raw.empty()) malformed(registry, raw, "empty name");
    if (!std::all_of(raw.begin(), raw.end(), legal_char)) {
        malformed(registry, raw, "illegal character");
    }

    PackageRef ref;
    ref.registry = registry;
    ref.raw = std::string(raw);
    ref.normalized = text::normalize_name(raw);
    if (ref.normalized.empty()) malformed(registry, raw, "name has no alphanumeric content");

    switch (registry) {
        case RegistryId::Pypi:
        case RegistryId::Rubygems:
            require_no(registry, raw, "/:@");
            ref.identifier = ref.raw;
            break;
        case RegistryId::Npm: {
            require_no(registry, raw, ":");
            if (raw.front() == '@') {
                const auto parts = split(raw.substr(1), '/');
                if (parts.size() != 2 || parts[0].empty() || parts[1].empty()) {
                    malformed(registry, raw, "scoped names must look like @scope/name");
                }
                if (parts[1].find('@') != std::string_view::npos) malformed(registry, raw, "stray '@'");
                ref.namespace_ = std::string(parts[0]);
                ref.identifier = std::string(parts[1]);
            } else {
                require_no(registry, raw, "/@");
                ref.identifier = ref.raw;
            }
            break;
        }
        case RegistryId::Maven: {
            require_no(registry, raw, "/@");
            const auto parts = split(raw, ':');
            if (parts.size() != 2 || parts[0].empty() || parts[1].empty()) {
                malformed(registry, raw, "expected groupId:artifactId");
            }
            ref.namespace_ = std::string(parts[0]);
            ref.identifier = std::string(parts[1]);
            break;
        }
        case RegistryId::Golang: {
            require_no(registry, raw, ":@");
            const auto parts = split(raw, '/');
            if (parts.size() < 2) malformed(registry, raw, "expected host/path");
            for (auto p : parts) {
                if (p.empty()) malformed(registry, raw, "empty path segment");
            }
            ref.domain = std::string(parts[0]);
            if (parts.size() == 2) {
                ref.identifier = std::string(parts[1]);
            } else {
                ref.namespace_ = std::string(parts[1]);
                const size_t id_start = parts[0].size() + parts[1].size() + 2;
                ref.identifier = std::string(raw.substr(id_start));
            }
            break;
        }
        case RegistryId::Huggingface: {
            require_no(registry, raw, ":@");
            const auto parts = split(raw, '/');
            if (parts.size() > 2) malformed(registry, raw, "expected author/model");
            if (parts.size() == 2) {
                if (parts[0].empty() || parts[1].empty()) malformed(registry, raw, "empty segment");
                ref.namespace_ = std::string(parts[0]);
                ref.identifier = std::string(parts[1]);
            } else {
                ref.identifier = ref.raw;
            }
            break;
        }
        case RegistryId::Nuget: {
            require_no(registry, raw, "/:@");
            size_t best = 0;
            for (const auto& prefix : reserved_prefixes) {
                if (prefix.empty() || prefix.size() + 1 >= raw.size()) continue;
                if (ieq_prefix(raw, prefix) && raw[prefix.size()] == '.' && prefix.size() > best) {
                    best = prefix.size();
                }
            }
            if (best > 0) {
                ref.namespace_ = std::string(raw.substr(0, best));
                ref.identifier = std::string(raw.substr(best + 1));
            } else {
                ref.identifier = ref.raw;
            }
            break;
        }
    }
    if (text::normalize_name(ref.identifier).empty()) {
        malformed(registry, raw, "identifier has no alphanumeric content");
    }
    return ref;
}

std::string_view category_name(AttackCategory c) { return kCategoryNames[static_cast<size_t>(c)]; }

std::optional<AttackCategory> parse_category(std::string_view name) {
    for (size_t i = 0; i < kCategoryNames.size(); ++i) {
        if (kCategoryNames[i] == name) return static_cast<AttackCategory>(i);
    }
    return std::nullopt;
}

SubstitutionTable::SubstitutionTable(std::vector<std::pair<std::string, std::string>> pairs) {
    for (auto& [from, to] : pairs) {
        auto f = text::to_lower(from);
        auto t = text::to_lower(to);
        if (f == t || (f.empty() && t.empty())) continue;
        pairs_.emplace_back(std::move(f), std::move(t));
    }
}

const SubstitutionTable& SubstitutionTable::builtin() {
    static const SubstitutionTable table({
        {"colour", "color"}, {"centre", "center"}, {"our", "or"},     {"tre", "ter"},
        {"ise", "ize"},      {"isation", "ization"}, {"yse", "yze"},  {"ence", "ense"},
        {"ogue", "og"},      {"grey", "gray"},     {"ae", "e"},       {"oe", "e"},
        {"ll", "l"},         {"ph", "f"},          {"ck", "k"},       {"ks", "x"},
        {"s", "z"},          {"0", "o"},           {"1", "l"},        {"1", "i"},
        {"rn", "m"},         {"vv", "w"},          {"cl", "d"},       {"5", "s"},
        {"3", "e"},          {"4", "a"},           {"7", "t"},        {"8", "b"},
        {"9", "g"},          {"uu", "w"},
    });
    return table;
}

SubstitutionTable SubstitutionTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open substitution table '" + path + "'");
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string line;
    while (std::getline(in, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = text::trim(line);
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) continue;
        pairs.emplace_back(text::trim(line.substr(0, comma)), text::trim(line.substr(comma + 1)));
    }
    return SubstitutionTable(std::move(pairs));
}

namespace {

bool substitutes_into(std::string_view a, std::string_view b, const std::string& from,
                      const std::string& to) {
    if (from.empty()) return false;
    std::string all;
    bool any = false;
    size_t pos = 0;
    while (pos <= a.size()) {
        const size_t hit = a.find(from, pos);
        if (hit == std::string_view::npos) break;
        any = true;
        std::string single(a);
        single.replace(hit, from.size(), to);
        if (single == b) return true;
        pos = hit + 1;
    }
    if (!any) return false;
    pos = 0;
    all.reserve(a.size());
    while (pos < a.size()) {
        if (a.compare(pos, from.size(), from) == 0) {
            all += to;
            pos += from.size();
        } else {
            all.push_back(a[pos++]);
        }
    }
    return all == b;
}

}  // namespace

bool SubstitutionTable::links(std::string_view a, std::string_view b) const {
    if (a == b) return false;
    for (const auto& [from, to] : pairs_) {
        if (substitutes_into(a, b, from, to) || substitutes_into(a, b, to, from) ||
            substitutes_into(b, a, from, to) || substitutes_into(b, a, to, from)) {
            return true;
        }
    }
    return false;
}

AttackCategory classify_attack_category(const PackageRef& suspect, const PackageRef& target,
                                        int lexical_distance,
                                        std::optional<double> author_similarity,
                                        const CategoryRules& rules) {
    const std::string s_ns = ns_or_empty(suspect);
    const std::string t_ns = ns_or_empty(target);
    const std::string s_id = text::normalize_name(suspect.identifier);
    const std::string t_id = text::normalize_name(target.identifier);
    const bool s_hier = suspect.hierarchical();
    const bool t_hier = target.hierarchical();

    if (suspect.domain && target.domain && s_id == t_id && s_ns == t_ns &&
        text::to_lower(*suspect.domain) != text::to_lower(*target.domain)) {
        return AttackCategory::DomainConfusion;
    }
    if ((s_hier || t_hier) && s_id == t_id && s_ns != t_ns &&
        (suspect.namespace_ || target.namespace_)) {
        return AttackCategory::ImpersonationSquatting;
    }
    if (suspect.namespace_ && target.namespace_ && s_ns != t_ns && s_id != t_id) {
        const bool ns_close =
            (author_similarity && *author_similarity >= rules.namespace_similarity_min) ||
            component_similar(s_ns, t_ns, rules.component_distance_max);
        const bool id_close = component_similar(s_id, t_id, rules.component_distance_max);
        if (ns_close && id_close) return AttackCategory::CompoundSquatting;
    }

    auto s_tokens = name_tokens(suspect);
    auto t_tokens = name_tokens(target);
    if (suspect.namespace_.has_value() != target.namespace_.has_value()) {
        auto a = s_tokens, b = t_tokens;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a == b || suspect.similarity_key() == target.similarity_key()) {
            return AttackCategory::ScopeConfusion;
        }
    }
    if (s_tokens.size() >= 2 && s_tokens != t_tokens) {
        auto a = s_tokens, b = t_tokens;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a == b) return AttackCategory::SequenceReordering;
    }
    if (lexical_distance == 1) return AttackCategory::OneStepLevenshtein;
    if (rules.substitutions &&
        rules.substitutions->links(suspect.similarity_key(), target.similarity_key())) {
        return AttackCategory::AlternateSpelling;
    }
    if (lexical_distance > 2) return AttackCategory::SemanticSubstitution;
    return AttackCategory::OtherLexical;
}

void to_json(nlohmann::json& j, const PackageRef& ref) {
    j = nlohmann::json::object();
    j["registry"] = std::string(registry_name(ref.registry));
    j["name"] = ref.raw;
    if (ref.registry == RegistryId::Nuget && ref.namespace_) j["reserved_prefix"] = *ref.namespace_;
    j["domain"] = ref.domain ? nlohmann::json(*ref.domain) : nlohmann::json(nullptr);
    j["namespace"] = ref.namespace_ ? nlohmann::json(*ref.namespace_) : nlohmann::json(nullptr);
    j["identifier"] = ref.identifier;
    j["normalized"] = ref.normalized;
}

void from_json(const nlohmann::json& j, PackageRef& ref) {
    if (!j.is_object() || !j.contains("registry") || !j.contains("name") || !j["registry"].is_string() ||
        !j["name"].is_string()) {
        throw Error(ErrorCode::InvalidArgument, "package reference needs string 'registry' and 'name'");
    }
    std::vector<std::string> prefixes;
    if (auto it = j.find("reserved_prefix"); it != j.end() && it->is_string()) {
        prefixes.push_back(it->get<std::string>());
    }
    ref = parse_name(parse_registry(j["registry"].get<std::string>()), j["name"].get<std::string>(), prefixes);
}

}  // namespace squatwatch
