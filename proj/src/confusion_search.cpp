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

#include "squatwatch/confusion_search.hpp"

#include <algorithm>
#include <unordered_set>

#include "squatwatch/errors.hpp"
#include "squatwatch/text.hpp"

namespace squatwatch {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> kChannelNames = {"lexical", "semantic", "hierarchical", "multiple"};

enum ChannelBit : unsigned { kLexical = 1, kSemantic = 2, kHierarchical = 4 };

Channel channel_of(unsigned mask) {
    switch (mask) {
        case kLexical: return Channel::Lexical;
        case kSemantic: return Channel::Semantic;
        case kHierarchical: return Channel::Hierarchical;
        default: return Channel::Multiple;
    }
}

// Namespace as published. "typescript_eslint" and "typescript-eslint" are
// different owners even though both normalize to the same text.
std::string owner_of(const PackageRef& r) { return r.namespace_ ? text::to_lower(*r.namespace_) : std::string(); }

// Same author: identical namespace under the same host.
bool same_owner(const PackageRef& a, const PackageRef& b) {
    if (!a.namespace_ || !b.namespace_) return false;
    if (a.domain != b.domain) return false;
    return owner_of(a) == owner_of(b);
}

// A golang module served from a listed mirror of the target's host.
bool mirrored(const PackageRef& suspect, const PackageRef& target, const AllowLists& lists) {
    if (!suspect.domain || !target.domain || *suspect.domain == *target.domain) return false;
    if (suspect.similarity_key() != target.similarity_key()) return false;
    return lists.has_mirror_domain(*suspect.domain);
}

template <typename T>
json optional_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<T>();
}

}  // namespace

void SearchThresholds::validate() const {
    if (levenshtein_max < 1) throw Error(ErrorCode::InvalidParams, "levenshtein_max must be at least 1");
    if (!(cosine_min > 0 && cosine_min <= hier_identifier_cosine_min && hier_identifier_cosine_min <= 1)) {
        throw Error(ErrorCode::InvalidParams, "need 0 < cosine_min <= hier_identifier_cosine_min <= 1");
    }
    if (!(hier_namespace_cosine_min > 0 && hier_namespace_cosine_min <= 1)) {
        throw Error(ErrorCode::InvalidParams, "hier_namespace_cosine_min must be in (0, 1]");
    }
    if (top_k < 1) throw Error(ErrorCode::InvalidParams, "top_k must be at least 1");
    if (ann_candidates < 1 || ef_search < 1) {
        throw Error(ErrorCode::InvalidParams, "ann_candidates and ef_search must be positive");
    }
}

std::string_view channel_name(Channel c) { return kChannelNames[static_cast<std::size_t>(c)]; }

Channel parse_channel(std::string_view name) {
    for (std::size_t i = 0; i < kChannelNames.size(); ++i) {
        if (kChannelNames[i] == name) return static_cast<Channel>(i);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown channel '" + std::string(name) + "'");
}

void to_json(json& j, const CandidatePair& p) {
    j = json{{"suspect", p.suspect},
             {"target", p.target},
             {"lexical_distance", p.lexical_distance},
             {"cosine_full", p.cosine_full},
             {"cosine_namespace", optional_json(p.cosine_namespace)},
             {"cosine_identifier", optional_json(p.cosine_identifier)},
             {"composite", p.composite},
             {"category", std::string(category_name(p.category))},
             {"channel", std::string(channel_name(p.channel))},
             {"target_popularity", optional_json(p.target_popularity)}};
}

void from_json(const json& j, CandidatePair& p) {
    p.suspect = j.at("suspect").get<PackageRef>();
    p.target = j.at("target").get<PackageRef>();
    p.lexical_distance = j.at("lexical_distance").get<int>();
    p.cosine_full = j.at("cosine_full").get<double>();
    p.cosine_namespace = optional_from<double>(j, "cosine_namespace");
    p.cosine_identifier = optional_from<double>(j, "cosine_identifier");
    p.composite = j.at("composite").get<SimilarityBreakdown>();
    const auto cat = j.at("category").get<std::string>();
    const auto parsed = parse_category(cat);
    if (!parsed) throw Error(ErrorCode::InvalidArgument, "unknown category '" + cat + "'");
    p.category = *parsed;
    p.channel = parse_channel(j.at("channel").get<std::string>());
    p.target_popularity = optional_from<double>(j, "target_popularity");
}

void to_json(json& j, const AlertDraft& d) { j = json{{"suspect", d.suspect}, {"pairs", d.pairs}}; }

void from_json(const json& j, AlertDraft& d) {
    d.suspect = j.at("suspect").get<PackageRef>();
    d.pairs = j.at("pairs").get<std::vector<CandidatePair>>();
}

std::vector<CandidatePair> top_neighbors(std::vector<CandidatePair> pairs, std::size_t k) {
    std::stable_sort(pairs.begin(), pairs.end(), [](const CandidatePair& a, const CandidatePair& b) {
        if (a.composite.max_score != b.composite.max_score) return a.composite.max_score > b.composite.max_score;
        const double pa = a.target_popularity.value_or(-1);
        const double pb = b.target_popularity.value_or(-1);
        if (pa != pb) return pa > pb;
        return a.target.raw < b.target.raw;
    });
    if (pairs.size() > k) pairs.resize(k);
    return pairs;
}

std::vector<IndexItem> SearchContext::index_items(const std::vector<PackageRef>& trusted,
                                                  const EmbeddingModel& model) {
    std::vector<IndexItem> items;
    std::unordered_set<std::string> namespaces;
    std::unordered_set<std::string> identifiers;
    for (const auto& ref : trusted) {
        items.push_back({ref, NamePart::Full, embed(model, ref, NamePart::Full)});
        if (!ref.namespace_) continue;
        if (namespaces.insert(ref.part_text(NamePart::Namespace)).second) {
            items.push_back({ref, NamePart::Namespace, embed(model, ref, NamePart::Namespace)});
        }
        if (identifiers.insert(ref.part_text(NamePart::Identifier)).second) {
            items.push_back({ref, NamePart::Identifier, embed(model, ref, NamePart::Identifier)});
        }
    }
    return items;
}

void SearchContext::prepare(const MetadataStore& store, RegistryId registry,
                            std::shared_ptr<const EmbeddingModel> model, const TrustPolicy& policy) {
    if (!model) throw Error(ErrorCode::MissingInfrastructure, "no embedding model");
    registry_ = registry;
    policy_ = policy;
    model_ = std::move(model);
    trusted_ = trusted_set(store, registry, policy);
    trusted_meta_.reserve(trusted_.size());
    for (std::size_t i = 0; i < trusted_.size(); ++i) {
        const auto& ref = trusted_[i];
        trusted_meta_.push_back(*store.get_metadata(ref));
        keys_.push_back(ref.similarity_key());
        by_raw_.emplace(ref.raw, i);
        by_length_[keys_.back().size()].push_back(i);
        if (ref.namespace_) {
            by_namespace_[ref.part_text(NamePart::Namespace)].push_back(i);
            by_identifier_[ref.part_text(NamePart::Identifier)].push_back(i);
        }
    }
}

SearchContext SearchContext::build(const MetadataStore& store, RegistryId registry,
                                   std::shared_ptr<const EmbeddingModel> model, const TrustPolicy& policy,
                                   const AnnParams& ann) {
    SearchContext ctx;
    ctx.prepare(store, registry, std::move(model), policy);
    AnnIndex index(ann);
    for (const auto& item : index_items(ctx.trusted_, *ctx.model_)) index.add(item.ref, item.part, item.embedding);
    index.freeze();
    ctx.index_ = std::make_shared<const AnnIndex>(std::move(index));
    return ctx;
}

SearchContext SearchContext::with_index(const MetadataStore& store, RegistryId registry,
                                        std::shared_ptr<const EmbeddingModel> model, const TrustPolicy& policy,
                                        AnnIndex index) {
    SearchContext ctx;
    ctx.prepare(store, registry, std::move(model), policy);
    if (index.dimension() != 0 && index.dimension() != ctx.model_->dimension()) {
        throw Error(ErrorCode::DimensionMismatch, "index dimension differs from the embedding model");
    }
    if (index.size(NamePart::Full) != ctx.trusted_.size()) {
        throw Error(ErrorCode::IndexNotBuilt, "index is stale: it covers " +
                                                  std::to_string(index.size(NamePart::Full)) + " names but " +
                                                  std::to_string(ctx.trusted_.size()) + " are trusted");
    }
    ctx.index_ = std::make_shared<const AnnIndex>(std::move(index));
    return ctx;
}

std::vector<std::size_t> SearchContext::lexical_matches(const std::string& key, int max_distance) const {
    std::vector<std::size_t> out;
    const auto len = static_cast<std::ptrdiff_t>(key.size());
    const auto lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, len - max_distance));
    const auto hi = static_cast<std::size_t>(len + max_distance);
    for (auto it = by_length_.lower_bound(lo); it != by_length_.end() && it->first <= hi; ++it) {
        for (std::size_t i : it->second) {
            if (text::damerau_levenshtein_bounded(key, keys_[i], max_distance) <= max_distance) out.push_back(i);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<CandidatePair> SearchContext::find_candidates(const MetadataStore& store, const PackageRef& suspect,
                                                          const SearchThresholds& thresholds) const {
    if (!index_ || !model_) throw Error(ErrorCode::IndexNotBuilt, "search infrastructure is not built");
    if (suspect.registry != registry_) {
        throw Error(ErrorCode::IndexNotBuilt, "no index for registry '" +
                                                  std::string(registry_name(suspect.registry)) + "'");
    }
    const auto suspect_meta = store.get_metadata(suspect);
    if (!suspect_meta) throw Error(ErrorCode::UnknownSuspect, "no metadata for '" + suspect.raw + "'");
    const bool suspect_trusted = is_trusted(*suspect_meta, policy_).trusted;
    const AllowLists lists = store.allow_lists();

    auto eligible = [&](std::size_t t) {
        const auto& target = trusted_[t];
        if (target.raw == suspect.raw) return false;
        if (same_owner(suspect, target) || mirrored(suspect, target, lists)) return false;
        return !suspect_trusted || is_more_trusted(trusted_meta_[t], *suspect_meta, policy_);
    };

    std::map<std::size_t, unsigned> flagged;
    auto flag = [&](std::size_t t, unsigned bit) {
        if (eligible(t)) flagged[t] |= bit;
    };

    const std::string key = suspect.similarity_key();
    for (std::size_t t : lexical_matches(key, thresholds.levenshtein_max)) flag(t, kLexical);

    const auto full = embed(*model_, suspect, NamePart::Full);
    if (index_->size(NamePart::Full) > 0) {
        for (const auto& hit : index_->search(full, thresholds.ann_candidates, thresholds.ef_search, NamePart::Full)) {
            if (hit.similarity < thresholds.cosine_min) break;
            if (auto it = by_raw_.find(hit.ref.raw); it != by_raw_.end()) flag(it->second, kSemantic);
        }
    }

    std::optional<NameEmbedding> s_ns, s_id;
    std::string id_text;
    if (suspect.namespace_) {
        id_text = suspect.part_text(NamePart::Identifier);
        s_ns = embed(*model_, suspect, NamePart::Namespace);
        s_id = embed(*model_, suspect, NamePart::Identifier);

        auto hierarchical_match = [&](std::size_t t) {
            const auto& target = trusted_[t];
            if (owner_of(target) == owner_of(suspect)) return false;
            if (cosine(*s_ns, embed(*model_, target, NamePart::Namespace)) < thresholds.hier_namespace_cosine_min) {
                return false;
            }
            return target.part_text(NamePart::Identifier) == id_text ||
                   cosine(*s_id, embed(*model_, target, NamePart::Identifier)) >=
                       thresholds.hier_identifier_cosine_min;
        };
        std::unordered_set<std::size_t> considered;
        auto consider = [&](const std::vector<std::size_t>& members) {
            for (std::size_t t : members) {
                if (considered.insert(t).second && hierarchical_match(t)) flag(t, kHierarchical);
            }
        };

        // Namespace-first: look-alike organizations, then their packages.
        if (index_->size(NamePart::Namespace) > 0) {
            for (const auto& hit :
                 index_->search(*s_ns, thresholds.ann_candidates, thresholds.ef_search, NamePart::Namespace)) {
                if (hit.similarity < thresholds.hier_namespace_cosine_min) break;
                auto it = by_namespace_.find(hit.ref.part_text(NamePart::Namespace));
                if (it != by_namespace_.end()) consider(it->second);
            }
        }
        // Identifier-first: the same or a near-identical package name elsewhere.
        if (auto it = by_identifier_.find(id_text); it != by_identifier_.end()) consider(it->second);
        if (index_->size(NamePart::Identifier) > 0) {
            for (const auto& hit :
                 index_->search(*s_id, thresholds.ann_candidates, thresholds.ef_search, NamePart::Identifier)) {
                if (hit.similarity < thresholds.hier_identifier_cosine_min) break;
                auto it = by_identifier_.find(hit.ref.part_text(NamePart::Identifier));
                if (it != by_identifier_.end()) consider(it->second);
            }
        }
    }

    std::vector<CandidatePair> pairs;
    pairs.reserve(flagged.size());
    for (const auto& [t, mask] : flagged) {
        CandidatePair p = describe_pair(suspect, trusted_[t], model_.get());
        p.channel = channel_of(mask);
        p.target_popularity = popularity_score(trusted_meta_[t]);
        pairs.push_back(std::move(p));
    }
    std::sort(pairs.begin(), pairs.end(),
              [](const CandidatePair& a, const CandidatePair& b) { return a.target.raw < b.target.raw; });
    return pairs;
}

CandidatePair describe_pair(const PackageRef& suspect, const PackageRef& target, const EmbeddingModel* model) {
    const std::string key = suspect.similarity_key();
    const std::string target_key = target.similarity_key();
    CandidatePair p;
    p.suspect = suspect;
    p.target = target;
    p.lexical_distance = text::damerau_levenshtein(key, target_key);
    if (model) {
        p.cosine_full = cosine(embed(*model, suspect, NamePart::Full), embed(*model, target, NamePart::Full));
        if (suspect.namespace_ && target.namespace_) {
            p.cosine_namespace =
                cosine(embed(*model, suspect, NamePart::Namespace), embed(*model, target, NamePart::Namespace));
            p.cosine_identifier =
                cosine(embed(*model, suspect, NamePart::Identifier), embed(*model, target, NamePart::Identifier));
        }
    }
    p.composite = typosim(key, target_key);
    p.category = classify_attack_category(suspect, target, p.lexical_distance, p.cosine_namespace);
    p.channel = p.lexical_distance <= 2 ? Channel::Lexical : Channel::Semantic;
    return p;
}

std::optional<AlertDraft> SearchContext::scan_package(const MetadataStore& store, const PackageRef& suspect,
                                                      const SearchThresholds& thresholds) const {
    auto pairs = find_candidates(store, suspect, thresholds);
    if (pairs.empty()) return std::nullopt;
    return AlertDraft{suspect, top_neighbors(std::move(pairs), thresholds.top_k)};
}

}  // namespace squatwatch
