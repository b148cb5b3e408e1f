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
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "squatwatch/ann_index.hpp"
#include "squatwatch/embedder.hpp"
#include "squatwatch/metadata.hpp"
#include "squatwatch/registry.hpp"
#include "squatwatch/similarity.hpp"
#include "squatwatch/trust.hpp"

namespace squatwatch {

struct SearchThresholds {
    int levenshtein_max = 2;
    double cosine_min = 0.93;
    double hier_identifier_cosine_min = 0.99;
    double hier_namespace_cosine_min = 0.90;
    std::size_t top_k = 2;
    // Neighbours pulled from the index per query before threshold filtering.
    std::size_t ann_candidates = 20;
    std::size_t ef_search = kDefaultEfSearch;

    /// Throws InvalidParams.
    void validate() const;
};

enum class Channel { Lexical, Semantic, Hierarchical, Multiple };

std::string_view channel_name(Channel c);
Channel parse_channel(std::string_view name);

struct CandidatePair {
    PackageRef suspect;
    PackageRef target;
    int lexical_distance = 0;
    double cosine_full = 0;
    std::optional<double> cosine_namespace;
    std::optional<double> cosine_identifier;
    SimilarityBreakdown composite;
    AttackCategory category = AttackCategory::OtherLexical;
    Channel channel = Channel::Lexical;
    std::optional<double> target_popularity;
};

void to_json(nlohmann::json& j, const CandidatePair& p);
void from_json(const nlohmann::json& j, CandidatePair& p);

/// A suspect with its best-ranked candidate pairs, before benignity review.
struct AlertDraft {
    PackageRef suspect;
    std::vector<CandidatePair> pairs;
};

void to_json(nlohmann::json& j, const AlertDraft& d);
void from_json(const nlohmann::json& j, AlertDraft& d);

/// Sorted by composite max score descending, then target popularity
/// descending, then target name; the first k are kept.
/// Pair fields for an arbitrary (suspect, target). Cosines stay zero or
/// absent without a model; the channel is lexical within two edits and
/// semantic otherwise.
CandidatePair describe_pair(const PackageRef& suspect, const PackageRef& target, const EmbeddingModel* model);

std::vector<CandidatePair> top_neighbors(std::vector<CandidatePair> pairs, std::size_t k);

/// Search state of one registry: its trusted set, length buckets for the
/// lexical channel and an HNSW index over full names, distinct namespaces and
/// distinct identifiers of trusted packages. Read-only once built, so scans
/// may run concurrently.
class SearchContext {
public:
    /// Snapshots the trusted set and metadata it needs from `store` and
    /// builds the index. Throws NoSnapshot.
    static SearchContext build(const MetadataStore& store, RegistryId registry,
                               std::shared_ptr<const EmbeddingModel> model, const TrustPolicy& policy,
                               const AnnParams& ann = {});

    /// Same, reusing a previously built index over the same trusted set.
    static SearchContext with_index(const MetadataStore& store, RegistryId registry,
                                    std::shared_ptr<const EmbeddingModel> model, const TrustPolicy& policy,
                                    AnnIndex index);

    RegistryId registry() const { return registry_; }
    const std::vector<PackageRef>& trusted() const { return trusted_; }
    const AnnIndex& index() const { return *index_; }
    const EmbeddingModel& model() const { return *model_; }

    /// Indices into trusted() whose similarity key is within `max_distance`
    /// Damerau-Levenshtein edits of `key`, ascending.
    std::vector<std::size_t> lexical_matches(const std::string& key, int max_distance) const;

    /// Flagged pairs for `suspect`, one per target, ordered by target name.
    /// Throws UnknownSuspect when the store has no metadata for it.
    std::vector<CandidatePair> find_candidates(const MetadataStore& store, const PackageRef& suspect,
                                               const SearchThresholds& thresholds) const;

    /// Top-k pairs, or nothing when no pair is flagged.
    std::optional<AlertDraft> scan_package(const MetadataStore& store, const PackageRef& suspect,
                                           const SearchThresholds& thresholds) const;

private:
    SearchContext() = default;
    void prepare(const MetadataStore& store, RegistryId registry, std::shared_ptr<const EmbeddingModel> model,
                 const TrustPolicy& policy);
    static std::vector<IndexItem> index_items(const std::vector<PackageRef>& trusted, const EmbeddingModel& model);

    RegistryId registry_ = RegistryId::Npm;
    TrustPolicy policy_;
    AllowLists allow_lists_;
    std::shared_ptr<const EmbeddingModel> model_;
    std::shared_ptr<const AnnIndex> index_;
    std::vector<PackageRef> trusted_;
    std::vector<PackageMetadata> trusted_meta_;
    std::vector<std::string> keys_;
    std::unordered_map<std::string, std::size_t> by_raw_;
    std::map<std::size_t, std::vector<std::size_t>> by_length_;
    std::unordered_map<std::string, std::vector<std::size_t>> by_namespace_;
    std::unordered_map<std::string, std::vector<std::size_t>> by_identifier_;
};

}  // namespace squatwatch
