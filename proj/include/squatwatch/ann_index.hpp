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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "squatwatch/embedder.hpp"
#include "squatwatch/registry.hpp"

namespace squatwatch {

struct AnnParams {
    int M = 16;
    int ef_construction = 200;
    std::uint64_t seed = 42;

    /// Throws InvalidParams.
    void validate() const;
};

inline constexpr std::size_t kDefaultEfSearch = 100;

struct IndexItem {
    PackageRef ref;
    NamePart part = NamePart::Full;
    NameEmbedding embedding;
};

struct NeighborHit {
    PackageRef ref;
    NamePart part = NamePart::Full;
    double similarity = 0;
};

/// HNSW graph over unit vectors with cosine distance. Entries carry a part
/// tag; each part has its own layered graph inside the index, so part-filtered
/// queries never wander through entries of another part.
class AnnIndex {
public:
    explicit AnnIndex(AnnParams params = {});

    /// Throws DimensionMismatch, or InvalidArgument after freeze() or for a
    /// repeated (ref, part).
    void add(const PackageRef& ref, NamePart part, const NameEmbedding& embedding);
    void freeze() { frozen_ = true; }
    bool frozen() const { return frozen_; }

    std::size_t size() const { return refs_.size(); }
    std::size_t size(NamePart part) const;
    int dimension() const { return dimension_; }
    const AnnParams& params() const { return params_; }

    /// Up to k hits by descending cosine (ties by name), restricted to `part`
    /// when given. Similarities are exact dot products. Throws EmptyIndex.
    std::vector<NeighborHit> search(const NameEmbedding& query, std::size_t k,
                                    std::size_t ef_search = kDefaultEfSearch,
                                    std::optional<NamePart> part = std::nullopt) const;

    // Graph introspection, used by invariant checks.
    int level_of(std::uint32_t node) const { return levels_[node]; }
    int top_level(NamePart part) const;
    const std::vector<std::uint32_t>& links(std::uint32_t node, int level) const { return links_[node][level]; }
    const PackageRef& ref(std::uint32_t node) const { return refs_[node]; }
    NamePart part(std::uint32_t node) const { return parts_[node]; }

    /// Binary file (magic "PKGHNSW1"). Throws IoFailure.
    void save(const std::filesystem::path& path) const;
    /// Throws IoFailure or FormatVersionMismatch.
    static AnnIndex load(const std::filesystem::path& path);

private:
    struct Candidate {
        float distance;
        std::uint32_t node;
        bool operator<(const Candidate& o) const {
            return distance != o.distance ? distance < o.distance : node < o.node;
        }
        bool operator>(const Candidate& o) const { return o < *this; }
    };
    struct Graph {
        std::optional<std::uint32_t> entry;
        int top_level = -1;
        std::size_t count = 0;
    };

    const float* vec(std::uint32_t node) const { return &vectors_[static_cast<std::size_t>(node) * dimension_]; }
    float distance(const float* q, std::uint32_t node) const;
    std::vector<Candidate> search_layer(const float* q, std::vector<std::uint32_t> entry_points, std::size_t ef,
                                        int level) const;
    std::vector<std::uint32_t> select_neighbors(const float* base, std::vector<Candidate> candidates,
                                                std::size_t m) const;
    std::vector<Candidate> search_graph(const Graph& g, const float* q, std::size_t ef) const;
    int random_level();

    AnnParams params_;
    int dimension_ = 0;
    bool frozen_ = false;
    std::uint64_t rng_state_;
    std::vector<PackageRef> refs_;
    std::vector<NamePart> parts_;
    std::vector<float> vectors_;
    std::vector<int> levels_;
    std::vector<std::vector<std::vector<std::uint32_t>>> links_;
    std::array<Graph, 3> graphs_;
    std::unordered_set<std::string> keys_;  // "registry:raw:part"
};

/// Builds and freezes an index. Throws EmptyInput or DimensionMismatch.
AnnIndex build_index(std::span<const IndexItem> items, const AnnParams& params = {});

/// Exact top-k by cosine over `items`; ties by name ascending.
std::vector<NeighborHit> exact_search(std::span<const IndexItem> items, const NameEmbedding& query, std::size_t k,
                                      std::optional<NamePart> part = std::nullopt);

}  // namespace squatwatch
