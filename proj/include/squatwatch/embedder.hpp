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
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "squatwatch/registry.hpp"

namespace squatwatch {

struct TrainingParams {
    int dimension = 100;
    int min_n = 3;
    int max_n = 6;
    std::uint32_t bucket_count = 1u << 20;
    int epochs = 25;
    int window = 5;
    int negative_samples = 5;
    std::uint64_t seed = 42;
    double learning_rate = 0.05;
    /// Fraction of multi-token names whose context pairs are kept out of
    /// training and used to track loss.
    double heldout_fraction = 0.05;

    /// Throws InvalidParams.
    void validate() const;
};

struct TrainingMeta {
    int epochs = 0;
    int window = 0;
    int negative_samples = 0;
    std::uint64_t seed = 0;
    double learning_rate = 0.0;
    std::vector<double> heldout_loss;  // one entry per epoch
};

/// Unit-length name vector.
struct NameEmbedding {
    std::vector<float> vector;

    std::size_t dimension() const { return vector.size(); }
};

/// Subword embedding model: every vocabulary token owns a vector, and every
/// character n-gram (with "<" ">" boundary marks) hashes into one of
/// `bucket_count` subword rows. A token is represented by the mean of its own
/// row and its n-gram rows; unseen strings use their n-gram rows alone.
///
/// Only subword rows touched during training are stored. Every other row has
/// the deterministic initial value derived from (seed, bucket), so lookups are
/// identical to a fully materialized table.
class EmbeddingModel {
public:
    EmbeddingModel() = default;

    int dimension() const { return dimension_; }
    int min_n() const { return min_n_; }
    int max_n() const { return max_n_; }
    std::uint32_t bucket_count() const { return bucket_count_; }
    const TrainingMeta& training_meta() const { return meta_; }
    std::size_t vocabulary_size() const { return tokens_.size(); }
    std::size_t stored_subword_rows() const { return subword_ids_.size(); }

    bool has_token(std::string_view token) const;

    /// Mean of the token row (when in vocabulary) and its n-gram rows. Not
    /// normalized.
    std::vector<float> token_vector(std::string_view token) const;

    /// Embeds a normalized (delimiter-free, lowercase) string. The string is
    /// split into the fewest vocabulary tokens that cover it exactly (tokens
    /// under three characters only when common); each piece contributes its
    /// centered unit token vector. Strings without such a cover are embedded
    /// whole from their n-grams.
    NameEmbedding embed_text(std::string_view normalized) const;

    /// Vocabulary pieces chosen for `normalized`; a single piece when no cover
    /// exists.
    std::vector<std::string> segment(std::string_view normalized) const;

    /// Binary model file (magic "PKGVEC1"). Throws IoFailure.
    void save(const std::filesystem::path& path) const;

    /// Throws IoFailure or FormatVersionMismatch; never returns a partial model.
    static EmbeddingModel load(const std::filesystem::path& path);

    /// Plain-text dump: "count dim" then "token v1 ... vd" per line, one line
    /// per vocabulary token (its token_vector).
    void export_text(const std::filesystem::path& path) const;

    /// Builds a vocabulary-only model from a text dump (no subword rows).
    static EmbeddingModel import_text(const std::filesystem::path& path);

private:
    friend EmbeddingModel train(std::span<const std::string> corpus, const TrainingParams& params);
    friend class SkipGramTrainer;

    std::vector<std::uint32_t> ngram_buckets(std::string_view token) const;
    void add_row(std::vector<float>& acc, std::uint32_t bucket) const;
    void initial_row(std::uint32_t bucket, float* out) const;
    std::vector<float> centered_piece(std::string_view piece) const;
    void compute_center();

    int dimension_ = 0;
    int min_n_ = 3;
    int max_n_ = 6;
    std::uint32_t bucket_count_ = 0;
    std::uint64_t seed_ = 0;
    TrainingMeta meta_;

    std::vector<std::string> tokens_;
    std::vector<std::int64_t> counts_;
    std::unordered_map<std::string, std::int32_t> token_index_;
    std::vector<float> token_rows_;  // tokens_.size() * dimension_

    std::vector<std::uint32_t> subword_ids_;  // ascending bucket ids
    std::unordered_map<std::uint32_t, std::uint32_t> subword_slot_;
    std::vector<float> subword_rows_;  // subword_ids_.size() * dimension_

    std::size_t max_token_length_ = 0;
    // Mean unit token vector, derived from the stored rows. Subtracting it
    // removes the direction every trained token shares.
    std::vector<float> center_;
};

/// Text fed to training for a package: lowercase name, golang host dropped.
std::string corpus_entry(const PackageRef& ref);

/// Skip-gram with negative sampling over delimiter-split name tokens. Each
/// corpus entry is one "sentence". Deterministic for a given seed and corpus
/// order. Throws EmptyCorpus or InvalidParams.
EmbeddingModel train(std::span<const std::string> corpus, const TrainingParams& params);

/// Embedding of the whole name, its namespace, or its identifier. Throws
/// MissingComponent when the part is absent.
NameEmbedding embed(const EmbeddingModel& model, const PackageRef& ref, NamePart part);

/// Dot product of two unit vectors, clamped to [-1, 1]. Throws DimensionMismatch.
double cosine(const NameEmbedding& a, const NameEmbedding& b);

/// Returns `v` scaled to unit length.
NameEmbedding make_embedding(std::vector<float> v);

}  // namespace squatwatch
