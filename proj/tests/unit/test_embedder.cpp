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

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "squatwatch/embedder.hpp"
#include "squatwatch/errors.hpp"

using namespace squatwatch;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> bundled_corpus() {
    std::ifstream in(std::string(SQUATWATCH_DATA_DIR) + "/corpus/names_5k.txt");
    std::vector<std::string> names;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty()) names.push_back(line);
    }
    return names;
}

const EmbeddingModel& small_model() {
    static const EmbeddingModel model = [] {
        TrainingParams p;
        p.epochs = 5;
        p.seed = 42;
        return train(bundled_corpus(), p);
    }();
    return model;
}

fs::path temp_path(const std::string& name) {
    auto dir = fs::temp_directory_path() / "squatwatch_embedder_test";
    fs::create_directories(dir);
    return dir / name;
}

double norm(const NameEmbedding& e) {
    double s = 0;
    for (float x : e.vector) s += static_cast<double>(x) * x;
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("bundled corpus is present") {
    CHECK(bundled_corpus().size() == 5000);
}

TEST_CASE("training is deterministic for a fixed seed") {
    TrainingParams p;
    p.epochs = 5;
    p.seed = 42;
    auto again = train(bundled_corpus(), p);
    const auto& m = small_model();
    REQUIRE(again.vocabulary_size() == m.vocabulary_size());
    for (const auto& name : {"json", "image", "cfg", "jsonparserconfig", "zzqx"}) {
        CHECK(again.token_vector(name) == m.token_vector(name));
    }
    auto a = temp_path("det_a.bin"), b = temp_path("det_b.bin");
    m.save(a);
    again.save(b);
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
    CHECK(sa == sb);
}

TEST_CASE("held-out loss is logged per epoch and falls") {
    const auto& loss = small_model().training_meta().heldout_loss;
    REQUIRE(loss.size() == 5);
    CHECK(loss.back() < loss.front());
    for (std::size_t i = 1; i < loss.size(); ++i) {
        // small slack for sampling noise between consecutive epochs
        CHECK(loss[i] <= loss[i - 1] + 0.05);
    }
}

TEST_CASE("degenerate and invalid corpora") {
    std::vector<std::string> one = {"lodash"};
    auto m = train(one, TrainingParams{});
    CHECK(norm(m.embed_text("lodash")) == doctest::Approx(1.0).epsilon(1e-6));

    std::vector<std::string> none;
    CHECK_THROWS_AS(train(none, TrainingParams{}), Error);
    try {
        train(none, TrainingParams{});
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyCorpus);
    }
    std::vector<std::string> delimiters_only = {"--", "__"};
    CHECK_THROWS_AS(train(delimiters_only, TrainingParams{}), Error);

    TrainingParams bad;
    bad.dimension = 0;
    try {
        train(one, bad);
        FAIL("expected InvalidParams");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidParams);
    }
    bad = TrainingParams{};
    bad.max_n = 2;
    CHECK_THROWS_AS(train(one, bad), Error);
}

TEST_CASE("every embedding has unit norm, including unseen strings") {
    const auto& m = small_model();
    std::mt19937_64 rng(5);
    auto corpus = bundled_corpus();
    for (int i = 0; i < 300; ++i) {
        auto ref = parse_name(RegistryId::Pypi, corpus[rng() % corpus.size()]);
        CHECK(norm(embed(m, ref, NamePart::Full)) == doctest::Approx(1.0).epsilon(1e-6));
        std::string junk(1 + rng() % 20, 'a');
        for (auto& c : junk) c = "abcxyz0189"[rng() % 10];
        CHECK(norm(m.embed_text(junk)) == doctest::Approx(1.0).epsilon(1e-6));
    }
    CHECK(embed(m, parse_name(RegistryId::Pypi, "requests"), NamePart::Full).vector ==
          embed(m, parse_name(RegistryId::Pypi, "requests"), NamePart::Full).vector);
}

TEST_CASE("component embeddings use normalized component strings") {
    const auto& m = small_model();
    auto ref = parse_name(RegistryId::Huggingface, "google-bert/bert-base-uncased");
    CHECK(embed(m, ref, NamePart::Namespace).vector == m.embed_text("googlebert").vector);
    CHECK(embed(m, ref, NamePart::Identifier).vector == m.embed_text("bertbaseuncased").vector);
    CHECK(embed(m, ref, NamePart::Full).vector == m.embed_text("googlebertbertbaseuncased").vector);

    auto flat = parse_name(RegistryId::Pypi, "requests");
    try {
        embed(m, flat, NamePart::Namespace);
        FAIL("expected MissingComponent");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingComponent);
    }
    CHECK_THROWS_AS(embed(m, flat, NamePart::Identifier), Error);

    auto go = parse_name(RegistryId::Golang, "github.com/prometheus/prometheus");
    auto mirror = parse_name(RegistryId::Golang, "git.luolix.top/prometheus/prometheus");
    CHECK(embed(m, go, NamePart::Full).vector == embed(m, mirror, NamePart::Full).vector);
}

TEST_CASE("segmentation covers concatenated names with vocabulary tokens") {
    const auto& m = small_model();
    CHECK(m.segment("jsonparser") == std::vector<std::string>{"json", "parser"});
    CHECK(m.segment("zzqxv") == std::vector<std::string>{"zzqxv"});
    // Reordered tokens give the same pieces, hence the same vector.
    CHECK(cosine(m.embed_text("pythonnmap"), m.embed_text("nmappython")) == doctest::Approx(1.0));
}

TEST_CASE("cosine") {
    NameEmbedding a{{1.0f, 0.0f, 0.0f}}, b{{0.6f, 0.8f, 0.0f}};
    CHECK(cosine(a, b) == doctest::Approx(0.6));
    CHECK(cosine(a, a) == doctest::Approx(1.0));
    NameEmbedding neg{{-1.0f, 0.0f, 0.0f}};
    CHECK(cosine(a, neg) == doctest::Approx(-1.0));
    NameEmbedding two{{1.0f, 0.0f}};
    try {
        cosine(a, two);
        FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
    const auto& m = small_model();
    auto v = m.embed_text("lodash");
    auto minus = v;
    for (auto& x : minus.vector) x = -x;
    CHECK(cosine(v, v) == doctest::Approx(1.0));
    CHECK(cosine(v, minus) == doctest::Approx(-1.0));
}

TEST_CASE("a shared suffix lifts similarity above the random baseline") {
    auto corpus = bundled_corpus();
    std::mt19937_64 rng(8);
    for (int i = 0; i < 300; ++i) corpus.push_back(corpus[rng() % 5000].substr(0, 12) + "-js");
    corpus.push_back("lodash");
    corpus.push_back("lodash-js");
    TrainingParams p;
    p.epochs = 5;
    auto m = train(corpus, p);
    auto base = m.embed_text("lodash");
    double with_suffix = cosine(base, m.embed_text("lodashjs"));
    std::vector<double> random;
    for (int i = 0; i < 100; ++i) {
        random.push_back(cosine(base, embed(m, parse_name(RegistryId::Npm, corpus[rng() % 5000]), NamePart::Full)));
    }
    std::nth_element(random.begin(), random.begin() + 50, random.end());
    MESSAGE("lodash/lodash-js " << with_suffix << " vs random median " << random[50]);
    CHECK(with_suffix > random[50] + 0.1);
}

TEST_CASE("binary model round trip") {
    const auto& m = small_model();
    auto path = temp_path("model.bin");
    m.save(path);
    {
        std::ifstream in(path, std::ios::binary);
        char magic[7];
        in.read(magic, 7);
        CHECK(std::string(magic, 7) == "PKGVEC1");
    }
    auto loaded = EmbeddingModel::load(path);
    CHECK(loaded.dimension() == m.dimension());
    CHECK(loaded.bucket_count() == m.bucket_count());
    CHECK(loaded.training_meta().heldout_loss == m.training_meta().heldout_loss);
    for (const auto& probe : {"requests", "jsonparser", "lodahs", "x", "googlebertbertbaseuncased"}) {
        CHECK(loaded.embed_text(probe).vector == m.embed_text(probe).vector);
    }
}

TEST_CASE("damaged model files never load") {
    const auto& m = small_model();
    auto path = temp_path("model_full.bin");
    m.save(path);
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    auto cut = temp_path("model_cut.bin");
    for (std::size_t len : {std::size_t{0}, std::size_t{5}, std::size_t{40}, bytes.size() / 2, bytes.size() - 1}) {
        {
            std::ofstream out(cut, std::ios::binary | std::ios::trunc);
            out.write(bytes.data(), static_cast<std::streamsize>(len));
        }
        CAPTURE(len);
        try {
            EmbeddingModel::load(cut);
            FAIL("truncated model loaded");
        } catch (const Error& e) {
            CHECK((e.code() == ErrorCode::FormatVersionMismatch || e.code() == ErrorCode::IoFailure));
        }
    }
    std::string flipped = bytes;
    flipped[flipped.size() / 2] ^= 0x40;
    {
        std::ofstream out(cut, std::ios::binary | std::ios::trunc);
        out.write(flipped.data(), static_cast<std::streamsize>(flipped.size()));
    }
    CHECK_THROWS_AS(EmbeddingModel::load(cut), Error);
    CHECK_THROWS_AS(EmbeddingModel::load(temp_path("missing.bin")), Error);
}

TEST_CASE("plain-text vector dump") {
    const auto& m = small_model();
    auto path = temp_path("vectors.txt");
    m.export_text(path);
    std::ifstream in(path);
    std::size_t count = 0;
    int dim = 0;
    in >> count >> dim;
    CHECK(count == m.vocabulary_size());
    CHECK(dim == 100);
    auto imported = EmbeddingModel::import_text(path);
    CHECK(imported.vocabulary_size() == m.vocabulary_size());
    for (const auto& tok : {"json", "parser", "image"}) {
        auto a = m.token_vector(tok), b = imported.token_vector(tok);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-6));
        CHECK(cosine(m.embed_text(tok), imported.embed_text(tok)) == doctest::Approx(1.0).epsilon(1e-5));
    }
}
