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

#include "squatwatch/embedder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "squatwatch/errors.hpp"
#include "squatwatch/text.hpp"
#include "binary_io.hpp"

namespace squatwatch {

namespace {

constexpr char kMagic[7] = {'P', 'K', 'G', 'V', 'E', 'C', '1'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::size_t kNegativeTableSize = 1'000'000;
constexpr std::size_t kMaxHeldoutPairs = 5000;
// Tokens shorter than three characters split a name only when they are common
// enough not to be noise ("js", "io", "v2").
constexpr std::int64_t kShortPieceMinCount = 5;

std::uint32_t fnv1a(std::string_view s) {
    std::uint32_t h = 2166136261u;
    for (unsigned char c : s) {
        h ^= c;
        h *= 16777619u;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Uniform in [-bound, bound).
float uniform_from(std::uint64_t& state, float bound) {
    double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
    return static_cast<float>((2.0 * u - 1.0) * bound);
}

double sigmoid(double x) {
    if (x > 30) return 1.0;
    if (x < -30) return 0.0;
    return 1.0 / (1.0 + std::exp(-x));
}

double dot(const float* a, const float* b, int n) {
    double s = 0;
    for (int i = 0; i < n; ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

void normalize_in_place(std::vector<float>& v) {
    double n = std::sqrt(dot(v.data(), v.data(), static_cast<int>(v.size())));
    if (n <= 0 || !std::isfinite(n)) return;
    for (auto& x : v) x = static_cast<float>(x / n);
}

}  // namespace

void TrainingParams::validate() const {
    if (dimension <= 0) throw Error(ErrorCode::InvalidParams, "dimension must be > 0");
    if (min_n <= 0 || max_n < min_n) throw Error(ErrorCode::InvalidParams, "invalid ngram range");
    if (bucket_count == 0) throw Error(ErrorCode::InvalidParams, "bucket_count must be > 0");
    if (epochs <= 0) throw Error(ErrorCode::InvalidParams, "epochs must be > 0");
    if (window <= 0) throw Error(ErrorCode::InvalidParams, "window must be > 0");
    if (negative_samples <= 0) throw Error(ErrorCode::InvalidParams, "negative_samples must be > 0");
    if (!(learning_rate > 0) || !std::isfinite(learning_rate))
        throw Error(ErrorCode::InvalidParams, "learning_rate must be > 0");
    if (!(heldout_fraction >= 0 && heldout_fraction < 1))
        throw Error(ErrorCode::InvalidParams, "heldout_fraction must be in [0, 1)");
}

// ---- EmbeddingModel ----

std::vector<std::uint32_t> EmbeddingModel::ngram_buckets(std::string_view token) const {
    std::vector<std::uint32_t> out;
    if (bucket_count_ == 0 || min_n_ <= 0) return out;
    std::string w;
    w.reserve(token.size() + 2);
    w += '<';
    w += token;
    w += '>';
    for (std::size_t i = 0; i < w.size(); ++i) {
        for (int n = min_n_; n <= max_n_ && i + n <= w.size(); ++n) {
            // The bare boundary-wrapped token is the token row's job.
            if (n == static_cast<int>(w.size())) continue;
            out.push_back(fnv1a(std::string_view(w).substr(i, n)) % bucket_count_);
        }
    }
    return out;
}

void EmbeddingModel::initial_row(std::uint32_t bucket, float* out) const {
    std::uint64_t state = seed_ ^ (static_cast<std::uint64_t>(bucket) * 0xD1B54A32D192ED03ull + 0x632BE59BD9B4E019ull);
    const float bound = 1.0f / static_cast<float>(dimension_);
    for (int i = 0; i < dimension_; ++i) out[i] = uniform_from(state, bound);
}

void EmbeddingModel::add_row(std::vector<float>& acc, std::uint32_t bucket) const {
    auto it = subword_slot_.find(bucket);
    if (it != subword_slot_.end()) {
        const float* row = &subword_rows_[static_cast<std::size_t>(it->second) * dimension_];
        for (int i = 0; i < dimension_; ++i) acc[i] += row[i];
        return;
    }
    std::vector<float> tmp(dimension_);
    initial_row(bucket, tmp.data());
    for (int i = 0; i < dimension_; ++i) acc[i] += tmp[i];
}

bool EmbeddingModel::has_token(std::string_view token) const {
    return token_index_.count(std::string(token)) > 0;
}

std::vector<float> EmbeddingModel::token_vector(std::string_view token) const {
    std::vector<float> acc(dimension_, 0.0f);
    std::size_t parts = 0;
    auto it = token_index_.find(std::string(token));
    if (it != token_index_.end()) {
        const float* row = &token_rows_[static_cast<std::size_t>(it->second) * dimension_];
        for (int i = 0; i < dimension_; ++i) acc[i] += row[i];
        ++parts;
    }
    for (auto b : ngram_buckets(token)) {
        add_row(acc, b);
        ++parts;
    }
    if (parts > 1) {
        for (auto& x : acc) x /= static_cast<float>(parts);
    }
    return acc;
}

std::vector<std::string> EmbeddingModel::segment(std::string_view s) const {
    const std::size_t n = s.size();
    if (n == 0) return {};
    // best[i]: fewest vocabulary pieces covering s[i..n); next[i]: end of the first piece.
    constexpr int kInf = std::numeric_limits<int>::max() / 2;
    std::vector<int> best(n + 1, kInf);
    std::vector<std::size_t> next(n + 1, 0);
    best[n] = 0;
    const std::size_t maxlen = std::max<std::size_t>(max_token_length_, 1);
    std::string probe;
    for (std::size_t i = n; i-- > 0;) {
        // Longest piece first so ties favour longer leading tokens.
        std::size_t hi = std::min(n, i + maxlen);
        for (std::size_t j = hi; j >= i + 1; --j) {
            if (best[j] >= kInf || best[j] + 1 >= best[i]) continue;
            probe.assign(s.substr(i, j - i));
            auto it = token_index_.find(probe);
            if (it != token_index_.end() && (probe.size() >= 3 || counts_[it->second] >= kShortPieceMinCount)) {
                best[i] = best[j] + 1;
                next[i] = j;
            }
        }
    }
    if (best[0] >= kInf) return {std::string(s)};
    std::vector<std::string> pieces;
    for (std::size_t i = 0; i < n; i = next[i]) pieces.emplace_back(s.substr(i, next[i] - i));
    return pieces;
}

std::vector<float> EmbeddingModel::centered_piece(std::string_view piece) const {
    auto v = token_vector(piece);
    normalize_in_place(v);
    if (!center_.empty()) {
        for (int i = 0; i < dimension_; ++i) v[i] -= center_[i];
        normalize_in_place(v);
    }
    return v;
}

void EmbeddingModel::compute_center() {
    center_.assign(dimension_, 0.0f);
    if (tokens_.empty()) return;
    std::vector<double> acc(dimension_, 0.0);
    for (const auto& tok : tokens_) {
        auto v = token_vector(tok);
        normalize_in_place(v);
        for (int i = 0; i < dimension_; ++i) acc[i] += v[i];
    }
    for (int i = 0; i < dimension_; ++i) center_[i] = static_cast<float>(acc[i] / static_cast<double>(tokens_.size()));
}

NameEmbedding EmbeddingModel::embed_text(std::string_view normalized) const {
    if (dimension_ <= 0) throw Error(ErrorCode::InvalidParams, "model has no dimension");
    std::vector<float> sum(dimension_, 0.0f);
    for (const auto& piece : segment(normalized)) {
        auto v = centered_piece(piece);
        for (int i = 0; i < dimension_; ++i) sum[i] += v[i];
    }
    return make_embedding(std::move(sum));
}

void EmbeddingModel::save(const std::filesystem::path& path) const {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + tmp.string());
        out.write(kMagic, sizeof(kMagic));
        detail::Writer w(out);
        w.pod(kFormatVersion);
        w.pod(static_cast<std::int32_t>(dimension_));
        w.pod(bucket_count_);
        w.pod(static_cast<std::int32_t>(min_n_));
        w.pod(static_cast<std::int32_t>(max_n_));
        w.pod(seed_);
        w.pod(static_cast<std::int32_t>(meta_.epochs));
        w.pod(static_cast<std::int32_t>(meta_.window));
        w.pod(static_cast<std::int32_t>(meta_.negative_samples));
        w.pod(meta_.seed);
        w.pod(meta_.learning_rate);
        w.pod(static_cast<std::uint32_t>(meta_.heldout_loss.size()));
        for (double l : meta_.heldout_loss) w.pod(l);
        w.pod(static_cast<std::uint32_t>(tokens_.size()));
        for (std::size_t t = 0; t < tokens_.size(); ++t) {
            w.str(tokens_[t]);
            w.pod(counts_[t]);
            w.raw(&token_rows_[t * dimension_], sizeof(float) * dimension_);
        }
        w.pod(static_cast<std::uint32_t>(subword_ids_.size()));
        for (std::size_t r = 0; r < subword_ids_.size(); ++r) {
            w.pod(subword_ids_[r]);
            w.raw(&subword_rows_[r * dimension_], sizeof(float) * dimension_);
        }
        std::uint64_t sum = w.checksum();
        out.write(reinterpret_cast<const char*>(&sum), sizeof(sum));
        if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot rename model into " + path.string() + ": " + ec.message());
}

EmbeddingModel EmbeddingModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    char magic[sizeof(kMagic)] = {};
    in.read(magic, sizeof(magic));
    if (in.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw Error(ErrorCode::FormatVersionMismatch, path.string() + " is not a PKGVEC1 model");
    }
    detail::Reader r(in, path.string());
    if (r.pod<std::uint32_t>() != kFormatVersion) {
        throw Error(ErrorCode::FormatVersionMismatch, "unsupported model format version in " + path.string());
    }
    EmbeddingModel m;
    m.dimension_ = r.pod<std::int32_t>();
    m.bucket_count_ = r.pod<std::uint32_t>();
    m.min_n_ = r.pod<std::int32_t>();
    m.max_n_ = r.pod<std::int32_t>();
    m.seed_ = r.pod<std::uint64_t>();
    if (m.dimension_ <= 0 || m.dimension_ > 100000) {
        throw Error(ErrorCode::FormatVersionMismatch, "corrupt dimension in " + path.string());
    }
    m.meta_.epochs = r.pod<std::int32_t>();
    m.meta_.window = r.pod<std::int32_t>();
    m.meta_.negative_samples = r.pod<std::int32_t>();
    m.meta_.seed = r.pod<std::uint64_t>();
    m.meta_.learning_rate = r.pod<double>();
    auto nloss = r.pod<std::uint32_t>();
    if (nloss > 1'000'000) throw Error(ErrorCode::FormatVersionMismatch, "corrupt header in " + path.string());
    m.meta_.heldout_loss.resize(nloss);
    for (auto& l : m.meta_.heldout_loss) l = r.pod<double>();
    auto ntok = r.pod<std::uint32_t>();
    if (ntok > 100'000'000) throw Error(ErrorCode::FormatVersionMismatch, "corrupt token count in " + path.string());
    m.tokens_.reserve(ntok);
    m.counts_.reserve(ntok);
    m.token_rows_.resize(static_cast<std::size_t>(ntok) * m.dimension_);
    for (std::uint32_t t = 0; t < ntok; ++t) {
        auto tok = r.str(1 << 16);
        auto count = r.pod<std::int64_t>();
        r.raw(&m.token_rows_[static_cast<std::size_t>(t) * m.dimension_], sizeof(float) * m.dimension_);
        m.token_index_.emplace(tok, static_cast<std::int32_t>(t));
        m.max_token_length_ = std::max(m.max_token_length_, tok.size());
        m.tokens_.push_back(std::move(tok));
        m.counts_.push_back(count);
    }
    auto nsub = r.pod<std::uint32_t>();
    if (nsub > m.bucket_count_) throw Error(ErrorCode::FormatVersionMismatch, "corrupt subword table in " + path.string());
    m.subword_ids_.resize(nsub);
    m.subword_rows_.resize(static_cast<std::size_t>(nsub) * m.dimension_);
    for (std::uint32_t s = 0; s < nsub; ++s) {
        m.subword_ids_[s] = r.pod<std::uint32_t>();
        r.raw(&m.subword_rows_[static_cast<std::size_t>(s) * m.dimension_], sizeof(float) * m.dimension_);
        m.subword_slot_.emplace(m.subword_ids_[s], s);
    }
    const std::uint64_t expected = r.checksum();
    std::uint64_t stored = 0;
    in.read(reinterpret_cast<char*>(&stored), sizeof(stored));
    if (in.gcount() != sizeof(stored)) throw Error(ErrorCode::FormatVersionMismatch, "truncated model file " + path.string());
    if (stored != expected) throw Error(ErrorCode::FormatVersionMismatch, "checksum mismatch in " + path.string());
    m.compute_center();
    return m;
}

void EmbeddingModel::export_text(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    out << tokens_.size() << ' ' << dimension_ << '\n';
    out.precision(9);
    for (const auto& tok : tokens_) {
        out << tok;
        for (float x : token_vector(tok)) out << ' ' << x;
        out << '\n';
    }
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

EmbeddingModel EmbeddingModel::import_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    std::size_t count = 0;
    int dim = 0;
    if (!(in >> count >> dim) || dim <= 0) {
        throw Error(ErrorCode::FormatVersionMismatch, "bad vector dump header in " + path.string());
    }
    EmbeddingModel m;
    m.dimension_ = dim;
    m.bucket_count_ = 0;
    m.min_n_ = 0;
    m.max_n_ = 0;
    for (std::size_t t = 0; t < count; ++t) {
        std::string tok;
        if (!(in >> tok)) throw Error(ErrorCode::FormatVersionMismatch, "truncated vector dump " + path.string());
        std::size_t base = m.token_rows_.size();
        m.token_rows_.resize(base + dim);
        for (int i = 0; i < dim; ++i) {
            if (!(in >> m.token_rows_[base + i])) {
                throw Error(ErrorCode::FormatVersionMismatch, "truncated vector dump " + path.string());
            }
        }
        m.token_index_.emplace(tok, static_cast<std::int32_t>(t));
        m.max_token_length_ = std::max(m.max_token_length_, tok.size());
        m.tokens_.push_back(std::move(tok));
        m.counts_.push_back(1);
    }
    m.compute_center();
    return m;
}

// ---- training ----

class SkipGramTrainer {
public:
    SkipGramTrainer(EmbeddingModel& m, const TrainingParams& p) : m_(m), p_(p), rng_(p.seed) {}

    void run(std::span<const std::string> corpus) {
        build_vocabulary(corpus);
        materialize_subwords();
        split_heldout();
        build_negative_table();
        output_.assign(m_.tokens_.size() * static_cast<std::size_t>(m_.dimension_), 0.0f);

        std::size_t train_tokens = 0;
        for (auto s : train_) train_tokens += sentences_[s].size();
        const double total = static_cast<double>(train_tokens) * p_.epochs;
        double processed = 0;

        std::vector<float> hidden(m_.dimension_), grad(m_.dimension_);
        for (int epoch = 0; epoch < p_.epochs; ++epoch) {
            std::vector<std::size_t> order = train_;
            for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng_() % i]);
            double epoch_loss = 0;
            std::size_t epoch_pairs = 0;
            for (auto s : order) {
                const auto& sent = sentences_[s];
                for (std::size_t w = 0; w < sent.size(); ++w) {
                    double progress = total > 0 ? processed / total : 1.0;
                    double lr = p_.learning_rate * std::max(1e-4, 1.0 - progress);
                    int b = 1 + static_cast<int>(rng_() % static_cast<std::uint64_t>(p_.window));
                    for (int c = -b; c <= b; ++c) {
                        if (c == 0) continue;
                        auto ci = static_cast<std::ptrdiff_t>(w) + c;
                        if (ci < 0 || ci >= static_cast<std::ptrdiff_t>(sent.size())) continue;
                        epoch_loss += update(sent[w], sent[ci], lr, hidden, grad);
                        ++epoch_pairs;
                    }
                    processed += 1;
                }
            }
            double held = heldout_loss();
            if (!heldout_pairs_.empty()) m_.meta_.heldout_loss.push_back(held);
            spdlog::debug("embedder epoch {}/{}: train loss {:.4f}, held-out loss {:.4f}", epoch + 1, p_.epochs,
                          epoch_pairs ? epoch_loss / epoch_pairs : 0.0, held);
        }
    }

private:
    void build_vocabulary(std::span<const std::string> corpus) {
        for (const auto& entry : corpus) {
            std::vector<std::int32_t> ids;
            for (auto& tok : text::split_tokens(entry)) {
                auto [it, fresh] = m_.token_index_.emplace(tok, static_cast<std::int32_t>(m_.tokens_.size()));
                if (fresh) {
                    m_.max_token_length_ = std::max(m_.max_token_length_, tok.size());
                    m_.tokens_.push_back(tok);
                    m_.counts_.push_back(0);
                }
                ++m_.counts_[it->second];
                ids.push_back(it->second);
            }
            if (!ids.empty()) sentences_.push_back(std::move(ids));
        }
        if (m_.tokens_.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no tokens");

        const std::size_t dim = m_.dimension_;
        m_.token_rows_.resize(m_.tokens_.size() * dim);
        std::uint64_t state = p_.seed ^ 0x5851F42D4C957F2Dull;
        const float bound = 1.0f / static_cast<float>(dim);
        for (auto& x : m_.token_rows_) x = uniform_from(state, bound);
    }

    void materialize_subwords() {
        std::vector<std::uint32_t> all;
        token_slots_.resize(m_.tokens_.size());
        std::vector<std::vector<std::uint32_t>> buckets(m_.tokens_.size());
        for (std::size_t t = 0; t < m_.tokens_.size(); ++t) {
            buckets[t] = m_.ngram_buckets(m_.tokens_[t]);
            all.insert(all.end(), buckets[t].begin(), buckets[t].end());
        }
        std::sort(all.begin(), all.end());
        all.erase(std::unique(all.begin(), all.end()), all.end());
        m_.subword_ids_ = all;
        m_.subword_rows_.resize(all.size() * static_cast<std::size_t>(m_.dimension_));
        for (std::size_t r = 0; r < all.size(); ++r) {
            m_.subword_slot_.emplace(all[r], static_cast<std::uint32_t>(r));
            m_.initial_row(all[r], &m_.subword_rows_[r * m_.dimension_]);
        }
        for (std::size_t t = 0; t < m_.tokens_.size(); ++t) {
            for (auto b : buckets[t]) token_slots_[t].push_back(m_.subword_slot_.at(b));
        }
    }

    void split_heldout() {
        for (std::size_t s = 0; s < sentences_.size(); ++s) {
            bool multi = sentences_[s].size() > 1;
            double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
            if (multi && u < p_.heldout_fraction && heldout_pairs_.size() < kMaxHeldoutPairs) {
                const auto& sent = sentences_[s];
                for (std::size_t i = 0; i < sent.size(); ++i) {
                    for (std::size_t j = 0; j < sent.size(); ++j) {
                        if (i == j || (i > j ? i - j : j - i) > static_cast<std::size_t>(p_.window)) continue;
                        heldout_pairs_.push_back({sent[i], sent[j], {}});
                    }
                }
            } else {
                train_.push_back(s);
            }
        }
    }

    void build_negative_table() {
        std::vector<double> weight(m_.tokens_.size(), 0.0);
        for (auto s : train_) {
            for (auto id : sentences_[s]) weight[id] += 1.0;
        }
        double z = 0;
        for (auto& w : weight) {
            w = std::pow(w, 0.75);
            z += w;
        }
        if (z <= 0) return;
        table_.reserve(kNegativeTableSize);
        for (std::size_t t = 0; t < weight.size(); ++t) {
            auto n = static_cast<std::size_t>(std::ceil(weight[t] / z * kNegativeTableSize));
            for (std::size_t k = 0; k < n; ++k) table_.push_back(static_cast<std::int32_t>(t));
        }
        for (std::size_t i = table_.size(); i > 1; --i) std::swap(table_[i - 1], table_[rng_() % i]);
        // Fixed negatives for the held-out pairs so epochs are comparable.
        for (auto& hp : heldout_pairs_) {
            for (int k = 0; k < p_.negative_samples; ++k) hp.negatives.push_back(draw_negative(hp.context));
        }
    }

    std::int32_t draw_negative(std::int32_t avoid) {
        if (table_.empty()) return avoid;
        for (int attempt = 0; attempt < 16; ++attempt) {
            auto n = table_[rng_() % table_.size()];
            if (n != avoid) return n;
        }
        return table_[rng_() % table_.size()];
    }

    void compute_hidden(std::int32_t token, std::vector<float>& hidden) const {
        const int dim = m_.dimension_;
        const float* row = &m_.token_rows_[static_cast<std::size_t>(token) * dim];
        std::copy(row, row + dim, hidden.begin());
        for (auto slot : token_slots_[token]) {
            const float* sr = &m_.subword_rows_[static_cast<std::size_t>(slot) * dim];
            for (int i = 0; i < dim; ++i) hidden[i] += sr[i];
        }
        const float inv = 1.0f / static_cast<float>(1 + token_slots_[token].size());
        for (auto& x : hidden) x *= inv;
    }

    double update(std::int32_t center, std::int32_t context, double lr, std::vector<float>& hidden,
                  std::vector<float>& grad) {
        const int dim = m_.dimension_;
        compute_hidden(center, hidden);
        std::fill(grad.begin(), grad.end(), 0.0f);
        double loss = 0;
        auto step = [&](std::int32_t target, double label) {
            float* out = &output_[static_cast<std::size_t>(target) * dim];
            double score = sigmoid(dot(hidden.data(), out, dim));
            loss -= label > 0 ? std::log(std::max(score, 1e-12)) : std::log(std::max(1.0 - score, 1e-12));
            auto g = static_cast<float>(lr * (label - score));
            for (int i = 0; i < dim; ++i) {
                grad[i] += g * out[i];
                out[i] += g * hidden[i];
            }
        };
        step(context, 1.0);
        for (int k = 0; k < p_.negative_samples; ++k) {
            auto n = draw_negative(context);
            if (n == context) continue;
            step(n, 0.0);
        }
        // Gradient of the mean flows equally into every contributing row.
        const float scale = 1.0f / static_cast<float>(1 + token_slots_[center].size());
        float* row = &m_.token_rows_[static_cast<std::size_t>(center) * dim];
        for (int i = 0; i < dim; ++i) row[i] += grad[i] * scale;
        for (auto slot : token_slots_[center]) {
            float* sr = &m_.subword_rows_[static_cast<std::size_t>(slot) * dim];
            for (int i = 0; i < dim; ++i) sr[i] += grad[i] * scale;
        }
        return loss;
    }

    double heldout_loss() {
        if (heldout_pairs_.empty()) return 0.0;
        const int dim = m_.dimension_;
        std::vector<float> hidden(dim);
        double total = 0;
        for (const auto& hp : heldout_pairs_) {
            compute_hidden(hp.center, hidden);
            double s = sigmoid(dot(hidden.data(), &output_[static_cast<std::size_t>(hp.context) * dim], dim));
            total -= std::log(std::max(s, 1e-12));
            for (auto n : hp.negatives) {
                if (n == hp.context) continue;
                double sn = sigmoid(dot(hidden.data(), &output_[static_cast<std::size_t>(n) * dim], dim));
                total -= std::log(std::max(1.0 - sn, 1e-12));
            }
        }
        return total / static_cast<double>(heldout_pairs_.size());
    }

    struct HeldoutPair {
        std::int32_t center;
        std::int32_t context;
        std::vector<std::int32_t> negatives;
    };

    EmbeddingModel& m_;
    const TrainingParams& p_;
    std::mt19937_64 rng_;
    std::vector<std::vector<std::int32_t>> sentences_;
    std::vector<std::size_t> train_;
    std::vector<HeldoutPair> heldout_pairs_;
    std::vector<std::vector<std::uint32_t>> token_slots_;
    std::vector<std::int32_t> table_;
    std::vector<float> output_;
};

EmbeddingModel train(std::span<const std::string> corpus, const TrainingParams& params) {
    params.validate();
    if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "training corpus is empty");
    EmbeddingModel m;
    m.dimension_ = params.dimension;
    m.min_n_ = params.min_n;
    m.max_n_ = params.max_n;
    m.bucket_count_ = params.bucket_count;
    m.seed_ = params.seed;
    m.meta_.epochs = params.epochs;
    m.meta_.window = params.window;
    m.meta_.negative_samples = params.negative_samples;
    m.meta_.seed = params.seed;
    m.meta_.learning_rate = params.learning_rate;
    SkipGramTrainer(m, params).run(corpus);
    m.compute_center();
    spdlog::info("trained embedder: {} tokens, {} subword rows, dim {}", m.vocabulary_size(),
                 m.stored_subword_rows(), m.dimension());
    return m;
}

std::string corpus_entry(const PackageRef& ref) {
    if (ref.registry == RegistryId::Golang && ref.domain) {
        std::string rest;
        if (ref.namespace_) rest = *ref.namespace_ + "/";
        rest += ref.identifier;
        return text::to_lower(rest);
    }
    return text::to_lower(ref.raw);
}

NameEmbedding embed(const EmbeddingModel& model, const PackageRef& ref, NamePart part) {
    return model.embed_text(ref.part_text(part));
}

NameEmbedding make_embedding(std::vector<float> v) {
    double n = std::sqrt(dot(v.data(), v.data(), static_cast<int>(v.size())));
    if (!(n > 0) || !std::isfinite(n)) {
        // Degenerate input: fall back to a fixed unit axis.
        std::fill(v.begin(), v.end(), 0.0f);
        if (!v.empty()) v[0] = 1.0f;
        return NameEmbedding{std::move(v)};
    }
    for (auto& x : v) x = static_cast<float>(x / n);
    return NameEmbedding{std::move(v)};
}

double cosine(const NameEmbedding& a, const NameEmbedding& b) {
    if (a.dimension() != b.dimension()) {
        throw Error(ErrorCode::DimensionMismatch, "embedding dimensions differ: " + std::to_string(a.dimension()) +
                                                       " vs " + std::to_string(b.dimension()));
    }
    double d = dot(a.vector.data(), b.vector.data(), static_cast<int>(a.dimension()));
    return std::clamp(d, -1.0, 1.0);
}

}  // namespace squatwatch
