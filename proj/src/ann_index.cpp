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

#include "squatwatch/ann_index.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <queue>

#include "binary_io.hpp"
#include "squatwatch/errors.hpp"

namespace squatwatch {

namespace {

constexpr char kMagic[8] = {'P', 'K', 'G', 'H', 'N', 'S', 'W', '1'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr int kMaxLevel = 16;

std::size_t part_slot(NamePart p) { return static_cast<std::size_t>(p); }

std::string item_key(const PackageRef& ref, NamePart part) {
    return std::string(registry_name(ref.registry)) + ":" + ref.raw + ":" + std::string(part_name(part));
}

double exact_dot(const float* a, const float* b, std::size_t n) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += static_cast<double>(a[i]) * b[i];
    return std::clamp(s, -1.0, 1.0);
}

bool hit_before(const NeighborHit& a, const NeighborHit& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    if (a.ref != b.ref) return a.ref < b.ref;
    return a.part < b.part;
}

void write_opt(detail::Writer& w, const std::optional<std::string>& s) {
    w.pod(static_cast<std::uint8_t>(s.has_value()));
    if (s) w.str(*s);
}

std::optional<std::string> read_opt(detail::Reader& r) {
    if (r.pod<std::uint8_t>() == 0) return std::nullopt;
    return r.str(1 << 16);
}

}  // namespace

void AnnParams::validate() const {
    if (M < 2) throw Error(ErrorCode::InvalidParams, "M must be >= 2");
    if (ef_construction < 1) throw Error(ErrorCode::InvalidParams, "ef_construction must be >= 1");
}

AnnIndex::AnnIndex(AnnParams params) : params_(params), rng_state_(params.seed) { params_.validate(); }

std::size_t AnnIndex::size(NamePart part) const { return graphs_[part_slot(part)].count; }

int AnnIndex::top_level(NamePart part) const { return graphs_[part_slot(part)].top_level; }

float AnnIndex::distance(const float* q, std::uint32_t node) const {
    const float* v = vec(node);
    float s = 0;
    for (int i = 0; i < dimension_; ++i) s += q[i] * v[i];
    return 1.0f - s;
}

int AnnIndex::random_level() {
    std::uint64_t z = (rng_state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= z >> 31;
    double u = (static_cast<double>(z >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    double ml = 1.0 / std::log(static_cast<double>(params_.M));
    return std::min(kMaxLevel, static_cast<int>(std::floor(-std::log(u) * ml)));
}

std::vector<AnnIndex::Candidate> AnnIndex::search_layer(const float* q, std::vector<std::uint32_t> entry_points,
                                                        std::size_t ef, int level) const {
    std::vector<char> visited(refs_.size(), 0);
    std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> frontier;  // nearest first
    std::priority_queue<Candidate> best;                                              // farthest first
    for (auto ep : entry_points) {
        if (visited[ep]) continue;
        visited[ep] = 1;
        Candidate c{distance(q, ep), ep};
        frontier.push(c);
        best.push(c);
        if (best.size() > ef) best.pop();
    }
    while (!frontier.empty()) {
        Candidate c = frontier.top();
        if (best.size() >= ef && best.top() < c) break;
        frontier.pop();
        for (auto nb : links_[c.node][level]) {
            if (visited[nb]) continue;
            visited[nb] = 1;
            Candidate n{distance(q, nb), nb};
            if (best.size() < ef || n < best.top()) {
                frontier.push(n);
                best.push(n);
                if (best.size() > ef) best.pop();
            }
        }
    }
    std::vector<Candidate> out;
    out.reserve(best.size());
    while (!best.empty()) {
        out.push_back(best.top());
        best.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
}

// Diversity heuristic: keep a candidate only if it is closer to the base than
// to every neighbour already kept.
std::vector<std::uint32_t> AnnIndex::select_neighbors(const float* base, std::vector<Candidate> candidates,
                                                      std::size_t m) const {
    (void)base;
    std::sort(candidates.begin(), candidates.end());
    std::vector<std::uint32_t> kept;
    for (const auto& c : candidates) {
        if (kept.size() >= m) break;
        bool diverse = true;
        for (auto r : kept) {
            if (distance(vec(c.node), r) < c.distance) {
                diverse = false;
                break;
            }
        }
        if (diverse) kept.push_back(c.node);
    }
    return kept;
}

void AnnIndex::add(const PackageRef& ref, NamePart part, const NameEmbedding& embedding) {
    if (frozen_) throw Error(ErrorCode::InvalidArgument, "index is frozen");
    if (embedding.vector.empty()) throw Error(ErrorCode::DimensionMismatch, "empty embedding");
    if (dimension_ == 0) dimension_ = static_cast<int>(embedding.dimension());
    if (static_cast<int>(embedding.dimension()) != dimension_) {
        throw Error(ErrorCode::DimensionMismatch, "expected dimension " + std::to_string(dimension_) + ", got " +
                                                      std::to_string(embedding.dimension()));
    }
    if (!keys_.insert(item_key(ref, part)).second) {
        throw Error(ErrorCode::InvalidArgument, "duplicate index entry " + item_key(ref, part));
    }

    const auto id = static_cast<std::uint32_t>(refs_.size());
    refs_.push_back(ref);
    parts_.push_back(part);
    vectors_.insert(vectors_.end(), embedding.vector.begin(), embedding.vector.end());
    const int level = random_level();
    levels_.push_back(level);
    links_.emplace_back(static_cast<std::size_t>(level) + 1);

    Graph& g = graphs_[part_slot(part)];
    ++g.count;
    if (!g.entry) {
        g.entry = id;
        g.top_level = level;
        return;
    }
    const float* q = vec(id);
    std::vector<std::uint32_t> ep = {*g.entry};
    for (int lc = g.top_level; lc > level; --lc) {
        auto w = search_layer(q, ep, 1, lc);
        ep = {w.front().node};
    }
    const auto M = static_cast<std::size_t>(params_.M);
    for (int lc = std::min(level, g.top_level); lc >= 0; --lc) {
        auto w = search_layer(q, ep, static_cast<std::size_t>(params_.ef_construction), lc);
        const std::size_t mmax = lc == 0 ? 2 * M : M;
        links_[id][lc] = select_neighbors(q, w, M);
        for (auto nb : links_[id][lc]) {
            auto& nl = links_[nb][lc];
            nl.push_back(id);
            if (nl.size() > mmax) {
                std::vector<Candidate> cands;
                cands.reserve(nl.size());
                for (auto x : nl) cands.push_back({distance(vec(nb), x), x});
                nl = select_neighbors(vec(nb), std::move(cands), mmax);
            }
        }
        ep.clear();
        for (const auto& c : w) ep.push_back(c.node);
    }
    if (level > g.top_level) {
        g.entry = id;
        g.top_level = level;
    }
}

std::vector<AnnIndex::Candidate> AnnIndex::search_graph(const Graph& g, const float* q, std::size_t ef) const {
    if (!g.entry) return {};
    std::vector<std::uint32_t> ep = {*g.entry};
    for (int lc = g.top_level; lc > 0; --lc) {
        auto w = search_layer(q, ep, 1, lc);
        ep = {w.front().node};
    }
    return search_layer(q, ep, ef, 0);
}

std::vector<NeighborHit> AnnIndex::search(const NameEmbedding& query, std::size_t k, std::size_t ef_search,
                                          std::optional<NamePart> part) const {
    if (refs_.empty()) throw Error(ErrorCode::EmptyIndex, "index has no entries");
    if (static_cast<int>(query.dimension()) != dimension_) {
        throw Error(ErrorCode::DimensionMismatch, "query dimension " + std::to_string(query.dimension()) +
                                                      " does not match index dimension " + std::to_string(dimension_));
    }
    if (k == 0) return {};
    const std::size_t ef = std::max(ef_search, k);
    std::vector<NeighborHit> hits;
    for (NamePart p : {NamePart::Full, NamePart::Namespace, NamePart::Identifier}) {
        if (part && *part != p) continue;
        for (const auto& c : search_graph(graphs_[part_slot(p)], query.vector.data(), ef)) {
            hits.push_back({refs_[c.node], p, exact_dot(query.vector.data(), vec(c.node), dimension_)});
        }
    }
    std::sort(hits.begin(), hits.end(), hit_before);
    if (hits.size() > k) hits.resize(k);
    return hits;
}

void AnnIndex::save(const std::filesystem::path& path) const {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + tmp.string());
        out.write(kMagic, sizeof(kMagic));
        detail::Writer w(out);
        w.pod(kFormatVersion);
        w.pod(static_cast<std::int32_t>(params_.M));
        w.pod(static_cast<std::int32_t>(params_.ef_construction));
        w.pod(params_.seed);
        w.pod(rng_state_);
        w.pod(static_cast<std::int32_t>(dimension_));
        w.pod(static_cast<std::uint8_t>(frozen_));
        w.pod(static_cast<std::uint32_t>(refs_.size()));
        for (std::size_t n = 0; n < refs_.size(); ++n) {
            const auto& r = refs_[n];
            w.pod(static_cast<std::uint8_t>(r.registry));
            w.str(r.raw);
            write_opt(w, r.domain);
            write_opt(w, r.namespace_);
            w.str(r.identifier);
            w.str(r.normalized);
            w.pod(static_cast<std::uint8_t>(parts_[n]));
            w.pod(static_cast<std::int32_t>(levels_[n]));
            w.raw(vec(static_cast<std::uint32_t>(n)), sizeof(float) * dimension_);
            for (const auto& level : links_[n]) {
                w.pod(static_cast<std::uint32_t>(level.size()));
                w.raw(level.data(), sizeof(std::uint32_t) * level.size());
            }
        }
        for (const auto& g : graphs_) {
            w.pod(static_cast<std::uint8_t>(g.entry.has_value()));
            w.pod(g.entry.value_or(0));
            w.pod(static_cast<std::int32_t>(g.top_level));
            w.pod(static_cast<std::uint64_t>(g.count));
        }
        std::uint64_t sum = w.checksum();
        out.write(reinterpret_cast<const char*>(&sum), sizeof(sum));
        if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot rename index into " + path.string() + ": " + ec.message());
}

AnnIndex AnnIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    char magic[sizeof(kMagic)] = {};
    in.read(magic, sizeof(magic));
    if (in.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw Error(ErrorCode::FormatVersionMismatch, path.string() + " is not a PKGHNSW1 index");
    }
    detail::Reader r(in, path.string());
    if (r.pod<std::uint32_t>() != kFormatVersion) {
        throw Error(ErrorCode::FormatVersionMismatch, "unsupported index format version in " + path.string());
    }
    AnnParams params;
    params.M = r.pod<std::int32_t>();
    params.ef_construction = r.pod<std::int32_t>();
    params.seed = r.pod<std::uint64_t>();
    if (params.M < 2 || params.ef_construction < 1) {
        throw Error(ErrorCode::FormatVersionMismatch, "corrupt index parameters in " + path.string());
    }
    AnnIndex idx(params);
    idx.rng_state_ = r.pod<std::uint64_t>();
    idx.dimension_ = r.pod<std::int32_t>();
    idx.frozen_ = r.pod<std::uint8_t>() != 0;
    auto n = r.pod<std::uint32_t>();
    if (idx.dimension_ < 0 || idx.dimension_ > 100000 || n > 100'000'000) {
        throw Error(ErrorCode::FormatVersionMismatch, "corrupt index header in " + path.string());
    }
    for (std::uint32_t i = 0; i < n; ++i) {
        PackageRef ref;
        auto reg = r.pod<std::uint8_t>();
        if (reg >= kAllRegistries.size()) throw Error(ErrorCode::FormatVersionMismatch, "corrupt registry id");
        ref.registry = static_cast<RegistryId>(reg);
        ref.raw = r.str(1 << 16);
        ref.domain = read_opt(r);
        ref.namespace_ = read_opt(r);
        ref.identifier = r.str(1 << 16);
        ref.normalized = r.str(1 << 16);
        auto part = r.pod<std::uint8_t>();
        auto level = r.pod<std::int32_t>();
        if (part > 2 || level < 0 || level > kMaxLevel) throw Error(ErrorCode::FormatVersionMismatch, "corrupt node");
        std::vector<float> v(static_cast<std::size_t>(idx.dimension_));
        r.raw(v.data(), sizeof(float) * v.size());
        std::vector<std::vector<std::uint32_t>> links(static_cast<std::size_t>(level) + 1);
        for (auto& l : links) {
            auto cnt = r.pod<std::uint32_t>();
            if (cnt > 4096) throw Error(ErrorCode::FormatVersionMismatch, "corrupt adjacency list");
            l.resize(cnt);
            r.raw(l.data(), sizeof(std::uint32_t) * cnt);
            for (auto x : l) {
                if (x >= n) throw Error(ErrorCode::FormatVersionMismatch, "corrupt neighbour id");
            }
        }
        idx.keys_.insert(item_key(ref, static_cast<NamePart>(part)));
        idx.refs_.push_back(std::move(ref));
        idx.parts_.push_back(static_cast<NamePart>(part));
        idx.vectors_.insert(idx.vectors_.end(), v.begin(), v.end());
        idx.levels_.push_back(level);
        idx.links_.push_back(std::move(links));
    }
    for (auto& g : idx.graphs_) {
        bool has = r.pod<std::uint8_t>() != 0;
        auto entry = r.pod<std::uint32_t>();
        g.top_level = r.pod<std::int32_t>();
        g.count = r.pod<std::uint64_t>();
        if (has) {
            if (entry >= n) throw Error(ErrorCode::FormatVersionMismatch, "corrupt entry point");
            g.entry = entry;
        }
    }
    const std::uint64_t expected = r.checksum();
    std::uint64_t stored = 0;
    in.read(reinterpret_cast<char*>(&stored), sizeof(stored));
    if (in.gcount() != sizeof(stored) || stored != expected) {
        throw Error(ErrorCode::FormatVersionMismatch, "truncated or corrupt index " + path.string());
    }
    return idx;
}

AnnIndex build_index(std::span<const IndexItem> items, const AnnParams& params) {
    if (items.empty()) throw Error(ErrorCode::EmptyInput, "no items to index");
    AnnIndex idx(params);
    for (const auto& it : items) idx.add(it.ref, it.part, it.embedding);
    idx.freeze();
    return idx;
}

std::vector<NeighborHit> exact_search(std::span<const IndexItem> items, const NameEmbedding& query, std::size_t k,
                                      std::optional<NamePart> part) {
    std::vector<NeighborHit> hits;
    if (k == 0) return hits;
    for (const auto& it : items) {
        if (part && it.part != *part) continue;
        if (it.embedding.dimension() != query.dimension()) {
            throw Error(ErrorCode::DimensionMismatch, "item and query dimensions differ");
        }
        hits.push_back({it.ref, it.part, exact_dot(query.vector.data(), it.embedding.vector.data(), query.dimension())});
    }
    std::sort(hits.begin(), hits.end(), hit_before);
    if (hits.size() > k) hits.resize(k);
    return hits;
}

}  // namespace squatwatch
