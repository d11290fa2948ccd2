#include "cocolex/context_index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace cocolex {

namespace {

constexpr char kMagic[8] = {'C', 'O', 'C', 'O', 'I', 'D', 'X', '1'};

void write_u32(std::ostream& os, std::uint32_t v) {
    char buf[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                   static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(buf, 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char buf[4];
    is.read(reinterpret_cast<char*>(buf), 4);
    return static_cast<std::uint32_t>(buf[0]) | (static_cast<std::uint32_t>(buf[1]) << 8) |
           (static_cast<std::uint32_t>(buf[2]) << 16) | (static_cast<std::uint32_t>(buf[3]) << 24);
}

void write_f32(std::ostream& os, float v) { write_u32(os, std::bit_cast<std::uint32_t>(v)); }
float read_f32(std::istream& is) { return std::bit_cast<float>(read_u32(is)); }

}  // namespace

double key_distance(std::span<const float> a, std::span<const float> b, Metric metric) {
    if (a.size() != b.size()) throw ShapeError("key dimensions differ");
    if (metric == Metric::euclidean) {
        double acc = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
            acc += d * d;
        }
        return std::sqrt(acc);
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
        na += static_cast<double>(a[i]) * static_cast<double>(a[i]);
        nb += static_cast<double>(b[i]) * static_cast<double>(b[i]);
    }
    if (na == 0.0 || nb == 0.0) return 1.0;
    return std::max(0.0, 1.0 - dot / (std::sqrt(na) * std::sqrt(nb)));
}

ContextIndex::ContextIndex(std::vector<IndexEntry> entries, std::size_t dimension, Metric metric)
    : entries_(std::move(entries)), dimension_(dimension), metric_(metric) {}

ContextIndex ContextIndex::empty(std::size_t dimension, Metric metric) {
    return ContextIndex({}, dimension, metric);
}

ContextIndex ContextIndex::merge(std::span<const ContextIndex> parts,
                                 std::span<const std::size_t> position_offsets) {
    if (parts.empty()) throw EmptyIndex("no indexes to merge");
    if (parts.size() != position_offsets.size())
        throw ShapeError("one position offset required per merged index");
    const std::size_t dim = parts[0].dimension();
    const Metric metric = parts[0].metric();
    std::vector<IndexEntry> entries;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (parts[i].dimension() != dim || parts[i].metric() != metric)
            throw ShapeError("merged indexes must agree on dimension and metric");
        for (IndexEntry entry : parts[i].entries()) {
            entry.position += static_cast<std::uint32_t>(position_offsets[i]);
            entries.push_back(std::move(entry));
        }
    }
    return ContextIndex(std::move(entries), dim, metric);
}

ContextIndex ContextIndex::build_from_prefix(std::span<const std::vector<float>> hidden_states,
                                             std::span<const TokenId> tokens,
                                             Metric metric) {
    if (hidden_states.size() != tokens.size())
        throw ShapeError("hidden state count does not match token count");
    if (tokens.size() < 2) throw EmptyIndex("context span must contain at least 2 tokens");
    const std::size_t dim = hidden_states[0].size();
    std::vector<IndexEntry> entries;
    entries.reserve(tokens.size() - 1);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        if (hidden_states[i].size() != dim) throw ShapeError("inconsistent hidden state dimension");
        entries.push_back({hidden_states[i], tokens[i + 1], static_cast<std::uint32_t>(i)});
    }
    return ContextIndex(std::move(entries), dim, metric);
}

ContextIndex ContextIndex::build_from_document_chunks(std::span<const DocumentChunk> chunks,
                                                      std::size_t chunk_size,
                                                      std::size_t stride,
                                                      Metric metric) {
    if (chunk_size == 0 || stride == 0 || stride > chunk_size)
        throw ShapeError("require 0 < stride <= chunk_size");
    if (chunks.empty()) throw EmptyIndex("no chunks supplied");

    const std::size_t doc_len = chunks.back().start + chunks.back().tokens.size();
    std::vector<TokenId> global(doc_len);
    std::vector<bool> covered(doc_len, false);
    const std::size_t dim = chunks[0].states.empty() ? 0 : chunks[0].states[0].size();

    for (std::size_t j = 0; j < chunks.size(); ++j) {
        const DocumentChunk& ch = chunks[j];
        if (ch.start != j * stride) throw ShapeError("chunk starts must advance by the stride");
        const std::size_t expect = std::min(chunk_size, doc_len - ch.start);
        if (ch.tokens.size() != expect || ch.tokens.empty())
            throw ShapeError("chunk width inconsistent with sliding-window geometry");
        if (ch.states.size() != ch.tokens.size())
            throw ShapeError("per-chunk states must align with per-chunk tokens");
        for (std::size_t o = 0; o < ch.tokens.size(); ++o) {
            if (ch.states[o].size() != dim) throw ShapeError("inconsistent hidden state dimension");
            const std::size_t p = ch.start + o;
            if (covered[p] && global[p] != ch.tokens[o])
                throw ShapeError("overlapping chunks disagree on token at position " + std::to_string(p));
            global[p] = ch.tokens[o];
            covered[p] = true;
        }
    }
    if (std::find(covered.begin(), covered.end(), false) != covered.end())
        throw ShapeError("sliding window leaves uncovered positions");
    if (doc_len < 2) throw EmptyIndex("document must contain at least 2 tokens");

    // Each position keyed from the chunk giving it the most autoregressive
    // context, i.e. the earliest chunk containing it (maximal in-chunk offset).
    std::vector<IndexEntry> entries;
    entries.reserve(doc_len - 1);
    std::size_t j = 0;
    for (std::size_t p = 0; p + 1 < doc_len; ++p) {
        while (chunks[j].start + chunks[j].tokens.size() <= p) ++j;
        entries.push_back({chunks[j].states[p - chunks[j].start], global[p + 1],
                           static_cast<std::uint32_t>(p)});
    }
    return ContextIndex(std::move(entries), dim, metric);
}

std::vector<Neighbor> ContextIndex::query_top_k(std::span<const float> query, std::size_t k) const {
    if (query.size() != dimension_) throw ShapeError("query dimension does not match index");
    const std::size_t take = std::min(k, entries_.size());
    if (take == 0) return {};

    struct Scored {
        double distance;
        std::uint32_t position;
        std::size_t idx;
    };
    std::vector<Scored> scored;
    scored.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i)
        scored.push_back({key_distance(query, entries_[i].key, metric_), entries_[i].position, i});

    auto better = [](const Scored& a, const Scored& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.position < b.position;
    };
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                      scored.end(), better);

    std::vector<Neighbor> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i)
        out.push_back({entries_[scored[i].idx], scored[i].distance, std::exp(-scored[i].distance)});
    return out;
}

Distribution copy_distribution(std::span<const Neighbor> neighbors, std::uint32_t vocab_size) {
    if (neighbors.empty()) throw EmptyNeighbors("cannot build a copy distribution from zero neighbors");
    std::vector<double> probs(vocab_size, 0.0);
    double total = 0.0;
    for (const Neighbor& n : neighbors) {
        if (n.entry.value >= vocab_size) throw InvalidToken("neighbor token outside vocabulary");
        probs[n.entry.value] += n.similarity;
        total += n.similarity;
    }
    for (double& p : probs) p /= total;
    return Distribution(std::move(probs));
}

void ContextIndex::save(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    os.write(kMagic, sizeof(kMagic));
    write_u32(os, static_cast<std::uint32_t>(dimension_));
    write_u32(os, static_cast<std::uint32_t>(entries_.size()));
    for (const IndexEntry& e : entries_)
        for (float v : e.key) write_f32(os, v);
    for (const IndexEntry& e : entries_) write_u32(os, e.value);
    for (const IndexEntry& e : entries_) write_u32(os, e.position);
    if (!os) throw Error("write failure on " + path.string());
}

ContextIndex ContextIndex::load(const std::filesystem::path& path, Metric metric) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path.string());
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw Error(path.string() + " is not a COCOIDX1 snapshot");
    const std::uint32_t dim = read_u32(is);
    const std::uint32_t count = read_u32(is);
    std::vector<IndexEntry> entries(count);
    for (IndexEntry& e : entries) {
        e.key.resize(dim);
        for (float& v : e.key) v = read_f32(is);
    }
    for (IndexEntry& e : entries) e.value = read_u32(is);
    for (IndexEntry& e : entries) e.position = read_u32(is);
    if (!is) throw Error("truncated snapshot: " + path.string());
    return ContextIndex(std::move(entries), dim, metric);
}

}  // namespace cocolex
