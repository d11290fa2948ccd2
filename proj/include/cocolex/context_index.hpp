#pragma once

/**
 * Hidden-state store for the copy mechanism.
 *
 * Each entry pairs the hidden state of a context position with the token that
 * follows it. Queries are exact top-k nearest-neighbor scans (no approximate
 * structures); similarities decay exponentially with distance. The index is
 * immutable after construction and may be queried from many threads.
 */

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cocolex/core.hpp"
#include "cocolex/errors.hpp"

namespace cocolex {

enum class Metric { euclidean, cosine };

struct IndexEntry {
    std::vector<float> key;   // hidden state, dimension fixed per index
    TokenId value = 0;        // next token after the source position
    std::uint32_t position = 0;  // source token position
};

struct Neighbor {
    IndexEntry entry;
    double distance = 0.0;    // non-negative, metric-dependent
    double similarity = 1.0;  // exp(-distance), in (0,1]
};

/// One (token-span, hidden-states) pair produced by prefilling a sliding
/// window of the document. `start` is the window's global token offset.
struct DocumentChunk {
    std::size_t start = 0;
    std::vector<TokenId> tokens;
    std::vector<std::vector<float>> states;
};

class ContextIndex {
public:
    /// Pair position i with tokens[i+1] for every position of the span except
    /// the last, which has no in-context successor and is dropped.
    /// Spans shorter than 2 tokens cannot produce an entry -> EmptyIndex.
    static ContextIndex build_from_prefix(std::span<const std::vector<float>> hidden_states,
                                          std::span<const TokenId> tokens,
                                          Metric metric = Metric::euclidean);

    /// Whole-document indexing over overlapping chunks of width `chunk_size`
    /// and stride `stride`. Every document position is represented exactly
    /// once, taken from the chunk in which its in-chunk offset is maximal;
    /// next-token pairing follows the global token sequence.
    static ContextIndex build_from_document_chunks(std::span<const DocumentChunk> chunks,
                                                   std::size_t chunk_size,
                                                   std::size_t stride,
                                                   Metric metric = Metric::euclidean);

    /// An index with no entries; queries on it return nothing.
    static ContextIndex empty(std::size_t dimension, Metric metric = Metric::euclidean);

    /// Concatenate per-document indexes. Each part's positions are shifted by
    /// its offset so they stay unique in the combined index.
    static ContextIndex merge(std::span<const ContextIndex> parts,
                              std::span<const std::size_t> position_offsets);

    /// Exact scan: min(k, size()) neighbors by ascending distance, ties broken
    /// by ascending source position.
    std::vector<Neighbor> query_top_k(std::span<const float> query, std::size_t k) const;

    std::size_t size() const { return entries_.size(); }
    std::size_t dimension() const { return dimension_; }
    Metric metric() const { return metric_; }
    const std::vector<IndexEntry>& entries() const { return entries_; }

    /// Flat little-endian snapshot: 8-byte magic "COCOIDX1", u32 dimension,
    /// u32 entry count, row-major f32 keys, u32 values, u32 positions.
    void save(const std::filesystem::path& path) const;
    static ContextIndex load(const std::filesystem::path& path, Metric metric = Metric::euclidean);

private:
    ContextIndex(std::vector<IndexEntry> entries, std::size_t dimension, Metric metric);

    std::vector<IndexEntry> entries_;
    std::size_t dimension_ = 0;
    Metric metric_ = Metric::euclidean;
};

/// Distance under `metric`: Euclidean L2, or 1 - cosine similarity.
double key_distance(std::span<const float> a, std::span<const float> b, Metric metric);

/// p_copy: mass of each vocabulary token proportional to the summed
/// similarities of the neighbors mapping to it; tokens outside the neighbor
/// set get exactly 0. Throws EmptyNeighbors on an empty list.
Distribution copy_distribution(std::span<const Neighbor> neighbors, std::uint32_t vocab_size);

}  // namespace cocolex
