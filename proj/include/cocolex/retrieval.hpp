#pragma once

/**
 * Passage chunking and BM25 ranking over an instance's oracle documents.
 *
 * Two tokenizers on purpose: chunking splits on whitespace so passage text
 * survives verbatim, while scoring uses case-folded alphanumeric runs. Both
 * are independent of the model tokenizer.
 */

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cocolex/errors.hpp"

namespace cocolex {

struct Passage {
    std::string doc_id;
    std::uint32_t passage_id = 0;  // unique within (doc_id)
    std::string text;
    std::size_t token_count = 0;  // whitespace words
};

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Whitespace word split; preserves the words byte-for-byte.
std::vector<std::string> split_words(std::string_view text);

/// Case-folded alphanumeric runs, the unit of BM25 scoring and the metrics.
std::vector<std::string> scoring_tokens(std::string_view text);

/// Sliding windows of `size_tokens` words advancing by size - overlap; the
/// final shorter window is kept. De-overlapping the result reconstructs the
/// word sequence exactly.
std::vector<Passage> chunk_document(const std::string& doc_id, std::string_view text,
                                    std::size_t size_tokens, std::size_t overlap_tokens);

/// Okapi BM25 with IDF = ln((N - n + 0.5)/(n + 0.5) + 1), so scores stay
/// non-negative. Stable: ties keep the passage input order. Returns
/// min(top_k, N) passages. Throws EmptyQuery if the query has no scoring
/// tokens.
std::vector<std::pair<Passage, double>> bm25_rank(std::string_view query,
                                                  const std::vector<Passage>& passages,
                                                  std::size_t top_k,
                                                  const Bm25Params& params = {});

}  // namespace cocolex
