#include "cocolex/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace cocolex {

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) words.emplace_back(text.substr(start, i - start));
    }
    return words;
}

std::vector<std::string> scoring_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::vector<Passage> chunk_document(const std::string& doc_id, std::string_view text,
                                    std::size_t size_tokens, std::size_t overlap_tokens) {
    if (size_tokens == 0) throw InvalidChunking("chunk size must be positive");
    if (overlap_tokens >= size_tokens) throw InvalidChunking("overlap must be smaller than the chunk size");

    const std::vector<std::string> words = split_words(text);
    std::vector<Passage> passages;
    const std::size_t stride = size_tokens - overlap_tokens;
    for (std::size_t start = 0, id = 0; start < words.size(); start += stride, ++id) {
        const std::size_t end = std::min(start + size_tokens, words.size());
        std::string joined;
        for (std::size_t i = start; i < end; ++i) {
            if (i > start) joined += ' ';
            joined += words[i];
        }
        passages.push_back({doc_id, static_cast<std::uint32_t>(id), std::move(joined), end - start});
    }
    return passages;
}

std::vector<std::pair<Passage, double>> bm25_rank(std::string_view query,
                                                  const std::vector<Passage>& passages,
                                                  std::size_t top_k,
                                                  const Bm25Params& params) {
    if (!(params.k1 > 0.0)) throw InvalidConfig("bm25 k1 must be positive");
    if (!(params.b >= 0.0 && params.b <= 1.0)) throw InvalidConfig("bm25 b must lie in [0,1]");
    const std::vector<std::string> query_terms = scoring_tokens(query);
    if (query_terms.empty()) throw EmptyQuery("query has no scoring tokens");
    if (passages.empty()) return {};

    const std::size_t n_passages = passages.size();
    std::vector<std::unordered_map<std::string, std::size_t>> term_freq(n_passages);
    std::vector<std::size_t> lengths(n_passages);
    double total_len = 0.0;
    for (std::size_t i = 0; i < n_passages; ++i) {
        const auto tokens = scoring_tokens(passages[i].text);
        lengths[i] = tokens.size();
        total_len += static_cast<double>(tokens.size());
        for (const auto& t : tokens) ++term_freq[i][t];
    }
    const double avg_len = total_len / static_cast<double>(n_passages);

    // Deduplicate query terms; repeating a term in the query does not change
    // the per-passage containment statistics and Okapi scores each term once.
    std::vector<std::string> unique_terms;
    std::unordered_set<std::string> seen_terms;
    for (const auto& t : query_terms)
        if (seen_terms.insert(t).second) unique_terms.push_back(t);

    std::unordered_map<std::string, double> idf_of;
    for (const auto& term : unique_terms) {
        std::size_t containing = 0;
        for (std::size_t j = 0; j < n_passages; ++j)
            if (term_freq[j].count(term)) ++containing;
        idf_of[term] = std::log((static_cast<double>(n_passages - containing) + 0.5) /
                                    (static_cast<double>(containing) + 0.5) +
                                1.0);
    }

    std::vector<std::pair<Passage, double>> scored;
    scored.reserve(n_passages);
    for (std::size_t i = 0; i < n_passages; ++i) {
        double score = 0.0;
        for (const auto& term : unique_terms) {
            const auto it = term_freq[i].find(term);
            if (it == term_freq[i].end()) continue;
            const double tf = static_cast<double>(it->second);
            const double idf = idf_of[term];
            const double norm = params.k1 * (1.0 - params.b +
                                             params.b * static_cast<double>(lengths[i]) / avg_len);
            score += idf * tf * (params.k1 + 1.0) / (tf + norm);
        }
        scored.emplace_back(passages[i], score);
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (scored.size() > top_k) scored.resize(top_k);
    return scored;
}

}  // namespace cocolex
