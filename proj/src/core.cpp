#include "cocolex/core.hpp"

#include <algorithm>
#include <cmath>

namespace cocolex {

Vocabulary Vocabulary::byte_level() {
    std::vector<std::string> tokens(256);
    for (int b = 0; b < 256; ++b) tokens[b] = std::string(1, static_cast<char>(b));
    return Vocabulary(std::move(tokens));
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : id_to_string_(std::move(tokens)) {
    if (id_to_string_.size() < 2) throw InvalidConfig("vocabulary must have at least 2 tokens");
    string_to_id_.reserve(id_to_string_.size());
    for (TokenId id = 0; id < id_to_string_.size(); ++id) {
        auto [it, inserted] = string_to_id_.emplace(id_to_string_[id], id);
        if (!inserted) throw InvalidConfig("vocabulary surface strings must be unique");
    }
}

const std::string& Vocabulary::token_string(TokenId id) const {
    if (id >= id_to_string_.size()) throw InvalidToken("token id " + std::to_string(id) + " out of range");
    return id_to_string_[id];
}

std::optional<TokenId> Vocabulary::token_id(const std::string& surface) const {
    auto it = string_to_id_.find(surface);
    if (it == string_to_id_.end()) return std::nullopt;
    return it->second;
}

std::string Vocabulary::detokenize(std::span<const TokenId> tokens) const {
    std::string out;
    for (TokenId t : tokens) out += token_string(t);
    return out;
}

std::vector<TokenId> byte_encode(std::string_view text) {
    std::vector<TokenId> out;
    out.reserve(text.size());
    for (unsigned char c : text) out.push_back(static_cast<TokenId>(c));
    return out;
}

bool Distribution::is_normalized(double tol) const {
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) return false;
        sum += p;
    }
    return std::abs(sum - 1.0) <= tol;
}

Distribution softmax(const LogitVector& logits) {
    if (logits.size() == 0) throw InvalidLogits("empty logit vector");
    double max_logit = logits[0];
    for (double v : logits.values) {
        if (!std::isfinite(v)) throw InvalidLogits("non-finite logit");
        max_logit = std::max(max_logit, v);
    }
    std::vector<double> probs(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - max_logit);
        sum += probs[i];
    }
    for (double& p : probs) p /= sum;
    return Distribution(std::move(probs));
}

double entropy(const Distribution& d) {
    double h = 0.0;
    for (double p : d.probs) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return std::max(h, 0.0);
}

double jsd(const Distribution& p, const Distribution& q) {
    if (p.size() != q.size()) throw VocabMismatch("distribution lengths differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0.0) acc += 0.5 * p[i] * std::log2(p[i] / m);
        if (q[i] > 0.0) acc += 0.5 * q[i] * std::log2(q[i] / m);
    }
    return std::clamp(acc, 0.0, 1.0);
}

LogitVector apply_repetition_penalty(const LogitVector& logits,
                                     std::span<const TokenId> seen,
                                     double penalty) {
    if (!(penalty >= 1.0)) throw InvalidPenalty("repetition penalty must be >= 1");
    LogitVector out = logits;
    std::vector<bool> done(logits.size(), false);  // penalize each token once
    for (TokenId t : seen) {
        if (t >= logits.size()) throw InvalidToken("seen token out of vocabulary");
        if (done[t]) continue;
        done[t] = true;
        out[t] = out[t] > 0.0 ? out[t] / penalty : out[t] * penalty;
    }
    return out;
}

TokenId argmax(const Distribution& d) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < d.size(); ++i) {
        if (d[i] > d[best]) best = i;
    }
    return static_cast<TokenId>(best);
}

}  // namespace cocolex
