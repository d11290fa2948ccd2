#pragma once

/**
 * Vocabulary, token, and probability primitives shared by every decoding
 * strategy: softmax, entropy, Jensen-Shannon divergence, repetition penalty.
 *
 * All functions here are pure and safe to call from multiple threads.
 */

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cocolex/errors.hpp"

namespace cocolex {

using TokenId = std::uint32_t;

/// Dense token-id <-> surface-string bijection. Ids are [0, size).
class Vocabulary {
public:
    /// Every id is one byte; token 0 doubles as the end-of-sequence marker.
    static Vocabulary byte_level();

    explicit Vocabulary(std::vector<std::string> tokens);

    std::uint32_t size() const { return static_cast<std::uint32_t>(id_to_string_.size()); }
    const std::string& token_string(TokenId id) const;
    std::optional<TokenId> token_id(const std::string& surface) const;
    std::string detokenize(std::span<const TokenId> tokens) const;

private:
    std::vector<std::string> id_to_string_;
    std::unordered_map<std::string, TokenId> string_to_id_;
};

/// Byte-level encoding used by the reference model and the harness.
std::vector<TokenId> byte_encode(std::string_view text);

/// Raw (unbounded) scores over a vocabulary, in logit units.
struct LogitVector {
    std::vector<double> values;

    LogitVector() = default;
    explicit LogitVector(std::vector<double> v) : values(std::move(v)) {}
    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
};

/// Normalized probability vector; the unit of all interpolation.
struct Distribution {
    std::vector<double> probs;

    Distribution() = default;
    explicit Distribution(std::vector<double> p) : probs(std::move(p)) {}
    std::size_t size() const { return probs.size(); }
    double& operator[](std::size_t i) { return probs[i]; }
    double operator[](std::size_t i) const { return probs[i]; }

    /// Entries in [0,1] summing to 1 within `tol`.
    bool is_normalized(double tol = 1e-9) const;
};

/// Numerically stable softmax (max-subtraction). Throws InvalidLogits on
/// non-finite input.
Distribution softmax(const LogitVector& logits);

/// Shannon entropy in nats, with 0*log(0) = 0. Result lies in [0, log|V|].
double entropy(const Distribution& d);

/// Jensen-Shannon divergence with base-2 logarithms, so the range is exactly
/// [0,1]. Symmetric; 0 iff p == q. Throws VocabMismatch on length mismatch.
double jsd(const Distribution& p, const Distribution& q);

/// CTRL-style repetition penalty: for each distinct token in `seen`, a
/// positive logit is divided by `penalty` and a non-positive one multiplied
/// by it. Other entries are untouched. Requires penalty >= 1.
LogitVector apply_repetition_penalty(const LogitVector& logits,
                                     std::span<const TokenId> seen,
                                     double penalty);

/// Index of the largest probability; ties resolved to the lowest token id.
TokenId argmax(const Distribution& d);

}  // namespace cocolex
