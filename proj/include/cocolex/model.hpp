#pragma once

/**
 * Abstract autoregressive model contract plus a deterministic reference model.
 *
 * Every strategy consumes only this interface: prefill() yields one last-layer
 * hidden state per prompt position (computed causally) and the logits for the
 * next token; step() yields the logits and hidden state of the final position
 * of a prefix. Models are immutable after construction and both calls are pure,
 * so they may run concurrently.
 *
 * Adapter wire format (for future real-LLM backends, no transport shipped
 * beyond in-process): length-prefixed request {op: "prefill"|"step",
 * tokens: uint32 list} answered by {logits: float32[|V|],
 * states: float32[n x d]} over a local byte stream.
 */

#include <cstdint>
#include <span>
#include <vector>

#include "cocolex/core.hpp"
#include "cocolex/errors.hpp"

namespace cocolex {

struct ModelStep {
    LogitVector logits;               // length |V|
    std::vector<float> hidden_state;  // last-layer state of the newest position
};

struct PrefillResult {
    std::vector<std::vector<float>> per_position_states;  // one per prompt token
    ModelStep final_step;                                 // logits for the next token
};

class LanguageModel {
public:
    virtual ~LanguageModel() = default;
    virtual std::uint32_t vocab_size() const = 0;
    virtual std::size_t hidden_dim() const = 0;
    virtual PrefillResult prefill(std::span<const TokenId> tokens) const = 0;
    virtual ModelStep step(std::span<const TokenId> prefix) const = 0;
};

struct ReferenceModelConfig {
    std::uint64_t seed = 0;
    std::uint32_t vocab_size = 256;  // byte-level tokens
    std::size_t dim = 32;
    std::size_t order = 4;  // m-gram window
    double temperature = 0.7;
};

/**
 * Desk-scale stand-in for a real LLM with tied input/output embeddings.
 *
 * The hidden state of a position is the L2-normalized mean of the embeddings
 * of the last `order` tokens, so identical local contexts produce identical
 * states — exactly the regime in which the copy mechanism should fire.
 * Logits are (embedding_table . h) / temperature. Deterministic given the
 * seed; embedding rows are unit-normalized.
 */
class ReferenceNgramModel final : public LanguageModel {
public:
    explicit ReferenceNgramModel(const ReferenceModelConfig& config);

    std::uint32_t vocab_size() const override { return config_.vocab_size; }
    std::size_t hidden_dim() const override { return config_.dim; }
    PrefillResult prefill(std::span<const TokenId> tokens) const override;
    ModelStep step(std::span<const TokenId> prefix) const override;

    const ReferenceModelConfig& config() const { return config_; }
    /// Row-major |V| x d table, exposed so tests can evaluate logits independently.
    const std::vector<double>& embedding_table() const { return embeddings_; }

private:
    std::vector<double> state_at(std::span<const TokenId> tokens, std::size_t position) const;
    LogitVector logits_for(const std::vector<double>& state) const;

    ReferenceModelConfig config_;
    std::vector<double> embeddings_;
};

}  // namespace cocolex
