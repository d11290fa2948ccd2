#include "cocolex/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cocolex {

namespace {

// mt19937_64 output is fully specified by the standard; mapping the raw draws
// to [-1,1) ourselves keeps the table bit-identical across platforms, unlike
// std::uniform_real_distribution.
double next_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

}  // namespace

ReferenceNgramModel::ReferenceNgramModel(const ReferenceModelConfig& config) : config_(config) {
    if (config_.vocab_size < 2) throw InvalidConfig("reference model needs |V| >= 2");
    if (config_.dim == 0 || config_.order == 0) throw InvalidConfig("dim and order must be positive");
    if (!(config_.temperature > 0.0)) throw InvalidConfig("temperature must be positive");

    std::mt19937_64 rng(config_.seed);
    embeddings_.resize(static_cast<std::size_t>(config_.vocab_size) * config_.dim);
    for (std::uint32_t v = 0; v < config_.vocab_size; ++v) {
        double* row = embeddings_.data() + static_cast<std::size_t>(v) * config_.dim;
        double norm_sq = 0.0;
        for (std::size_t i = 0; i < config_.dim; ++i) {
            row[i] = next_uniform(rng);
            norm_sq += row[i] * row[i];
        }
        const double norm = std::sqrt(norm_sq);
        if (norm > 0.0)
            for (std::size_t i = 0; i < config_.dim; ++i) row[i] /= norm;
        else
            row[0] = 1.0;
    }
}

std::vector<double> ReferenceNgramModel::state_at(std::span<const TokenId> tokens,
                                                  std::size_t position) const {
    const std::size_t window = std::min(config_.order, position + 1);
    std::vector<double> state(config_.dim, 0.0);
    for (std::size_t j = position + 1 - window; j <= position; ++j) {
        const TokenId t = tokens[j];
        if (t >= config_.vocab_size) throw InvalidToken("token id " + std::to_string(t) + " unknown");
        const double* row = embeddings_.data() + static_cast<std::size_t>(t) * config_.dim;
        for (std::size_t i = 0; i < config_.dim; ++i) state[i] += row[i];
    }
    double norm_sq = 0.0;
    for (double v : state) norm_sq += v * v;
    const double norm = std::max(std::sqrt(norm_sq), 1e-12);
    for (double& v : state) v /= norm;
    return state;
}

LogitVector ReferenceNgramModel::logits_for(const std::vector<double>& state) const {
    std::vector<double> logits(config_.vocab_size);
    for (std::uint32_t v = 0; v < config_.vocab_size; ++v) {
        const double* row = embeddings_.data() + static_cast<std::size_t>(v) * config_.dim;
        double dot = 0.0;
        for (std::size_t i = 0; i < config_.dim; ++i) dot += row[i] * state[i];
        logits[v] = dot / config_.temperature;
    }
    return LogitVector(std::move(logits));
}

PrefillResult ReferenceNgramModel::prefill(std::span<const TokenId> tokens) const {
    if (tokens.empty()) throw EmptyPrompt("prefill requires a non-empty prompt");
    PrefillResult result;
    result.per_position_states.reserve(tokens.size());
    std::vector<double> state;
    for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
        state = state_at(tokens, pos);
        std::vector<float> as_float(state.begin(), state.end());
        result.per_position_states.push_back(std::move(as_float));
    }
    result.final_step.logits = logits_for(state);
    result.final_step.hidden_state = result.per_position_states.back();
    return result;
}

ModelStep ReferenceNgramModel::step(std::span<const TokenId> prefix) const {
    if (prefix.empty()) throw EmptyPrompt("step requires a non-empty prefix");
    const std::vector<double> state = state_at(prefix, prefix.size() - 1);
    ModelStep ms;
    ms.logits = logits_for(state);
    ms.hidden_state.assign(state.begin(), state.end());
    return ms;
}

}  // namespace cocolex
