#include "cocolex/decoding.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace cocolex {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

bool uses_copy(Strategy s) {
    return s == Strategy::colex || s == Strategy::cocolex || s == Strategy::cocolex_plus ||
           s == Strategy::adacad_cocolex;
}

bool uses_contrast(Strategy s) {
    return s == Strategy::cad || s == Strategy::adacad || s == Strategy::adacad_cocolex;
}

LogitVector contrast_combine(const LogitVector& with, const LogitVector& without, double alpha) {
    if (with.size() != without.size()) throw VocabMismatch("contrastive branches disagree on |V|");
    std::vector<double> combined(with.size());
    for (std::size_t i = 0; i < with.size(); ++i)
        combined[i] = (1.0 + alpha) * with[i] - alpha * without[i];
    return LogitVector(std::move(combined));
}

}  // namespace

const std::vector<Strategy>& all_strategies() {
    static const std::vector<Strategy> kAll = {
        Strategy::regular, Strategy::cad,          Strategy::adacad,        Strategy::colex,
        Strategy::cocolex, Strategy::cocolex_plus, Strategy::adacad_cocolex};
    return kAll;
}

std::string strategy_name(Strategy s) {
    switch (s) {
        case Strategy::regular: return "regular";
        case Strategy::cad: return "cad";
        case Strategy::adacad: return "adacad";
        case Strategy::colex: return "colex";
        case Strategy::cocolex: return "cocolex";
        case Strategy::cocolex_plus: return "cocolex_plus";
        case Strategy::adacad_cocolex: return "adacad_cocolex";
    }
    throw InvalidConfig("unknown strategy value");
}

Strategy strategy_from_name(const std::string& name) {
    for (Strategy s : all_strategies())
        if (strategy_name(s) == name) return s;
    throw InvalidConfig("unknown strategy: " + name);
}

void StrategyConfig::validate() const {
    if (!(alpha >= 0.0)) throw InvalidConfig("alpha must be >= 0");
    if (!(alpha_min >= 0.0 && alpha_min <= 1.0)) throw InvalidConfig("alpha_min must lie in [0,1]");
    if (!(static_lambda >= 0.0 && static_lambda <= 1.0))
        throw InvalidConfig("static lambda must lie in [0,1]");
    if (!(lambda_min >= 0.0 && lambda_min <= lambda_max && lambda_max <= 1.0))
        throw InvalidConfig("require 0 <= lambda_min <= lambda_max <= 1");
    if (!(smoothing >= 0.0 && smoothing <= 1.0)) throw InvalidConfig("smoothing must lie in [0,1]");
    if (window < 1) throw InvalidConfig("window must be >= 1");
    if (neighbors_k < 1) throw InvalidConfig("neighbors_k must be >= 1");
    if (!(repetition_penalty >= 1.0)) throw InvalidConfig("repetition penalty must be >= 1");
    if (max_new_tokens < 1) throw InvalidConfig("max_new_tokens must be >= 1");
}

Distribution next_distribution_regular(const ModelStep& step, std::span<const TokenId> seen,
                                       double penalty) {
    return softmax(apply_repetition_penalty(step.logits, seen, penalty));
}

Distribution next_distribution_cad(const ModelStep& step_with, const ModelStep& step_without,
                                   double alpha, std::span<const TokenId> seen, double penalty) {
    const LogitVector with = apply_repetition_penalty(step_with.logits, seen, penalty);
    const LogitVector without = apply_repetition_penalty(step_without.logits, seen, penalty);
    return softmax(contrast_combine(with, without, alpha));
}

std::pair<Distribution, double> next_distribution_adacad(const ModelStep& step_with,
                                                         const ModelStep& step_without,
                                                         double alpha_min,
                                                         std::span<const TokenId> seen,
                                                         double penalty) {
    const LogitVector with = apply_repetition_penalty(step_with.logits, seen, penalty);
    const LogitVector without = apply_repetition_penalty(step_without.logits, seen, penalty);
    const double alpha_t = std::max(alpha_min, jsd(softmax(without), softmax(with)));
    return {softmax(contrast_combine(with, without, alpha_t)), alpha_t};
}

Distribution next_distribution_cocolex(const Distribution& p_model, const Distribution& p_copy,
                                       double lambda) {
    if (p_model.size() != p_copy.size()) throw VocabMismatch("mixture distributions disagree on |V|");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidConfig("lambda must lie in [0,1]");
    std::vector<double> probs(p_model.size());
    for (std::size_t i = 0; i < probs.size(); ++i)
        probs[i] = lambda * p_model[i] + (1.0 - lambda) * p_copy[i];
    return Distribution(std::move(probs));
}

GenerationResult decode(const LanguageModel& model, const Vocabulary& vocab,
                        const PromptInputs& prompt, const StrategyConfig& config,
                        TokenId eos_token, const ContextIndex* document_index,
                        const StepObserver& observer) {
    config.validate();
    if (vocab.size() != model.vocab_size())
        throw VocabMismatch("vocabulary size does not match the model");
    if (prompt.context_begin > prompt.context_end || prompt.context_end > prompt.tokens.size())
        throw ShapeError("context span outside the prompt");
    if (config.strategy == Strategy::cocolex_plus) {
        if (document_index == nullptr)
            throw InvalidConfig("cocolex_plus requires a document-chunk index");
        if (document_index->dimension() != model.hidden_dim())
            throw ShapeError("document index dimension does not match the model");
        if (document_index->metric() != config.metric)
            throw InvalidConfig("document index metric does not match the configuration");
    }

    GenerationResult result;
    PrefillResult prefill = model.prefill(prompt.tokens);

    // All copy strategies except cocolex_plus read from the prefill states of
    // the context span; no extra forward passes happen here.
    ContextIndex span_index = ContextIndex::empty(model.hidden_dim(), config.metric);
    const ContextIndex* index = nullptr;
    if (uses_copy(config.strategy)) {
        if (config.strategy == Strategy::cocolex_plus) {
            index = document_index;
        } else {
            const auto build_start = Clock::now();
            const std::size_t span_len = prompt.context_end - prompt.context_begin;
            if (span_len >= 2) {
                span_index = ContextIndex::build_from_prefix(
                    std::span(prefill.per_position_states).subspan(prompt.context_begin, span_len),
                    std::span(prompt.tokens).subspan(prompt.context_begin, span_len), config.metric);
            }
            result.index_build_seconds = seconds_since(build_start);
            index = &span_index;
        }
    }

    const bool confidence_guided = config.strategy == Strategy::cocolex ||
                                   config.strategy == Strategy::cocolex_plus ||
                                   config.strategy == Strategy::adacad_cocolex;
    ConfidenceState confidence(config.window, config.smoothing, config.lambda_min,
                               config.lambda_max);

    std::vector<TokenId> with_prefix(prompt.tokens.begin(), prompt.tokens.end());
    std::vector<TokenId> without_prefix(prompt.tokens_without_context.begin(),
                                        prompt.tokens_without_context.end());

    const auto loop_start = Clock::now();
    for (std::size_t step_i = 0; step_i < config.max_new_tokens; ++step_i) {
        StepTrace trace;
        const std::span<const TokenId> seen(result.tokens);

        // The first step consumes the prefill output; later steps re-run the
        // model on the extended prefix.
        ModelStep step_with = step_i == 0 ? std::move(prefill.final_step) : model.step(with_prefix);
        trace.model_calls = 1;

        Distribution final_dist;
        Distribution p_copy;
        bool have_copy = false;

        auto mix_with_copy = [&](const Distribution& p_model, double lambda) {
            if (index == nullptr || index->size() == 0) {
                trace.copy_fallback = true;
                trace.lambda = 1.0;
                final_dist = p_model;
                return;
            }
            const auto neighbors = index->query_top_k(step_with.hidden_state, config.neighbors_k);
            p_copy = copy_distribution(neighbors, vocab.size());
            have_copy = true;
            trace.lambda = lambda;
            final_dist = next_distribution_cocolex(p_model, p_copy, lambda);
        };

        switch (config.strategy) {
            case Strategy::regular: {
                final_dist = next_distribution_regular(step_with, seen, config.repetition_penalty);
                trace.entropy = entropy(final_dist);
                break;
            }
            case Strategy::cad: {
                const ModelStep step_without = model.step(without_prefix);
                trace.model_calls = 2;
                trace.alpha = config.alpha;
                final_dist = next_distribution_cad(step_with, step_without, config.alpha, seen,
                                                   config.repetition_penalty);
                trace.entropy = entropy(final_dist);
                break;
            }
            case Strategy::adacad: {
                const ModelStep step_without = model.step(without_prefix);
                trace.model_calls = 2;
                auto [dist, alpha_t] = next_distribution_adacad(step_with, step_without,
                                                                config.alpha_min, seen,
                                                                config.repetition_penalty);
                trace.alpha = alpha_t;
                final_dist = std::move(dist);
                trace.entropy = entropy(final_dist);
                break;
            }
            case Strategy::colex:
            case Strategy::cocolex:
            case Strategy::cocolex_plus: {
                const Distribution p_model =
                    next_distribution_regular(step_with, seen, config.repetition_penalty);
                trace.entropy = entropy(p_model);
                const double lambda = confidence_guided
                                          ? confidence.update(raw_confidence(p_model))
                                          : config.static_lambda;
                mix_with_copy(p_model, lambda);
                break;
            }
            case Strategy::adacad_cocolex: {
                const ModelStep step_without = model.step(without_prefix);
                trace.model_calls = 2;
                auto [p_base, alpha_t] = next_distribution_adacad(step_with, step_without,
                                                                  config.alpha_min, seen,
                                                                  config.repetition_penalty);
                trace.alpha = alpha_t;
                // Section 4.5.2 composition: the adacad output replaces p_theta
                // in the mixture, and the confidence reads that distribution.
                trace.entropy = entropy(p_base);
                const double lambda = confidence.update(raw_confidence(p_base));
                mix_with_copy(p_base, lambda);
                break;
            }
        }

        const TokenId chosen = argmax(final_dist);
        if (have_copy) trace.copy_mass = (1.0 - trace.lambda) * (1.0 - p_copy[chosen]);

        if (observer)
            observer(StepObservation{step_i, final_dist, trace.lambda, trace.alpha,
                                     trace.copy_fallback});

        result.tokens.push_back(chosen);
        result.trace.push_back(trace);
        result.model_calls += static_cast<std::size_t>(trace.model_calls);
        with_prefix.push_back(chosen);
        without_prefix.push_back(chosen);
        if (chosen == eos_token) break;
    }
    result.decode_seconds = seconds_since(loop_start);
    result.seconds_per_token =
        result.decode_seconds / static_cast<double>(std::max<std::size_t>(result.tokens.size(), 1));
    result.text = vocab.detokenize(result.tokens);
    return result;
}

}  // namespace cocolex
