#pragma once

/**
 * The seven decoding strategies and the greedy decode loop.
 *
 * regular          p = softmax(penalized logits)
 * cad              softmax[(1+a) logits_with - a logits_without]
 * adacad           cad with a_t = max(a_min, JSD(p_without, p_with)) per step
 * colex            static-lambda mix of p_model and p_copy
 * cocolex          confidence-guided mix of p_model and p_copy
 * cocolex_plus     cocolex querying a whole-document chunked index
 * adacad_cocolex   cocolex mix with p_model replaced by the adacad output
 *
 * The repetition penalty touches model logits only (both contrastive
 * branches), never p_copy, and its seen set is the generated tokens —
 * copying verbatim context spans must stay possible.
 */

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "cocolex/confidence.hpp"
#include "cocolex/context_index.hpp"
#include "cocolex/core.hpp"
#include "cocolex/model.hpp"

namespace cocolex {

enum class Strategy {
    regular,
    cad,
    adacad,
    colex,
    cocolex,
    cocolex_plus,
    adacad_cocolex,
};

const std::vector<Strategy>& all_strategies();
std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

struct StrategyConfig {
    Strategy strategy = Strategy::regular;
    double alpha = 0.5;          // cad contrast weight
    double alpha_min = 0.3;      // adacad clamp floor
    double static_lambda = 0.5;  // colex interpolation weight
    double lambda_min = 0.2;
    double lambda_max = 0.8;
    double smoothing = 0.5;
    std::size_t window = 5;
    std::size_t neighbors_k = 32;
    double repetition_penalty = 1.5;
    std::size_t max_new_tokens = 64;
    Metric metric = Metric::euclidean;

    void validate() const;  // throws InvalidConfig when outside stated ranges
};

/// Prompt material assembled by the harness: the full templated prompt, the
/// same template with the retrieved passages dropped (the contrastive
/// branch), and the token span the context occupies within the full prompt.
struct PromptInputs {
    std::vector<TokenId> tokens;
    std::vector<TokenId> tokens_without_context;
    std::size_t context_begin = 0;
    std::size_t context_end = 0;
};

struct StepTrace {
    double lambda = 1.0;      // mixture weight on the model branch
    double alpha = 0.0;       // contrast weight (cad/adacad only)
    double entropy = 0.0;     // H_t of the distribution feeding the confidence
    double copy_mass = 0.0;   // (1-lambda) * copy mass on the chosen token's competitors
    int model_calls = 1;      // 1 or 2
    bool copy_fallback = false;  // empty index: lambda forced to 1 this step
};

struct GenerationResult {
    std::vector<TokenId> tokens;
    std::string text;
    std::vector<StepTrace> trace;
    std::size_t model_calls = 0;
    double decode_seconds = 0.0;        // greedy loop only
    double seconds_per_token = 0.0;
    double index_build_seconds = 0.0;   // context-span index, reported separately
};

/// Hook for tests that need the per-step distribution.
struct StepObservation {
    std::size_t step;
    const Distribution& distribution;
    double lambda;
    double alpha;
    bool copy_fallback;
};
using StepObserver = std::function<void(const StepObservation&)>;

Distribution next_distribution_regular(const ModelStep& step, std::span<const TokenId> seen,
                                       double penalty);

Distribution next_distribution_cad(const ModelStep& step_with, const ModelStep& step_without,
                                   double alpha, std::span<const TokenId> seen, double penalty);

/// Returns the distribution and the per-step alpha_t in [alpha_min, 1].
std::pair<Distribution, double> next_distribution_adacad(const ModelStep& step_with,
                                                         const ModelStep& step_without,
                                                         double alpha_min,
                                                         std::span<const TokenId> seen,
                                                         double penalty);

/// Convex combination lambda*p_model + (1-lambda)*p_copy.
Distribution next_distribution_cocolex(const Distribution& p_model, const Distribution& p_copy,
                                       double lambda);

/// Greedy decode with per-step diagnostics. Ends at max_new_tokens or when the
/// argmax is `eos_token` (which is emitted and traced). `document_index` must
/// be supplied for cocolex_plus and carry the configured metric.
GenerationResult decode(const LanguageModel& model, const Vocabulary& vocab,
                        const PromptInputs& prompt, const StrategyConfig& config,
                        TokenId eos_token, const ContextIndex* document_index = nullptr,
                        const StepObserver& observer = {});

}  // namespace cocolex
