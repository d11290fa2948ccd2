#pragma once

/**
 * Desk-scale metrics: ROUGE-L F1 for correctness, a lexical context-coverage
 * proxy for faithfulness, Wilcoxon signed-rank significance, and inference
 * cost accounting relative to regular decoding.
 */

#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cocolex/errors.hpp"

namespace cocolex {

/// F1 from the longest common subsequence of the two token sequences:
/// P = LCS/|cand|, R = LCS/|ref|, F1 = 2PR/(P+R); 0 when either is empty.
double rouge_l_f1(std::span<const std::string> candidate, std::span<const std::string> reference);

/// Fraction of generated n-grams occurring verbatim in the context; 0 when
/// the generation yields no n-gram. Requires n >= 1.
double context_coverage(std::span<const std::string> generated,
                        std::span<const std::string> context, std::size_t n);

/// Two-sided p-value of the paired Wilcoxon signed-rank test. Zero
/// differences are dropped; fewer than 5 nonzero pairs -> InsufficientData.
/// Exact enumeration of sign assignments for n <= 12, normal approximation
/// with continuity correction above.
double wilcoxon_signed_rank(std::span<const double> paired_a, std::span<const double> paired_b);

/// One scored (instance, strategy) run.
struct InstanceScore {
    std::string instance_id;
    std::string strategy;
    double rouge_l_f1 = 0.0;
    double context_coverage = 0.0;
    std::size_t tokens_generated = 0;
    std::size_t model_calls = 0;
    double seconds_per_token = 0.0;
    double index_build_seconds = 0.0;      // context-span index inside decode
    double doc_index_build_seconds = 0.0;  // cocolex_plus whole-document index
    std::string text;
};

struct StrategyTiming {
    double relative_time = 1.0;  // mean seconds-per-token scaled to regular
    double call_ratio = 1.0;     // decode-step model calls per token vs regular
    double mean_seconds_per_token = 0.0;
    double mean_index_build_seconds = 0.0;
    double mean_doc_index_build_seconds = 0.0;
};

/// Per-strategy relative timing. Requires a "regular" baseline among the
/// scores, otherwise MissingBaseline.
std::map<std::string, StrategyTiming> timing_report(const std::vector<InstanceScore>& scores);

/// Full experiment report with stable key order:
/// {config, per_instance, aggregates, significance, timing}.
nlohmann::ordered_json build_report(const nlohmann::ordered_json& config,
                                    const std::vector<InstanceScore>& scores);

}  // namespace cocolex
