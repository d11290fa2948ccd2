#pragma once

/**
 * Entropy-based confidence for the copy/generate balance.
 *
 * raw_confidence maps a step distribution to exp(-H/log|V|); ConfidenceState
 * smooths that value against a running average over a bounded window and
 * clamps it to configured bounds. One state per decode session.
 */

#include <cstddef>
#include <deque>

#include "cocolex/core.hpp"

namespace cocolex {

/// exp(-H(d)/log|V|): 1 for a one-hot distribution, exp(-1) for uniform.
/// Requires |V| >= 2, otherwise DegenerateVocabulary.
double raw_confidence(const Distribution& d);

class ConfidenceState {
public:
    /// lambda_min == lambda_max pins the confidence to a constant, which the
    /// degenerate strategy identities rely on.
    ConfidenceState(std::size_t window, double smoothing_factor, double lambda_min,
                    double lambda_max);

    /// lambda_t = clamp(s*raw + (1-s)*mean(history)); the first step uses the
    /// raw value alone. The post-clamp value enters the history, evicting
    /// entries beyond the window. Requires raw in (0,1].
    double update(double raw);

    std::size_t window() const { return window_; }
    double smoothing() const { return smoothing_; }
    double lambda_min() const { return lambda_min_; }
    double lambda_max() const { return lambda_max_; }

private:
    std::deque<double> history_;
    std::size_t window_;
    double smoothing_;
    double lambda_min_;
    double lambda_max_;
};

}  // namespace cocolex
