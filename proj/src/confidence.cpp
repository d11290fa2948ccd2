#include "cocolex/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cocolex {

double raw_confidence(const Distribution& d) {
    if (d.size() < 2) throw DegenerateVocabulary("confidence needs a vocabulary of size >= 2");
    const double h_norm = entropy(d) / std::log(static_cast<double>(d.size()));
    return std::exp(-h_norm);
}

ConfidenceState::ConfidenceState(std::size_t window, double smoothing_factor, double lambda_min,
                                 double lambda_max)
    : window_(window), smoothing_(smoothing_factor), lambda_min_(lambda_min), lambda_max_(lambda_max) {
    if (window_ < 1) throw InvalidConfig("confidence window must be >= 1");
    if (!(smoothing_ >= 0.0 && smoothing_ <= 1.0))
        throw InvalidConfig("smoothing factor must lie in [0,1]");
    if (!(lambda_min_ >= 0.0 && lambda_min_ <= lambda_max_ && lambda_max_ <= 1.0))
        throw InvalidConfig("require 0 <= lambda_min <= lambda_max <= 1");
}

double ConfidenceState::update(double raw) {
    if (!(raw > 0.0 && raw <= 1.0)) throw InvalidConfidence("raw confidence must lie in (0,1]");
    double combined = raw;
    if (!history_.empty()) {
        const double mean =
            std::accumulate(history_.begin(), history_.end(), 0.0) / static_cast<double>(history_.size());
        combined = smoothing_ * raw + (1.0 - smoothing_) * mean;
    }
    const double lambda = std::clamp(combined, lambda_min_, lambda_max_);
    history_.push_back(lambda);
    if (history_.size() > window_) history_.pop_front();
    return lambda;
}

}  // namespace cocolex
