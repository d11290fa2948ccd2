#include "cocolex/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_set>

namespace cocolex {

namespace {

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0), curr(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1])
                curr[j] = prev[j - 1] + 1;
            else
                curr[j] = std::max(prev[j], curr[j - 1]);
        }
        std::swap(prev, curr);
    }
    return prev[b.size()];
}

std::vector<std::string> ngrams_of(std::span<const std::string> tokens, std::size_t n) {
    std::vector<std::string> grams;
    if (tokens.size() < n) return grams;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string g;
        for (std::size_t j = 0; j < n; ++j) {
            if (j > 0) g += '\x1f';
            g += tokens[i + j];
        }
        grams.push_back(std::move(g));
    }
    return grams;
}

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd out;
    if (xs.empty()) return out;
    out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double acc = 0.0;
        for (double x : xs) acc += (x - out.mean) * (x - out.mean);
        out.stddev = std::sqrt(acc / static_cast<double>(xs.size() - 1));
    }
    return out;
}

double normal_two_sided(double t, double mu, double sigma) {
    const double z = (std::abs(t - mu) - 0.5) / sigma;  // continuity correction
    if (z <= 0.0) return 1.0;
    return std::erfc(z / std::sqrt(2.0));
}

}  // namespace

double rouge_l_f1(std::span<const std::string> candidate, std::span<const std::string> reference) {
    if (candidate.empty() || reference.empty()) return 0.0;
    const double lcs = static_cast<double>(lcs_length(candidate, reference));
    if (lcs == 0.0) return 0.0;
    const double precision = lcs / static_cast<double>(candidate.size());
    const double recall = lcs / static_cast<double>(reference.size());
    return 2.0 * precision * recall / (precision + recall);
}

double context_coverage(std::span<const std::string> generated,
                        std::span<const std::string> context, std::size_t n) {
    if (n < 1) throw InvalidConfig("coverage n-gram order must be >= 1");
    const auto gen_grams = ngrams_of(generated, n);
    if (gen_grams.empty()) return 0.0;
    const auto ctx_grams = ngrams_of(context, n);
    const std::unordered_set<std::string> ctx_set(ctx_grams.begin(), ctx_grams.end());
    std::size_t hits = 0;
    for (const auto& g : gen_grams)
        if (ctx_set.count(g)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(gen_grams.size());
}

double wilcoxon_signed_rank(std::span<const double> paired_a, std::span<const double> paired_b) {
    if (paired_a.size() != paired_b.size()) throw ShapeError("paired samples differ in length");
    std::vector<double> diffs;
    for (std::size_t i = 0; i < paired_a.size(); ++i) {
        const double d = paired_a[i] - paired_b[i];
        if (d != 0.0) diffs.push_back(d);
    }
    const std::size_t n = diffs.size();
    if (n < 5) throw InsufficientData("need at least 5 nonzero paired differences");

    // Average ranks of |d| with ties.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return std::abs(diffs[x]) < std::abs(diffs[y]); });
    std::vector<double> rank(n, 0.0);
    double tie_correction = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && std::abs(diffs[order[j]]) == std::abs(diffs[order[i]])) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) rank[order[k]] = avg_rank;
        const double t = static_cast<double>(j - i);
        tie_correction += t * t * t - t;
        i = j;
    }

    double t_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (diffs[i] > 0.0) t_plus += rank[i];

    if (n <= 12) {
        const std::uint64_t total = std::uint64_t(1) << n;
        std::uint64_t count_le = 0, count_ge = 0;
        const double eps = 1e-9;
        for (std::uint64_t mask = 0; mask < total; ++mask) {
            double t = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if ((mask >> i) & 1) t += rank[i];
            if (t <= t_plus + eps) ++count_le;
            if (t >= t_plus - eps) ++count_ge;
        }
        const double p =
            2.0 * static_cast<double>(std::min(count_le, count_ge)) / static_cast<double>(total);
        return std::min(p, 1.0);
    }

    const double dn = static_cast<double>(n);
    const double mu = dn * (dn + 1.0) / 4.0;
    const double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0 - tie_correction / 48.0;
    return std::min(normal_two_sided(t_plus, mu, std::sqrt(var)), 1.0);
}

std::map<std::string, StrategyTiming> timing_report(const std::vector<InstanceScore>& scores) {
    struct Totals {
        std::vector<double> spt;
        std::vector<double> index_build;
        std::vector<double> doc_index_build;
        std::size_t calls = 0;
        std::size_t tokens = 0;
    };
    std::map<std::string, Totals> by_strategy;
    for (const InstanceScore& s : scores) {
        Totals& t = by_strategy[s.strategy];
        t.spt.push_back(s.seconds_per_token);
        t.index_build.push_back(s.index_build_seconds);
        t.doc_index_build.push_back(s.doc_index_build_seconds);
        t.calls += s.model_calls;
        t.tokens += s.tokens_generated;
    }
    const auto regular = by_strategy.find("regular");
    if (regular == by_strategy.end()) throw MissingBaseline("no regular-strategy results present");
    const double base_spt = mean_std(regular->second.spt).mean;
    const double base_calls_per_token = static_cast<double>(regular->second.calls) /
                                        static_cast<double>(std::max<std::size_t>(regular->second.tokens, 1));

    std::map<std::string, StrategyTiming> out;
    for (const auto& [name, totals] : by_strategy) {
        StrategyTiming timing;
        timing.mean_seconds_per_token = mean_std(totals.spt).mean;
        timing.mean_index_build_seconds = mean_std(totals.index_build).mean;
        timing.mean_doc_index_build_seconds = mean_std(totals.doc_index_build).mean;
        timing.relative_time = base_spt > 0.0 ? timing.mean_seconds_per_token / base_spt : 1.0;
        const double calls_per_token = static_cast<double>(totals.calls) /
                                       static_cast<double>(std::max<std::size_t>(totals.tokens, 1));
        timing.call_ratio = calls_per_token / base_calls_per_token;
        out.emplace(name, timing);
    }
    return out;
}

nlohmann::ordered_json build_report(const nlohmann::ordered_json& config,
                                    const std::vector<InstanceScore>& scores) {
    nlohmann::ordered_json report;
    report["config"] = config;

    auto& per_instance = report["per_instance"] = nlohmann::ordered_json::array();
    for (const InstanceScore& s : scores) {
        per_instance.push_back({{"id", s.instance_id},
                                {"strategy", s.strategy},
                                {"rouge_l_f1", s.rouge_l_f1},
                                {"context_coverage", s.context_coverage},
                                {"tokens_generated", s.tokens_generated},
                                {"model_calls", s.model_calls},
                                {"seconds_per_token", s.seconds_per_token},
                                {"index_build_seconds", s.index_build_seconds},
                                {"doc_index_build_seconds", s.doc_index_build_seconds},
                                {"text", s.text}});
    }

    std::map<std::string, std::map<std::string, std::vector<double>>> metric_values;
    std::set<std::string> strategies;
    for (const InstanceScore& s : scores) {
        strategies.insert(s.strategy);
        metric_values[s.strategy]["rouge_l_f1"].push_back(s.rouge_l_f1);
        metric_values[s.strategy]["context_coverage"].push_back(s.context_coverage);
        metric_values[s.strategy]["tokens_generated"].push_back(static_cast<double>(s.tokens_generated));
    }
    auto& aggregates = report["aggregates"] = nlohmann::ordered_json::object();
    for (const auto& [strategy, metrics] : metric_values) {
        nlohmann::ordered_json entry;
        for (const auto& [metric, values] : metrics) {
            const MeanStd ms = mean_std(values);
            entry[metric] = {{"mean", ms.mean}, {"stddev", ms.stddev}};
        }
        aggregates[strategy] = entry;
    }

    // Pairwise Wilcoxon over instances both strategies scored.
    auto& significance = report["significance"] = nlohmann::ordered_json::object();
    const std::vector<std::string> strategy_list(strategies.begin(), strategies.end());
    for (std::size_t i = 0; i < strategy_list.size(); ++i) {
        for (std::size_t j = i + 1; j < strategy_list.size(); ++j) {
            std::map<std::string, std::pair<double, double>> rouge_pairs, coverage_pairs;
            std::map<std::string, int> seen;
            for (const InstanceScore& s : scores) {
                if (s.strategy != strategy_list[i] && s.strategy != strategy_list[j]) continue;
                const bool first = s.strategy == strategy_list[i];
                auto& r = rouge_pairs[s.instance_id];
                auto& c = coverage_pairs[s.instance_id];
                (first ? r.first : r.second) = s.rouge_l_f1;
                (first ? c.first : c.second) = s.context_coverage;
                seen[s.instance_id] |= first ? 1 : 2;
            }
            std::vector<double> ra, rb, ca, cb;
            for (const auto& [id, flags] : seen) {
                if (flags != 3) continue;
                ra.push_back(rouge_pairs[id].first);
                rb.push_back(rouge_pairs[id].second);
                ca.push_back(coverage_pairs[id].first);
                cb.push_back(coverage_pairs[id].second);
            }
            nlohmann::ordered_json entry;
            try {
                entry["rouge_l_f1_p"] = wilcoxon_signed_rank(ra, rb);
            } catch (const InsufficientData&) {
                entry["rouge_l_f1_p"] = nullptr;
            }
            try {
                entry["context_coverage_p"] = wilcoxon_signed_rank(ca, cb);
            } catch (const InsufficientData&) {
                entry["context_coverage_p"] = nullptr;
            }
            significance[strategy_list[i] + "_vs_" + strategy_list[j]] = entry;
        }
    }

    auto& timing = report["timing"] = nlohmann::ordered_json::object();
    if (strategies.count("regular")) {
        for (const auto& [name, t] : timing_report(scores)) {
            timing[name] = {{"relative_time", t.relative_time},
                            {"call_ratio", t.call_ratio},
                            {"mean_seconds_per_token", t.mean_seconds_per_token},
                            {"mean_index_build_seconds", t.mean_index_build_seconds},
                            {"mean_doc_index_build_seconds", t.mean_doc_index_build_seconds}};
        }
    }
    return report;
}

}  // namespace cocolex
