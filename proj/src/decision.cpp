#include "facetpath/decision.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace facetpath {

double gini(std::span<const double> d) {
    const std::size_t n = d.size();
    if (n == 0) throw Error("gini of an empty distribution");
    if (n == 1) return 0.0;
    double pairwise = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) pairwise += std::abs(d[i] - d[j]);
    // 2 n^2 xbar with xbar = 1/n
    return 2.0 * pairwise / (2.0 * static_cast<double>(n));
}

double gini_sorted(std::span<const double> d) {
    const std::size_t n = d.size();
    if (n == 0) throw Error("gini of an empty distribution");
    if (n == 1) return 0.0;
    std::vector<double> x(d.begin(), d.end());
    std::sort(x.begin(), x.end());
    double weighted = 0.0, total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        weighted += static_cast<double>(i + 1) * x[i];
        total += x[i];
    }
    const double nn = static_cast<double>(n);
    return 2.0 * weighted / (nn * total) - (nn + 1.0) / nn;
}

void validate_distribution(std::span<const double> d) {
    if (d.empty()) throw Error("empty distribution");
    double sum = 0.0;
    for (double x : d) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw Error("distribution has a negative or non-finite entry");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw Error("distribution sums to " + std::to_string(sum));
}

Path truncate_prediction(const PathPrediction& prediction, const DecisionConfig& config) {
    Path kept;
    const auto n = std::min(prediction.nodes.depth(), prediction.step_gini.size());
    for (std::size_t j = 0; j < n; ++j) {
        if (decision_rule(prediction.step_gini[j], config) == 0) break;
        kept.push_back(prediction.nodes[j]);
    }
    return kept;
}

Decision decide(const PathPrediction& prediction, const DecisionConfig& config, const TaxonomyTree& tree) {
    Decision d;
    d.path = truncate_prediction(prediction, config);
    d.valid = tree.is_valid_path(d.path);
    if (!d.valid && config.safety_check) {
        d.path = Path{};
        d.dropped = true;
    }
    return d;
}

}  // namespace facetpath
