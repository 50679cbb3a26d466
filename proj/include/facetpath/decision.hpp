#pragma once

#include <span>

#include "facetpath/prediction.hpp"
#include "facetpath/taxonomy.hpp"

namespace facetpath {

// Gini coefficient of a normalized distribution:
//   g = sum_i sum_j |x_i - x_j| / (2 n^2 xbar),  xbar = 1/n.
// 0 for uniform, (n-1)/n for one-hot. n == 1 gives 0; n == 0 throws.
double gini(std::span<const double> distribution);

// Same quantity from the sorted closed form
//   g = 2 * sum_i i * x_(i) / (n * sum x) - (n + 1) / n,
// O(n log n); used as an independent route.
double gini_sorted(std::span<const double> distribution);

// Throws unless entries are >= 0 and sum to 1 within 1e-6.
void validate_distribution(std::span<const double> distribution);

struct DecisionConfig {
    double ct = 0.993;          // confidence threshold
    bool safety_check = false;  // drop final paths the taxonomy does not contain
};

// 1 when the node is confident enough to be shown, 0 when generation stops.
inline int decision_rule(double gini_value, const DecisionConfig& config) {
    return gini_value >= config.ct ? 1 : 0;
}

// Keeps the longest prefix whose every node passed the decision rule.
Path truncate_prediction(const PathPrediction& prediction, const DecisionConfig& config);

struct Decision {
    Path path;
    bool valid = true;         // path is addressable in the taxonomy
    bool dropped = false;      // safety check replaced an invalid path by the empty path
};

Decision decide(const PathPrediction& prediction, const DecisionConfig& config, const TaxonomyTree& tree);

}  // namespace facetpath
