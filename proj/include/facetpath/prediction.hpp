#pragma once

#include <vector>

#include "facetpath/taxonomy.hpp"

namespace facetpath {

// A generated path with the distribution that produced each node and its
// Gini confidence. |nodes| == |step_distributions| == |step_gini|.
struct PathPrediction {
    Path nodes;
    std::vector<std::vector<double>> step_distributions;
    std::vector<double> step_gini;
    bool hit_max_length = false;  // generation stopped by the length guard, not END
};

}  // namespace facetpath
