#pragma once

#include <functional>
#include <span>
#include <string>

#include "facetpath/nn/tensor.hpp"

namespace facetpath::nn {

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::string worst_entry;
    std::size_t checked = 0;
};

// Compares the gradients already stored in each Parameter::grad with central
// finite differences of `loss` (which must recompute from current values).
// Relative error is |a - n| / max(|a|, |n|, floor).
GradCheckResult check_gradients(std::span<Parameter* const> params, const std::function<double()>& loss,
                                double epsilon = 1e-5, double floor = 1e-7);

}  // namespace facetpath::nn
