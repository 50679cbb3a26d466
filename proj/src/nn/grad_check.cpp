#include "facetpath/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace facetpath::nn {

GradCheckResult check_gradients(std::span<Parameter* const> params, const std::function<double()>& loss,
                                double epsilon, double floor) {
    GradCheckResult result;
    for (auto* p : params) {
        for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
            for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
                const double saved = p->value(r, c);
                p->value(r, c) = saved + epsilon;
                const double up = loss();
                p->value(r, c) = saved - epsilon;
                const double down = loss();
                p->value(r, c) = saved;

                const double numeric = (up - down) / (2.0 * epsilon);
                const double analytic = p->grad(r, c);
                const double rel = std::abs(analytic - numeric) /
                                   std::max({std::abs(analytic), std::abs(numeric), floor});
                ++result.checked;
                if (rel > result.max_relative_error) {
                    result.max_relative_error = rel;
                    result.worst_entry = p->name + "(" + std::to_string(r) + "," + std::to_string(c) + ")";
                }
            }
        }
    }
    return result;
}

}  // namespace facetpath::nn
