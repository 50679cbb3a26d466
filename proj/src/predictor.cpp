#include "facetpath/predictor.hpp"

namespace facetpath {

PathPrediction CountPredictor::predict(const std::string& query, const SessionVector&) const {
    PathPrediction pred;
    if (auto p = model_->predict(query)) pred.nodes = *p;
    return pred;
}

Decision apply_decision(const Predictor& predictor, const PathPrediction& prediction, const DecisionConfig& config,
                        const TaxonomyTree& tree) {
    if (predictor.gated()) return decide(prediction, config, tree);
    Decision d;
    d.path = prediction.nodes;
    d.valid = tree.is_valid_path(d.path);
    return d;
}

}  // namespace facetpath
