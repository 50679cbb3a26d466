#pragma once

#include <memory>
#include <string>

#include "facetpath/count_model.hpp"
#include "facetpath/decision.hpp"
#include "facetpath/features.hpp"
#include "facetpath/mlp.hpp"
#include "facetpath/session_path.hpp"

namespace facetpath {

// Common face of the three path predictors, used by the experiment suite and
// the service. predict() returns the untruncated path; gated() says whether
// the decision module applies (the count model carries no distributions).
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual std::string id() const = 0;
    virtual bool gated() const = 0;
    virtual PathPrediction predict(const std::string& query, const SessionVector& session) const = 0;
    // Session vector for a product list; predictors without features return an empty one.
    virtual SessionVector session(std::span<const ProductId> products) const { (void)products; return {}; }

    PathPrediction predict(const std::string& query, std::span<const ProductId> products) const {
        return predict(query, session(products));
    }
};

class CountPredictor final : public Predictor {
public:
    explicit CountPredictor(std::shared_ptr<const CountModel> model) : model_(std::move(model)) {}
    std::string id() const override { return "cm"; }
    bool gated() const override { return false; }
    PathPrediction predict(const std::string& query, const SessionVector& session) const override;

private:
    std::shared_ptr<const CountModel> model_;
};

class MlpPredictor final : public Predictor {
public:
    MlpPredictor(std::shared_ptr<const MlpModel> model, FeatureEncoder features)
        : model_(std::move(model)), features_(std::move(features)) {}
    std::string id() const override { return "mlp"; }
    bool gated() const override { return true; }
    PathPrediction predict(const std::string& query, const SessionVector& session) const override {
        return model_->predict(features_.encode(query, session));
    }
    SessionVector session(std::span<const ProductId> products) const override { return features_.session(products); }

private:
    std::shared_ptr<const MlpModel> model_;
    FeatureEncoder features_;
};

class SessionPathPredictor final : public Predictor {
public:
    SessionPathPredictor(std::shared_ptr<const SessionPathModel> model, FeatureEncoder features)
        : model_(std::move(model)), features_(std::move(features)) {}
    std::string id() const override { return "sessionpath"; }
    bool gated() const override { return true; }
    PathPrediction predict(const std::string& query, const SessionVector& session) const override {
        return model_->generate(features_.encode(query, session));
    }
    SessionVector session(std::span<const ProductId> products) const override { return features_.session(products); }

private:
    std::shared_ptr<const SessionPathModel> model_;
    FeatureEncoder features_;
};

// Applies the decision module for gated predictors; ungated predictions pass through.
Decision apply_decision(const Predictor& predictor, const PathPrediction& prediction, const DecisionConfig& config,
                        const TaxonomyTree& tree);

}  // namespace facetpath
