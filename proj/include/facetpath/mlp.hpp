#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "facetpath/eventlog.hpp"
#include "facetpath/features.hpp"
#include "facetpath/nn/layers.hpp"
#include "facetpath/nn/optim.hpp"
#include "facetpath/prediction.hpp"

namespace facetpath {

struct MlpArchitecture {
    std::size_t hidden = 256;
};

// One-out-of-many classifier over the full product paths seen in training.
class MlpModel {
public:
    struct Example {
        nn::Vector input;
        std::uint32_t label = 0;
    };

    MlpModel(std::size_t input_dim, std::vector<Path> labels, const MlpArchitecture& arch, std::uint64_t seed);

    double loss_and_gradient(std::span<const Example* const> batch);
    double loss(std::span<const Example> set);
    std::vector<nn::Parameter*> parameters();

    nn::Vector distribution(const nn::Vector& input) const;
    // Argmax label; the label distribution and its Gini are repeated per node.
    PathPrediction predict(const nn::Vector& input) const;

    const std::vector<Path>& labels() const { return labels_; }
    std::optional<std::uint32_t> label_index(const Path& path) const;
    std::size_t input_dim() const { return hidden_.in_features(); }
    const MlpArchitecture& architecture() const { return arch_; }

private:
    MlpArchitecture arch_;
    std::vector<Path> labels_;
    nn::DenseLayer hidden_;
    nn::DenseLayer output_;
};

struct MlpTraining {
    MlpModel model;
    nn::TrainHistory history;
};

// Chronologically last validation_fraction of `train` drives early stopping.
MlpTraining mlp_train(const std::vector<LabeledExample>& train, const FeatureEncoder& features,
                      const nn::TrainConfig& config, const MlpArchitecture& arch = {});

PathPrediction mlp_predict(const MlpModel& model, const FeatureEncoder& features, const std::string& query,
                           std::span<const ProductId> session);

void save_mlp(const std::filesystem::path& file, MlpModel& model, const FeatureEncoder& features,
              const TaxonomyTree& tree, const nn::TrainConfig& config);
MlpModel load_mlp(const std::filesystem::path& file, const FeatureEncoder& features, const TaxonomyTree& tree);

}  // namespace facetpath
