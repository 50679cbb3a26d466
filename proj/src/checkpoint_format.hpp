#pragma once

#include <string>

#include "facetpath/features.hpp"
#include "facetpath/nn/checkpoint.hpp"

namespace facetpath::detail {

inline constexpr const char* kCheckpointFormat = "facetpath.checkpoint/1";

inline nlohmann::json checkpoint_header(const std::string& model, const FeatureEncoder& features,
                                        const TaxonomyTree& tree, const nn::TrainConfig& config) {
    return {{"format", kCheckpointFormat},
            {"model", model},
            {"vocabulary_hash", std::to_string(tree.vocabulary_hash())},
            {"vocabulary_size", tree.vocabulary_size()},
            {"max_depth", tree.max_depth()},
            {"features",
             {{"query_encoding", to_string(features.query_encoder().encoding())},
              {"query_dim", features.query_dim()},
              {"session_dim", features.session_dim()},
              {"use_session", features.use_session()}}},
            {"train_config", nn::to_json(config)}};
}

// Refuses checkpoints built for another model kind, taxonomy, or feature layout.
inline void check_checkpoint(const nlohmann::json& j, const std::string& model, const FeatureEncoder& features,
                             const TaxonomyTree& tree) {
    if (j.value("format", std::string{}) != kCheckpointFormat) throw Error("not a facetpath checkpoint");
    if (j.at("model").get<std::string>() != model)
        throw Error("checkpoint holds a '" + j.at("model").get<std::string>() + "' model, expected '" + model + "'");
    if (j.at("vocabulary_hash").get<std::string>() != std::to_string(tree.vocabulary_hash()))
        throw Error("checkpoint vocabulary hash does not match the loaded taxonomy");
    const auto& f = j.at("features");
    if (f.at("query_dim").get<std::size_t>() != features.query_dim() ||
        f.at("session_dim").get<std::size_t>() != features.session_dim())
        throw Error("checkpoint feature dimensions do not match the supplied embedding tables");
    if (f.at("query_encoding").get<std::string>() != to_string(features.query_encoder().encoding()))
        throw Error("checkpoint was trained with query encoding '" + f.at("query_encoding").get<std::string>() + "'");
    if (f.at("use_session").get<bool>() != features.use_session())
        throw Error("checkpoint session flag does not match the feature encoder");
}

}  // namespace facetpath::detail
