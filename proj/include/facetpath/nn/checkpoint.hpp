#pragma once

#include <filesystem>
#include <span>

#include "facetpath/nn/optim.hpp"
#include "facetpath/nn/tensor.hpp"
#include "json.hpp"

namespace facetpath::nn {

// [{"name", "rows", "cols", "values" (column-major)}...]
nlohmann::json parameters_to_json(std::span<Parameter* const> params);
// Matches by name and shape; throws on any mismatch.
void parameters_from_json(const nlohmann::json& j, std::span<Parameter* const> params);

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainHistory& history);

void write_json_file(const std::filesystem::path& file, const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& file);

}  // namespace facetpath::nn
