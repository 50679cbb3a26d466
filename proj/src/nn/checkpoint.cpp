#include "facetpath/nn/checkpoint.hpp"

#include <fstream>
#include <map>

namespace facetpath::nn {

using nlohmann::json;

json parameters_to_json(std::span<Parameter* const> params) {
    json out = json::array();
    for (const auto* p : params) {
        std::vector<double> values(p->value.data(), p->value.data() + p->value.size());
        out.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}, {"values", values}});
    }
    return out;
}

void parameters_from_json(const json& j, std::span<Parameter* const> params) {
    std::map<std::string, const json*> by_name;
    for (const auto& entry : j) by_name[entry.at("name").get<std::string>()] = &entry;
    for (auto* p : params) {
        auto it = by_name.find(p->name);
        if (it == by_name.end()) throw Error("checkpoint lacks parameter '" + p->name + "'");
        const auto& e = *it->second;
        const auto rows = e.at("rows").get<Eigen::Index>();
        const auto cols = e.at("cols").get<Eigen::Index>();
        if (rows != p->value.rows() || cols != p->value.cols())
            throw Error("checkpoint parameter '" + p->name + "' is " + std::to_string(rows) + "x" +
                        std::to_string(cols) + ", model expects " + std::to_string(p->value.rows()) + "x" +
                        std::to_string(p->value.cols()));
        auto values = e.at("values").get<std::vector<double>>();
        if (values.size() != static_cast<std::size_t>(rows * cols))
            throw Error("checkpoint parameter '" + p->name + "' has wrong value count");
        p->value = Eigen::Map<const Matrix>(values.data(), rows, cols);
        p->grad = Matrix::Zero(rows, cols);
    }
}

json to_json(const TrainConfig& c) {
    return {{"learning_rate", c.learning_rate}, {"time_decay", c.time_decay},   {"batch_size", c.batch_size},
            {"max_epochs", c.max_epochs},       {"patience", c.patience},       {"seed", c.seed},
            {"validation_fraction", c.validation_fraction}};
}

json to_json(const TrainHistory& h) {
    json epochs = json::array();
    for (const auto& e : h.epochs)
        epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"validation_loss", e.validation_loss}});
    return {{"epochs", epochs},
            {"best_epoch", h.best_epoch},
            {"best_validation_loss", h.best_validation_loss},
            {"stopped_early", h.stopped_early}};
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.time_decay = j.value("time_decay", c.time_decay);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    c.seed = j.value("seed", c.seed);
    c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
    return c;
}

void write_json_file(const std::filesystem::path& file, const json& j) {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary);
    if (!out) throw Error("cannot write " + file.string());
    out << j.dump() << '\n';
}

json read_json_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error("cannot open " + file.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(file.string() + ": " + e.what());
    }
}

}  // namespace facetpath::nn
