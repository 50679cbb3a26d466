#include "facetpath/mlp.hpp"

#include <algorithm>
#include <set>

#include "checkpoint_format.hpp"
#include "facetpath/decision.hpp"

namespace facetpath {

MlpModel::MlpModel(std::size_t input_dim, std::vector<Path> labels, const MlpArchitecture& arch, std::uint64_t seed)
    : arch_(arch), labels_(std::move(labels)) {
    if (labels_.empty()) throw Error("mlp: empty label set");
    std::mt19937_64 rng(seed);
    hidden_ = nn::DenseLayer(input_dim, arch.hidden, nn::Activation::relu, rng, "mlp_hidden");
    output_ = nn::DenseLayer(arch.hidden, labels_.size(), nn::Activation::identity, rng, "mlp_output");
}

std::vector<nn::Parameter*> MlpModel::parameters() {
    auto out = hidden_.parameters();
    for (auto* p : output_.parameters()) out.push_back(p);
    return out;
}

std::optional<std::uint32_t> MlpModel::label_index(const Path& path) const {
    auto it = std::lower_bound(labels_.begin(), labels_.end(), path);
    if (it == labels_.end() || *it != path) return std::nullopt;
    return static_cast<std::uint32_t>(it - labels_.begin());
}

double MlpModel::loss_and_gradient(std::span<const Example* const> batch) {
    const auto B = static_cast<Eigen::Index>(batch.size());
    if (B == 0) return 0.0;
    nn::Matrix x(static_cast<Eigen::Index>(input_dim()), B);
    std::vector<std::uint32_t> targets(batch.size());
    for (Eigen::Index b = 0; b < B; ++b) {
        x.col(b) = batch[static_cast<std::size_t>(b)]->input;
        targets[static_cast<std::size_t>(b)] = batch[static_cast<std::size_t>(b)]->label;
    }
    std::vector<double> mask(batch.size(), 1.0);
    nn::DenseLayer::Cache hc, oc;
    nn::Matrix logits = output_.forward(hidden_.forward(x, hc), oc);
    const double scale = 1.0 / static_cast<double>(B);
    nn::Matrix dlogits;
    const double loss = nn::softmax_cross_entropy(logits, targets, mask, scale, dlogits) * scale;
    hidden_.backward(output_.backward(dlogits, oc), hc);
    return loss;
}

double MlpModel::loss(std::span<const Example> set) {
    if (set.empty()) return 0.0;
    nn::Matrix x(static_cast<Eigen::Index>(input_dim()), static_cast<Eigen::Index>(set.size()));
    std::vector<std::uint32_t> targets(set.size());
    for (std::size_t b = 0; b < set.size(); ++b) {
        x.col(static_cast<Eigen::Index>(b)) = set[b].input;
        targets[b] = set[b].label;
    }
    std::vector<double> mask(set.size(), 1.0);
    nn::Matrix logits = output_.infer(hidden_.infer(x));
    nn::Matrix unused;
    return nn::softmax_cross_entropy(logits, targets, mask, 1.0, unused) / static_cast<double>(set.size());
}

nn::Vector MlpModel::distribution(const nn::Vector& input) const {
    if (input.size() != static_cast<Eigen::Index>(input_dim()))
        throw Error("mlp: input has " + std::to_string(input.size()) + " entries, model expects " +
                    std::to_string(input_dim()));
    return nn::softmax(output_.infer(hidden_.infer(input))).col(0);
}

PathPrediction MlpModel::predict(const nn::Vector& input) const {
    nn::Vector p = distribution(input);
    Eigen::Index best = 0;
    p.maxCoeff(&best);
    PathPrediction pred;
    pred.nodes = labels_[static_cast<std::size_t>(best)];
    std::vector<double> dist(p.data(), p.data() + p.size());
    const double g = gini(dist);
    for (std::size_t i = 0; i < pred.nodes.depth(); ++i) {
        pred.step_distributions.push_back(dist);
        pred.step_gini.push_back(g);
    }
    return pred;
}

MlpTraining mlp_train(const std::vector<LabeledExample>& train, const FeatureEncoder& features,
                      const nn::TrainConfig& config, const MlpArchitecture& arch) {
    config.validate();
    std::set<Path> label_set;
    for (const auto& ex : train) label_set.insert(ex.target_path);
    std::vector<Path> labels(label_set.begin(), label_set.end());

    auto [fit, held_out] = holdout_tail(train, config.validation_fraction);
    MlpModel model(features.input_dim(), labels, arch, config.seed);
    auto encode = [&](const std::vector<LabeledExample>& src) {
        std::vector<MlpModel::Example> out;
        out.reserve(src.size());
        for (const auto& ex : src)
            out.push_back({features.encode(ex.query, ex.session_products), *model.label_index(ex.target_path)});
        return out;
    };
    auto fit_examples = encode(fit);
    auto val_examples = encode(held_out);
    auto history = nn::train_loop(model, std::span<const MlpModel::Example>(fit_examples),
                                  std::span<const MlpModel::Example>(val_examples), config);
    return {std::move(model), std::move(history)};
}

PathPrediction mlp_predict(const MlpModel& model, const FeatureEncoder& features, const std::string& query,
                           std::span<const ProductId> session) {
    return model.predict(features.encode(query, session));
}

void save_mlp(const std::filesystem::path& file, MlpModel& model, const FeatureEncoder& features,
              const TaxonomyTree& tree, const nn::TrainConfig& config) {
    auto j = detail::checkpoint_header("mlp", features, tree, config);
    j["architecture"] = {{"hidden", model.architecture().hidden}};
    std::vector<std::string> labels;
    for (const auto& p : model.labels()) labels.push_back(tree.to_string(p));
    j["labels"] = labels;
    j["parameters"] = nn::parameters_to_json(model.parameters());
    nn::write_json_file(file, j);
}

MlpModel load_mlp(const std::filesystem::path& file, const FeatureEncoder& features, const TaxonomyTree& tree) {
    auto j = nn::read_json_file(file);
    detail::check_checkpoint(j, "mlp", features, tree);
    MlpArchitecture a;
    a.hidden = j.at("architecture").at("hidden").get<std::size_t>();
    std::vector<Path> labels;
    for (const auto& s : j.at("labels")) labels.push_back(tree.parse_path(s.get<std::string>()));
    MlpModel model(features.input_dim(), labels, a, 0);
    nn::parameters_from_json(j.at("parameters"), model.parameters());
    return model;
}

}  // namespace facetpath
