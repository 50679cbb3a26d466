#include "facetpath/session_path.hpp"

#include <algorithm>

#include "checkpoint_format.hpp"
#include "facetpath/decision.hpp"

namespace facetpath {

SessionPathModel::SessionPathModel(std::size_t input_dim, std::size_t vocabulary_size, std::size_t max_depth,
                                   const SessionPathArchitecture& arch, std::uint64_t seed)
    : arch_(arch), max_generation_length_(max_depth + 1) {
    if (vocabulary_size <= kFirstCatalogNode) throw Error("sessionpath: vocabulary has no catalog nodes");
    std::mt19937_64 rng(seed);
    encoder_ = nn::DenseLayer(input_dim, arch.encoder_width, nn::Activation::tanh, rng, "encoder");
    head_h_ = nn::DenseLayer(arch.encoder_width, arch.hidden, nn::Activation::identity, rng, "head_h");
    head_c_ = nn::DenseLayer(arch.encoder_width, arch.hidden, nn::Activation::identity, rng, "head_c");
    tokens_ = nn::EmbeddingLayer(vocabulary_size, arch.token_dim, rng, "node_embedding");
    lstm_ = nn::LstmLayer(arch.token_dim, arch.hidden, rng, "decoder_lstm");
    output_ = nn::DenseLayer(arch.hidden, vocabulary_size, nn::Activation::identity, rng, "decoder_output");
}

std::vector<nn::Parameter*> SessionPathModel::parameters() {
    std::vector<nn::Parameter*> out;
    for (auto* layer : {&encoder_, &head_h_, &head_c_})
        for (auto* p : layer->parameters()) out.push_back(p);
    for (auto* p : tokens_.parameters()) out.push_back(p);
    for (auto* p : lstm_.parameters()) out.push_back(p);
    for (auto* p : output_.parameters()) out.push_back(p);
    return out;
}

std::vector<std::uint32_t> SessionPathModel::decoder_inputs(std::span<const std::uint32_t> targets) {
    std::vector<std::uint32_t> in;
    in.reserve(targets.size());
    in.push_back(kStartNode.value);
    for (std::size_t t = 0; t + 1 < targets.size(); ++t) in.push_back(targets[t]);
    return in;
}

SessionPathModel::Example SessionPathModel::make_example(nn::Vector input, const Path& path) {
    Example ex{std::move(input), {}};
    for (auto n : path.nodes()) ex.targets.push_back(n.value);
    ex.targets.push_back(kEndNode.value);
    return ex;
}

double SessionPathModel::run(std::span<const Example* const> batch, bool with_gradient) {
    const auto B = static_cast<Eigen::Index>(batch.size());
    if (B == 0) return 0.0;
    nn::Matrix x(static_cast<Eigen::Index>(input_dim()), B);
    std::size_t T = 0;
    for (Eigen::Index b = 0; b < B; ++b) {
        const auto& ex = *batch[static_cast<std::size_t>(b)];
        if (ex.input.size() != x.rows())
            throw Error("sessionpath: example input has " + std::to_string(ex.input.size()) + " entries, model expects " +
                        std::to_string(x.rows()));
        if (ex.targets.empty() || ex.targets.back() != kEndNode.value)
            throw Error("sessionpath: target sequence must end with END");
        x.col(b) = ex.input;
        T = std::max(T, ex.targets.size());
    }

    std::vector<std::vector<std::uint32_t>> step_inputs(T, std::vector<std::uint32_t>(static_cast<std::size_t>(B)));
    std::vector<std::uint32_t> targets(T * static_cast<std::size_t>(B), kEndNode.value);
    std::vector<double> mask(T * static_cast<std::size_t>(B), 0.0);
    for (std::size_t b = 0; b < static_cast<std::size_t>(B); ++b) {
        const auto& tg = batch[b]->targets;
        const auto inputs = decoder_inputs(tg);
        for (std::size_t t = 0; t < T; ++t) {
            const std::size_t col = t * static_cast<std::size_t>(B) + b;
            if (t < tg.size()) {
                step_inputs[t][b] = inputs[t];
                targets[col] = tg[t];
                mask[col] = 1.0;
            } else {
                step_inputs[t][b] = kEndNode.value;
            }
        }
    }

    nn::DenseLayer::Cache enc_cache, hh_cache, hc_cache, out_cache;
    nn::LstmLayer::Cache lstm_cache;
    nn::Matrix encoded = encoder_.forward(x, enc_cache);
    nn::Matrix h0 = head_h_.forward(encoded, hh_cache);
    nn::Matrix c0 = head_c_.forward(encoded, hc_cache);
    // Inputs are node lookups, so W_in x_t is a column of W_in * table.
    const nn::Matrix projected = lstm_.w_input.value * tokens_.table.value;
    std::vector<nn::Matrix> zxs(T, nn::Matrix(projected.rows(), B));
    for (std::size_t t = 0; t < T; ++t)
        for (Eigen::Index b = 0; b < B; ++b) zxs[t].col(b) = projected.col(step_inputs[t][static_cast<std::size_t>(b)]);
    auto hs = lstm_.forward_projected(zxs, h0, c0, lstm_cache);

    const auto H = static_cast<Eigen::Index>(arch_.hidden);
    nn::Matrix all_h(H, static_cast<Eigen::Index>(T) * B);
    for (std::size_t t = 0; t < T; ++t) all_h.middleCols(static_cast<Eigen::Index>(t) * B, B) = hs[t];
    nn::Matrix logits = output_.forward(all_h, out_cache);

    const double scale = 1.0 / static_cast<double>(B);
    nn::Matrix dlogits;
    const double loss = nn::softmax_cross_entropy(logits, targets, mask, scale, dlogits) * scale;
    if (!with_gradient) return loss;

    nn::Matrix dh_all = output_.backward(dlogits, out_cache);
    std::vector<nn::Matrix> dhs(T);
    for (std::size_t t = 0; t < T; ++t) dhs[t] = dh_all.middleCols(static_cast<Eigen::Index>(t) * B, B);
    auto g = lstm_.backward(dhs, lstm_cache);
    nn::Matrix dprojected = nn::Matrix::Zero(projected.rows(), projected.cols());
    for (std::size_t t = 0; t < T; ++t)
        for (Eigen::Index b = 0; b < B; ++b) dprojected.col(step_inputs[t][static_cast<std::size_t>(b)]) += g.dzs[t].col(b);
    lstm_.w_input.grad.noalias() += dprojected * tokens_.table.value.transpose();
    tokens_.table.grad.noalias() += lstm_.w_input.value.transpose() * dprojected;
    nn::Matrix d_encoded = head_h_.backward(g.dh0, hh_cache);
    d_encoded += head_c_.backward(g.dc0, hc_cache);
    encoder_.backward(d_encoded, enc_cache);
    return loss;
}

double SessionPathModel::loss_and_gradient(std::span<const Example* const> batch) { return run(batch, true); }

double SessionPathModel::loss(std::span<const Example> set) {
    if (set.empty()) return 0.0;
    constexpr std::size_t kChunk = 256;
    double total = 0.0;
    std::vector<const Example*> chunk;
    for (std::size_t start = 0; start < set.size(); start += kChunk) {
        chunk.clear();
        for (std::size_t i = start; i < std::min(set.size(), start + kChunk); ++i) chunk.push_back(&set[i]);
        total += run(chunk, false) * static_cast<double>(chunk.size());
    }
    return total / static_cast<double>(set.size());
}

PathPrediction SessionPathModel::generate(const nn::Vector& input) const {
    if (input.size() != static_cast<Eigen::Index>(input_dim()))
        throw Error("sessionpath: input has " + std::to_string(input.size()) + " entries, model expects " +
                    std::to_string(input_dim()));
    nn::Matrix encoded = encoder_.infer(input);
    nn::Matrix h = head_h_.infer(encoded);
    nn::Matrix c = head_c_.infer(encoded);
    std::uint32_t token = kStartNode.value;
    PathPrediction pred;
    while (pred.nodes.depth() < max_generation_length_) {
        const std::uint32_t ids[1] = {token};
        lstm_.step(tokens_.forward(ids), h, c);
        nn::Matrix p = nn::softmax(output_.infer(h));
        Eigen::Index best = 0;
        p.col(0).maxCoeff(&best);
        const auto next = static_cast<std::uint32_t>(best);
        if (next == kEndNode.value || next == kStartNode.value) return pred;
        std::vector<double> dist(p.data(), p.data() + p.size());
        pred.step_gini.push_back(gini(dist));
        pred.step_distributions.push_back(std::move(dist));
        pred.nodes.push_back(NodeId{next});
        token = next;
    }
    pred.hit_max_length = true;
    return pred;
}

SessionPathTraining sp_train(const std::vector<LabeledExample>& train, const FeatureEncoder& features,
                             const TaxonomyTree& tree, const nn::TrainConfig& config,
                             const SessionPathArchitecture& arch) {
    config.validate();
    auto [fit, held_out] = holdout_tail(train, config.validation_fraction);
    auto encode = [&](const std::vector<LabeledExample>& src) {
        std::vector<SessionPathModel::Example> out;
        out.reserve(src.size());
        for (const auto& ex : src) {
            for (auto n : ex.target_path.nodes())
                if (n.value < kFirstCatalogNode || n.value >= tree.vocabulary_size())
                    throw Error("sessionpath: target node outside the vocabulary");
            out.push_back(SessionPathModel::make_example(features.encode(ex.query, ex.session_products), ex.target_path));
        }
        return out;
    };
    auto fit_examples = encode(fit);
    auto val_examples = encode(held_out);
    SessionPathModel model(features.input_dim(), tree.vocabulary_size(), tree.max_depth(), arch, config.seed);
    auto history = nn::train_loop(model, std::span<const SessionPathModel::Example>(fit_examples),
                                  std::span<const SessionPathModel::Example>(val_examples), config);
    return {std::move(model), std::move(history)};
}

PathPrediction sp_generate(const SessionPathModel& model, const FeatureEncoder& features, const std::string& query,
                           std::span<const ProductId> session) {
    return model.generate(features.encode(query, session));
}

void save_sessionpath(const std::filesystem::path& file, SessionPathModel& model, const FeatureEncoder& features,
                      const TaxonomyTree& tree, const nn::TrainConfig& config) {
    auto j = detail::checkpoint_header("sessionpath", features, tree, config);
    const auto& a = model.architecture();
    j["architecture"] = {{"encoder_width", a.encoder_width}, {"hidden", a.hidden}, {"token_dim", a.token_dim}};
    j["parameters"] = nn::parameters_to_json(model.parameters());
    nn::write_json_file(file, j);
}

SessionPathModel load_sessionpath(const std::filesystem::path& file, const FeatureEncoder& features,
                                  const TaxonomyTree& tree) {
    auto j = nn::read_json_file(file);
    detail::check_checkpoint(j, "sessionpath", features, tree);
    SessionPathArchitecture a;
    const auto& ja = j.at("architecture");
    a.encoder_width = ja.at("encoder_width").get<std::size_t>();
    a.hidden = ja.at("hidden").get<std::size_t>();
    a.token_dim = ja.at("token_dim").get<std::size_t>();
    SessionPathModel model(features.input_dim(), tree.vocabulary_size(), j.at("max_depth").get<std::size_t>(), a, 0);
    nn::parameters_from_json(j.at("parameters"), model.parameters());
    return model;
}

CheckpointInfo read_checkpoint_info(const std::filesystem::path& file) {
    auto j = nn::read_json_file(file);
    if (j.value("format", std::string{}) != detail::kCheckpointFormat) throw Error("not a facetpath checkpoint");
    CheckpointInfo info;
    info.model = j.at("model").get<std::string>();
    info.query_encoding = query_encoding_from_string(j.at("features").at("query_encoding").get<std::string>());
    info.use_session = j.at("features").at("use_session").get<bool>();
    return info;
}

}  // namespace facetpath
