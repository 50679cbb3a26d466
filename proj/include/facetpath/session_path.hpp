#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "facetpath/eventlog.hpp"
#include "facetpath/features.hpp"
#include "facetpath/nn/layers.hpp"
#include "facetpath/nn/optim.hpp"
#include "facetpath/prediction.hpp"

namespace facetpath {

struct SessionPathArchitecture {
    std::size_t encoder_width = 256;
    std::size_t hidden = 128;  // LSTM cells; also the width of both state heads
    std::size_t token_dim = 64;
};

// Encoder-decoder path generator.
//   encoder: [query ; session] -> dense(tanh) -> two linear heads -> (h0, c0)
//   decoder: node embedding -> LSTM -> dense -> softmax over the node vocabulary
// Training uses teacher forcing on START n1 .. nk -> n1 .. nk END.
class SessionPathModel {
public:
    struct Example {
        nn::Vector input;
        std::vector<std::uint32_t> targets;  // path node ids followed by END
    };

    SessionPathModel(std::size_t input_dim, std::size_t vocabulary_size, std::size_t max_depth,
                     const SessionPathArchitecture& arch, std::uint64_t seed);

    double loss_and_gradient(std::span<const Example* const> batch);
    double loss(std::span<const Example> set);
    std::vector<nn::Parameter*> parameters();

    // Greedy decoding from START until END (or START) is the argmax, or
    // max_generation_length nodes have been emitted.
    PathPrediction generate(const nn::Vector& input) const;

    std::size_t input_dim() const { return encoder_.in_features(); }
    std::size_t vocabulary_size() const { return output_.out_features(); }
    std::size_t max_generation_length() const { return max_generation_length_; }
    const SessionPathArchitecture& architecture() const { return arch_; }

    // Teacher-forcing inputs for a target sequence: START followed by all but the last target.
    static std::vector<std::uint32_t> decoder_inputs(std::span<const std::uint32_t> targets);
    static Example make_example(nn::Vector input, const Path& path);

private:
    double run(std::span<const Example* const> batch, bool with_gradient);

    SessionPathArchitecture arch_;
    std::size_t max_generation_length_;
    nn::DenseLayer encoder_;
    nn::DenseLayer head_h_;
    nn::DenseLayer head_c_;
    nn::EmbeddingLayer tokens_;
    nn::LstmLayer lstm_;
    nn::DenseLayer output_;
};

struct SessionPathTraining {
    SessionPathModel model;
    nn::TrainHistory history;
};

SessionPathTraining sp_train(const std::vector<LabeledExample>& train, const FeatureEncoder& features,
                             const TaxonomyTree& tree, const nn::TrainConfig& config,
                             const SessionPathArchitecture& arch = {});

PathPrediction sp_generate(const SessionPathModel& model, const FeatureEncoder& features, const std::string& query,
                           std::span<const ProductId> session);

void save_sessionpath(const std::filesystem::path& file, SessionPathModel& model, const FeatureEncoder& features,
                      const TaxonomyTree& tree, const nn::TrainConfig& config);
SessionPathModel load_sessionpath(const std::filesystem::path& file, const FeatureEncoder& features,
                                  const TaxonomyTree& tree);

// Reads just the header of a neural checkpoint: model kind, query encoding, session flag.
struct CheckpointInfo {
    std::string model;
    QueryEncoding query_encoding = QueryEncoding::search2prod2vec;
    bool use_session = true;
};
CheckpointInfo read_checkpoint_info(const std::filesystem::path& file);

}  // namespace facetpath
