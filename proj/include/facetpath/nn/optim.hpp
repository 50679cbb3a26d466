#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "facetpath/nn/tensor.hpp"

namespace facetpath::nn {

struct TrainConfig {
    double learning_rate = 0.001;
    double time_decay = 0.00001;
    std::size_t batch_size = 128;
    std::size_t max_epochs = 300;
    std::size_t patience = 20;
    double validation_fraction = 0.1;
    std::uint64_t seed = 1;

    void validate() const;
};

struct CrossEntropy {
    double loss = 0.0;
    Vector grad_logits;  // p - one_hot(target)
    bool clamped = false;
};

// -log p[target] for a distribution p = softmax(logits).
CrossEntropy cross_entropy(const Vector& probabilities, std::size_t target);

// Softmax over each column of `logits` followed by cross-entropy against
// `targets`; columns with mask 0 contribute nothing. Writes dL/dlogits scaled
// by `scale` into `grad`.
double softmax_cross_entropy(const Matrix& logits, std::span<const std::uint32_t> targets,
                             std::span<const double> mask, double scale, Matrix& grad);

inline double decayed_learning_rate(double lr0, double decay, std::size_t t) {
    return lr0 / (1.0 + decay * static_cast<double>(t));
}

// Adam (beta1 0.9, beta2 0.999, eps 1e-8) with lr_t = lr / (1 + decay * t),
// t counted in updates starting at 1.
class Adam {
public:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEpsilon = 1e-8;

    Adam(double learning_rate, double time_decay) : lr_(learning_rate), decay_(time_decay) {}

    void step(std::span<Parameter* const> params);
    std::size_t steps_taken() const { return t_; }
    double current_learning_rate() const { return decayed_learning_rate(lr_, decay_, t_); }

private:
    double lr_;
    double decay_;
    std::size_t t_ = 0;
    std::vector<Matrix> m_, v_;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double validation_loss = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_validation_loss = std::numeric_limits<double>::infinity();
    bool stopped_early = false;
};

// Mini-batch training with early stopping on validation loss. The model
// exposes parameters(), loss_and_gradient(batch of const Example*) returning
// the mean batch loss with gradients accumulated, and loss(span<const Example>).
// Restores the parameters of the best validation epoch before returning.
template <class Model, class Example>
TrainHistory train_loop(Model& model, std::span<const Example> train, std::span<const Example> validation,
                        const TrainConfig& config) {
    config.validate();
    if (validation.empty()) throw Error("train_loop: validation set is empty");
    if (train.empty()) throw Error("train_loop: training set is empty");

    std::vector<Parameter*> params = model.parameters();
    Adam adam(config.learning_rate, config.time_decay);
    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    TrainHistory history;
    std::vector<Matrix> best;
    for (auto* p : params) best.push_back(p->value);
    std::size_t since_best = 0;
    std::vector<const Example*> batch;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(&train[order[i]]);
            for (auto* p : params) p->zero_grad();
            total += model.loss_and_gradient(std::span<const Example* const>(batch)) * static_cast<double>(batch.size());
            adam.step(params);
        }
        EpochRecord rec{epoch, total / static_cast<double>(train.size()), model.loss(validation)};
        history.epochs.push_back(rec);
        if (rec.validation_loss < history.best_validation_loss) {
            history.best_validation_loss = rec.validation_loss;
            history.best_epoch = epoch;
            for (std::size_t i = 0; i < params.size(); ++i) best[i] = params[i]->value;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            history.stopped_early = true;
            break;
        }
    }
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
    return history;
}

}  // namespace facetpath::nn
