#include "facetpath/nn/optim.hpp"

namespace facetpath::nn {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !(time_decay >= 0.0) || batch_size == 0 || max_epochs == 0 || patience == 0)
        throw Error("train config: rates, batch size, epochs and patience must be positive");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
        throw Error("train config: validation_fraction must lie in (0, 1)");
}

CrossEntropy cross_entropy(const Vector& probabilities, std::size_t target) {
    constexpr double kFloor = 1e-12;
    if (target >= static_cast<std::size_t>(probabilities.size()))
        throw Error("cross_entropy: target " + std::to_string(target) + " outside " +
                    std::to_string(probabilities.size()) + " classes");
    CrossEntropy out;
    double p = probabilities(static_cast<Eigen::Index>(target));
    if (p < kFloor) {
        p = kFloor;
        out.clamped = true;
    }
    out.loss = -std::log(p);
    out.grad_logits = probabilities;
    out.grad_logits(static_cast<Eigen::Index>(target)) -= 1.0;
    return out;
}

double softmax_cross_entropy(const Matrix& logits, std::span<const std::uint32_t> targets,
                             std::span<const double> mask, double scale, Matrix& grad) {
    if (targets.size() != static_cast<std::size_t>(logits.cols()) || mask.size() != targets.size())
        throw Error("softmax_cross_entropy: " + std::to_string(logits.cols()) + " columns but " +
                    std::to_string(targets.size()) + " targets / " + std::to_string(mask.size()) + " mask entries");
    grad.resize(logits.rows(), logits.cols());
    double total = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        const double m = mask[static_cast<std::size_t>(c)];
        if (m == 0.0) {
            grad.col(c).setZero();
            continue;
        }
        const double mx = logits.col(c).maxCoeff();
        auto shifted = (logits.col(c).array() - mx).matrix();
        const double log_z = std::log(shifted.array().exp().sum());
        const auto t = static_cast<Eigen::Index>(targets[static_cast<std::size_t>(c)]);
        total += m * (log_z - shifted(t));
        grad.col(c) = (shifted.array() - log_z).exp().matrix() * (m * scale);
        grad(t, c) -= m * scale;
    }
    return total;
}

void Adam::step(std::span<Parameter* const> params) {
    if (m_.empty()) {
        for (auto* p : params) {
            m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
            v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
        }
    }
    if (m_.size() != params.size()) throw Error("adam: parameter list changed between steps");
    ++t_;
    const double lr = decayed_learning_rate(lr_, decay_, t_);
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = *params[k];
        m_[k] = kBeta1 * m_[k] + (1.0 - kBeta1) * p.grad;
        v_[k] = kBeta2 * v_[k] + (1.0 - kBeta2) * p.grad.cwiseProduct(p.grad);
        p.value.array() -= lr * (m_[k].array() / bc1) / ((v_[k].array() / bc2).sqrt() + kEpsilon);
    }
}

}  // namespace facetpath::nn
