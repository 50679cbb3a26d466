#include "facetpath/nn/layers.hpp"

#include <cmath>

namespace facetpath::nn {

void glorot_uniform(Matrix& m, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    // Fill in column-major order so results do not depend on Eigen internals.
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = dist(rng);
}

Matrix softmax(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        const double mx = logits.col(c).maxCoeff();
        out.col(c) = (logits.col(c).array() - mx).exp();
        out.col(c) /= out.col(c).sum();
    }
    return out;
}

namespace {

// Eigen evaluates double tanh one scalar at a time; this form uses the
// vectorized exp and is an order of magnitude faster. Saturates to +-1.
Matrix tanh(const Matrix& z) { return (1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0)).matrix(); }

Matrix apply(Activation a, Matrix z) {
    switch (a) {
        case Activation::identity: return z;
        case Activation::tanh: return tanh(z);
        case Activation::relu: return z.array().max(0.0).matrix();
        case Activation::softmax: return softmax(z);
    }
    return z;
}

Matrix sigmoid(const Matrix& z) { return (1.0 / (1.0 + (-z.array()).exp())).matrix(); }

}  // namespace

DenseLayer::DenseLayer(std::size_t in, std::size_t out, Activation activation, std::mt19937_64& rng,
                       const std::string& name)
    : weight(name + ".weight", static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)),
      bias(name + ".bias", static_cast<Eigen::Index>(out), 1),
      activation_(activation) {
    glorot_uniform(weight.value, rng);
}

Matrix DenseLayer::infer(const Matrix& x) const {
    if (x.rows() != weight.value.cols())
        throw Error("dense layer '" + weight.name + "': input has " + std::to_string(x.rows()) +
                    " rows, layer expects " + std::to_string(weight.value.cols()));
    Matrix z = weight.value * x;
    z.colwise() += bias.value.col(0);
    return apply(activation_, std::move(z));
}

Matrix DenseLayer::forward(const Matrix& x, Cache& cache) const {
    cache.input = x;
    cache.output = infer(x);
    return cache.output;
}

Matrix DenseLayer::backward(const Matrix& dy, const Cache& cache) {
    if (dy.rows() != cache.output.rows() || dy.cols() != cache.output.cols())
        throw Error("dense layer '" + weight.name + "': gradient shape " + std::to_string(dy.rows()) + "x" +
                    std::to_string(dy.cols()) + " does not match output " + std::to_string(cache.output.rows()) +
                    "x" + std::to_string(cache.output.cols()));
    Matrix dz;
    const auto& y = cache.output;
    switch (activation_) {
        case Activation::identity: dz = dy; break;
        case Activation::tanh: dz = (dy.array() * (1.0 - y.array().square())).matrix(); break;
        case Activation::relu: dz = (dy.array() * (y.array() > 0.0).cast<double>()).matrix(); break;
        case Activation::softmax: {
            dz.resize(dy.rows(), dy.cols());
            for (Eigen::Index c = 0; c < dy.cols(); ++c) {
                const double dot = y.col(c).dot(dy.col(c));
                dz.col(c) = (y.col(c).array() * (dy.col(c).array() - dot)).matrix();
            }
            break;
        }
    }
    weight.grad.noalias() += dz * cache.input.transpose();
    bias.grad.col(0) += dz.rowwise().sum();
    return weight.value.transpose() * dz;
}

LstmLayer::LstmLayer(std::size_t in, std::size_t hidden, std::mt19937_64& rng, const std::string& name)
    : w_input(name + ".w_input", static_cast<Eigen::Index>(4 * hidden), static_cast<Eigen::Index>(in)),
      w_hidden(name + ".w_hidden", static_cast<Eigen::Index>(4 * hidden), static_cast<Eigen::Index>(hidden)),
      bias(name + ".bias", static_cast<Eigen::Index>(4 * hidden), 1) {
    glorot_uniform(w_input.value, rng);
    glorot_uniform(w_hidden.value, rng);
    const auto H = static_cast<Eigen::Index>(hidden);
    bias.value.block(H, 0, H, 1).setOnes();
}

void LstmLayer::gates(const Matrix& x, const Matrix& h_prev, const Matrix& c_prev, Step& s) const {
    const Eigen::Index H = w_hidden.value.cols();
    if (x.rows() != w_input.value.cols())
        throw Error("lstm '" + w_input.name + "': input has " + std::to_string(x.rows()) + " rows, expected " +
                    std::to_string(w_input.value.cols()));
    if (h_prev.rows() != H || c_prev.rows() != H || h_prev.cols() != x.cols() || c_prev.cols() != x.cols())
        throw Error("lstm '" + w_input.name + "': state shape mismatch, expected " + std::to_string(H) + "x" +
                    std::to_string(x.cols()));
    gates_from(w_input.value * x, h_prev, c_prev, s);
}

void LstmLayer::gates_from(Matrix z, const Matrix& h_prev, const Matrix& c_prev, Step& s) const {
    const Eigen::Index H = w_hidden.value.cols();
    if (z.rows() != 4 * H || z.cols() != h_prev.cols())
        throw Error("lstm '" + w_input.name + "': projected input shape mismatch");
    z.noalias() += w_hidden.value * h_prev;
    z.colwise() += bias.value.col(0);
    s.i = sigmoid(z.topRows(H));
    s.f = sigmoid(z.middleRows(H, H));
    s.g = tanh(z.middleRows(2 * H, H));
    s.o = sigmoid(z.bottomRows(H));
    s.c = (s.f.array() * c_prev.array() + s.i.array() * s.g.array()).matrix();
    s.tanh_c = tanh(s.c);
}

std::vector<Matrix> LstmLayer::forward(const std::vector<Matrix>& xs, const Matrix& h0, const Matrix& c0,
                                       Cache& cache) const {
    cache.steps.assign(xs.size(), {});
    cache.projected = false;
    std::vector<Matrix> hs;
    hs.reserve(xs.size());
    Matrix h = h0, c = c0;
    for (std::size_t t = 0; t < xs.size(); ++t) {
        auto& s = cache.steps[t];
        s.x = xs[t];
        s.h_prev = h;
        s.c_prev = c;
        gates(xs[t], h, c, s);
        c = s.c;
        h = (s.o.array() * s.tanh_c.array()).matrix();
        hs.push_back(h);
    }
    return hs;
}

std::vector<Matrix> LstmLayer::forward_projected(const std::vector<Matrix>& zxs, const Matrix& h0, const Matrix& c0,
                                                 Cache& cache) const {
    const Eigen::Index H = w_hidden.value.cols();
    if (h0.rows() != H || c0.rows() != H || h0.cols() != c0.cols())
        throw Error("lstm '" + w_input.name + "': initial state shape mismatch");
    cache.steps.assign(zxs.size(), {});
    cache.projected = true;
    std::vector<Matrix> hs;
    hs.reserve(zxs.size());
    Matrix h = h0, c = c0;
    for (std::size_t t = 0; t < zxs.size(); ++t) {
        auto& s = cache.steps[t];
        s.h_prev = h;
        s.c_prev = c;
        gates_from(zxs[t], h, c, s);
        c = s.c;
        h = (s.o.array() * s.tanh_c.array()).matrix();
        hs.push_back(h);
    }
    return hs;
}

LstmLayer::Gradients LstmLayer::backward(const std::vector<Matrix>& dhs, const Cache& cache) {
    if (dhs.size() != cache.steps.size()) throw Error("lstm backward: step count mismatch");
    const Eigen::Index H = w_hidden.value.cols();
    Gradients out;
    (cache.projected ? out.dzs : out.dxs).resize(dhs.size());
    if (dhs.empty()) return out;
    const Eigen::Index B = dhs.front().cols();
    Matrix dh_next = Matrix::Zero(H, B);
    Matrix dc_next = Matrix::Zero(H, B);
    Matrix dz(4 * H, B);
    for (std::size_t t = dhs.size(); t-- > 0;) {
        const auto& s = cache.steps[t];
        Matrix dh = dhs[t] + dh_next;
        Matrix dc = (dh.array() * s.o.array() * (1.0 - s.tanh_c.array().square())).matrix() + dc_next;
        dz.topRows(H) = (dc.array() * s.g.array() * s.i.array() * (1.0 - s.i.array())).matrix();
        dz.middleRows(H, H) = (dc.array() * s.c_prev.array() * s.f.array() * (1.0 - s.f.array())).matrix();
        dz.middleRows(2 * H, H) = (dc.array() * s.i.array() * (1.0 - s.g.array().square())).matrix();
        dz.bottomRows(H) = (dh.array() * s.tanh_c.array() * s.o.array() * (1.0 - s.o.array())).matrix();

        w_hidden.grad.noalias() += dz * s.h_prev.transpose();
        bias.grad.col(0) += dz.rowwise().sum();
        if (cache.projected) {
            out.dzs[t] = dz;
        } else {
            w_input.grad.noalias() += dz * s.x.transpose();
            out.dxs[t] = w_input.value.transpose() * dz;
        }
        dh_next = w_hidden.value.transpose() * dz;
        dc_next = (dc.array() * s.f.array()).matrix();
    }
    out.dh0 = std::move(dh_next);
    out.dc0 = std::move(dc_next);
    return out;
}

void LstmLayer::step(const Matrix& x, Matrix& h, Matrix& c) const {
    Step s;
    gates(x, h, c, s);
    c = s.c;
    h = (s.o.array() * s.tanh_c.array()).matrix();
}

EmbeddingLayer::EmbeddingLayer(std::size_t vocab, std::size_t dim, std::mt19937_64& rng, const std::string& name)
    : table(name + ".table", static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(vocab)) {
    glorot_uniform(table.value, rng);
}

Matrix EmbeddingLayer::forward(std::span<const std::uint32_t> ids) const {
    Matrix out(table.value.rows(), static_cast<Eigen::Index>(ids.size()));
    for (std::size_t b = 0; b < ids.size(); ++b) {
        if (ids[b] >= vocab_size())
            throw Error("embedding '" + table.name + "': id " + std::to_string(ids[b]) + " out of range " +
                        std::to_string(vocab_size()));
        out.col(static_cast<Eigen::Index>(b)) = table.value.col(ids[b]);
    }
    return out;
}

void EmbeddingLayer::backward(std::span<const std::uint32_t> ids, const Matrix& dy) {
    for (std::size_t b = 0; b < ids.size(); ++b) table.grad.col(ids[b]) += dy.col(static_cast<Eigen::Index>(b));
}

}  // namespace facetpath::nn
