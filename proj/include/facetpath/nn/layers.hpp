#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "facetpath/nn/tensor.hpp"

namespace facetpath::nn {

enum class Activation { identity, tanh, relu, softmax };

// y = act(W x + b). Forward stores what backward needs in a caller-owned
// cache, so one layer can be applied several times per batch.
class DenseLayer {
public:
    struct Cache {
        Matrix input;
        Matrix output;
    };

    DenseLayer() = default;
    DenseLayer(std::size_t in, std::size_t out, Activation activation, std::mt19937_64& rng,
               const std::string& name = "dense");

    Matrix forward(const Matrix& x, Cache& cache) const;
    Matrix infer(const Matrix& x) const;
    // Accumulates parameter gradients and returns dL/dx.
    Matrix backward(const Matrix& dy, const Cache& cache);

    std::size_t in_features() const { return static_cast<std::size_t>(weight.value.cols()); }
    std::size_t out_features() const { return static_cast<std::size_t>(weight.value.rows()); }
    Activation activation() const { return activation_; }
    std::vector<Parameter*> parameters() { return {&weight, &bias}; }

    Parameter weight;  // out x in
    Parameter bias;    // out x 1

private:
    Activation activation_ = Activation::identity;
};

// Column-wise numerically stable softmax.
Matrix softmax(const Matrix& logits);

// Single LSTM layer, gates stacked as [input, forget, candidate, output].
class LstmLayer {
public:
    struct Step {
        Matrix x, h_prev, c_prev;
        Matrix i, f, g, o, c, tanh_c;
    };
    struct Cache {
        std::vector<Step> steps;
        bool projected = false;
    };
    struct Gradients {
        std::vector<Matrix> dxs;
        std::vector<Matrix> dzs;  // pre-activation gate gradients, filled for projected inputs
        Matrix dh0, dc0;
    };

    LstmLayer() = default;
    LstmLayer(std::size_t in, std::size_t hidden, std::mt19937_64& rng, const std::string& name = "lstm");

    std::vector<Matrix> forward(const std::vector<Matrix>& xs, const Matrix& h0, const Matrix& c0,
                                Cache& cache) const;
    // Same recurrence with the input term W_in x_t supplied by the caller, e.g.
    // gathered from W_in * embedding_table when inputs are symbol lookups.
    std::vector<Matrix> forward_projected(const std::vector<Matrix>& zxs, const Matrix& h0, const Matrix& c0,
                                          Cache& cache) const;
    // dhs[t] is dL/dh_t; gradients flowing out of the final cell state are zero.
    // After forward_projected, w_input gets no gradient here; dzs carries it back.
    Gradients backward(const std::vector<Matrix>& dhs, const Cache& cache);
    // One inference step, updates h and c in place.
    void step(const Matrix& x, Matrix& h, Matrix& c) const;

    std::size_t hidden_size() const { return static_cast<std::size_t>(w_hidden.value.cols()); }
    std::size_t input_size() const { return static_cast<std::size_t>(w_input.value.cols()); }
    std::vector<Parameter*> parameters() { return {&w_input, &w_hidden, &bias}; }

    Parameter w_input;   // 4H x in
    Parameter w_hidden;  // 4H x H
    Parameter bias;      // 4H x 1, forget slice initialised to 1

private:
    void gates(const Matrix& x, const Matrix& h_prev, const Matrix& c_prev, Step& s) const;
    void gates_from(Matrix z, const Matrix& h_prev, const Matrix& c_prev, Step& s) const;
};

// Learned lookup table, one column per symbol.
class EmbeddingLayer {
public:
    EmbeddingLayer() = default;
    EmbeddingLayer(std::size_t vocab, std::size_t dim, std::mt19937_64& rng, const std::string& name = "embedding");

    Matrix forward(std::span<const std::uint32_t> ids) const;
    void backward(std::span<const std::uint32_t> ids, const Matrix& dy);

    std::size_t vocab_size() const { return static_cast<std::size_t>(table.value.cols()); }
    std::size_t dim() const { return static_cast<std::size_t>(table.value.rows()); }
    std::vector<Parameter*> parameters() { return {&table}; }

    Parameter table;  // dim x vocab
};

}  // namespace facetpath::nn
