#include <random>

#include "doctest.h"
#include "facetpath/mlp.hpp"
#include "facetpath/nn/grad_check.hpp"
#include "facetpath/nn/layers.hpp"
#include "facetpath/nn/optim.hpp"
#include "facetpath/session_path.hpp"

using namespace facetpath;
using namespace facetpath::nn;

namespace {

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
    std::normal_distribution<double> nd;
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
    return m;
}

constexpr double kTolerance = 1e-4;

}  // namespace

TEST_CASE("dense layer gradients") {
    for (auto act : {Activation::identity, Activation::tanh, Activation::relu, Activation::softmax}) {
        std::mt19937_64 rng(1);
        DenseLayer layer(5, 4, act, rng);
        Parameter x("x", 5, 3);
        x.value = random_matrix(rng, 5, 3);
        const Matrix r = random_matrix(rng, 4, 3);
        auto loss = [&] {
            DenseLayer::Cache c;
            return (layer.forward(x.value, c).array() * r.array()).sum();
        };
        for (auto* p : layer.parameters()) p->zero_grad();
        DenseLayer::Cache cache;
        layer.forward(x.value, cache);
        x.grad = layer.backward(r, cache);
        std::vector<Parameter*> params = layer.parameters();
        params.push_back(&x);
        CHECK(check_gradients(params, loss).max_relative_error < kTolerance);
    }
}

TEST_CASE("lstm gradients, plain and projected inputs") {
    std::mt19937_64 rng(2);
    LstmLayer lstm(3, 4, rng);
    std::vector<Parameter> xs;
    for (int t = 0; t < 3; ++t) {
        xs.emplace_back("x" + std::to_string(t), 3, 2);
        xs.back().value = random_matrix(rng, 3, 2);
    }
    Parameter h0("h0", 4, 2), c0("c0", 4, 2);
    h0.value = random_matrix(rng, 4, 2);
    c0.value = random_matrix(rng, 4, 2);
    std::vector<Matrix> rs;
    for (int t = 0; t < 3; ++t) rs.push_back(random_matrix(rng, 4, 2));

    auto inputs = [&] {
        std::vector<Matrix> v;
        for (auto& x : xs) v.push_back(x.value);
        return v;
    };
    auto objective = [&](const std::vector<Matrix>& hs) {
        double s = 0;
        for (std::size_t t = 0; t < hs.size(); ++t) s += (hs[t].array() * rs[t].array()).sum();
        return s;
    };

    std::vector<Parameter*> params = lstm.parameters();
    for (auto& x : xs) params.push_back(&x);
    params.push_back(&h0);
    params.push_back(&c0);

    SUBCASE("plain") {
        for (auto* p : params) p->zero_grad();
        LstmLayer::Cache cache;
        lstm.forward(inputs(), h0.value, c0.value, cache);
        auto g = lstm.backward(rs, cache);
        for (std::size_t t = 0; t < xs.size(); ++t) xs[t].grad = g.dxs[t];
        h0.grad = g.dh0;
        c0.grad = g.dc0;
        auto loss = [&] {
            LstmLayer::Cache c;
            return objective(lstm.forward(inputs(), h0.value, c0.value, c));
        };
        CHECK(check_gradients(params, loss).max_relative_error < kTolerance);
    }
    SUBCASE("projected matches plain") {
        std::vector<Matrix> zs;
        for (auto& x : inputs()) zs.push_back(lstm.w_input.value * x);
        LstmLayer::Cache a, b;
        auto ha = lstm.forward(inputs(), h0.value, c0.value, a);
        auto hb = lstm.forward_projected(zs, h0.value, c0.value, b);
        for (std::size_t t = 0; t < ha.size(); ++t) CHECK((ha[t] - hb[t]).cwiseAbs().maxCoeff() < 1e-14);

        for (auto* p : params) p->zero_grad();
        auto g = lstm.backward(rs, b);
        REQUIRE(g.dzs.size() == xs.size());
        for (std::size_t t = 0; t < xs.size(); ++t) {
            lstm.w_input.grad += g.dzs[t] * xs[t].value.transpose();
            xs[t].grad = lstm.w_input.value.transpose() * g.dzs[t];
        }
        h0.grad = g.dh0;
        c0.grad = g.dc0;
        auto loss = [&] {
            LstmLayer::Cache c;
            return objective(lstm.forward(inputs(), h0.value, c0.value, c));
        };
        CHECK(check_gradients(params, loss).max_relative_error < kTolerance);
    }
}

TEST_CASE("embedding layer gradients accumulate repeated ids") {
    std::mt19937_64 rng(3);
    EmbeddingLayer emb(6, 3, rng);
    std::vector<std::uint32_t> ids = {1, 4, 1, 0};
    const Matrix r = random_matrix(rng, 3, 4);
    emb.table.zero_grad();
    emb.backward(ids, r);
    auto loss = [&] { return (emb.forward(ids).array() * r.array()).sum(); };
    std::vector<Parameter*> params = emb.parameters();
    CHECK(check_gradients(params, loss).max_relative_error < kTolerance);
}

TEST_CASE("session path model gradients") {
    SessionPathModel m(7, 9, 3, {6, 5, 4}, 3);
    std::mt19937_64 rng(5);
    std::vector<SessionPathModel::Example> ex;
    for (std::vector<std::uint32_t> t : {std::vector<std::uint32_t>{2, 5, 1}, {3, 1}, {4, 6, 8, 1}})
        ex.push_back({random_matrix(rng, 7, 1).col(0), t});
    std::vector<const SessionPathModel::Example*> batch;
    for (auto& e : ex) batch.push_back(&e);
    auto params = m.parameters();
    for (auto* p : params) p->zero_grad();
    m.loss_and_gradient(batch);
    auto r = check_gradients(params, [&] { return m.loss(ex); });
    CHECK(r.max_relative_error < kTolerance);
    CHECK(r.checked > 0);
}

TEST_CASE("mlp model gradients") {
    TaxonomyTree tree = TaxonomyTree::from_rows({{"a", {"x", "y"}, ""}, {"b", {"x", "z"}, ""}, {"c", {"w"}, ""}});
    MlpModel m(5, {*tree.path_of("a"), *tree.path_of("b"), *tree.path_of("c")}, {4}, 2);
    std::mt19937_64 rng(6);
    std::vector<MlpModel::Example> ex;
    for (std::uint32_t l : {0u, 1u, 2u, 1u}) ex.push_back({random_matrix(rng, 5, 1).col(0), l});
    std::vector<const MlpModel::Example*> batch;
    for (auto& e : ex) batch.push_back(&e);
    auto params = m.parameters();
    for (auto* p : params) p->zero_grad();
    m.loss_and_gradient(batch);
    CHECK(check_gradients(params, [&] { return m.loss(ex); }).max_relative_error < kTolerance);
}

TEST_CASE("adam learning rate decays with the update count") {
    CHECK(decayed_learning_rate(0.001, 1e-5, 0) == 0.001);
    CHECK(decayed_learning_rate(0.001, 1e-5, 100000) == doctest::Approx(0.0005));
    Parameter p("p", 1, 1);
    p.value(0, 0) = 1.0;
    Adam adam(0.1, 0.0);
    std::vector<Parameter*> params = {&p};
    p.grad(0, 0) = 2.0;
    adam.step(params);
    // The first bias-corrected Adam step moves by lr * sign(grad).
    CHECK(p.value(0, 0) == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(adam.steps_taken() == 1);
}

TEST_CASE("cross entropy") {
    Vector p(3);
    p << 0.2, 0.5, 0.3;
    auto ce = cross_entropy(p, 1);
    CHECK(ce.loss == doctest::Approx(-std::log(0.5)));
    CHECK(ce.grad_logits(1) == doctest::Approx(-0.5));
    CHECK(ce.grad_logits(0) == doctest::Approx(0.2));
    CHECK(ce.grad_logits.sum() == doctest::Approx(0.0));
}

TEST_CASE("train config validation") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    c.batch_size = 0;
    CHECK_THROWS(c.validate());
    c = {};
    c.learning_rate = -1;
    CHECK_THROWS(c.validate());
}
