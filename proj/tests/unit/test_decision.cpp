#include <random>

#include "doctest.h"
#include "fixtures.hpp"

using namespace facetpath;

TEST_CASE("gini reference values") {
    for (std::size_t n = 1; n <= 50; ++n) {
        std::vector<double> u(n, 1.0 / static_cast<double>(n));
        CHECK(gini(u) == doctest::Approx(0.0).epsilon(1e-12));
        std::vector<double> hot(n, 0.0);
        hot[n / 2] = 1.0;
        CHECK(gini(hot) == doctest::Approx(double(n - 1) / double(n)).epsilon(1e-12));
    }
    std::vector<double> x = {0.7, 0.1, 0.1, 0.1};
    CHECK(gini(x) == doctest::Approx(0.45).epsilon(1e-12));
    CHECK_THROWS_AS(gini(std::vector<double>{}), Error);
}

TEST_CASE("pairwise and sorted gini agree") {
    std::mt19937_64 rng(7);
    std::gamma_distribution<double> g(0.5, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> d(2 + trial % 60);
        double s = 0;
        for (auto& v : d) s += (v = g(rng));
        for (auto& v : d) v /= s;
        CHECK(std::abs(gini(d) - gini_sorted(d)) < 1e-9);
    }
}

TEST_CASE("distribution validation") {
    CHECK_NOTHROW(validate_distribution(std::vector<double>{0.5, 0.5}));
    CHECK_THROWS(validate_distribution(std::vector<double>{0.5, 0.6}));
    CHECK_THROWS(validate_distribution(std::vector<double>{1.5, -0.5}));
}

TEST_CASE("truncation keeps the longest confident prefix") {
    auto tree = fixtures::worked_example_tree();
    auto path = tree.parse_path("sport/basketball/lebron");
    PathPrediction p;
    p.nodes = path;
    p.step_gini = {0.99, 0.5, 0.995};
    p.step_distributions.assign(3, std::vector<double>(tree.vocabulary_size(), 0.0));
    CHECK(truncate_prediction(p, {0.4, false}) == path);
    CHECK(truncate_prediction(p, {0.6, false}) == tree.parse_path("sport"));
    CHECK(truncate_prediction(p, {0.999, false}).empty());
    CHECK(truncate_prediction(p, {0.0, false}) == path);
    CHECK(decision_rule(0.7, {0.7, false}) == 1);
    CHECK(decision_rule(0.69, {0.7, false}) == 0);
}

TEST_CASE("truncation is monotone in the threshold") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        auto p = fixtures::random_prediction(rng, 12, 5);
        double a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        auto lo = truncate_prediction(p, {a, false});
        auto hi = truncate_prediction(p, {b, false});
        CHECK(hi.is_prefix_of(lo));
        CHECK(lo.is_prefix_of(p.nodes));
    }
}

TEST_CASE("safety check drops paths the taxonomy lacks") {
    auto tree = fixtures::worked_example_tree();
    PathPrediction p;
    p.nodes = Path({tree.find_node("sport", 1), tree.find_node("running", 2), tree.find_node("lebron", 3)});
    p.step_gini = {1.0, 1.0, 1.0};
    p.step_distributions.assign(3, std::vector<double>(tree.vocabulary_size(), 0.0));
    auto off = decide(p, {0.5, false}, tree);
    CHECK_FALSE(off.valid);
    CHECK(off.path == p.nodes);
    auto on = decide(p, {0.5, true}, tree);
    CHECK(on.dropped);
    CHECK(on.path.empty());
    p.step_gini = {1.0, 1.0, 0.1};
    auto shortened = decide(p, {0.5, true}, tree);
    CHECK(shortened.valid);
    CHECK(shortened.path == tree.parse_path("sport/running"));
}
