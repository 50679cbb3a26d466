#include <set>

#include "doctest.h"
#include "facetpath/experiment.hpp"
#include "facetpath/text.hpp"
#include "fixtures.hpp"

using namespace facetpath;

TEST_CASE("summary uses the sample standard deviation") {
    std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
    auto s = summarize(v);
    CHECK(s.mean == 2.5);
    CHECK(s.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(summarize(std::vector<double>{0.7}).sd == 0.0);
    CHECK(format_metric({0.79, 0.01, 5}) == "0.790 (0.01)");
    CHECK(format_metric({0.79, 0.001, 5}) == "0.790");
    CHECK(format_metric({}) == "n/a");
}

TEST_CASE("context subset needs a session and a query that does not name the category") {
    auto tree = fixtures::worked_example_tree();
    std::vector<LabeledExample> test = {
        fixtures::example(tree, "lebron", "sport/basketball/lebron", {"P2"}),
        fixtures::example(tree, "sport shoes", "sport/basketball/lebron", {"P2"}),
        fixtures::example(tree, "lebron", "sport/basketball/lebron"),
    };
    CHECK(context_dependent_subset(test, tree) == std::vector<std::size_t>{0});
}

TEST_CASE("unseen queries match a brute-force set difference") {
    auto data = generate_synthetic(fixtures::small_synth(), 8);
    auto loaded = dataset_from_synthetic(data, 0.8);
    const auto& split = loaded.split;
    std::set<std::string> train;
    for (const auto& e : split.train) train.insert(normalize_query(e.query));
    std::vector<std::size_t> expected;
    for (std::size_t i = 0; i < split.test.size(); ++i)
        if (!train.contains(normalize_query(split.test[i].query))) expected.push_back(i);
    CHECK(unseen_queries(split.train, split.test) == expected);
    CHECK(split.unseen_test == expected);
}

TEST_CASE("experiment report is a pure function of data, config and seeds") {
    auto data = generate_synthetic(fixtures::small_synth(), 9);
    auto loaded = dataset_from_synthetic(data, 0.8);
    ExperimentConfig cfg;
    cfg.variants = {default_variants()[0], default_variants()[2]};
    cfg.fractions = {0.5, 1.0};
    cfg.seeds = {1, 2};
    cfg.prod2vec.dim = cfg.word2vec.dim = 8;
    cfg.prod2vec.epochs = cfg.word2vec.epochs = 2;
    cfg.train.max_epochs = 3;
    cfg.sessionpath = {16, 8, 4};
    auto a = run_experiment_suite(loaded.dataset(), cfg);
    auto b = run_experiment_suite(loaded.dataset(), cfg);
    CHECK(to_json(a, false) == to_json(b, false));

    REQUIRE(a.cells.size() == 4);
    for (const auto& c : a.cells) {
        CHECK_FALSE(c.failed);
        CHECK(c.seeds.size() == 2);
        for (const auto& [name, value] : c.seeds[0].metrics) {
            CAPTURE(name);
            CHECK(value >= 0.0);
            CHECK(value <= 1.0);
        }
    }
    CHECK(a.seen_test_examples + a.unseen_test_examples == a.test_examples);
    const auto* cm = a.cell("CM", 1.0);
    REQUIRE(cm);
    CHECK(cm->summary("unseen_last").mean == 0.0);
    CHECK(cm->summary("validity_rate").mean == 1.0);
    CHECK_FALSE(format_accuracy_table(a).empty());
}
