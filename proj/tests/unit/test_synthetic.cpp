#include "doctest.h"
#include "facetpath/synthetic.hpp"
#include "fixtures.hpp"

using namespace facetpath;

TEST_CASE("synthetic data is identical for a fixed seed") {
    auto cfg = fixtures::small_synth();
    auto a = generate_synthetic(cfg, 11);
    auto b = generate_synthetic(cfg, 11);
    CHECK(a.events == b.events);
    REQUIRE(a.catalog.size() == b.catalog.size());
    for (std::size_t i = 0; i < a.catalog.size(); ++i) CHECK(a.catalog[i].path == b.catalog[i].path);
    CHECK_FALSE(generate_synthetic(cfg, 12).events == a.events);
}

TEST_CASE("synthetic data respects its shape") {
    auto cfg = fixtures::small_synth();
    auto data = generate_synthetic(cfg, 3);
    CHECK(data.catalog.size() == cfg.n_products);
    auto tree = TaxonomyTree::from_rows(data.catalog);
    CHECK(tree.max_depth() <= cfg.max_depth);
    for (const auto& row : data.catalog) CHECK(row.path.size() >= cfg.min_depth);
    auto ing = ingest_events(data.events, tree);
    CHECK(ing.rejected_events == 0);
    CHECK(ing.unknown_products == 0);
}

TEST_CASE("infeasible shapes are rejected") {
    auto cfg = fixtures::small_synth();
    cfg.n_paths = 10000;
    CHECK_THROWS_AS(generate_synthetic(cfg, 1), Error);
    cfg = fixtures::small_synth();
    cfg.n_products = 5;
    CHECK_THROWS_AS(generate_synthetic(cfg, 1), Error);
    cfg = fixtures::small_synth();
    cfg.min_depth = 4;
    CHECK_THROWS_AS(generate_synthetic(cfg, 1), Error);
}
