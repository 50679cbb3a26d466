#include <random>
#include <set>

#include "doctest.h"
#include "facetpath/text.hpp"
#include "facetpath/evaluation.hpp"
#include "fixtures.hpp"

using namespace facetpath;

namespace {

const std::vector<ProductId> kClicked = {"P1", "P4"};

EventPrediction event_with(const LabeledExample& ex, const PathPrediction& p) {
    EventPrediction e;
    e.event = &ex;
    e.prediction = p;
    return e;
}

PathPrediction confident(const TaxonomyTree& tree, const std::string& path, std::vector<double> gini_values) {
    PathPrediction p;
    p.nodes = tree.parse_path(path);
    p.step_gini = std::move(gini_values);
    p.step_distributions.assign(p.nodes.depth(), std::vector<double>(tree.vocabulary_size(), 0.0));
    return p;
}

}  // namespace

TEST_CASE("worked example precision and recall per depth") {
    auto tree = fixtures::worked_example_tree();
    const auto& results = fixtures::worked_example_results();
    struct Row {
        std::string path;
        double precision, recall;
        std::size_t filtered;
    };
    for (const auto& r : {Row{"sport", 5.0 / 7.0, 1.0, 7}, Row{"sport/basketball", 0.6, 0.6, 5},
                          Row{"sport/basketball/lebron", 1.0, 0.6, 3}}) {
        auto o = simulate_event(results, kClicked, tree.parse_path(r.path), tree);
        CAPTURE(r.path);
        CHECK(std::abs(*o.precision - r.precision) < 1e-12);
        CHECK(std::abs(*o.recall - r.recall) < 1e-12);
        CHECK(o.filtered_size == r.filtered);
        CHECK(o.tp + o.fn == 5);
    }
    auto none = simulate_event(results, kClicked, Path{}, tree);
    CHECK(none.filtered_size == results.size());
    CHECK(*none.recall == 1.0);

    auto emptied = simulate_event(results, kClicked, tree.parse_path("sport/basketball/curry"), tree);
    CHECK(emptied.filtered_size == 1);
    CHECK(*emptied.precision == 0.0);
}

TEST_CASE("deeper predictions never grow the filtered set or the recall") {
    std::mt19937_64 rng(9);
    auto data = generate_synthetic(fixtures::small_synth(), 4);
    auto loaded = dataset_from_synthetic(data, 0.8);
    const auto& tree = *loaded.tree;
    auto leaves = tree.leaf_paths();
    std::uniform_int_distribution<std::size_t> pick(0, leaves.size() - 1);
    for (const auto& ex : loaded.split.test) {
        const auto& leaf = leaves[pick(rng)];
        std::size_t prev_size = ex.result_set.size() + 1;
        double prev_recall = 2.0;
        const std::set<ProductId> results(ex.result_set.begin(), ex.result_set.end());
        for (std::size_t d = 0; d <= leaf.depth(); ++d) {
            auto o = simulate_event(ex.result_set, ex.clicked, truncate(leaf, d), tree);
            CHECK(o.filtered_size <= prev_size);
            CHECK(o.tp + o.fp == o.filtered_size);
            REQUIRE(o.recall);
            CHECK(*o.recall <= prev_recall + 1e-12);
            prev_size = o.filtered_size;
            prev_recall = *o.recall;
        }
    }
}

TEST_CASE("accuracy at depth") {
    auto tree = fixtures::worked_example_tree();
    std::vector<LabeledExample> ex = {fixtures::example(tree, "a", "sport/basketball/lebron"),
                                      fixtures::example(tree, "b", "sport/running"),
                                      fixtures::example(tree, "c", "sport/running/sneakers")};
    std::vector<Path> pred = {tree.parse_path("sport/basketball/curry"), tree.parse_path("sport/running"), Path{}};
    auto d1 = accuracy_at_depth(pred, ex, 1);
    CHECK(d1.correct == 2);
    CHECK(d1.total == 3);
    auto d3 = accuracy_at_depth(pred, ex, 3);
    CHECK(d3.total == 2);  // the depth-2 target is left out
    CHECK(d3.correct == 0);
    auto last = accuracy_at_depth(pred, ex, kLastDepth);
    CHECK(last.correct == 1);
    CHECK(last.rate() == doctest::Approx(1.0 / 3.0));
    std::vector<std::size_t> subset = {1};
    CHECK(accuracy_at_depth(pred, ex, subset, kLastDepth).rate() == 1.0);
}

TEST_CASE("micro-averaged sweep and the trace agree") {
    auto tree = fixtures::worked_example_tree();
    LabeledExample a = fixtures::example(tree, "a", "sport/basketball/lebron");
    a.result_set = fixtures::worked_example_results();
    a.clicked = kClicked;
    a.session_id = "s1";
    LabeledExample b = fixtures::example(tree, "b", "sport/running/sneakers");
    b.result_set = {"P4", "P5", "P7"};
    b.clicked = {"P4"};
    b.session_id = "s2";

    std::vector<EventPrediction> events = {
        event_with(a, confident(tree, "sport/basketball/lebron", {0.9, 0.5, 0.2})),
        event_with(b, confident(tree, "sport/running/sneakers", {0.9, 0.9, 0.9})),
    };
    std::vector<double> cts = {0.0, 0.4, 0.8, 1.0};
    auto rows = sweep_thresholds(events, cts, tree);
    REQUIRE(rows.size() == cts.size());

    // ct 0.4: a keeps sport/basketball (tp 3, fp 2, fn 2); b keeps its full path (tp 2, fp 0, fn 0).
    CHECK(rows[1].precision == doctest::Approx(5.0 / 7.0));
    CHECK(rows[1].recall == doctest::Approx(5.0 / 7.0));
    // ct 0: both full. a: tp 3 fp 0 fn 2, b: tp 2 fp 0 fn 0.
    CHECK(rows[0].precision == doctest::Approx(1.0));
    CHECK(rows[0].recall == doctest::Approx(5.0 / 7.0));
    // ct 1: nothing kept, every result stays.
    CHECK(rows[3].recall == doctest::Approx(1.0));
    CHECK(rows[3].mean_depth == 0.0);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].mean_depth <= rows[i - 1].mean_depth);

    auto dir = fixtures::temp_dir("trace");
    write_trace(dir / "t.jsonl", events, cts, tree);
    auto trace = read_trace(dir / "t.jsonl");
    CHECK(trace.size() == 2);
    auto again = sweep_from_trace(trace);
    REQUIRE(again.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(again[i].ct == rows[i].ct);
        CHECK(again[i].precision == doctest::Approx(rows[i].precision).epsilon(1e-12));
        CHECK(again[i].recall == doctest::Approx(rows[i].recall).epsilon(1e-12));
        CHECK(again[i].pareto == rows[i].pareto);
    }
}

TEST_CASE("default threshold grid spans the observed gini range") {
    auto tree = fixtures::worked_example_tree();
    LabeledExample a = fixtures::example(tree, "a", "sport");
    std::vector<EventPrediction> events = {event_with(a, confident(tree, "sport/basketball", {0.3, 0.6}))};
    auto grid = default_ct_grid(events, 4);
    REQUIRE(!grid.empty());
    CHECK(grid.front() == 0.0);
    CHECK(grid.back() == 1.0);
    CHECK(std::is_sorted(grid.begin(), grid.end()));
}

TEST_CASE("pareto marks non-dominated rows") {
    std::vector<SweepRow> rows(3);
    rows[0].precision = 0.5, rows[0].recall = 0.9;
    rows[1].precision = 0.7, rows[1].recall = 0.8;
    rows[2].precision = 0.6, rows[2].recall = 0.7;  // dominated by row 1
    mark_pareto(rows);
    CHECK(rows[0].pareto);
    CHECK(rows[1].pareto);
    CHECK_FALSE(rows[2].pareto);
}

TEST_CASE("search events pick one example per search") {
    auto tree = fixtures::worked_example_tree();
    auto e1 = fixtures::example(tree, "a", "sport");
    e1.session_id = "s";
    e1.search_index = 0;
    auto e2 = e1;
    auto e3 = e1;
    e3.search_index = 1;
    std::vector<LabeledExample> ex = {e1, e2, e3};
    CHECK(search_events(ex) == std::vector<std::size_t>{0, 2});
}
