#include <fstream>
#include <set>

#include "doctest.h"
#include "facetpath/text.hpp"
#include "fixtures.hpp"

using namespace facetpath;
using fixtures::search;
using fixtures::view;

TEST_CASE("tokenize and normalize") {
    CHECK(tokenize("Nike  Air-Max, 90!") == std::vector<std::string>{"nike", "air", "max", "90"});
    CHECK(tokenize("   ").empty());
    CHECK(normalize_query("  Nike   SHOES ") == "nike shoes");
    CHECK(split(",a,b,,c,", ',') == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("event json lines round-trip") {
    auto e = search("s1", 42, "red shoes", {"P1", "P2"}, {"P2"});
    CHECK(event_from_json_line(to_json_line(e)) == e);
    auto v = view("s1", 7, "P3");
    CHECK(event_from_json_line(to_json_line(v)) == v);
    CHECK_THROWS(event_from_json_line("{\"session_id\": 3}"));
}

TEST_CASE("ingest drops unknown products and rejects clicks outside the result set") {
    auto tree = fixtures::worked_example_tree();
    std::vector<SessionEvent> events = {
        view("s1", 1, "P1"),
        view("s1", 2, "NOPE"),
        search("s1", 3, "q", {"P1", "P2"}, {"P3"}),
        search("s1", 4, "q", {"P1", "P2"}, {"P2"}),
    };
    auto r = ingest_events(events, tree);
    CHECK(r.rejected_events == 1);
    CHECK(r.unknown_products == 1);
    CHECK(r.events.size() == 2);
}

TEST_CASE("ingest reports the line of a malformed record") {
    auto tree = fixtures::worked_example_tree();
    auto dir = fixtures::temp_dir("ingest");
    {
        std::ofstream out(dir / "log.jsonl");
        out << to_json_line(view("s", 1, "P1")) << "\n" << to_json_line(view("s", 2, "P2")) << "\n" << "oops\n";
    }
    try {
        ingest(dir / "log.jsonl", tree);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("3") != std::string::npos);
    }
}

TEST_CASE("one example per clicked product with prior views as session") {
    auto tree = fixtures::worked_example_tree();
    auto events = ingest_events({view("s1", 1, "P5"), search("s1", 2, "shoes", {"P4", "P7"}, {"P4"}),
                                 view("s1", 3, "P6")},
                                tree)
                      .events;
    auto build = build_examples(events, tree);
    REQUIRE(build.examples.size() == 1);
    const auto& ex = build.examples[0];
    CHECK(ex.session_products == std::vector<ProductId>{"P5"});
    CHECK(tree.to_string(ex.target_path) == "sport/running/sneakers");
    CHECK(ex.query == "shoes");

    auto two = build_examples(ingest_events({search("s2", 1, "q", {"P1", "P4"}, {"P1", "P4"})}, tree).events, tree);
    REQUIRE(two.examples.size() == 2);
    CHECK(two.examples[0].query == two.examples[1].query);
    CHECK(two.examples[0].session_products.empty());
    CHECK(two.examples[0].search_index == two.examples[1].search_index);
}

TEST_CASE("example count equals clicked products over search events") {
    auto data = generate_synthetic(fixtures::small_synth(), 5);
    auto tree = TaxonomyTree::from_rows(data.catalog);
    auto ing = ingest_events(data.events, tree);
    std::size_t clicks = 0;
    for (const auto& e : ing.events)
        if (e.kind == EventKind::search) clicks += e.clicked.size();
    auto build = build_examples(ing.events, tree);
    CHECK(build.examples.size() + build.skipped_clicks == clicks);
    for (const auto& ex : build.examples) {
        CHECK(*tree.path_of(ex.clicked_product) == ex.target_path);
        std::set<ProductId> results(ex.result_set.begin(), ex.result_set.end());
        for (const auto& c : ex.clicked) CHECK(results.contains(c));
    }
}

TEST_CASE("chronological split and seeded subsample") {
    auto data = generate_synthetic(fixtures::small_synth(), 6);
    auto tree = TaxonomyTree::from_rows(data.catalog);
    auto ex = build_examples(ingest_events(data.events, tree).events, tree).examples;
    auto split = chronological_split(ex, 0.8);
    REQUIRE(!split.train.empty());
    REQUIRE(!split.test.empty());
    for (const auto& e : split.train) CHECK(e.timestamp < split.split_boundary);
    for (const auto& e : split.test) CHECK(e.timestamp >= split.split_boundary);

    std::set<std::string> train_queries;
    for (const auto& e : split.train) train_queries.insert(normalize_query(e.query));
    std::set<std::size_t> unseen(split.unseen_test.begin(), split.unseen_test.end());
    for (std::size_t i = 0; i < split.test.size(); ++i)
        CHECK(unseen.contains(i) == !train_queries.contains(normalize_query(split.test[i].query)));

    auto a = subsample(split.train, 0.25, 3);
    auto b = subsample(split.train, 0.25, 3);
    CHECK(a.size() == b.size());
    CHECK(a.size() < split.train.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].timestamp == b[i].timestamp);
    for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i - 1].timestamp <= a[i].timestamp);
    CHECK(subsample(split.train, 1.0, 3).size() == split.train.size());

    auto [fit, held] = holdout_tail(split.train, 0.1);
    CHECK(fit.size() + held.size() == split.train.size());
    CHECK(held.back().timestamp == split.train.back().timestamp);
}

TEST_CASE("view sequences stop at the boundary") {
    std::vector<SessionEvent> events = {view("a", 1, "P1"), view("a", 2, "P2"), view("a", 10, "P3"),
                                        view("b", 3, "P4")};
    auto all = view_sequences(events);
    auto early = view_sequences(events, 5);
    std::size_t n_all = 0, n_early = 0;
    for (const auto& s : all) n_all += s.size();
    for (const auto& s : early) n_early += s.size();
    CHECK(n_all == 4);
    CHECK(n_early == 3);
}
