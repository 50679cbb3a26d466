#include <fstream>

#include "doctest.h"
#include "fixtures.hpp"

using namespace facetpath;

TEST_CASE("vocabulary starts with START and END, then nodes by depth and label") {
    auto tree = fixtures::worked_example_tree();
    const auto& v = tree.node_vocabulary();
    REQUIRE(v.size() == 2 + 1 + 2 + 4);
    CHECK(v[0].depth == 0);
    CHECK(v[1].depth == 0);
    CHECK(v[2].label == "sport");
    CHECK(v[3].label == "basketball");
    CHECK(v[4].label == "running");
    CHECK(v[5].label == "curry");
    CHECK(v[8].label == "sneakers");
    for (std::size_t i = 3; i < v.size(); ++i) CHECK(v[i - 1].depth <= v[i].depth);
}

TEST_CASE("node identity is label plus depth") {
    auto tree = TaxonomyTree::from_rows({
        {"a", {"soccer", "shoes"}, ""},
        {"b", {"running", "shoes"}, ""},
        {"c", {"shoes"}, ""},
    });
    const auto deep = tree.find_node("shoes", 2);
    const auto top = tree.find_node("shoes", 1);
    CHECK(deep != top);
    CHECK(deep != kEndNode);
    CHECK(tree.find_node("shoes", 3) == kEndNode);
    CHECK(tree.path_of("a")->nodes().back() == tree.path_of("b")->nodes().back());
}

TEST_CASE("paths round-trip through text and validity follows the catalog") {
    auto tree = fixtures::worked_example_tree();
    auto p = tree.parse_path("sport/basketball/lebron");
    CHECK(p.depth() == 3);
    CHECK(tree.to_string(p) == "sport/basketball/lebron");
    CHECK(tree.is_valid_path(p));
    CHECK(tree.is_valid_path(tree.parse_path("sport/running")));
    CHECK(tree.is_valid_path(Path{}));
    // Both nodes exist, but not as parent and child.
    CHECK_FALSE(tree.is_valid_path(tree.parse_path("sport/running/lebron")));
    CHECK_THROWS_AS(tree.parse_path("sport/hockey"), Error);
    CHECK(tree.parse_path("").empty());
}

TEST_CASE("prefixes and truncation") {
    auto tree = fixtures::worked_example_tree();
    auto full = tree.parse_path("sport/basketball/lebron");
    CHECK(truncate(full, 1) == tree.parse_path("sport"));
    CHECK(truncate(full, 10) == full);
    CHECK(truncate(full, 0).empty());
    CHECK(tree.parse_path("sport").is_prefix_of(full));
    CHECK(Path{}.is_prefix_of(full));
    CHECK_FALSE(full.is_prefix_of(tree.parse_path("sport")));
}

TEST_CASE("children and leaf paths") {
    auto tree = fixtures::worked_example_tree();
    CHECK(tree.children(tree.parse_path("sport")).size() == 2);
    CHECK(tree.children(tree.parse_path("sport/basketball")).size() == 3);
    CHECK(tree.leaf_paths().size() == 4);
    CHECK(tree.max_depth() == 3);
}

TEST_CASE("catalog errors") {
    CHECK_THROWS_AS(TaxonomyTree::from_rows({{"a", {"x"}, ""}, {"a", {"y"}, ""}}), Error);
    CHECK_THROWS_AS(TaxonomyTree::from_rows({{"a", {}, ""}}), Error);

    auto dir = fixtures::temp_dir("catalog");
    {
        std::ofstream out(dir / "bad.jsonl");
        out << R"({"product_id":"a","path":["x"]})" << "\n" << "{not json\n";
    }
    try {
        load_catalog(dir / "bad.jsonl");
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
}

TEST_CASE("vocabulary hash changes with the catalog") {
    auto a = fixtures::worked_example_tree();
    auto b = TaxonomyTree::from_rows({{"P1", {"sport", "tennis"}, ""}});
    CHECK(a.vocabulary_hash() == fixtures::worked_example_tree().vocabulary_hash());
    CHECK(a.vocabulary_hash() != b.vocabulary_hash());
}
