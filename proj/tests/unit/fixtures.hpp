#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "facetpath/decision.hpp"
#include "facetpath/eventlog.hpp"
#include "facetpath/pipeline.hpp"
#include "facetpath/prediction.hpp"
#include "facetpath/taxonomy.hpp"

namespace fixtures {

using namespace facetpath;

// Seven-product worked example: truths P1 (lebron) and P4 (sneakers).
inline TaxonomyTree worked_example_tree() {
    return TaxonomyTree::from_rows({
        {"P1", {"sport", "basketball", "lebron"}, "lebron shoe one"},
        {"P2", {"sport", "basketball", "lebron"}, "lebron shoe two"},
        {"P3", {"sport", "basketball", "lebron"}, "lebron shoe three"},
        {"P4", {"sport", "running", "sneakers"}, "running sneakers"},
        {"P5", {"sport", "basketball", "jerseys"}, "basketball jersey"},
        {"P6", {"sport", "basketball", "curry"}, "curry shoe"},
        {"P7", {"sport", "running", "sneakers"}, "trail sneakers"},
    });
}

inline const std::vector<ProductId>& worked_example_results() {
    static const std::vector<ProductId> ids = {"P1", "P2", "P3", "P4", "P5", "P6", "P7"};
    return ids;
}

inline SessionEvent view(const std::string& session, std::int64_t ts, const std::string& product) {
    SessionEvent e;
    e.session_id = session;
    e.timestamp = ts;
    e.kind = EventKind::view;
    e.product_id = product;
    return e;
}

inline SessionEvent search(const std::string& session, std::int64_t ts, const std::string& query,
                           std::vector<ProductId> results, std::vector<ProductId> clicked) {
    SessionEvent e;
    e.session_id = session;
    e.timestamp = ts;
    e.kind = EventKind::search;
    e.query = query;
    e.result_set = std::move(results);
    e.clicked = std::move(clicked);
    return e;
}

inline LabeledExample example(const TaxonomyTree& tree, const std::string& query, const std::string& path,
                              std::vector<ProductId> session = {}) {
    LabeledExample ex;
    ex.query = query;
    ex.target_path = tree.parse_path(path);
    ex.session_products = std::move(session);
    return ex;
}

// Random prediction over a tree: a path with arbitrary per-step distributions.
inline PathPrediction random_prediction(std::mt19937_64& rng, std::size_t vocab, std::size_t max_len) {
    PathPrediction p;
    std::uniform_int_distribution<std::size_t> len(0, max_len);
    std::uniform_int_distribution<std::uint32_t> node(kFirstCatalogNode, static_cast<std::uint32_t>(vocab - 1));
    std::gamma_distribution<double> g(0.3, 1.0);
    const auto n = len(rng);
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> d(vocab);
        double s = 0.0;
        for (auto& x : d) s += (x = g(rng) + 1e-12);
        for (auto& x : d) x /= s;
        p.nodes.push_back(NodeId{node(rng)});
        p.step_gini.push_back(gini(d));
        p.step_distributions.push_back(std::move(d));
    }
    return p;
}

inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("facetpath_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Small synthetic world shared by model tests.
inline SynthConfig small_synth() {
    SynthConfig c;
    c.n_products = 200;
    c.branching = {4, 3, 3};
    c.max_depth = 3;
    c.n_paths = 20;
    c.n_sessions = 600;
    return c;
}

}  // namespace fixtures
