#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "facetpath/eventlog.hpp"
#include "facetpath/taxonomy.hpp"

namespace facetpath {

// Shape of a synthetic shop. Sessions browse inside one top-level category
// with probability `session_coherence_rate`; the rest deliberately span at
// least two top-level categories.
struct SynthConfig {
    std::size_t n_products = 1000;
    // Children per node at each depth; branching[0] is the number of top-level categories.
    std::vector<std::size_t> branching = {8, 6, 5, 4};
    std::size_t min_depth = 2;
    std::size_t max_depth = 4;
    std::size_t n_paths = 300;  // distinct full product paths
    std::size_t n_brands = 20;
    std::size_t brands_per_path = 2;

    std::size_t n_sessions = 3600;
    std::size_t min_views = 2;
    std::size_t max_views = 6;
    std::size_t max_searches = 2;
    double query_noise_rate = 0.1;
    double session_coherence_rate = 0.8;
    double empty_session_rate = 0.15;
    double extra_click_rate = 0.3;
    std::size_t result_set_size = 12;
    double top_level_skew = 1.0;  // Zipf exponent over top-level categories
    double path_skew = 0.0;       // Zipf exponent over paths within a top-level category
    std::int64_t start_timestamp = 1561939200000;  // 2019-07-01
};

struct ManifestRow {
    std::string query;
    std::string session_id;
    std::string intended_path;
};

struct SyntheticData {
    std::vector<TaxonomyTree::Row> catalog;
    std::vector<SessionEvent> events;
    std::vector<ManifestRow> manifest;
};

// Deterministic for a fixed (config, seed). Throws on infeasible shapes.
SyntheticData generate_synthetic(const SynthConfig& config, std::uint64_t seed);

struct SyntheticFiles {
    std::filesystem::path catalog_file;
    std::filesystem::path log_file;
    std::filesystem::path manifest_file;
    std::size_t emitted_events = 0;
};

SyntheticFiles write_synthetic(const SyntheticData& data, const std::filesystem::path& out_dir);

}  // namespace facetpath
