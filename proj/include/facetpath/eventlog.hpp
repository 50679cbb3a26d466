#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "facetpath/taxonomy.hpp"

namespace facetpath {

enum class EventKind { view, search };

struct SessionEvent {
    std::string session_id;
    std::int64_t timestamp = 0;  // ms
    EventKind kind = EventKind::view;
    std::optional<ProductId> product_id;  // view only
    std::optional<std::string> query;     // search only
    std::vector<ProductId> result_set;    // search only
    std::vector<ProductId> clicked;       // search only, subset of result_set

    bool operator==(const SessionEvent&) const = default;
};

std::string to_json_line(const SessionEvent& event);
SessionEvent event_from_json_line(const std::string& line);

struct LabeledExample {
    std::string session_id;
    std::int64_t timestamp = 0;
    std::size_t search_index = 0;  // identifies the originating search event
    std::vector<ProductId> session_products;
    std::string query;
    ProductId clicked_product;
    Path target_path;
    std::vector<ProductId> result_set;
    std::vector<ProductId> clicked;
};

struct IngestResult {
    std::vector<SessionEvent> events;
    std::size_t unknown_products = 0;  // ids dropped because the catalog lacks them
    std::size_t rejected_events = 0;   // clicked not a subset of result_set
};

// Events grouped by session and sorted by timestamp within each session.
IngestResult ingest(const std::filesystem::path& log_file, const TaxonomyTree& tree);
IngestResult ingest_events(std::vector<SessionEvent> events, const TaxonomyTree& tree);

struct ExampleBuild {
    std::vector<LabeledExample> examples;
    std::size_t skipped_clicks = 0;  // clicked products missing from the catalog
};

// One example per (search event, clicked product). Session context is every
// view that strictly precedes the search in the same session.
ExampleBuild build_examples(const std::vector<SessionEvent>& events, const TaxonomyTree& tree);

struct DatasetSplit {
    std::vector<LabeledExample> train;
    std::vector<LabeledExample> test;
    std::int64_t split_boundary = 0;
    // Indices into `test` whose normalized query never occurs in `train`.
    std::vector<std::size_t> unseen_test;
};

DatasetSplit chronological_split(std::vector<LabeledExample> examples, double fraction);

// Chronologically last `fraction` of an already time-sorted train list,
// used as the early-stopping validation set.
std::pair<std::vector<LabeledExample>, std::vector<LabeledExample>> holdout_tail(
    const std::vector<LabeledExample>& train, double fraction);

// Seeded subsample keeping chronological order; fraction 1.0 returns the input.
std::vector<LabeledExample> subsample(const std::vector<LabeledExample>& examples, double fraction,
                                      std::uint64_t seed);

// Views in each session ordered by time, the prod2vec corpus.
std::vector<std::vector<std::string>> view_sequences(const std::vector<SessionEvent>& events,
                                                     std::optional<std::int64_t> before = {});

}  // namespace facetpath
