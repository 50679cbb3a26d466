#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "facetpath/decision.hpp"
#include "facetpath/eventlog.hpp"
#include "facetpath/prediction.hpp"
#include "json.hpp"

namespace facetpath {

// Depth argument for accuracy_at_depth; any other value is a numeric prefix length.
inline constexpr std::size_t kLastDepth = std::numeric_limits<std::size_t>::max();

struct AccuracyCount {
    std::size_t correct = 0;
    std::size_t total = 0;
    double rate() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

// Empty predicted paths stand for "no prediction" and are wrong at every depth.
// For numeric k, targets shorter than k are left out of the denominator.
AccuracyCount accuracy_at_depth(std::span<const Path> predictions, std::span<const LabeledExample> examples,
                                std::size_t k);
AccuracyCount accuracy_at_depth(std::span<const Path> predictions, std::span<const LabeledExample> examples,
                                std::span<const std::size_t> subset, std::size_t k);

struct EventOutcome {
    std::size_t result_size = 0;
    std::size_t filtered_size = 0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::optional<double> precision;  // undefined when the filter removes everything
    std::optional<double> recall;     // undefined when no result matches a truth path
};

// Path-level truth matching: a result counts as relevant when its path equals
// the path of any clicked product.
EventOutcome simulate_event(std::span<const Path> result_paths, std::span<const Path> truth_paths,
                            const Path& predicted);
EventOutcome simulate_event(std::span<const ProductId> result_set, std::span<const ProductId> clicked,
                            const Path& predicted, const TaxonomyTree& tree);

// One representative example per search event (session_id, search_index), in input order.
std::vector<std::size_t> search_events(std::span<const LabeledExample> examples);

struct EventPrediction {
    const LabeledExample* event = nullptr;
    PathPrediction prediction;
};

struct SweepRow {
    double ct = 0.0;
    double precision = 0.0;  // micro: sum TP / sum (TP + FP)
    double recall = 0.0;     // micro: sum TP / sum (TP + FN)
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double mean_depth = 0.0;
    double validity_rate = 1.0;
    std::size_t events = 0;
    std::size_t precision_events = 0;  // events with a non-empty filtered set
    std::size_t emptied_events = 0;    // filter removed every result
    bool pareto = false;
};

// Truncation is re-applied per ct on the cached step Gini values; the decoder is not re-run.
std::vector<SweepRow> sweep_thresholds(std::span<const EventPrediction> events, std::span<const double> cts,
                                       const TaxonomyTree& tree, bool safety_check = false);

// Thresholds spread over the observed per-node Gini range: quantiles of the
// values seen, plus 0 (full paths) and 1 (always empty).
std::vector<double> default_ct_grid(std::span<const EventPrediction> events, std::size_t quantiles = 10);

// Per-event trace, one JSON object per line: event id, query, generated path,
// per-node gini, and per-ct truncation with its TP/FP/FN counts.
void write_trace(const std::filesystem::path& file, std::span<const EventPrediction> events,
                 std::span<const double> cts, const TaxonomyTree& tree, bool safety_check = false);
std::vector<nlohmann::json> read_trace(const std::filesystem::path& file);
// Rebuilds sweep rows from a trace without the model or the event log.
std::vector<SweepRow> sweep_from_trace(const std::vector<nlohmann::json>& trace);

nlohmann::json to_json(const SweepRow& row);
void mark_pareto(std::vector<SweepRow>& rows);

}  // namespace facetpath
