#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "facetpath/embeddings.hpp"
#include "facetpath/evaluation.hpp"
#include "facetpath/mlp.hpp"
#include "facetpath/session_path.hpp"
#include "json.hpp"

namespace facetpath {

enum class ModelKind { cm, mlp, sessionpath };
std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

struct ModelVariant {
    std::string name;
    ModelKind kind = ModelKind::sessionpath;
    QueryEncoding encoding = QueryEncoding::search2prod2vec;
    bool use_session = true;
};

// CM, MLP (S2PV query encoding + session), SP+S2PV, and SP+S2PV without session.
std::vector<ModelVariant> default_variants();

struct ExperimentConfig {
    std::vector<ModelVariant> variants = default_variants();
    std::vector<double> fractions = {0.1, 0.25, 1.0};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::vector<double> cts;  // empty: derived from the first gated run's Gini values
    bool safety_check = false;
    double cm_threshold = 0.8;
    SkipGramConfig prod2vec;
    SkipGramConfig word2vec;
    nn::TrainConfig train;
    MlpArchitecture mlp;
    SessionPathArchitecture sessionpath;
    std::optional<std::filesystem::path> external_query_embeddings;
    // Written for the first SessionPath variant, full fraction, first seed.
    std::optional<std::filesystem::path> trace_file;
};

nlohmann::json to_json(const ExperimentConfig& config);

struct Dataset {
    const TaxonomyTree* tree = nullptr;
    std::vector<SessionEvent> events;  // ingested log, used for the prod2vec corpus
    DatasetSplit split;
};

// Test examples whose query does not name the target's top-level category
// and that carry at least one session product.
std::vector<std::size_t> context_dependent_subset(std::span<const LabeledExample> test, const TaxonomyTree& tree);
// Test indices whose normalized query never occurs in `train`.
std::vector<std::size_t> unseen_queries(std::span<const LabeledExample> train, std::span<const LabeledExample> test);

struct SeedResult {
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    // acc_{d1,d2,last} with prefixes overall_, seen_, unseen_, context_; validity_rate.
    std::map<std::string, double> metrics;
    std::map<std::string, std::size_t> counts;
    std::vector<SweepRow> sweep;
    std::size_t epochs = 0;
    std::size_t best_epoch = 0;
    double best_validation_loss = 0.0;
    double train_seconds = 0.0;
    double predict_microseconds = 0.0;  // mean per test example
};

struct MetricSummary {
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation
    std::size_t n = 0;
};
MetricSummary summarize(std::span<const double> values);

struct CellResult {
    ModelVariant variant;
    double fraction = 1.0;
    std::vector<SeedResult> seeds;
    bool failed = false;
    std::string error;

    // Over the successful seeds.
    MetricSummary summary(const std::string& metric) const;
};

struct EvalReport {
    std::size_t train_examples = 0;
    std::size_t test_examples = 0;
    std::size_t seen_test_examples = 0;
    std::size_t unseen_test_examples = 0;
    std::size_t context_test_examples = 0;
    std::size_t test_search_events = 0;
    std::vector<double> cts;
    std::vector<CellResult> cells;
    double total_seconds = 0.0;

    const CellResult* cell(const std::string& variant, double fraction) const;
};

using ProgressFn = std::function<void(const std::string&)>;

// Trains every variant on every fraction for every seed and evaluates on the
// test split. A failed run marks its cell and the suite continues.
EvalReport run_experiment_suite(const Dataset& data, const ExperimentConfig& config, const ProgressFn& progress = {});

// Runtime fields (timings) are left out when include_runtime is false, which
// makes the report a pure function of data, config and seeds.
nlohmann::json to_json(const EvalReport& report, bool include_runtime = true);

// Mean with SD in parentheses when SD >= 0.01.
std::string format_metric(const MetricSummary& s);
// Rows = variant x fraction, columns = accuracy at D=1, D=2, D=last (+ unseen D=last).
std::string format_accuracy_table(const EvalReport& report);
std::string format_sweep_table(std::span<const SweepRow> rows);

}  // namespace facetpath
