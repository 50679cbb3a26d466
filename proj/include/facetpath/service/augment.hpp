#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "facetpath/evaluation.hpp"
#include "facetpath/predictor.hpp"
#include "facetpath/service/lru_cache.hpp"
#include "json.hpp"

namespace facetpath {

// Raised for malformed client input; the HTTP layer maps it to 400.
class RequestError : public Error {
public:
    using Error::Error;
};

struct AugmentRequest {
    std::vector<ProductId> session_products;
    std::vector<std::string> candidates;
    std::optional<double> ct_override;
    std::optional<std::string> model;  // cm, mlp or sessionpath; default model when absent
};

AugmentRequest parse_augment_request(const nlohmann::json& body, std::size_t max_candidates);
nlohmann::json to_json(const AugmentRequest& request);

struct CandidatePrediction {
    std::string candidate;
    Path path;                       // truncated
    std::vector<double> confidence;  // gini per kept node; empty for the count model
    std::string model_id;
    bool cache_hit = false;
    std::int64_t latency_us = 0;
};

struct AugmentResponse {
    std::vector<CandidatePrediction> predictions;  // request order
};

nlohmann::json to_json(const AugmentResponse& response, const TaxonomyTree& tree);

// Everything a running service reads: taxonomy, predictors by id, and the
// evaluation trace behind /sweep. Immutable once built.
struct ArtifactSet {
    std::shared_ptr<const TaxonomyTree> tree;
    std::map<std::string, std::shared_ptr<const Predictor>> models;
    std::string default_model;
    std::vector<SweepRow> sweep;  // from the trace; empty when none was loaded
    bool has_trace = false;
};

struct ArtifactPaths {
    std::filesystem::path catalog;
    std::optional<std::filesystem::path> product_embeddings;
    std::optional<std::filesystem::path> query_embeddings;
    std::optional<std::filesystem::path> count_model;
    std::optional<std::filesystem::path> mlp_checkpoint;
    std::optional<std::filesystem::path> sessionpath_checkpoint;
    std::optional<std::filesystem::path> trace;
    std::string default_model;  // empty: sessionpath, then mlp, then cm, whichever is loaded
};

std::shared_ptr<const ArtifactSet> load_artifacts(const ArtifactPaths& paths);

struct ServiceConfig {
    double ct = 0.993;
    bool safety_check = false;
    std::size_t cache_capacity = 10000;
    std::size_t max_candidates = 10;
};

// HTTP-independent core of the augmentation service. Artifacts are swapped
// as a whole; requests in flight keep the set they started with.
class AugmentService {
public:
    explicit AugmentService(ServiceConfig config = {});

    void load(std::shared_ptr<const ArtifactSet> artifacts);
    bool ready() const;
    std::shared_ptr<const ArtifactSet> artifacts() const;
    const ServiceConfig& config() const { return config_; }

    AugmentResponse augment(const AugmentRequest& request);
    // Precision and recall of one search event under a given or model-predicted path.
    nlohmann::json simulate(const nlohmann::json& body);
    nlohmann::json sweep() const;
    nlohmann::json health() const;
    std::string metrics_text() const;

    void record_error(int status);

    // Order-insensitive, multiplicity-preserving signature of a product list.
    static std::string session_signature(std::span<const ProductId> products);

private:
    struct CachedPrediction {
        Path path;
        std::vector<double> confidence;
    };

    ServiceConfig config_;
    mutable std::mutex artifacts_mu_;
    std::shared_ptr<const ArtifactSet> artifacts_;
    LruCache<std::string, CachedPrediction> cache_;

    mutable std::mutex metrics_mu_;
    std::size_t requests_ = 0;
    std::size_t candidates_ = 0;
    std::size_t simulate_requests_ = 0;
    mutable std::size_t sweep_requests_ = 0;
    std::size_t errors_4xx_ = 0;
    std::size_t errors_5xx_ = 0;
    std::deque<std::int64_t> latencies_;  // most recent candidate latencies, microseconds
};

}  // namespace facetpath
