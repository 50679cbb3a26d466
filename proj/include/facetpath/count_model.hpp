#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "facetpath/eventlog.hpp"
#include "json.hpp"

namespace facetpath {

// Query -> click share per full product path. Paths of different depth are
// unrelated labels. The stored prediction is the deepest path whose share
// reaches the threshold (ties: higher share, then lexicographic).
class CountModel {
public:
    static constexpr double kDefaultThreshold = 0.8;

    struct Entry {
        std::vector<std::pair<Path, std::size_t>> clicks;  // sorted by path
        std::size_t total = 0;
        std::optional<Path> prediction;
        double prediction_share = 0.0;
    };

    static CountModel train(const std::vector<LabeledExample>& train, const TaxonomyTree& tree,
                            double threshold = kDefaultThreshold);

    // Exact lookup after normalize_query; unseen or unqualified queries give nullopt.
    std::optional<Path> predict(const std::string& query) const;
    const Entry* find(const std::string& query) const;
    double threshold() const { return threshold_; }
    std::size_t query_count() const { return entries_.size(); }

    nlohmann::json to_json(const TaxonomyTree& tree) const;
    static CountModel from_json(const nlohmann::json& j, const TaxonomyTree& tree);
    void save(const std::filesystem::path& file, const TaxonomyTree& tree) const;
    static CountModel load(const std::filesystem::path& file, const TaxonomyTree& tree);

private:
    void finalize(const TaxonomyTree& tree);

    double threshold_ = kDefaultThreshold;
    std::unordered_map<std::string, Entry> entries_;
};

}  // namespace facetpath
