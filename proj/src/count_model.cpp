#include "facetpath/count_model.hpp"

#include <map>

#include "facetpath/nn/checkpoint.hpp"
#include "facetpath/text.hpp"

namespace facetpath {

CountModel CountModel::train(const std::vector<LabeledExample>& train, const TaxonomyTree& tree, double threshold) {
    if (train.empty()) throw Error("count model: empty training set");
    CountModel model;
    model.threshold_ = threshold;
    std::unordered_map<std::string, std::map<Path, std::size_t>> counts;
    for (const auto& ex : train) ++counts[normalize_query(ex.query)][ex.target_path];
    for (auto& [q, per_path] : counts) {
        Entry e;
        for (auto& [p, c] : per_path) {
            e.clicks.emplace_back(p, c);
            e.total += c;
        }
        model.entries_.emplace(q, std::move(e));
    }
    model.finalize(tree);
    return model;
}

void CountModel::finalize(const TaxonomyTree& tree) {
    for (auto& [q, e] : entries_) {
        e.prediction.reset();
        e.prediction_share = 0.0;
        for (const auto& [path, c] : e.clicks) {
            const double share = static_cast<double>(c) / static_cast<double>(e.total);
            if (share < threshold_) continue;
            bool better = !e.prediction;
            if (!better) {
                if (path.depth() != e.prediction->depth()) {
                    better = path.depth() > e.prediction->depth();
                } else if (share != e.prediction_share) {
                    better = share > e.prediction_share;
                } else {
                    better = tree.to_string(path) < tree.to_string(*e.prediction);
                }
            }
            if (better) {
                e.prediction = path;
                e.prediction_share = share;
            }
        }
    }
}

const CountModel::Entry* CountModel::find(const std::string& query) const {
    auto it = entries_.find(normalize_query(query));
    return it == entries_.end() ? nullptr : &it->second;
}

std::optional<Path> CountModel::predict(const std::string& query) const {
    const auto* e = find(query);
    if (!e) return std::nullopt;
    return e->prediction;
}

nlohmann::json CountModel::to_json(const TaxonomyTree& tree) const {
    nlohmann::json queries = nlohmann::json::object();
    std::map<std::string, const Entry*> sorted;
    for (const auto& [q, e] : entries_) sorted.emplace(q, &e);
    for (const auto& [q, e] : sorted) {
        nlohmann::json clicks = nlohmann::json::object();
        for (const auto& [p, c] : e->clicks) clicks[tree.to_string(p)] = c;
        nlohmann::json entry{{"clicks", clicks}};
        entry["path"] = e->prediction ? nlohmann::json(tree.to_string(*e->prediction)) : nlohmann::json(nullptr);
        entry["share"] = e->prediction_share;
        queries[q] = std::move(entry);
    }
    return {{"format", "facetpath.count_model/1"},
            {"threshold", threshold_},
            {"vocabulary_hash", std::to_string(tree.vocabulary_hash())},
            {"queries", std::move(queries)}};
}

CountModel CountModel::from_json(const nlohmann::json& j, const TaxonomyTree& tree) {
    if (j.value("format", std::string{}) != "facetpath.count_model/1") throw Error("not a count model file");
    if (j.at("vocabulary_hash").get<std::string>() != std::to_string(tree.vocabulary_hash()))
        throw Error("count model was built for a different taxonomy (vocabulary hash mismatch)");
    CountModel model;
    model.threshold_ = j.at("threshold").get<double>();
    for (const auto& [q, entry] : j.at("queries").items()) {
        Entry e;
        for (const auto& [p, c] : entry.at("clicks").items()) {
            e.clicks.emplace_back(tree.parse_path(p), c.get<std::size_t>());
            e.total += c.get<std::size_t>();
        }
        std::sort(e.clicks.begin(), e.clicks.end());
        model.entries_.emplace(q, std::move(e));
    }
    model.finalize(tree);
    return model;
}

void CountModel::save(const std::filesystem::path& file, const TaxonomyTree& tree) const {
    nn::write_json_file(file, to_json(tree));
}

CountModel CountModel::load(const std::filesystem::path& file, const TaxonomyTree& tree) {
    return from_json(nn::read_json_file(file), tree);
}

}  // namespace facetpath
