#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "facetpath/experiment.hpp"
#include "facetpath/synthetic.hpp"
#include "json.hpp"

namespace facetpath {

// Catalog + log turned into labeled examples and a chronological split.
struct LoadedDataset {
    std::shared_ptr<const TaxonomyTree> tree;
    IngestResult ingest;
    std::size_t skipped_clicks = 0;
    DatasetSplit split;

    Dataset dataset() const { return {tree.get(), ingest.events, split}; }
};

LoadedDataset load_dataset(const std::filesystem::path& catalog, const std::filesystem::path& events,
                           double train_fraction);
LoadedDataset dataset_from_synthetic(const SyntheticData& data, double train_fraction);

// File names inside an embeddings directory.
struct EmbeddingFiles {
    std::filesystem::path products;  // prod2vec
    std::filesystem::path queries;   // Search2Prod2Vec unigram table
    std::filesystem::path words;     // word2vec token table
};
EmbeddingFiles embedding_files(const std::filesystem::path& dir);
std::filesystem::path query_table_file(const EmbeddingFiles& files, QueryEncoding encoding,
                                       const std::filesystem::path& external = {});

struct TrainedEmbeddings {
    EmbeddingTable products;
    EmbeddingTable queries;
    EmbeddingTable words;
};
// prod2vec over train-period browsing, Search2Prod2Vec and word2vec over the train split.
TrainedEmbeddings train_embeddings(const LoadedDataset& data, const SkipGramConfig& prod2vec,
                                   const SkipGramConfig& word2vec);

std::string git_describe();

// Run manifest: command, configuration snapshot, seed, source version, timings.
nlohmann::json run_manifest(const std::string& command, const nlohmann::json& config, std::uint64_t seed,
                            const std::map<std::string, double>& timings);

}  // namespace facetpath
