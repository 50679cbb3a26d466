#include "facetpath/pipeline.hpp"

#include "facetpath/text.hpp"

#ifndef FACETPATH_GIT_DESCRIBE
#define FACETPATH_GIT_DESCRIBE "unknown"
#endif

namespace facetpath {

namespace {

LoadedDataset finish(std::shared_ptr<const TaxonomyTree> tree, IngestResult ingest, double train_fraction) {
    LoadedDataset out;
    out.tree = std::move(tree);
    out.ingest = std::move(ingest);
    auto build = build_examples(out.ingest.events, *out.tree);
    out.skipped_clicks = build.skipped_clicks;
    out.split = chronological_split(std::move(build.examples), train_fraction);
    return out;
}

}  // namespace

LoadedDataset load_dataset(const std::filesystem::path& catalog, const std::filesystem::path& events,
                           double train_fraction) {
    auto tree = std::make_shared<const TaxonomyTree>(load_catalog(catalog));
    auto ingest_result = ingest(events, *tree);
    return finish(tree, std::move(ingest_result), train_fraction);
}

LoadedDataset dataset_from_synthetic(const SyntheticData& data, double train_fraction) {
    auto tree = std::make_shared<const TaxonomyTree>(TaxonomyTree::from_rows(data.catalog));
    auto ingest_result = ingest_events(data.events, *tree);
    return finish(tree, std::move(ingest_result), train_fraction);
}

EmbeddingFiles embedding_files(const std::filesystem::path& dir) {
    return {dir / "products.emb", dir / "queries.emb", dir / "words.emb"};
}

std::filesystem::path query_table_file(const EmbeddingFiles& files, QueryEncoding encoding,
                                       const std::filesystem::path& external) {
    switch (encoding) {
        case QueryEncoding::search2prod2vec: return files.queries;
        case QueryEncoding::word2vec: return files.words;
        case QueryEncoding::external:
            if (external.empty()) throw Error("external query encoding needs an embeddings file");
            return external;
    }
    throw Error("unknown query encoding");
}

TrainedEmbeddings train_embeddings(const LoadedDataset& data, const SkipGramConfig& prod2vec,
                                   const SkipGramConfig& word2vec) {
    const auto& train = data.split.train;
    auto products = train_skipgram(view_sequences(data.ingest.events, data.split.split_boundary), prod2vec,
                                   EmbeddingKind::product);
    auto queries = build_search2prod2vec(train, products);
    std::vector<std::vector<std::string>> corpus;
    for (const auto& ex : train) corpus.push_back(tokenize(ex.query));
    for (const auto& p : data.tree->products()) corpus.push_back(tokenize(p.description));
    auto words = train_skipgram(corpus, word2vec, EmbeddingKind::token);
    return {std::move(products), std::move(queries), std::move(words)};
}

std::string git_describe() { return FACETPATH_GIT_DESCRIBE; }

nlohmann::json run_manifest(const std::string& command, const nlohmann::json& config, std::uint64_t seed,
                            const std::map<std::string, double>& timings) {
    return {{"command", command},
            {"config", config},
            {"seed", seed},
            {"git_describe", git_describe()},
            {"timings_seconds", timings}};
}

}  // namespace facetpath
