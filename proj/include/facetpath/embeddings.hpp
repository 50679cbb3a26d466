#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "facetpath/eventlog.hpp"

namespace facetpath {

enum class EmbeddingKind { product, token, query_unigram, query };

std::string to_string(EmbeddingKind kind);
EmbeddingKind embedding_kind_from_string(const std::string& s);

// Dense key -> vector map. All rows share `dim`; rows are stored contiguously
// in insertion order.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(std::size_t dim, EmbeddingKind kind) : dim_(dim), kind_(kind) {}

    std::size_t dim() const { return dim_; }
    EmbeddingKind kind() const { return kind_; }
    std::size_t size() const { return keys_.size(); }
    bool empty() const { return keys_.empty(); }
    const std::vector<std::string>& keys() const { return keys_; }

    bool contains(const std::string& key) const { return index_.contains(key); }
    std::optional<std::span<const double>> find(const std::string& key) const;
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
    std::span<double> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }

    // Inserts or overwrites; throws on dimension mismatch or non-finite values.
    void set(const std::string& key, std::span<const double> values);

    void save(const std::filesystem::path& file) const;
    static EmbeddingTable load(const std::filesystem::path& file);

    bool operator==(const EmbeddingTable&) const = default;

private:
    std::size_t dim_ = 0;
    EmbeddingKind kind_ = EmbeddingKind::product;
    std::vector<std::string> keys_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<double> data_;
};

struct SkipGramConfig {
    std::size_t dim = 50;
    std::size_t window = 5;
    std::size_t negatives = 5;
    std::size_t epochs = 10;
    std::size_t min_count = 1;
    double learning_rate = 0.025;
    std::uint64_t seed = 1;
};

// Skip-gram with negative sampling (noise ~ unigram^0.75), single-threaded and
// deterministic for a fixed seed.
EmbeddingTable train_skipgram(const std::vector<std::vector<std::string>>& corpus,
                              const SkipGramConfig& config, EmbeddingKind kind);

struct SessionVector {
    std::vector<double> values;
    bool is_empty_session = true;
};

struct QueryVector {
    std::vector<double> values;
    double coverage = 0.0;  // fraction of query tokens found in the table
};

// Mean of in-vocabulary product embeddings; empty or all-OOV gives zeros.
SessionVector session_vector(std::span<const ProductId> session_products, const EmbeddingTable& products);

// Mean of known-token vectors over the tokenized query.
QueryVector query_vector_word2vec(const std::string& query, const EmbeddingTable& tokens);
QueryVector query_vector_s2pv(const std::string& query, const EmbeddingTable& unigrams);

struct Search2Prod2Vec {
    EmbeddingTable queries;   // click-weighted mean of clicked product embeddings, keyed by normalized query
    EmbeddingTable unigrams;  // weighted mean of query vectors over queries containing the token
};

struct Search2Prod2VecOptions {
    bool weight_unigrams_by_clicks = true;
};

Search2Prod2Vec build_search2prod2vec_tables(const std::vector<LabeledExample>& train,
                                             const EmbeddingTable& products,
                                             const Search2Prod2VecOptions& options = {});
EmbeddingTable build_search2prod2vec(const std::vector<LabeledExample>& train, const EmbeddingTable& products,
                                     const Search2Prod2VecOptions& options = {});

// Accepts the embedding file format; a missing header is tolerated and the
// dimension inferred from the first row.
EmbeddingTable import_external_query_embeddings(const std::filesystem::path& file);

enum class QueryEncoding { search2prod2vec, word2vec, external };

std::string to_string(QueryEncoding e);
QueryEncoding query_encoding_from_string(const std::string& s);

// Query encoder bound to its lookup table. search2prod2vec and word2vec pool
// token vectors; external looks the normalized query up verbatim.
class QueryEncoder {
public:
    QueryEncoder(QueryEncoding encoding, std::shared_ptr<const EmbeddingTable> table);

    QueryVector encode(const std::string& query) const;
    std::size_t dim() const { return table_->dim(); }
    QueryEncoding encoding() const { return encoding_; }
    const EmbeddingTable& table() const { return *table_; }

private:
    QueryEncoding encoding_;
    std::shared_ptr<const EmbeddingTable> table_;
};

}  // namespace facetpath
