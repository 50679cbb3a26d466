#pragma once

#include <memory>
#include <span>

#include "facetpath/embeddings.hpp"
#include "facetpath/nn/tensor.hpp"

namespace facetpath {

// Builds the wide input [query vector ; session vector]. With use_session off
// the session slot is zero-filled, keeping the input width unchanged.
class FeatureEncoder {
public:
    FeatureEncoder(QueryEncoder query, std::shared_ptr<const EmbeddingTable> products, bool use_session = true);

    std::size_t query_dim() const { return query_.dim(); }
    std::size_t session_dim() const { return products_->dim(); }
    std::size_t input_dim() const { return query_dim() + session_dim(); }
    bool use_session() const { return use_session_; }
    const QueryEncoder& query_encoder() const { return query_; }
    const EmbeddingTable& product_table() const { return *products_; }

    SessionVector session(std::span<const ProductId> products) const;
    nn::Vector encode(const std::string& query, const SessionVector& session) const;
    nn::Vector encode(const std::string& query, std::span<const ProductId> products) const;

    FeatureEncoder without_session() const { return {query_, products_, false}; }

private:
    QueryEncoder query_;
    std::shared_ptr<const EmbeddingTable> products_;
    bool use_session_;
};

}  // namespace facetpath
