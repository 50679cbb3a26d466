#include "facetpath/features.hpp"

namespace facetpath {

FeatureEncoder::FeatureEncoder(QueryEncoder query, std::shared_ptr<const EmbeddingTable> products, bool use_session)
    : query_(std::move(query)), products_(std::move(products)), use_session_(use_session) {
    if (!products_) throw Error("feature encoder needs a product embedding table");
}

SessionVector FeatureEncoder::session(std::span<const ProductId> products) const {
    if (!use_session_) return {std::vector<double>(session_dim(), 0.0), true};
    return session_vector(products, *products_);
}

nn::Vector FeatureEncoder::encode(const std::string& query, const SessionVector& session) const {
    nn::Vector x = nn::Vector::Zero(static_cast<Eigen::Index>(input_dim()));
    auto q = query_.encode(query);
    for (std::size_t i = 0; i < q.values.size(); ++i) x(static_cast<Eigen::Index>(i)) = q.values[i];
    if (use_session_) {
        if (session.values.size() != session_dim()) throw Error("session vector has the wrong dimension");
        const auto off = query_dim();
        for (std::size_t i = 0; i < session.values.size(); ++i)
            x(static_cast<Eigen::Index>(off + i)) = session.values[i];
    }
    return x;
}

nn::Vector FeatureEncoder::encode(const std::string& query, std::span<const ProductId> products) const {
    return encode(query, session(products));
}

}  // namespace facetpath
