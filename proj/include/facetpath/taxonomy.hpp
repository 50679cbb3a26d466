#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace facetpath {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using ProductId = std::string;

// Index into the node vocabulary. START and END occupy the first two slots;
// catalog nodes follow, sorted by (depth, label).
struct NodeId {
    std::uint32_t value = 0;

    auto operator<=>(const NodeId&) const = default;
};

inline constexpr NodeId kStartNode{0};
inline constexpr NodeId kEndNode{1};
inline constexpr std::uint32_t kFirstCatalogNode = 2;

// Category path from depth 1 downwards, root omitted. An empty path stands
// for "root", i.e. no facet.
class Path {
public:
    Path() = default;
    explicit Path(std::vector<NodeId> nodes) : nodes_(std::move(nodes)) {}

    std::size_t depth() const { return nodes_.size(); }
    bool empty() const { return nodes_.empty(); }
    const std::vector<NodeId>& nodes() const { return nodes_; }
    NodeId operator[](std::size_t i) const { return nodes_[i]; }
    void push_back(NodeId n) { nodes_.push_back(n); }

    bool is_prefix_of(const Path& other) const;

    auto operator<=>(const Path&) const = default;
    bool operator==(const Path&) const = default;

private:
    std::vector<NodeId> nodes_;
};

// First min(k, depth) nodes.
Path truncate(const Path& path, std::size_t k);

struct NodeInfo {
    std::string label;
    std::uint32_t depth = 0;  // 0 for START/END
};

struct Product {
    ProductId id;
    Path path;
    std::string description;
};

class TaxonomyTree {
public:
    TaxonomyTree() = default;

    // Builds the tree from (product id, label path, description) rows.
    // Throws on duplicate ids or empty paths.
    struct Row {
        ProductId product_id;
        std::vector<std::string> path;
        std::string description;
    };
    static TaxonomyTree from_rows(const std::vector<Row>& rows);

    std::size_t max_depth() const { return max_depth_; }
    std::size_t product_count() const { return products_.size(); }
    const std::vector<Product>& products() const { return products_; }

    // Index into products(), or -1.
    std::ptrdiff_t product_index(std::string_view id) const;
    const Path* path_of(std::string_view id) const;

    const std::set<NodeId>& children(const Path& prefix) const;
    bool is_valid_path(const Path& path) const;

    // START, END, then every catalog node in (depth, label) order.
    const std::vector<NodeInfo>& node_vocabulary() const { return vocabulary_; }
    std::size_t vocabulary_size() const { return vocabulary_.size(); }
    const NodeInfo& node(NodeId id) const { return vocabulary_.at(id.value); }
    // Returns kEndNode if the (label, depth) pair is unknown.
    NodeId find_node(std::string_view label, std::uint32_t depth) const;
    // FNV-1a over the ordered vocabulary; stored in model checkpoints.
    std::uint64_t vocabulary_hash() const;

    std::string to_string(const Path& path) const;
    // Parses "a/b/c"; throws if a label is unknown at its depth.
    Path parse_path(std::string_view text) const;
    std::vector<std::string> labels(const Path& path) const;

    // All distinct full product paths, sorted.
    std::vector<Path> leaf_paths() const;

private:
    std::vector<Product> products_;
    std::unordered_map<std::string, std::size_t> product_index_;
    std::vector<NodeInfo> vocabulary_;
    std::map<std::pair<std::uint32_t, std::string>, NodeId> node_lookup_;
    std::map<Path, std::set<NodeId>> children_;
    std::size_t max_depth_ = 0;
};

// JSON Lines: {"product_id": ..., "path": [...], "description": ...}
TaxonomyTree load_catalog(const std::filesystem::path& catalog_file);

}  // namespace facetpath
