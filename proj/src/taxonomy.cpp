#include "facetpath/taxonomy.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"

namespace facetpath {

bool Path::is_prefix_of(const Path& other) const {
    if (nodes_.size() > other.nodes_.size()) return false;
    return std::equal(nodes_.begin(), nodes_.end(), other.nodes_.begin());
}

Path truncate(const Path& path, std::size_t k) {
    const auto n = std::min(k, path.depth());
    return Path(std::vector<NodeId>(path.nodes().begin(), path.nodes().begin() + n));
}

TaxonomyTree TaxonomyTree::from_rows(const std::vector<Row>& rows) {
    if (rows.empty()) throw Error("empty catalog");

    TaxonomyTree tree;
    std::set<std::pair<std::uint32_t, std::string>> distinct;
    for (const auto& row : rows) {
        if (row.path.empty()) throw Error("product '" + row.product_id + "' has an empty path");
        for (std::size_t d = 0; d < row.path.size(); ++d) {
            if (row.path[d].empty())
                throw Error("product '" + row.product_id + "' has an empty label at depth " +
                            std::to_string(d + 1));
            distinct.emplace(static_cast<std::uint32_t>(d + 1), row.path[d]);
        }
    }

    tree.vocabulary_.push_back({"<start>", 0});
    tree.vocabulary_.push_back({"<end>", 0});
    for (const auto& [depth, label] : distinct) {
        NodeId id{static_cast<std::uint32_t>(tree.vocabulary_.size())};
        tree.vocabulary_.push_back({label, depth});
        tree.node_lookup_.emplace(std::pair{depth, label}, id);
    }

    tree.products_.reserve(rows.size());
    for (const auto& row : rows) {
        if (tree.product_index_.contains(row.product_id))
            throw Error("duplicate product id '" + row.product_id + "'");
        Path path;
        for (std::size_t d = 0; d < row.path.size(); ++d)
            path.push_back(tree.node_lookup_.at({static_cast<std::uint32_t>(d + 1), row.path[d]}));

        Path prefix;
        tree.children_[prefix];
        for (auto n : path.nodes()) {
            tree.children_[prefix].insert(n);
            prefix.push_back(n);
            tree.children_[prefix];
        }
        tree.max_depth_ = std::max(tree.max_depth_, path.depth());
        tree.product_index_.emplace(row.product_id, tree.products_.size());
        tree.products_.push_back({row.product_id, std::move(path), row.description});
    }
    return tree;
}

std::ptrdiff_t TaxonomyTree::product_index(std::string_view id) const {
    auto it = product_index_.find(std::string(id));
    return it == product_index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

const Path* TaxonomyTree::path_of(std::string_view id) const {
    auto idx = product_index(id);
    return idx < 0 ? nullptr : &products_[static_cast<std::size_t>(idx)].path;
}

const std::set<NodeId>& TaxonomyTree::children(const Path& prefix) const {
    static const std::set<NodeId> none;
    auto it = children_.find(prefix);
    return it == children_.end() ? none : it->second;
}

bool TaxonomyTree::is_valid_path(const Path& path) const { return children_.contains(path); }

NodeId TaxonomyTree::find_node(std::string_view label, std::uint32_t depth) const {
    auto it = node_lookup_.find({depth, std::string(label)});
    return it == node_lookup_.end() ? kEndNode : it->second;
}

std::uint64_t TaxonomyTree::vocabulary_hash() const {
    std::uint64_t h = 14695981039346656037ULL;
    auto mix = [&h](unsigned char c) {
        h ^= c;
        h *= 1099511628211ULL;
    };
    for (const auto& n : vocabulary_) {
        for (char c : n.label) mix(static_cast<unsigned char>(c));
        mix(0);
        for (int s = 0; s < 4; ++s) mix(static_cast<unsigned char>(n.depth >> (8 * s)));
    }
    return h;
}

std::string TaxonomyTree::to_string(const Path& path) const {
    std::string out;
    for (std::size_t i = 0; i < path.depth(); ++i) {
        if (i) out += '/';
        out += node(path[i]).label;
    }
    return out;
}

Path TaxonomyTree::parse_path(std::string_view text) const {
    Path path;
    std::uint32_t depth = 1;
    while (!text.empty()) {
        auto slash = text.find('/');
        auto label = text.substr(0, slash);
        auto id = find_node(label, depth);
        if (id == kEndNode)
            throw Error("unknown node '" + std::string(label) + "' at depth " + std::to_string(depth));
        path.push_back(id);
        ++depth;
        if (slash == std::string_view::npos) break;
        text.remove_prefix(slash + 1);
    }
    return path;
}

std::vector<std::string> TaxonomyTree::labels(const Path& path) const {
    std::vector<std::string> out;
    out.reserve(path.depth());
    for (auto n : path.nodes()) out.push_back(node(n).label);
    return out;
}

std::vector<Path> TaxonomyTree::leaf_paths() const {
    std::set<Path> leaves;
    for (const auto& p : products_) leaves.insert(p.path);
    return {leaves.begin(), leaves.end()};
}

TaxonomyTree load_catalog(const std::filesystem::path& catalog_file) {
    std::ifstream in(catalog_file);
    if (!in) throw Error("cannot open catalog file " + catalog_file.string());

    std::vector<TaxonomyTree::Row> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = nlohmann::json::parse(line);
            TaxonomyTree::Row row;
            row.product_id = j.at("product_id").get<std::string>();
            row.path = j.at("path").get<std::vector<std::string>>();
            row.description = j.value("description", std::string{});
            if (row.path.empty()) throw Error("empty path");
            rows.push_back(std::move(row));
        } catch (const std::exception& e) {
            throw Error(catalog_file.string() + ":" + std::to_string(line_no) +
                        ": malformed catalog row: " + e.what());
        }
    }
    return TaxonomyTree::from_rows(rows);
}

}  // namespace facetpath
