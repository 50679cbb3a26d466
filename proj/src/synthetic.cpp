#include "facetpath/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <unordered_set>

#include "facetpath/text.hpp"
#include "json.hpp"

namespace facetpath {
namespace {

const std::vector<std::vector<std::string>> kLabelPools = {
    {"sport", "home", "garden", "fashion", "toys", "tech", "beauty", "kitchen", "office", "auto"},
    {"shoes", "pants", "shirts", "bags", "jackets", "socks", "lamps", "tools", "cables", "chairs"},
    {"running", "basketball", "soccer", "tennis", "training", "outdoor", "casual", "kids"},
    {"pro", "lite", "max", "air", "classic", "ultra", "street", "trail"},
};

const std::vector<std::string> kBrands = {
    "nike", "adidas", "puma", "reebok", "asics", "fila", "vans", "umbro", "lotto", "kappa",
    "mizuno", "salomon", "diadora", "joma", "saucony", "brooks", "hoka", "ellesse", "levis", "gap"};

std::string label_for(std::size_t depth, std::size_t index) {
    const auto& pool = depth - 1 < kLabelPools.size() ? kLabelPools[depth - 1] : kLabelPools.back();
    if (index < pool.size()) return pool[index];
    return pool[index % pool.size()] + std::to_string(index / pool.size());
}

std::string brand_for(std::size_t index) {
    if (index < kBrands.size()) return kBrands[index];
    return kBrands[index % kBrands.size()] + std::to_string(index / kBrands.size());
}

std::string model_token(std::size_t product) {
    static const char* digits = "0123456789abcdefghijklmnopqrstuvwxyz";
    std::string s;
    do {
        s.insert(s.begin(), digits[product % 36]);
        product /= 36;
    } while (product);
    return "m" + s;
}

struct Leaf {
    std::vector<std::size_t> child_index;  // per depth
    std::size_t top = 0;
    std::vector<std::size_t> brands;
    std::vector<std::size_t> products;
    double weight = 0.0;
};

class Generator {
public:
    Generator(const SynthConfig& config, std::uint64_t seed) : cfg_(config), rng_(seed) {}

    SyntheticData run() {
        validate();
        build_leaves();
        build_products();
        build_sessions();
        return std::move(out_);
    }

private:
    void validate() const {
        if (cfg_.min_depth < 2 || cfg_.min_depth > cfg_.max_depth)
            throw Error("infeasible config: need 2 <= min_depth <= max_depth");
        if (cfg_.branching.size() < cfg_.max_depth)
            throw Error("infeasible config: branching must list a width for every depth");
        if (std::any_of(cfg_.branching.begin(), cfg_.branching.end(), [](auto b) { return b == 0; }))
            throw Error("infeasible config: zero branching");
        if (cfg_.n_paths < cfg_.branching[0])
            throw Error("infeasible config: fewer paths than top-level categories");
        if (cfg_.n_paths > capacity())
            throw Error("infeasible config: taxonomy shape admits only " + std::to_string(capacity()) +
                        " paths, " + std::to_string(cfg_.n_paths) + " requested");
        if (cfg_.n_products < cfg_.n_paths)
            throw Error("infeasible config: fewer products than paths");
        if (cfg_.min_views < 2 || cfg_.max_views < cfg_.min_views)
            throw Error("infeasible config: sessions need at least two views");
        if (cfg_.max_searches < 1) throw Error("infeasible config: max_searches must be >= 1");
        if (cfg_.result_set_size < 2) throw Error("infeasible config: result_set_size must be >= 2");
        if (cfg_.brands_per_path < 1 || cfg_.n_brands < cfg_.brands_per_path)
            throw Error("infeasible config: brand pool too small");
    }

    std::size_t subtree_depth(std::size_t top) const {
        return cfg_.min_depth + top % (cfg_.max_depth - cfg_.min_depth + 1);
    }

    std::size_t capacity() const {
        std::size_t total = 0;
        for (std::size_t t = 0; t < cfg_.branching[0]; ++t) {
            std::size_t leaves = 1;
            for (std::size_t d = 1; d < subtree_depth(t); ++d) leaves *= cfg_.branching[d];
            total += leaves;
        }
        return total;
    }

    void build_leaves() {
        std::vector<Leaf> all;
        for (std::size_t t = 0; t < cfg_.branching[0]; ++t) {
            const auto depth = subtree_depth(t);
            std::vector<std::size_t> idx(depth, 0);
            idx[0] = t;
            while (true) {
                Leaf leaf;
                leaf.child_index = idx;
                leaf.top = t;
                all.push_back(leaf);
                // odometer over depths 2..depth
                bool exhausted = true;
                for (std::size_t d = depth; d-- > 1;) {
                    if (++idx[d] < cfg_.branching[d]) {
                        exhausted = false;
                        break;
                    }
                    idx[d] = 0;
                }
                if (exhausted) break;
            }
        }

        // Every top-level category keeps at least one path; the rest are drawn uniformly.
        std::vector<std::size_t> order(all.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng_);
        std::vector<bool> chosen(all.size(), false);
        std::vector<bool> top_covered(cfg_.branching[0], false);
        std::size_t n_chosen = 0;
        for (auto i : order) {
            if (!top_covered[all[i].top]) {
                top_covered[all[i].top] = true;
                chosen[i] = true;
                ++n_chosen;
            }
        }
        for (auto i : order) {
            if (n_chosen == cfg_.n_paths) break;
            if (!chosen[i]) {
                chosen[i] = true;
                ++n_chosen;
            }
        }
        for (std::size_t i = 0; i < all.size(); ++i)
            if (chosen[i]) leaves_.push_back(all[i]);

        std::vector<std::size_t> brand_ids(cfg_.n_brands);
        std::iota(brand_ids.begin(), brand_ids.end(), 0);
        std::vector<double> rank_mass(cfg_.branching[0], 0.0);
        std::vector<std::size_t> rank(cfg_.branching[0], 0);
        std::vector<double> path_weight;
        for (const auto& l : leaves_) {
            path_weight.push_back(1.0 / std::pow(static_cast<double>(++rank[l.top]), cfg_.path_skew));
            rank_mass[l.top] += path_weight.back();
        }
        for (std::size_t i = 0; i < leaves_.size(); ++i) {
            auto& l = leaves_[i];
            double top_weight = 1.0 / std::pow(static_cast<double>(l.top + 1), cfg_.top_level_skew);
            l.weight = top_weight * path_weight[i] / rank_mass[l.top];
            std::shuffle(brand_ids.begin(), brand_ids.end(), rng_);
            l.brands.assign(brand_ids.begin(), brand_ids.begin() + static_cast<std::ptrdiff_t>(cfg_.brands_per_path));
        }
        std::vector<double> weights;
        for (const auto& l : leaves_) weights.push_back(l.weight);
        leaf_dist_ = std::discrete_distribution<std::size_t>(weights.begin(), weights.end());
        for (std::size_t i = 0; i < leaves_.size(); ++i) leaves_by_top_[leaves_[i].top].push_back(i);
    }

    std::vector<std::string> leaf_labels(const Leaf& leaf) const {
        std::vector<std::string> labels;
        for (std::size_t d = 0; d < leaf.child_index.size(); ++d) labels.push_back(label_for(d + 1, leaf.child_index[d]));
        return labels;
    }

    void build_products() {
        std::vector<std::size_t> owner;
        for (std::size_t i = 0; i < leaves_.size(); ++i) owner.push_back(i);
        while (owner.size() < cfg_.n_products) owner.push_back(leaf_dist_(rng_));
        std::shuffle(owner.begin(), owner.end(), rng_);

        for (std::size_t p = 0; p < owner.size(); ++p) {
            auto& leaf = leaves_[owner[p]];
            leaf.products.push_back(p);
            auto labels = leaf_labels(leaf);
            std::uniform_int_distribution<std::size_t> pick_brand(0, leaf.brands.size() - 1);
            std::vector<std::string> tokens = labels;
            tokens.push_back(brand_for(leaf.brands[pick_brand(rng_)]));
            tokens.push_back(model_token(p));

            TaxonomyTree::Row row;
            char id[16];
            std::snprintf(id, sizeof(id), "p%05zu", p);
            row.product_id = id;
            row.path = labels;
            for (std::size_t i = 0; i < tokens.size(); ++i) row.description += (i ? " " : "") + tokens[i];
            out_.catalog.push_back(std::move(row));
            product_tokens_.push_back(std::move(tokens));
            product_leaf_.push_back(owner[p]);
            product_top_.push_back(leaf.top);
        }
        for (std::size_t p = 0; p < product_tokens_.size(); ++p) {
            for (const auto& t : product_tokens_[p]) token_index_[t].push_back(p);
            products_by_top_[product_top_[p]].push_back(p);
        }
        for (const auto& [t, _] : token_index_) vocabulary_.push_back(t);
    }

    std::size_t pick(const std::vector<std::size_t>& items) {
        std::uniform_int_distribution<std::size_t> d(0, items.size() - 1);
        return items[d(rng_)];
    }

    bool coin(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p; }

    std::size_t leaf_in_top(std::size_t top) {
        const auto& ids = leaves_by_top_.at(top);
        std::vector<double> w;
        for (auto i : ids) w.push_back(leaves_[i].weight);
        std::discrete_distribution<std::size_t> d(w.begin(), w.end());
        return ids[d(rng_)];
    }

    // Shoppers mostly type a category word, often the most specific one,
    // sometimes with a brand, rarely with the model code.
    std::string make_query(std::size_t product) {
        const auto& tokens = product_tokens_[product];
        const auto depth = tokens.size() - 2;
        const std::string& brand = tokens[depth];
        const std::string& model = tokens[depth + 1];

        std::vector<std::string> words;
        if (coin(0.4)) words.push_back(brand);
        const double r = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
        if (r < 0.55) {
            words.push_back(tokens[depth - 1]);
        } else if (r < 0.75) {
            words.push_back(tokens[1 + pick_index(depth - 1)]);
        } else if (r < 0.9) {
            words.push_back(tokens[depth - 2]);
            words.push_back(tokens[depth - 1]);
        } else {
            words.push_back(tokens[0]);
        }
        if (coin(0.1)) words.push_back(model);

        std::string q;
        for (auto tok : words) {
            if (coin(cfg_.query_noise_rate)) tok = vocabulary_[pick_index(vocabulary_.size())];
            q += (q.empty() ? "" : " ") + tok;
        }
        return q;
    }

    std::size_t pick_index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
    }

    std::vector<std::size_t> make_result_set(std::size_t target, const std::string& query) {
        auto q_tokens = tokenize(query);
        std::map<std::size_t, std::size_t> overlap;
        for (const auto& t : q_tokens) {
            auto it = token_index_.find(t);
            if (it == token_index_.end()) continue;
            for (auto p : it->second)
                if (p != target) ++overlap[p];
        }
        std::vector<std::tuple<std::size_t, double, std::size_t>> ranked;
        for (auto [p, n] : overlap) ranked.emplace_back(n, std::uniform_real_distribution<double>()(rng_), p);
        std::sort(ranked.begin(), ranked.end(), std::greater<>());

        const std::size_t n_random = 2;
        const std::size_t n_matched = cfg_.result_set_size - 1 > n_random ? cfg_.result_set_size - 1 - n_random : 0;
        std::vector<std::size_t> result;
        std::unordered_set<std::size_t> used{target};
        for (std::size_t i = 0; i < ranked.size() && result.size() < n_matched; ++i) {
            result.push_back(std::get<2>(ranked[i]));
            used.insert(std::get<2>(ranked[i]));
        }
        while (result.size() < cfg_.result_set_size - 1 && used.size() < product_tokens_.size()) {
            auto p = pick_index(product_tokens_.size());
            if (used.insert(p).second) result.push_back(p);
        }
        result.insert(result.begin() + static_cast<std::ptrdiff_t>(pick_index(result.size() + 1)), target);
        return result;
    }

    void build_sessions() {
        std::int64_t clock = cfg_.start_timestamp;
        std::vector<double> top_weights;
        for (std::size_t t = 0; t < cfg_.branching[0]; ++t)
            top_weights.push_back(1.0 / std::pow(static_cast<double>(t + 1), cfg_.top_level_skew));
        std::discrete_distribution<std::size_t> top_dist(top_weights.begin(), top_weights.end());

        for (std::size_t s = 0; s < cfg_.n_sessions; ++s) {
            char sid[16];
            std::snprintf(sid, sizeof(sid), "s%06zu", s);
            clock += 60000 + static_cast<std::int64_t>(pick_index(120000));
            std::int64_t t = clock;

            const bool coherent = coin(cfg_.session_coherence_rate);
            const auto n_views = cfg_.min_views + pick_index(cfg_.max_views - cfg_.min_views + 1);
            const auto n_searches = 1 + pick_index(cfg_.max_searches);

            std::vector<std::size_t> views;
            std::size_t intent_top = top_dist(rng_);
            std::size_t intent_leaf = leaf_in_top(intent_top);
            if (coherent) {
                const auto& leaf = leaves_[intent_leaf];
                std::vector<std::size_t> near;
                for (auto p : products_by_top_[intent_top]) {
                    const auto& other = leaves_[product_leaf_[p]];
                    if (other.child_index.size() > 1 && leaf.child_index.size() > 1 &&
                        other.child_index[1] == leaf.child_index[1])
                        near.push_back(p);
                }
                // Mostly the intended leaf, then its sibling subtree, then anything in the category.
                for (std::size_t v = 0; v < n_views; ++v) {
                    const double r = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
                    if (r < 0.4)
                        views.push_back(pick(leaf.products));
                    else if (r < 0.7 && !near.empty())
                        views.push_back(pick(near));
                    else
                        views.push_back(pick(products_by_top_[intent_top]));
                }
            } else {
                std::set<std::size_t> tops;
                for (std::size_t v = 0; v < n_views; ++v) {
                    auto top = top_dist(rng_);
                    if (v + 1 == n_views && tops.size() == 1 && tops.contains(top)) {
                        while (top == *tops.begin()) top = pick_index(cfg_.branching[0]);
                    }
                    tops.insert(top);
                    views.push_back(pick(products_by_top_[top]));
                }
            }

            // Number of views preceding each search.
            std::vector<std::size_t> slots;
            for (std::size_t k = 0; k < n_searches; ++k) {
                if (k == 0 && coin(cfg_.empty_session_rate)) {
                    slots.push_back(0);
                } else {
                    slots.push_back(1 + pick_index(n_views));
                }
            }
            std::sort(slots.begin(), slots.end());

            std::size_t next_search = 0;
            for (std::size_t v = 0; v <= n_views; ++v) {
                while (next_search < slots.size() && slots[next_search] == v) {
                    std::size_t leaf_id;
                    if (coherent) {
                        leaf_id = next_search == 0 || coin(0.5) ? intent_leaf : leaf_in_top(intent_top);
                    } else if (v == 0) {
                        leaf_id = leaf_dist_(rng_);
                    } else {
                        leaf_id = leaf_in_top(product_top_[views[v - 1]]);
                    }
                    emit_search(sid, t, leaf_id);
                    t += 5000 + static_cast<std::int64_t>(pick_index(60000));
                    ++next_search;
                }
                if (v < n_views) {
                    SessionEvent e;
                    e.session_id = sid;
                    e.timestamp = t;
                    e.kind = EventKind::view;
                    e.product_id = out_.catalog[views[v]].product_id;
                    out_.events.push_back(std::move(e));
                    t += 5000 + static_cast<std::int64_t>(pick_index(60000));
                }
            }
            clock = std::max(clock, t);
        }
    }

    void emit_search(const std::string& sid, std::int64_t t, std::size_t leaf_id) {
        const auto& leaf = leaves_[leaf_id];
        auto target = pick(leaf.products);
        auto query = make_query(target);
        auto results = make_result_set(target, query);

        std::vector<std::size_t> clicked{target};
        if (coin(cfg_.extra_click_rate)) {
            for (auto p : results)
                if (p != target && product_leaf_[p] == leaf_id) {
                    clicked.push_back(p);
                    break;
                }
        }
        SessionEvent e;
        e.session_id = sid;
        e.timestamp = t;
        e.kind = EventKind::search;
        e.query = query;
        for (auto p : results) {
            e.result_set.push_back(out_.catalog[p].product_id);
            if (std::find(clicked.begin(), clicked.end(), p) != clicked.end())
                e.clicked.push_back(out_.catalog[p].product_id);
        }
        out_.events.push_back(std::move(e));

        std::string path;
        for (const auto& l : leaf_labels(leaf)) path += (path.empty() ? "" : "/") + l;
        out_.manifest.push_back({query, sid, path});
    }

    const SynthConfig& cfg_;
    std::mt19937_64 rng_;
    SyntheticData out_;
    std::vector<Leaf> leaves_;
    std::discrete_distribution<std::size_t> leaf_dist_;
    std::map<std::size_t, std::vector<std::size_t>> leaves_by_top_;
    std::vector<std::vector<std::string>> product_tokens_;
    std::vector<std::size_t> product_leaf_;
    std::vector<std::size_t> product_top_;
    std::map<std::size_t, std::vector<std::size_t>> products_by_top_;
    std::map<std::string, std::vector<std::size_t>> token_index_;
    std::vector<std::string> vocabulary_;
};

}  // namespace

SyntheticData generate_synthetic(const SynthConfig& config, std::uint64_t seed) {
    return Generator(config, seed).run();
}

SyntheticFiles write_synthetic(const SyntheticData& data, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    SyntheticFiles files{out_dir / "catalog.jsonl", out_dir / "events.jsonl", out_dir / "truth.jsonl",
                         data.events.size()};
    {
        std::ofstream out(files.catalog_file, std::ios::binary);
        for (const auto& row : data.catalog) {
            nlohmann::json j{{"product_id", row.product_id}, {"path", row.path}, {"description", row.description}};
            out << j.dump() << '\n';
        }
    }
    {
        std::ofstream out(files.log_file, std::ios::binary);
        for (const auto& e : data.events) out << to_json_line(e) << '\n';
    }
    {
        std::ofstream out(files.manifest_file, std::ios::binary);
        for (const auto& m : data.manifest) {
            nlohmann::json j{{"query", m.query}, {"session_id", m.session_id}, {"intended_path", m.intended_path}};
            out << j.dump() << '\n';
        }
    }
    return files;
}

}  // namespace facetpath
