#include "facetpath/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "facetpath/text.hpp"

namespace facetpath {

std::string to_string(EmbeddingKind kind) {
    switch (kind) {
        case EmbeddingKind::product: return "product";
        case EmbeddingKind::token: return "token";
        case EmbeddingKind::query_unigram: return "query_unigram";
        case EmbeddingKind::query: return "query";
    }
    return "product";
}

EmbeddingKind embedding_kind_from_string(const std::string& s) {
    if (s == "product") return EmbeddingKind::product;
    if (s == "token") return EmbeddingKind::token;
    if (s == "query_unigram") return EmbeddingKind::query_unigram;
    if (s == "query") return EmbeddingKind::query;
    throw Error("unknown embedding kind '" + s + "'");
}

std::optional<std::span<const double>> EmbeddingTable::find(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return row(it->second);
}

void EmbeddingTable::set(const std::string& key, std::span<const double> values) {
    if (values.size() != dim_)
        throw Error("embedding for '" + key + "' has dim " + std::to_string(values.size()) + ", table dim " +
                    std::to_string(dim_));
    if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); }))
        throw Error("embedding for '" + key + "' has non-finite entries");
    auto [it, inserted] = index_.emplace(key, keys_.size());
    if (inserted) {
        keys_.push_back(key);
        data_.insert(data_.end(), values.begin(), values.end());
    } else {
        std::copy(values.begin(), values.end(), row(it->second).begin());
    }
}

void EmbeddingTable::save(const std::filesystem::path& file) const {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw Error("cannot write embedding file " + file.string());
    out << "dim=" << dim_ << " kind=" << to_string(kind_) << '\n';
    char buf[64];
    for (std::size_t i = 0; i < keys_.size(); ++i) {
        out << keys_[i] << '\t';
        auto r = row(i);
        for (std::size_t k = 0; k < dim_; ++k) {
            auto res = std::to_chars(buf, buf + sizeof(buf), r[k], std::chars_format::general, 17);
            if (k) out << ' ';
            out.write(buf, res.ptr - buf);
        }
        out << '\n';
    }
}

namespace {

std::vector<double> parse_values(const std::string& text, const std::string& where) {
    std::vector<double> values;
    const char* p = text.data();
    const char* end = p + text.size();
    while (p < end) {
        while (p < end && (*p == ' ' || *p == '\r')) ++p;
        if (p >= end) break;
        double v = 0.0;
        auto res = std::from_chars(p, end, v);
        if (res.ec != std::errc()) throw Error(where + ": bad number");
        values.push_back(v);
        p = res.ptr;
    }
    return values;
}

EmbeddingTable read_table(const std::filesystem::path& file, std::optional<EmbeddingKind> forced_kind,
                          bool header_optional) {
    std::ifstream in(file);
    if (!in) throw Error("cannot open embedding file " + file.string());
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::size_t> dim;
    EmbeddingKind kind = forced_kind.value_or(EmbeddingKind::product);
    std::vector<std::pair<std::string, std::vector<double>>> rows;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::string where = file.string() + ":" + std::to_string(line_no);
        if (line_no == 1 && line.rfind("dim=", 0) == 0) {
            std::istringstream hs(line);
            std::string tok;
            while (hs >> tok) {
                if (tok.rfind("dim=", 0) == 0) dim = std::stoul(tok.substr(4));
                else if (tok.rfind("kind=", 0) == 0 && !forced_kind) kind = embedding_kind_from_string(tok.substr(5));
            }
            continue;
        }
        if (line_no == 1 && !header_optional) throw Error(where + ": missing 'dim=<d> kind=<kind>' header");
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw Error(where + ": expected key<TAB>values");
        rows.emplace_back(line.substr(0, tab), parse_values(line.substr(tab + 1), where));
        const auto& values = rows.back().second;
        if (!dim) dim = values.size();
        if (values.size() != *dim)
            throw Error(where + ": inconsistent embedding dims (" + std::to_string(values.size()) + " vs " +
                        std::to_string(*dim) + ")");
    }
    if (rows.empty()) throw Error("embedding file " + file.string() + " is empty");
    EmbeddingTable table(*dim, kind);
    for (const auto& [k, v] : rows) table.set(k, v);
    return table;
}

}  // namespace

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& file) {
    return read_table(file, std::nullopt, false);
}

EmbeddingTable import_external_query_embeddings(const std::filesystem::path& file) {
    auto table = read_table(file, EmbeddingKind::query, true);
    // Keys are matched against normalized queries at lookup time.
    EmbeddingTable normalized(table.dim(), EmbeddingKind::query);
    for (std::size_t i = 0; i < table.size(); ++i) normalized.set(normalize_query(table.keys()[i]), table.row(i));
    return normalized;
}

EmbeddingTable train_skipgram(const std::vector<std::vector<std::string>>& corpus, const SkipGramConfig& config,
                              EmbeddingKind kind) {
    if (config.dim < 2) throw Error("skip-gram dim must be >= 2");
    if (corpus.empty()) throw Error("skip-gram corpus is empty");

    std::map<std::string, std::size_t> counts;
    for (const auto& seq : corpus)
        for (const auto& s : seq) ++counts[s];
    std::vector<std::pair<std::string, std::size_t>> vocab;
    for (const auto& [k, c] : counts)
        if (c >= config.min_count) vocab.emplace_back(k, c);
    if (vocab.empty()) throw Error("empty vocabulary after min_count filtering");
    std::stable_sort(vocab.begin(), vocab.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

    std::unordered_map<std::string, std::uint32_t> id;
    for (std::size_t i = 0; i < vocab.size(); ++i) id.emplace(vocab[i].first, static_cast<std::uint32_t>(i));

    std::vector<std::vector<std::uint32_t>> sequences;
    std::size_t total_tokens = 0;
    for (const auto& seq : corpus) {
        std::vector<std::uint32_t> ids;
        for (const auto& s : seq) {
            auto it = id.find(s);
            if (it != id.end()) ids.push_back(it->second);
        }
        total_tokens += ids.size();
        if (!ids.empty()) sequences.push_back(std::move(ids));
    }

    const std::size_t V = vocab.size();
    const std::size_t D = config.dim;
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> init(-0.5 / static_cast<double>(D), 0.5 / static_cast<double>(D));
    std::vector<double> in(V * D), out(V * D, 0.0);
    for (auto& v : in) v = init(rng);

    std::vector<double> noise_cdf(V);
    double acc = 0.0;
    for (std::size_t i = 0; i < V; ++i) {
        acc += std::pow(static_cast<double>(vocab[i].second), 0.75);
        noise_cdf[i] = acc;
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto draw_noise = [&]() {
        double r = unit(rng) * acc;
        auto it = std::upper_bound(noise_cdf.begin(), noise_cdf.end(), r);
        return static_cast<std::uint32_t>(std::min<std::size_t>(it - noise_cdf.begin(), V - 1));
    };
    auto sigmoid = [](double x) {
        if (x > 30) return 1.0;
        if (x < -30) return 0.0;
        return 1.0 / (1.0 + std::exp(-x));
    };

    const double total_steps = static_cast<double>(std::max<std::size_t>(1, config.epochs * total_tokens));
    std::size_t step = 0;
    std::vector<double> grad_in(D);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (const auto& seq : sequences) {
            for (std::size_t pos = 0; pos < seq.size(); ++pos, ++step) {
                double lr = config.learning_rate * std::max(1e-4, 1.0 - static_cast<double>(step) / total_steps);
                const std::size_t lo = pos >= config.window ? pos - config.window : 0;
                const std::size_t hi = std::min(seq.size() - 1, pos + config.window);
                for (std::size_t c = lo; c <= hi; ++c) {
                    if (c == pos) continue;
                    double* v_in = &in[seq[c] * D];
                    std::fill(grad_in.begin(), grad_in.end(), 0.0);
                    for (std::size_t k = 0; k <= config.negatives; ++k) {
                        std::uint32_t target;
                        double label;
                        if (k == 0) {
                            target = seq[pos];
                            label = 1.0;
                        } else {
                            target = draw_noise();
                            if (target == seq[pos]) continue;
                            label = 0.0;
                        }
                        double* v_out = &out[target * D];
                        double dot = 0.0;
                        for (std::size_t d = 0; d < D; ++d) dot += v_in[d] * v_out[d];
                        double g = (label - sigmoid(dot)) * lr;
                        for (std::size_t d = 0; d < D; ++d) {
                            grad_in[d] += g * v_out[d];
                            v_out[d] += g * v_in[d];
                        }
                    }
                    for (std::size_t d = 0; d < D; ++d) v_in[d] += grad_in[d];
                }
            }
        }
    }

    // Rows in key order so the file layout does not depend on frequency ties.
    std::vector<std::size_t> order(V);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return vocab[a].first < vocab[b].first; });
    EmbeddingTable table(D, kind);
    for (auto i : order) table.set(vocab[i].first, std::span<const double>(&in[i * D], D));
    return table;
}

SessionVector session_vector(std::span<const ProductId> session_products, const EmbeddingTable& products) {
    SessionVector sv;
    sv.values.assign(products.dim(), 0.0);
    std::size_t found = 0;
    for (const auto& p : session_products) {
        auto v = products.find(p);
        if (!v) continue;
        for (std::size_t d = 0; d < sv.values.size(); ++d) sv.values[d] += (*v)[d];
        ++found;
    }
    if (found == 0) return sv;
    for (auto& x : sv.values) x /= static_cast<double>(found);
    sv.is_empty_session = false;
    return sv;
}

namespace {

QueryVector mean_of_tokens(const std::string& query, const EmbeddingTable& table) {
    QueryVector qv;
    qv.values.assign(table.dim(), 0.0);
    auto tokens = tokenize(query);
    if (tokens.empty()) return qv;
    std::size_t found = 0;
    for (const auto& t : tokens) {
        auto v = table.find(t);
        if (!v) continue;
        for (std::size_t d = 0; d < qv.values.size(); ++d) qv.values[d] += (*v)[d];
        ++found;
    }
    if (found == 0) return qv;
    for (auto& x : qv.values) x /= static_cast<double>(found);
    qv.coverage = static_cast<double>(found) / static_cast<double>(tokens.size());
    return qv;
}

}  // namespace

QueryVector query_vector_word2vec(const std::string& query, const EmbeddingTable& tokens) {
    return mean_of_tokens(query, tokens);
}

QueryVector query_vector_s2pv(const std::string& query, const EmbeddingTable& unigrams) {
    return mean_of_tokens(query, unigrams);
}

Search2Prod2Vec build_search2prod2vec_tables(const std::vector<LabeledExample>& train,
                                             const EmbeddingTable& products,
                                             const Search2Prod2VecOptions& options) {
    const std::size_t D = products.dim();
    // One example per click, so each occurrence is a unit click weight.
    std::map<std::string, std::pair<std::vector<double>, double>> query_sums;
    for (const auto& ex : train) {
        auto v = products.find(ex.clicked_product);
        if (!v) continue;
        auto& [sum, weight] = query_sums[normalize_query(ex.query)];
        if (sum.empty()) sum.assign(D, 0.0);
        for (std::size_t d = 0; d < D; ++d) sum[d] += (*v)[d];
        weight += 1.0;
    }

    Search2Prod2Vec out{EmbeddingTable(D, EmbeddingKind::query), EmbeddingTable(D, EmbeddingKind::query_unigram)};
    std::map<std::string, std::pair<std::vector<double>, double>> token_sums;
    for (auto& [q, sw] : query_sums) {
        auto& [sum, weight] = sw;
        for (auto& x : sum) x /= weight;
        out.queries.set(q, sum);
        const double w = options.weight_unigrams_by_clicks ? weight : 1.0;
        auto tokens = tokenize(q);
        std::set<std::string> distinct(tokens.begin(), tokens.end());
        for (const auto& t : distinct) {
            auto& [tsum, tw] = token_sums[t];
            if (tsum.empty()) tsum.assign(D, 0.0);
            for (std::size_t d = 0; d < D; ++d) tsum[d] += w * sum[d];
            tw += w;
        }
    }
    for (auto& [t, sw] : token_sums) {
        auto& [sum, weight] = sw;
        for (auto& x : sum) x /= weight;
        out.unigrams.set(t, sum);
    }
    return out;
}

EmbeddingTable build_search2prod2vec(const std::vector<LabeledExample>& train, const EmbeddingTable& products,
                                     const Search2Prod2VecOptions& options) {
    return build_search2prod2vec_tables(train, products, options).unigrams;
}

std::string to_string(QueryEncoding e) {
    switch (e) {
        case QueryEncoding::search2prod2vec: return "search2prod2vec";
        case QueryEncoding::word2vec: return "word2vec";
        case QueryEncoding::external: return "external";
    }
    return "search2prod2vec";
}

QueryEncoding query_encoding_from_string(const std::string& s) {
    if (s == "search2prod2vec" || s == "s2pv" || s == "sv") return QueryEncoding::search2prod2vec;
    if (s == "word2vec" || s == "w2v") return QueryEncoding::word2vec;
    if (s == "external") return QueryEncoding::external;
    throw Error("unknown query encoding '" + s + "'");
}

QueryEncoder::QueryEncoder(QueryEncoding encoding, std::shared_ptr<const EmbeddingTable> table)
    : encoding_(encoding), table_(std::move(table)) {
    if (!table_) throw Error("query encoder needs a table");
}

QueryVector QueryEncoder::encode(const std::string& query) const {
    if (encoding_ != QueryEncoding::external) return mean_of_tokens(query, *table_);
    QueryVector qv;
    if (auto v = table_->find(normalize_query(query))) {
        qv.values.assign(v->begin(), v->end());
        qv.coverage = 1.0;
    } else {
        qv.values.assign(table_->dim(), 0.0);
    }
    return qv;
}

}  // namespace facetpath
