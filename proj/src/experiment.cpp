#include "facetpath/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "facetpath/count_model.hpp"
#include "facetpath/nn/checkpoint.hpp"
#include "facetpath/predictor.hpp"
#include "facetpath/text.hpp"

namespace facetpath {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::cm: return "cm";
        case ModelKind::mlp: return "mlp";
        case ModelKind::sessionpath: return "sessionpath";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "cm") return ModelKind::cm;
    if (s == "mlp") return ModelKind::mlp;
    if (s == "sessionpath" || s == "sp") return ModelKind::sessionpath;
    throw Error("unknown model '" + s + "' (expected cm, mlp or sessionpath)");
}

std::vector<ModelVariant> default_variants() {
    return {{"CM", ModelKind::cm, QueryEncoding::search2prod2vec, false},
            {"MLP", ModelKind::mlp, QueryEncoding::search2prod2vec, true},
            {"SP+S2PV", ModelKind::sessionpath, QueryEncoding::search2prod2vec, true},
            {"SP+S2PV-nosession", ModelKind::sessionpath, QueryEncoding::search2prod2vec, false}};
}

namespace {

nlohmann::json to_json(const SkipGramConfig& c) {
    return {{"dim", c.dim},         {"window", c.window},
            {"negatives", c.negatives}, {"epochs", c.epochs},
            {"min_count", c.min_count}, {"learning_rate", c.learning_rate}};
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json variants = nlohmann::json::array();
    for (const auto& v : c.variants)
        variants.push_back({{"name", v.name},
                            {"model", to_string(v.kind)},
                            {"query_encoding", to_string(v.encoding)},
                            {"use_session", v.use_session}});
    return {{"variants", variants},
            {"fractions", c.fractions},
            {"seeds", c.seeds},
            {"cts", c.cts},
            {"safety_check", c.safety_check},
            {"cm_threshold", c.cm_threshold},
            {"prod2vec", to_json(c.prod2vec)},
            {"word2vec", to_json(c.word2vec)},
            {"train", nn::to_json(c.train)},
            {"mlp", {{"hidden", c.mlp.hidden}}},
            {"sessionpath",
             {{"encoder_width", c.sessionpath.encoder_width},
              {"hidden", c.sessionpath.hidden},
              {"token_dim", c.sessionpath.token_dim}}}};
}

std::vector<std::size_t> context_dependent_subset(std::span<const LabeledExample> test, const TaxonomyTree& tree) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto& ex = test[i];
        if (ex.session_products.empty() || ex.target_path.empty()) continue;
        const auto& top = tree.node(ex.target_path[0]).label;
        auto tokens = tokenize(ex.query);
        auto top_tokens = tokenize(top);
        bool named = std::any_of(top_tokens.begin(), top_tokens.end(), [&](const std::string& t) {
            return std::find(tokens.begin(), tokens.end(), t) != tokens.end();
        });
        if (!named) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> unseen_queries(std::span<const LabeledExample> train, std::span<const LabeledExample> test) {
    std::unordered_set<std::string> seen;
    for (const auto& ex : train) seen.insert(normalize_query(ex.query));
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < test.size(); ++i)
        if (!seen.contains(normalize_query(test[i].query))) out.push_back(i);
    return out;
}

MetricSummary summarize(std::span<const double> values) {
    MetricSummary s;
    s.n = values.size();
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
    }
    return s;
}

MetricSummary CellResult::summary(const std::string& metric) const {
    std::vector<double> v;
    for (const auto& s : seeds)
        if (!s.failed) {
            auto it = s.metrics.find(metric);
            if (it != s.metrics.end()) v.push_back(it->second);
        }
    return summarize(v);
}

const CellResult* EvalReport::cell(const std::string& variant, double fraction) const {
    for (const auto& c : cells)
        if (c.variant.name == variant && c.fraction == fraction) return &c;
    return nullptr;
}

namespace {

struct SeedContext {
    std::shared_ptr<const EmbeddingTable> products;
};

struct FractionContext {
    std::vector<LabeledExample> train;
    std::shared_ptr<const CountModel> cm;
    std::shared_ptr<const EmbeddingTable> s2pv;
    std::shared_ptr<const EmbeddingTable> word2vec;
    std::vector<std::size_t> unseen;
    std::vector<std::size_t> seen;
};

std::shared_ptr<const EmbeddingTable> query_table(const ModelVariant& v, FractionContext& fc,
                                                  const ExperimentConfig& config, const TaxonomyTree& tree,
                                                  std::uint64_t seed,
                                                  std::shared_ptr<const EmbeddingTable>& external) {
    switch (v.encoding) {
        case QueryEncoding::search2prod2vec: return fc.s2pv;
        case QueryEncoding::word2vec:
            if (!fc.word2vec) {
                std::vector<std::vector<std::string>> corpus;
                for (const auto& ex : fc.train) corpus.push_back(tokenize(ex.query));
                for (const auto& p : tree.products()) corpus.push_back(tokenize(p.description));
                auto cfg = config.word2vec;
                cfg.seed = seed;
                fc.word2vec = std::make_shared<EmbeddingTable>(train_skipgram(corpus, cfg, EmbeddingKind::token));
            }
            return fc.word2vec;
        case QueryEncoding::external:
            if (!external) {
                if (!config.external_query_embeddings) throw Error("external query encoding needs an embeddings file");
                external = std::make_shared<EmbeddingTable>(
                    import_external_query_embeddings(*config.external_query_embeddings));
            }
            return external;
    }
    throw Error("unknown query encoding");
}

void score(SeedResult& r, std::span<const Path> preds, std::span<const LabeledExample> test,
           const FractionContext& fc, std::span<const std::size_t> context) {
    const std::pair<const char*, std::size_t> depths[] = {{"d1", 1}, {"d2", 2}, {"last", kLastDepth}};
    for (auto [name, k] : depths) {
        auto overall = accuracy_at_depth(preds, test, k);
        auto seen = accuracy_at_depth(preds, test, fc.seen, k);
        auto unseen = accuracy_at_depth(preds, test, fc.unseen, k);
        auto ctx = accuracy_at_depth(preds, test, context, k);
        r.metrics[std::string("overall_") + name] = overall.rate();
        r.metrics[std::string("seen_") + name] = seen.rate();
        r.metrics[std::string("unseen_") + name] = unseen.rate();
        r.metrics[std::string("context_") + name] = ctx.rate();
        r.counts[std::string("overall_") + name] = overall.total;
        r.counts[std::string("seen_") + name] = seen.total;
        r.counts[std::string("unseen_") + name] = unseen.total;
        r.counts[std::string("context_") + name] = ctx.total;
    }
}

}  // namespace

EvalReport run_experiment_suite(const Dataset& data, const ExperimentConfig& config, const ProgressFn& progress) {
    if (!data.tree) throw Error("experiment: dataset has no taxonomy");
    if (data.split.train.empty() || data.split.test.empty()) throw Error("experiment: empty train or test split");
    if (config.variants.empty() || config.fractions.empty() || config.seeds.empty())
        throw Error("experiment: nothing to run");
    for (double f : config.fractions)
        if (!(f > 0.0 && f <= 1.0)) throw Error("experiment: fractions must lie in (0, 1]");

    const auto t_start = Clock::now();
    const auto& tree = *data.tree;
    const auto& test = data.split.test;
    auto say = [&](const std::string& s) {
        if (progress) progress(s);
    };

    EvalReport report;
    report.cts = config.cts;
    report.train_examples = data.split.train.size();
    report.test_examples = test.size();
    const auto full_unseen = unseen_queries(data.split.train, test);
    report.unseen_test_examples = full_unseen.size();
    report.seen_test_examples = test.size() - full_unseen.size();
    const auto context = context_dependent_subset(test, tree);
    report.context_test_examples = context.size();
    const auto event_index = search_events(test);
    report.test_search_events = event_index.size();

    for (const auto& v : config.variants)
        for (double f : config.fractions) report.cells.push_back({v, f, {}, false, {}});
    auto cell_of = [&](std::size_t vi, std::size_t fi) -> CellResult& {
        return report.cells[vi * config.fractions.size() + fi];
    };

    const auto corpus = view_sequences(data.events, data.split.split_boundary);
    std::shared_ptr<const EmbeddingTable> external;
    bool trace_written = false;

    for (auto seed : config.seeds) {
        std::shared_ptr<const EmbeddingTable> products;
        std::string seed_error;
        try {
            auto cfg = config.prod2vec;
            cfg.seed = seed;
            products = std::make_shared<EmbeddingTable>(train_skipgram(corpus, cfg, EmbeddingKind::product));
        } catch (const std::exception& e) {
            seed_error = std::string("prod2vec: ") + e.what();
        }

        for (std::size_t fi = 0; fi < config.fractions.size(); ++fi) {
            const double fraction = config.fractions[fi];
            FractionContext fc;
            std::string fraction_error = seed_error;
            if (fraction_error.empty()) {
                try {
                    fc.train = subsample(data.split.train, fraction, seed);
                    fc.cm = std::make_shared<CountModel>(CountModel::train(fc.train, tree, config.cm_threshold));
                    fc.s2pv = std::make_shared<EmbeddingTable>(build_search2prod2vec(fc.train, *products));
                    fc.unseen = unseen_queries(fc.train, test);
                    std::set<std::size_t> u(fc.unseen.begin(), fc.unseen.end());
                    for (std::size_t i = 0; i < test.size(); ++i)
                        if (!u.contains(i)) fc.seen.push_back(i);
                } catch (const std::exception& e) {
                    fraction_error = e.what();
                }
            }

            for (std::size_t vi = 0; vi < config.variants.size(); ++vi) {
                const auto& variant = config.variants[vi];
                auto& cell = cell_of(vi, fi);
                SeedResult r;
                r.seed = seed;
                say(variant.name + " fraction=" + std::to_string(fraction) + " seed=" + std::to_string(seed));
                try {
                    if (!fraction_error.empty()) throw Error(fraction_error);
                    std::unique_ptr<Predictor> predictor;
                    const auto t_train = Clock::now();
                    if (variant.kind == ModelKind::cm) {
                        predictor = std::make_unique<CountPredictor>(fc.cm);
                    } else {
                        auto table = query_table(variant, fc, config, tree, seed, external);
                        FeatureEncoder features(QueryEncoder(variant.encoding, table), products, variant.use_session);
                        auto tc = config.train;
                        tc.seed = seed;
                        nn::TrainHistory history;
                        if (variant.kind == ModelKind::mlp) {
                            auto trained = mlp_train(fc.train, features, tc, config.mlp);
                            history = trained.history;
                            predictor = std::make_unique<MlpPredictor>(
                                std::make_shared<MlpModel>(std::move(trained.model)), features);
                        } else {
                            auto trained = sp_train(fc.train, features, tree, tc, config.sessionpath);
                            history = trained.history;
                            predictor = std::make_unique<SessionPathPredictor>(
                                std::make_shared<SessionPathModel>(std::move(trained.model)), features);
                        }
                        r.epochs = history.epochs.size();
                        r.best_epoch = history.best_epoch;
                        r.best_validation_loss = history.best_validation_loss;
                    }
                    r.train_seconds = seconds_since(t_train);

                    const auto t_pred = Clock::now();
                    std::vector<PathPrediction> raw;
                    raw.reserve(test.size());
                    for (const auto& ex : test) raw.push_back(predictor->predict(ex.query, ex.session_products));
                    r.predict_microseconds = seconds_since(t_pred) * 1e6 / static_cast<double>(test.size());

                    std::vector<Path> paths;
                    std::size_t valid = 0;
                    for (const auto& p : raw) {
                        paths.push_back(p.nodes);
                        if (tree.is_valid_path(p.nodes)) ++valid;
                    }
                    score(r, paths, test, fc, context);
                    r.metrics["validity_rate"] = static_cast<double>(valid) / static_cast<double>(test.size());
                    r.counts["invalid_paths"] = test.size() - valid;

                    if (predictor->gated()) {
                        std::vector<EventPrediction> events;
                        for (auto i : event_index) events.push_back({&test[i], raw[i]});
                        if (report.cts.empty()) report.cts = default_ct_grid(events);
                        r.sweep = sweep_thresholds(events, report.cts, tree, config.safety_check);
                        if (config.trace_file && !trace_written && variant.kind == ModelKind::sessionpath &&
                            fraction == 1.0) {
                            write_trace(*config.trace_file, events, report.cts, tree, config.safety_check);
                            trace_written = true;
                        }
                    }
                } catch (const std::exception& e) {
                    r.failed = true;
                    r.error = e.what();
                    cell.failed = true;
                    if (cell.error.empty()) cell.error = "seed " + std::to_string(seed) + ": " + e.what();
                    say("  failed: " + r.error);
                }
                cell.seeds.push_back(std::move(r));
            }
        }
    }
    report.total_seconds = seconds_since(t_start);
    return report;
}

nlohmann::json to_json(const EvalReport& report, bool include_runtime) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : report.cells) {
        nlohmann::json seeds = nlohmann::json::array();
        std::set<std::string> names;
        for (const auto& s : c.seeds) {
            nlohmann::json js{{"seed", s.seed}, {"failed", s.failed}};
            if (s.failed) js["error"] = s.error;
            js["metrics"] = s.metrics;
            js["counts"] = s.counts;
            js["epochs"] = s.epochs;
            js["best_epoch"] = s.best_epoch;
            js["best_validation_loss"] = s.best_validation_loss;
            nlohmann::json sweep = nlohmann::json::array();
            for (const auto& row : s.sweep) sweep.push_back(to_json(row));
            js["sweep"] = sweep;
            if (include_runtime) {
                js["train_seconds"] = s.train_seconds;
                js["predict_microseconds"] = s.predict_microseconds;
            }
            seeds.push_back(js);
            for (const auto& [k, _] : s.metrics) names.insert(k);
        }
        nlohmann::json summary = nlohmann::json::object();
        for (const auto& name : names) {
            auto m = c.summary(name);
            summary[name] = {{"mean", m.mean}, {"sd", m.sd}, {"n", m.n}};
        }
        cells.push_back({{"variant", c.variant.name},
                         {"model", to_string(c.variant.kind)},
                         {"query_encoding", to_string(c.variant.encoding)},
                         {"use_session", c.variant.use_session},
                         {"fraction", c.fraction},
                         {"failed", c.failed},
                         {"error", c.error},
                         {"summary", summary},
                         {"seeds", seeds}});
    }
    nlohmann::json j{{"dataset",
                      {{"train_examples", report.train_examples},
                       {"test_examples", report.test_examples},
                       {"seen_test_examples", report.seen_test_examples},
                       {"unseen_test_examples", report.unseen_test_examples},
                       {"context_test_examples", report.context_test_examples},
                       {"test_search_events", report.test_search_events}}},
                     {"cts", report.cts},
                     {"cells", cells}};
    if (include_runtime) j["runtime"] = {{"total_seconds", report.total_seconds}};
    return j;
}

std::string format_metric(const MetricSummary& s) {
    char buf[64];
    if (s.n == 0) return "n/a";
    if (s.sd >= 0.01)
        std::snprintf(buf, sizeof(buf), "%.3f (%.2f)", s.mean, s.sd);
    else
        std::snprintf(buf, sizeof(buf), "%.3f", s.mean);
    return buf;
}

std::string format_accuracy_table(const EvalReport& report) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-22s %8s %-14s %-14s %-14s %-14s %-14s\n", "model", "fraction", "D=1", "D=2",
                  "D=last", "unseen D=last", "context D=last");
    out << line;
    for (const auto& c : report.cells) {
        if (c.seeds.empty() || std::all_of(c.seeds.begin(), c.seeds.end(), [](const SeedResult& s) { return s.failed; })) {
            std::snprintf(line, sizeof(line), "%-22s %8.3f FAILED: %s\n", c.variant.name.c_str(), c.fraction,
                          c.error.c_str());
            out << line;
            continue;
        }
        std::snprintf(line, sizeof(line), "%-22s %8.3f %-14s %-14s %-14s %-14s %-14s%s\n", c.variant.name.c_str(),
                      c.fraction, format_metric(c.summary("overall_d1")).c_str(),
                      format_metric(c.summary("overall_d2")).c_str(),
                      format_metric(c.summary("overall_last")).c_str(),
                      format_metric(c.summary("unseen_last")).c_str(),
                      format_metric(c.summary("context_last")).c_str(), c.failed ? "  (some seeds failed)" : "");
        out << line;
    }
    return out.str();
}

std::string format_sweep_table(std::span<const SweepRow> rows) {
    std::ostringstream out;
    char line[200];
    std::snprintf(line, sizeof(line), "%-10s %-10s %-10s %-11s %-9s %s\n", "ct", "precision", "recall", "mean depth",
                  "validity", "pareto");
    out << line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%-10.4f %-10.4f %-10.4f %-11.3f %-9.4f %s\n", r.ct, r.precision, r.recall,
                      r.mean_depth, r.validity_rate, r.pareto ? "*" : "");
        out << line;
    }
    return out.str();
}

}  // namespace facetpath
