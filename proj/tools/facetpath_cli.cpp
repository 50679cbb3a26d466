#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "CLI11.hpp"
#include "facetpath/count_model.hpp"
#include "facetpath/nn/checkpoint.hpp"
#include "facetpath/pipeline.hpp"
#include "facetpath/predictor.hpp"
#include "facetpath/service/augment.hpp"
#include "facetpath/service/http_server.hpp"
#include "facetpath/text.hpp"

namespace fs = std::filesystem;
using namespace facetpath;

namespace {

struct Globals {
    std::string workdir = "facetpath-run";
    std::string catalog;
    std::string events;
    std::uint64_t seed = 1;
    double train_fraction = 0.8;

    fs::path data_dir() const { return fs::path(workdir) / "data"; }
    fs::path catalog_file() const { return catalog.empty() ? data_dir() / "catalog.jsonl" : fs::path(catalog); }
    fs::path events_file() const { return events.empty() ? data_dir() / "events.jsonl" : fs::path(events); }
    fs::path embeddings_dir() const { return fs::path(workdir) / "embeddings"; }
    fs::path models_dir() const { return fs::path(workdir) / "models"; }
    fs::path reports_dir() const { return fs::path(workdir) / "reports"; }
    fs::path checkpoint(const std::string& kind) const { return models_dir() / (kind + ".json"); }
};

struct TrainFlags {
    nn::TrainConfig train;
    std::size_t embedding_dim = 50;
    std::size_t embedding_epochs = 10;
    std::size_t window = 5;
    std::size_t negatives = 5;
};

class Timer {
public:
    void mark(const std::string& name) {
        const auto now = std::chrono::steady_clock::now();
        laps_[name] = std::chrono::duration<double>(now - last_).count();
        last_ = now;
    }
    std::map<std::string, double> laps() const {
        auto out = laps_;
        out["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        return out;
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
    std::chrono::steady_clock::time_point last_ = start_;
    std::map<std::string, double> laps_;
};

// Every option, set or defaulted, of a command and its parents.
nlohmann::json options_json(const CLI::App* app) {
    nlohmann::json j = nlohmann::json::object();
    for (; app; app = app->get_parent()) {
        for (const auto* opt : app->get_options()) {
            const auto name = opt->get_single_name();
            if (name.empty() || name == "help" || name == "config" || j.contains(name)) continue;
            if (opt->count() == 0) {
                j[name] = opt->get_default_str();
            } else if (opt->results().size() == 1) {
                j[name] = opt->results().front();
            } else {
                j[name] = opt->results();
            }
        }
    }
    return j;
}

void write_manifest(const Globals& g, const std::string& command, const CLI::App* app, const Timer& timer) {
    const auto dir = fs::path(g.workdir) / "manifests";
    fs::create_directories(dir);
    std::ofstream out(dir / (command + ".json"));
    out << run_manifest(command, options_json(app), g.seed, timer.laps()).dump(2) << "\n";
}

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
    auto& t = f.train;
    cmd->add_option("--lr", t.learning_rate, "Adam learning rate")->envname("FACETPATH_LR");
    cmd->add_option("--time-decay", t.time_decay, "learning-rate time decay")->envname("FACETPATH_TIME_DECAY");
    cmd->add_option("--batch-size", t.batch_size)->envname("FACETPATH_BATCH_SIZE");
    cmd->add_option("--max-epochs", t.max_epochs)->envname("FACETPATH_MAX_EPOCHS");
    cmd->add_option("--patience", t.patience, "early-stopping patience in epochs")->envname("FACETPATH_PATIENCE");
    cmd->add_option("--validation-fraction", t.validation_fraction)->envname("FACETPATH_VALIDATION_FRACTION");
}

void add_embedding_flags(CLI::App* cmd, TrainFlags& f) {
    cmd->add_option("--embedding-dim", f.embedding_dim)->envname("FACETPATH_EMBEDDING_DIM");
    cmd->add_option("--embedding-epochs", f.embedding_epochs)->envname("FACETPATH_EMBEDDING_EPOCHS");
    cmd->add_option("--window", f.window)->envname("FACETPATH_WINDOW");
    cmd->add_option("--negatives", f.negatives)->envname("FACETPATH_NEGATIVES");
}

SkipGramConfig skipgram(const TrainFlags& f, std::uint64_t seed) {
    SkipGramConfig c;
    c.dim = f.embedding_dim;
    c.epochs = f.embedding_epochs;
    c.window = f.window;
    c.negatives = f.negatives;
    c.seed = seed;
    return c;
}

LoadedDataset load(const Globals& g) {
    auto data = load_dataset(g.catalog_file(), g.events_file(), g.train_fraction);
    std::cerr << "loaded " << data.ingest.events.size() << " events, " << data.split.train.size() << " train / "
              << data.split.test.size() << " test examples\n";
    return data;
}

FeatureEncoder load_features(const Globals& g, QueryEncoding encoding, bool use_session,
                             const std::string& external = {}) {
    const auto files = embedding_files(g.embeddings_dir());
    auto products = std::make_shared<EmbeddingTable>(EmbeddingTable::load(files.products));
    auto table_file = query_table_file(files, encoding, external);
    auto queries = std::make_shared<EmbeddingTable>(encoding == QueryEncoding::external
                                                        ? import_external_query_embeddings(table_file)
                                                        : EmbeddingTable::load(table_file));
    return FeatureEncoder(QueryEncoder(encoding, queries), products, use_session);
}

// The neural checkpoints present in the workdir share one query table; pick it from their headers.
ArtifactPaths artifact_paths(const Globals& g, const std::string& trace, const std::string& default_model) {
    ArtifactPaths p;
    p.catalog = g.catalog_file();
    p.default_model = default_model;
    const auto files = embedding_files(g.embeddings_dir());
    if (fs::exists(g.checkpoint("cm"))) p.count_model = g.checkpoint("cm");
    std::optional<QueryEncoding> encoding;
    for (const char* kind : {"mlp", "sessionpath"}) {
        const auto file = g.checkpoint(kind);
        if (!fs::exists(file)) continue;
        const auto info = read_checkpoint_info(file);
        if (encoding && *encoding != info.query_encoding)
            throw Error("mlp and sessionpath checkpoints use different query encodings");
        encoding = info.query_encoding;
        (std::string(kind) == "mlp" ? p.mlp_checkpoint : p.sessionpath_checkpoint) = file;
    }
    if (encoding) {
        p.product_embeddings = files.products;
        p.query_embeddings = query_table_file(files, *encoding);
    }
    if (!trace.empty()) p.trace = trace;
    return p;
}

std::vector<ModelVariant> select_variants(const std::vector<std::string>& wanted) {
    const auto all = default_variants();
    if (wanted.empty()) return all;
    std::vector<ModelVariant> out;
    for (const auto& w : wanted) {
        bool matched = false;
        for (const auto& v : all) {
            if (v.name == w) {
                out.push_back(v);
                matched = true;
            }
        }
        if (matched) continue;
        const auto kind = model_kind_from_string(w);
        for (const auto& v : all)
            if (v.kind == kind) out.push_back(v);
    }
    return out;
}

int cmd_generate(const Globals& g, const SynthConfig& cfg, const std::string& out_dir, const CLI::App* app) {
    Timer timer;
    auto data = generate_synthetic(cfg, g.seed);
    timer.mark("generate");
    const fs::path dir = out_dir.empty() ? g.data_dir() : fs::path(out_dir);
    auto files = write_synthetic(data, dir);
    timer.mark("write");
    std::cout << "catalog  " << files.catalog_file.string() << " (" << data.catalog.size() << " products)\n"
              << "events   " << files.log_file.string() << " (" << files.emitted_events << " events)\n"
              << "manifest " << files.manifest_file.string() << "\n";
    write_manifest(g, "generate-data", app, timer);
    return 0;
}

int cmd_embeddings(const Globals& g, const TrainFlags& f, const CLI::App* app) {
    Timer timer;
    auto data = load(g);
    timer.mark("load");
    auto cfg = skipgram(f, g.seed);
    auto emb = train_embeddings(data, cfg, cfg);
    timer.mark("train");
    fs::create_directories(g.embeddings_dir());
    const auto files = embedding_files(g.embeddings_dir());
    emb.products.save(files.products);
    emb.queries.save(files.queries);
    emb.words.save(files.words);
    std::cout << "products " << files.products.string() << " (" << emb.products.size() << ")\n"
              << "queries  " << files.queries.string() << " (" << emb.queries.size() << " unigrams)\n"
              << "words    " << files.words.string() << " (" << emb.words.size() << ")\n";
    write_manifest(g, "train-embeddings", app, timer);
    return 0;
}

struct TrainCmd {
    std::string model;
    std::string encoding = "search2prod2vec";
    std::string external_embeddings;
    bool no_session = false;
    double fraction = 1.0;
    double cm_threshold = CountModel::kDefaultThreshold;
};

int cmd_train(const Globals& g, TrainFlags f, const TrainCmd& c, const CLI::App* app) {
    Timer timer;
    auto data = load(g);
    auto train = c.fraction < 1.0 ? subsample(data.split.train, c.fraction, g.seed) : data.split.train;
    timer.mark("load");
    fs::create_directories(g.models_dir());
    const auto kind = model_kind_from_string(c.model);
    const auto out = g.checkpoint(to_string(kind));
    f.train.seed = g.seed;

    auto report_history = [&](const nn::TrainHistory& h) {
        std::cout << "epochs " << h.epochs.size() << ", best epoch " << h.best_epoch << ", validation loss "
                  << h.best_validation_loss << "\n";
        std::ofstream(g.models_dir() / (to_string(kind) + ".history.json")) << nn::to_json(h).dump(2) << "\n";
    };

    if (kind == ModelKind::cm) {
        auto cm = CountModel::train(train, *data.tree, c.cm_threshold);
        timer.mark("train");
        cm.save(out, *data.tree);
        std::cout << "count model: " << cm.query_count() << " queries\n";
    } else {
        auto features = load_features(g, query_encoding_from_string(c.encoding), !c.no_session, c.external_embeddings);
        if (kind == ModelKind::mlp) {
            auto r = mlp_train(train, features, f.train);
            timer.mark("train");
            save_mlp(out, r.model, features, *data.tree, f.train);
            report_history(r.history);
        } else {
            auto r = sp_train(train, features, *data.tree, f.train);
            timer.mark("train");
            save_sessionpath(out, r.model, features, *data.tree, f.train);
            report_history(r.history);
        }
    }
    std::cout << "wrote " << out.string() << "\n";
    write_manifest(g, "train-" + to_string(kind), app, timer);
    return 0;
}

struct EvalCmd {
    std::vector<std::string> models;
    std::vector<double> fractions = {0.1, 0.25, 1.0};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::vector<double> cts;
    bool safety_check = false;
    std::string report;
    std::string trace;
};

int cmd_evaluate(const Globals& g, const TrainFlags& f, const EvalCmd& c, const CLI::App* app) {
    Timer timer;
    auto data = load(g);
    timer.mark("load");
    ExperimentConfig cfg;
    cfg.variants = select_variants(c.models);
    cfg.fractions = c.fractions;
    cfg.seeds = c.seeds;
    cfg.cts = c.cts;
    cfg.safety_check = c.safety_check;
    cfg.train = f.train;
    cfg.prod2vec = skipgram(f, g.seed);
    cfg.word2vec = cfg.prod2vec;
    fs::create_directories(g.reports_dir());
    cfg.trace_file = c.trace.empty() ? g.reports_dir() / "trace.jsonl" : fs::path(c.trace);

    auto report = run_experiment_suite(data.dataset(), cfg, [](const std::string& s) { std::cerr << s << "\n"; });
    timer.mark("experiment");
    std::cout << format_accuracy_table(report);
    for (const auto& cell : report.cells) {
        if (cell.failed) std::cout << cell.variant.name << " @ " << cell.fraction << " failed: " << cell.error << "\n";
        if (cell.fraction == 1.0 && !cell.seeds.empty() && !cell.seeds.front().sweep.empty()) {
            std::cout << "\n" << cell.variant.name << " threshold sweep (seed " << cell.seeds.front().seed << ")\n"
                      << format_sweep_table(cell.seeds.front().sweep);
        }
    }
    const fs::path out = c.report.empty() ? g.reports_dir() / "eval.json" : fs::path(c.report);
    std::ofstream(out) << to_json(report).dump(2) << "\n";
    std::cout << "report " << out.string() << "\n";
    write_manifest(g, "evaluate", app, timer);
    return 0;
}

struct SweepCmd {
    std::string model = "sessionpath";
    std::vector<double> cts;
    bool safety_check = false;
    std::string trace;
    std::size_t quantiles = 10;
};

int cmd_sweep(const Globals& g, const SweepCmd& c, const CLI::App* app) {
    Timer timer;
    auto data = load(g);
    auto artifacts = load_artifacts(artifact_paths(g, {}, {}));
    const auto kind = to_string(model_kind_from_string(c.model));
    auto it = artifacts->models.find(kind);
    if (it == artifacts->models.end()) throw Error("no trained " + kind + " checkpoint in " + g.models_dir().string());
    if (!it->second->gated()) throw Error(kind + " has no per-node confidence to sweep");
    timer.mark("load");

    // Both trees come from the same catalog, so node ids agree.
    const auto& test = data.split.test;
    std::vector<EventPrediction> events;
    for (auto i : search_events(test)) {
        auto p = it->second->predict(test[i].query, test[i].session_products);
        events.push_back({&test[i], std::move(p)});
    }
    timer.mark("predict");
    auto cts = c.cts.empty() ? default_ct_grid(events, c.quantiles) : c.cts;
    auto rows = sweep_thresholds(events, cts, *data.tree, c.safety_check);
    const fs::path trace = c.trace.empty() ? g.reports_dir() / "trace.jsonl" : fs::path(c.trace);
    fs::create_directories(trace.parent_path().empty() ? fs::path(".") : trace.parent_path());
    write_trace(trace, events, cts, *data.tree, c.safety_check);
    timer.mark("sweep");
    std::cout << format_sweep_table(rows) << "trace " << trace.string() << "\n";
    write_manifest(g, "sweep", app, timer);
    return 0;
}

struct ServeCmd {
    std::string host = "127.0.0.1";
    int port = 8080;
    ServiceConfig service;
    std::string trace;
    std::string default_model;
};

int cmd_serve(const Globals& g, const ServeCmd& c, const CLI::App* app) {
    Timer timer;
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    auto service = std::make_shared<AugmentService>(c.service);
    HttpServer server(service);
    const int port = server.bind(c.host, c.port);
    std::thread worker([&] { server.listen_after_bind(); });
    std::cerr << "listening on " << c.host << ":" << port << " (loading models)\n";

    std::string trace = c.trace;
    if (trace.empty() && fs::exists(g.reports_dir() / "trace.jsonl")) trace = (g.reports_dir() / "trace.jsonl").string();
    try {
        service->load(load_artifacts(artifact_paths(g, trace, c.default_model)));
    } catch (...) {
        server.stop();
        worker.join();
        throw;
    }
    timer.mark("load");
    std::cerr << "models loaded: " << service->health().dump() << "\n";
    write_manifest(g, "serve", app, timer);

    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
    worker.join();
    return 0;
}

struct PredictCmd {
    std::string query;
    std::vector<std::string> session;
    std::optional<double> ct;
    std::string model;
    bool json = false;
};

int cmd_predict(const Globals& g, const PredictCmd& c, double default_ct, const CLI::App* app) {
    Timer timer;
    ServiceConfig cfg;
    cfg.ct = default_ct;
    AugmentService service(cfg);
    service.load(load_artifacts(artifact_paths(g, {}, {})));
    timer.mark("load");
    AugmentRequest req{c.session, {c.query}, c.ct, c.model.empty() ? std::nullopt : std::optional(c.model)};
    auto resp = service.augment(req);
    timer.mark("predict");
    const auto& tree = *service.artifacts()->tree;
    if (c.json) {
        std::cout << to_json(resp, tree).dump(2) << "\n";
    } else {
        const auto& p = resp.predictions.front();
        std::cout << "model " << p.model_id << "\n"
                  << "path  " << (p.path.empty() ? "(none)" : tree.to_string(p.path)) << "\n";
        const auto labels = tree.labels(p.path);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            std::cout << "  " << labels[i];
            if (i < p.confidence.size()) std::printf("  gini %.6f", p.confidence[i]);
            std::cout << "\n";
        }
    }
    write_manifest(g, "predict", app, timer);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
#ifdef __GLIBC__
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
    CLI::App app{"facetpath: facet path prediction for type-ahead search"};
    app.set_config("--config", "", "TOML configuration file; flags override it");
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--workdir", g.workdir, "directory for data, embeddings, models and reports")
        ->envname("FACETPATH_WORKDIR")
        ->capture_default_str();
    app.add_option("--catalog", g.catalog, "catalog file (default <workdir>/data/catalog.jsonl)")
        ->envname("FACETPATH_CATALOG");
    app.add_option("--events", g.events, "event log (default <workdir>/data/events.jsonl)")->envname("FACETPATH_EVENTS");
    app.add_option("--seed", g.seed)->envname("FACETPATH_SEED")->capture_default_str();
    app.add_option("--train-fraction", g.train_fraction, "chronological share of examples used for training")
        ->envname("FACETPATH_TRAIN_FRACTION")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();

    SynthConfig synth;
    std::string synth_out;
    auto* gen = app.add_subcommand("generate-data", "write a seeded synthetic catalog and clickstream");
    gen->add_option("--out", synth_out, "output directory (default <workdir>/data)");
    gen->add_option("--products", synth.n_products)->envname("FACETPATH_PRODUCTS")->capture_default_str();
    gen->add_option("--paths", synth.n_paths)->envname("FACETPATH_PATHS")->capture_default_str();
    gen->add_option("--branching", synth.branching)->delimiter(',')->envname("FACETPATH_BRANCHING");
    gen->add_option("--min-depth", synth.min_depth)->capture_default_str();
    gen->add_option("--max-depth", synth.max_depth)->capture_default_str();
    gen->add_option("--sessions", synth.n_sessions)->envname("FACETPATH_SESSIONS")->capture_default_str();
    gen->add_option("--coherence", synth.session_coherence_rate)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    gen->add_option("--noise", synth.query_noise_rate)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    gen->add_option("--empty-session-rate", synth.empty_session_rate)->check(CLI::Range(0.0, 1.0));
    gen->add_option("--path-skew", synth.path_skew, "Zipf exponent over paths within a category");

    TrainFlags flags;
    auto* emb = app.add_subcommand("train-embeddings", "prod2vec, Search2Prod2Vec and word2vec tables");
    add_embedding_flags(emb, flags);

    TrainCmd train_cmd;
    auto* train = app.add_subcommand("train", "train one model: cm, mlp or sessionpath");
    train->add_option("model", train_cmd.model)->required()->check(CLI::IsMember({"cm", "mlp", "sessionpath", "sp"}));
    train->add_option("--encoding", train_cmd.encoding, "query encoding: search2prod2vec, word2vec or external")
        ->envname("FACETPATH_ENCODING")
        ->capture_default_str();
    train->add_option("--external-embeddings", train_cmd.external_embeddings, "query embedding file for --encoding external");
    train->add_flag("--no-session", train_cmd.no_session, "zero the session half of the features");
    train->add_option("--fraction", train_cmd.fraction, "share of the training split to use")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    train->add_option("--cm-threshold", train_cmd.cm_threshold)->capture_default_str();
    add_train_flags(train, flags);

    EvalCmd eval_cmd;
    auto* eval = app.add_subcommand("evaluate", "train and score variants over fractions and seeds");
    eval->add_option("--model", eval_cmd.models, "variant names or model kinds (default: all)")->delimiter(',');
    eval->add_option("--fractions", eval_cmd.fractions)->delimiter(',')->envname("FACETPATH_FRACTIONS");
    eval->add_option("--seeds", eval_cmd.seeds)->delimiter(',')->envname("FACETPATH_SEEDS");
    eval->add_option("--ct", eval_cmd.cts, "thresholds to sweep (default: from the observed gini range)")
        ->delimiter(',');
    eval->add_flag("--safety-check", eval_cmd.safety_check, "drop taxonomy-invalid predicted paths");
    eval->add_option("--report", eval_cmd.report, "JSON report (default <workdir>/reports/eval.json)");
    eval->add_option("--trace", eval_cmd.trace, "per-event trace (default <workdir>/reports/trace.jsonl)");
    add_train_flags(eval, flags);
    add_embedding_flags(eval, flags);

    SweepCmd sweep_cmd;
    auto* sweep = app.add_subcommand("sweep", "precision/recall per threshold for a trained model");
    sweep->add_option("--model", sweep_cmd.model)->capture_default_str();
    sweep->add_option("--ct", sweep_cmd.cts)->delimiter(',');
    sweep->add_option("--quantiles", sweep_cmd.quantiles, "grid size when --ct is not given");
    sweep->add_flag("--safety-check", sweep_cmd.safety_check);
    sweep->add_option("--trace", sweep_cmd.trace, "per-event trace (default <workdir>/reports/trace.jsonl)");

    ServeCmd serve_cmd;
    auto* serve = app.add_subcommand("serve", "HTTP augmentation service");
    serve->add_option("--host", serve_cmd.host)->envname("FACETPATH_HOST")->capture_default_str();
    serve->add_option("--port", serve_cmd.port, "0 picks a free port")->envname("FACETPATH_PORT")->capture_default_str();
    serve->add_option("--ct", serve_cmd.service.ct)->envname("FACETPATH_CT")->capture_default_str();
    serve->add_flag("--safety-check", serve_cmd.service.safety_check);
    serve->add_option("--cache-capacity", serve_cmd.service.cache_capacity)->capture_default_str();
    serve->add_option("--max-candidates", serve_cmd.service.max_candidates)->capture_default_str();
    serve->add_option("--trace", serve_cmd.trace, "trace behind GET /sweep (default <workdir>/reports/trace.jsonl)");
    serve->add_option("--default-model", serve_cmd.default_model);

    PredictCmd predict_cmd;
    double predict_default_ct = ServiceConfig{}.ct;
    auto* predict = app.add_subcommand("predict", "one-shot prediction for a query and session");
    predict->add_option("--query", predict_cmd.query)->required();
    predict->add_option("--session", predict_cmd.session, "comma-separated product ids")->delimiter(',');
    predict->add_option("--ct", predict_cmd.ct, "confidence threshold (default 0.993)");
    predict->add_option("--model", predict_cmd.model, "cm, mlp or sessionpath");
    predict->add_flag("--json", predict_cmd.json, "print the service response body");

    CLI11_PARSE(app, argc, argv);
    if (train_cmd.model == "sp") train_cmd.model = "sessionpath";

    try {
        if (*gen) return cmd_generate(g, synth, synth_out, gen);
        if (*emb) return cmd_embeddings(g, flags, emb);
        if (*train) return cmd_train(g, flags, train_cmd, train);
        if (*eval) return cmd_evaluate(g, flags, eval_cmd, eval);
        if (*sweep) return cmd_sweep(g, sweep_cmd, sweep);
        if (*serve) return cmd_serve(g, serve_cmd, serve);
        if (*predict) return cmd_predict(g, predict_cmd, predict_default_ct, predict);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
