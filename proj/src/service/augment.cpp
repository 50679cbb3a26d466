#include "facetpath/service/augment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <sstream>

#include "facetpath/text.hpp"

namespace facetpath {

namespace {

constexpr std::size_t kLatencyWindow = 10000;

template <class T>
T require(const nlohmann::json& body, const char* field, const char* what) {
    if (!body.contains(field)) throw RequestError(std::string("missing field '") + field + "'");
    try {
        return body.at(field).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw RequestError(std::string("field '") + field + "' must be " + what);
    }
}

Path parse_client_path(const nlohmann::json& j, const TaxonomyTree& tree) {
    try {
        if (j.is_string()) return tree.parse_path(j.get<std::string>());
        if (j.is_array()) {
            std::string joined;
            for (const auto& l : j) joined += (joined.empty() ? "" : "/") + l.get<std::string>();
            return tree.parse_path(joined);
        }
    } catch (const nlohmann::json::exception&) {
    } catch (const Error& e) {
        throw RequestError(e.what());
    }
    throw RequestError("predicted_path must be a string or an array of labels");
}

double percentile(std::vector<std::int64_t> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
    return static_cast<double>(v[std::clamp<std::size_t>(rank, 1, v.size()) - 1]);
}

}  // namespace

AugmentRequest parse_augment_request(const nlohmann::json& body, std::size_t max_candidates) {
    if (!body.is_object()) throw RequestError("request body must be a JSON object");
    AugmentRequest r;
    r.candidates = require<std::vector<std::string>>(body, "candidates", "an array of strings");
    if (r.candidates.empty()) throw RequestError("candidates must not be empty");
    if (r.candidates.size() > max_candidates)
        throw RequestError("at most " + std::to_string(max_candidates) + " candidates per request");
    if (body.contains("session_products"))
        r.session_products = require<std::vector<std::string>>(body, "session_products", "an array of product ids");
    if (body.contains("ct_override") && !body.at("ct_override").is_null()) {
        r.ct_override = require<double>(body, "ct_override", "a number");
        if (!std::isfinite(*r.ct_override)) throw RequestError("ct_override must be finite");
    }
    if (body.contains("model") && !body.at("model").is_null())
        r.model = require<std::string>(body, "model", "a string");
    return r;
}

nlohmann::json to_json(const AugmentRequest& r) {
    nlohmann::json j{{"session_products", r.session_products}, {"candidates", r.candidates}};
    if (r.ct_override) j["ct_override"] = *r.ct_override;
    if (r.model) j["model"] = *r.model;
    return j;
}

nlohmann::json to_json(const AugmentResponse& response, const TaxonomyTree& tree) {
    nlohmann::json preds = nlohmann::json::array();
    for (const auto& p : response.predictions)
        preds.push_back({{"candidate", p.candidate},
                         {"path", tree.labels(p.path)},
                         {"confidence", p.confidence},
                         {"model_id", p.model_id},
                         {"cache_hit", p.cache_hit},
                         {"latency_us", p.latency_us}});
    return {{"predictions", preds}};
}

std::shared_ptr<const ArtifactSet> load_artifacts(const ArtifactPaths& paths) {
    auto set = std::make_shared<ArtifactSet>();
    auto tree = std::make_shared<TaxonomyTree>(load_catalog(paths.catalog));
    set->tree = tree;

    if (paths.count_model)
        set->models["cm"] = std::make_shared<CountPredictor>(
            std::make_shared<CountModel>(CountModel::load(*paths.count_model, *tree)));

    auto features_for = [&](const std::filesystem::path& checkpoint) {
        if (!paths.product_embeddings || !paths.query_embeddings)
            throw Error("neural models need product and query embedding files");
        auto info = read_checkpoint_info(checkpoint);
        auto products = std::make_shared<EmbeddingTable>(EmbeddingTable::load(*paths.product_embeddings));
        auto queries = std::make_shared<EmbeddingTable>(EmbeddingTable::load(*paths.query_embeddings));
        return FeatureEncoder(QueryEncoder(info.query_encoding, queries), products, info.use_session);
    };
    if (paths.mlp_checkpoint) {
        auto features = features_for(*paths.mlp_checkpoint);
        auto model = std::make_shared<MlpModel>(load_mlp(*paths.mlp_checkpoint, features, *tree));
        set->models["mlp"] = std::make_shared<MlpPredictor>(model, features);
    }
    if (paths.sessionpath_checkpoint) {
        auto features = features_for(*paths.sessionpath_checkpoint);
        auto model = std::make_shared<SessionPathModel>(load_sessionpath(*paths.sessionpath_checkpoint, features, *tree));
        set->models["sessionpath"] = std::make_shared<SessionPathPredictor>(model, features);
    }
    if (set->models.empty()) throw Error("no model artifacts given");

    if (!paths.default_model.empty()) {
        if (!set->models.contains(paths.default_model))
            throw Error("default model '" + paths.default_model + "' is not loaded");
        set->default_model = paths.default_model;
    } else {
        for (const char* id : {"sessionpath", "mlp", "cm"})
            if (set->models.contains(id)) {
                set->default_model = id;
                break;
            }
    }
    if (paths.trace) {
        set->sweep = sweep_from_trace(read_trace(*paths.trace));
        set->has_trace = true;
    }
    return set;
}

AugmentService::AugmentService(ServiceConfig config) : config_(config), cache_(config.cache_capacity) {}

void AugmentService::load(std::shared_ptr<const ArtifactSet> artifacts) {
    if (!artifacts || !artifacts->tree || artifacts->models.empty()) throw Error("incomplete artifact set");
    {
        std::lock_guard lock(artifacts_mu_);
        artifacts_ = std::move(artifacts);
    }
    cache_.clear();
}

bool AugmentService::ready() const { return artifacts() != nullptr; }

std::shared_ptr<const ArtifactSet> AugmentService::artifacts() const {
    std::lock_guard lock(artifacts_mu_);
    return artifacts_;
}

std::string AugmentService::session_signature(std::span<const ProductId> products) {
    std::vector<ProductId> sorted(products.begin(), products.end());
    std::sort(sorted.begin(), sorted.end());
    std::string sig;
    for (const auto& p : sorted) {
        sig += p;
        sig += '\x1e';
    }
    return sig;
}

AugmentResponse AugmentService::augment(const AugmentRequest& request) {
    auto art = artifacts();
    if (!art) throw Error("models not loaded");
    const std::string model_id = request.model.value_or(art->default_model);
    auto it = art->models.find(model_id);
    if (it == art->models.end()) throw RequestError("unknown model '" + model_id + "'");
    const Predictor& predictor = *it->second;
    const DecisionConfig decision{request.ct_override.value_or(config_.ct), config_.safety_check};

    char ct_bits[32];
    std::snprintf(ct_bits, sizeof(ct_bits), "%a", decision.ct);
    const std::string key_suffix =
        std::string("\x1f") + session_signature(request.session_products) + "\x1f" + ct_bits + "\x1f" + model_id;

    std::optional<SessionVector> session;  // computed on the first cache miss only
    AugmentResponse response;
    std::vector<std::int64_t> latencies;
    for (const auto& candidate : request.candidates) {
        const auto t0 = std::chrono::steady_clock::now();
        CandidatePrediction out;
        out.candidate = candidate;
        out.model_id = model_id;
        const std::string key = normalize_query(candidate) + key_suffix;
        if (auto hit = cache_.get(key)) {
            out.cache_hit = true;
            out.path = hit->path;
            out.confidence = hit->confidence;
        } else {
            if (!session) session = predictor.session(request.session_products);
            auto pred = predictor.predict(candidate, *session);
            auto d = apply_decision(predictor, pred, decision, *art->tree);
            out.path = d.path;
            if (predictor.gated())
                out.confidence.assign(pred.step_gini.begin(),
                                      pred.step_gini.begin() + static_cast<std::ptrdiff_t>(out.path.depth()));
            cache_.put(key, {out.path, out.confidence});
        }
        out.latency_us =
            std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - t0).count();
        latencies.push_back(out.latency_us);
        response.predictions.push_back(std::move(out));
    }

    std::lock_guard lock(metrics_mu_);
    ++requests_;
    candidates_ += request.candidates.size();
    for (auto l : latencies) {
        latencies_.push_back(l);
        if (latencies_.size() > kLatencyWindow) latencies_.pop_front();
    }
    return response;
}

nlohmann::json AugmentService::simulate(const nlohmann::json& body) {
    auto art = artifacts();
    if (!art) throw Error("models not loaded");
    if (!body.is_object()) throw RequestError("request body must be a JSON object");
    auto result_set = require<std::vector<std::string>>(body, "result_set", "an array of product ids");
    auto clicked = require<std::vector<std::string>>(body, "clicked", "an array of product ids");
    for (const auto& c : clicked)
        if (std::find(result_set.begin(), result_set.end(), c) == result_set.end())
            throw RequestError("clicked product '" + c + "' is not in result_set");
    for (const auto& id : result_set)
        if (!art->tree->path_of(id)) throw RequestError("unknown product '" + id + "'");

    Path predicted;
    if (body.contains("predicted_path")) {
        predicted = parse_client_path(body.at("predicted_path"), *art->tree);
    } else if (body.contains("query")) {
        AugmentRequest r;
        r.candidates = {require<std::string>(body, "query", "a string")};
        if (body.contains("session_products"))
            r.session_products = require<std::vector<std::string>>(body, "session_products", "an array of product ids");
        if (body.contains("ct")) r.ct_override = require<double>(body, "ct", "a number");
        if (body.contains("model")) r.model = require<std::string>(body, "model", "a string");
        predicted = augment(r).predictions.front().path;
    } else {
        throw RequestError("give either predicted_path or query");
    }

    auto o = simulate_event(result_set, clicked, predicted, *art->tree);
    {
        std::lock_guard lock(metrics_mu_);
        ++simulate_requests_;
    }
    nlohmann::json j{{"predicted_path", art->tree->labels(predicted)},
                     {"result_size", o.result_size},
                     {"filtered_size", o.filtered_size},
                     {"tp", o.tp},
                     {"fp", o.fp},
                     {"fn", o.fn},
                     {"precision", nullptr},
                     {"recall", nullptr}};
    if (o.precision) j["precision"] = *o.precision;
    if (o.recall) j["recall"] = *o.recall;
    return j;
}

nlohmann::json AugmentService::sweep() const {
    auto art = artifacts();
    if (!art) throw Error("models not loaded");
    {
        std::lock_guard lock(metrics_mu_);
        ++sweep_requests_;
    }
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : art->sweep) rows.push_back(to_json(r));
    return {{"has_trace", art->has_trace}, {"rows", rows}};
}

nlohmann::json AugmentService::health() const {
    auto art = artifacts();
    if (!art) return {{"status", "loading"}};
    std::vector<std::string> ids;
    for (const auto& [id, _] : art->models) ids.push_back(id);
    return {{"status", "ok"}, {"models", ids}, {"default_model", art->default_model}};
}

void AugmentService::record_error(int status) {
    std::lock_guard lock(metrics_mu_);
    if (status >= 500)
        ++errors_5xx_;
    else if (status >= 400)
        ++errors_4xx_;
}

std::string AugmentService::metrics_text() const {
    std::vector<std::int64_t> lat;
    std::ostringstream out;
    {
        std::lock_guard lock(metrics_mu_);
        lat.assign(latencies_.begin(), latencies_.end());
        out << "augment_requests=" << requests_ << '\n'
            << "augment_candidates=" << candidates_ << '\n'
            << "simulate_requests=" << simulate_requests_ << '\n'
            << "sweep_requests=" << sweep_requests_ << '\n'
            << "errors_4xx=" << errors_4xx_ << '\n'
            << "errors_5xx=" << errors_5xx_ << '\n';
    }
    const auto hits = cache_.hits();
    const auto misses = cache_.misses();
    out << "cache_hits=" << hits << '\n'
        << "cache_misses=" << misses << '\n'
        << "cache_hit_rate=" << (hits + misses == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(hits + misses))
        << '\n'
        << "cache_size=" << cache_.size() << '\n'
        << "cache_capacity=" << cache_.capacity() << '\n'
        << "latency_p50_us=" << percentile(lat, 0.50) << '\n'
        << "latency_p90_us=" << percentile(lat, 0.90) << '\n'
        << "latency_p99_us=" << percentile(lat, 0.99) << '\n'
        << "models_loaded=" << (ready() ? 1 : 0) << '\n';
    return out.str();
}

}  // namespace facetpath
