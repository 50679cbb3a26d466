#include <thread>

#include "doctest.h"
#include "facetpath/service/augment.hpp"
#include "facetpath/service/http_server.hpp"
#include "fixtures.hpp"
#include "httplib.h"

using namespace facetpath;

namespace {

std::shared_ptr<const ArtifactSet> small_artifacts() {
    auto tree = std::make_shared<TaxonomyTree>(fixtures::worked_example_tree());
    std::vector<LabeledExample> train;
    for (int i = 0; i < 4; ++i) train.push_back(fixtures::example(*tree, "lebron", "sport/basketball/lebron"));
    train.push_back(fixtures::example(*tree, "trail", "sport/running/sneakers"));
    auto cm = std::make_shared<CountModel>(CountModel::train(train, *tree));

    auto products = std::make_shared<EmbeddingTable>(3, EmbeddingKind::product);
    auto tokens = std::make_shared<EmbeddingTable>(3, EmbeddingKind::query_unigram);
    for (const auto& p : tree->products())
        products->set(p.id, std::vector<double>{double(p.id[1] - '0'), 1.0, -1.0});
    tokens->set("lebron", std::vector<double>{1, 0, 0});
    tokens->set("trail", std::vector<double>{0, 1, 0});
    FeatureEncoder features(QueryEncoder(QueryEncoding::search2prod2vec, tokens), products);
    auto sp = std::make_shared<SessionPathModel>(features.input_dim(), tree->vocabulary_size(), tree->max_depth(),
                                                 SessionPathArchitecture{8, 6, 4}, 7);

    auto set = std::make_shared<ArtifactSet>();
    set->tree = tree;
    set->models["cm"] = std::make_shared<CountPredictor>(cm);
    set->models["sessionpath"] = std::make_shared<SessionPathPredictor>(sp, features);
    set->default_model = "sessionpath";
    return set;
}

AugmentRequest request(std::vector<std::string> candidates, std::vector<ProductId> session,
                       std::optional<std::string> model = {}) {
    AugmentRequest r;
    r.candidates = std::move(candidates);
    r.session_products = std::move(session);
    r.model = std::move(model);
    return r;
}

}  // namespace

TEST_CASE("lru cache evicts the least recently used entry") {
    LruCache<std::string, int> cache(2);
    cache.put("a", 1);
    cache.put("b", 2);
    CHECK(cache.get("a") == 1);
    cache.put("c", 3);
    CHECK(cache.contains("a"));
    CHECK_FALSE(cache.contains("b"));
    CHECK(cache.size() == 2);
    CHECK(cache.hits() == 1);
    CHECK_FALSE(cache.get("b"));
    CHECK(cache.misses() == 1);
    LruCache<std::string, int> none(0);
    none.put("a", 1);
    CHECK(none.size() == 0);
}

TEST_CASE("session signature ignores order and keeps multiplicity") {
    std::vector<ProductId> a = {"P1", "P2", "P2"}, b = {"P2", "P1", "P2"}, c = {"P1", "P2"};
    CHECK(AugmentService::session_signature(a) == AugmentService::session_signature(b));
    CHECK(AugmentService::session_signature(a) != AugmentService::session_signature(c));
}

TEST_CASE("augment keeps request order and caches per session, ct and model") {
    AugmentService svc;
    CHECK_THROWS(svc.augment(request({"x"}, {})));
    svc.load(small_artifacts());

    auto first = svc.augment(request({"trail", "lebron", "nothing"}, {"P1", "P6"}));
    REQUIRE(first.predictions.size() == 3);
    CHECK(first.predictions[0].candidate == "trail");
    CHECK(first.predictions[2].candidate == "nothing");
    for (const auto& p : first.predictions) {
        CHECK_FALSE(p.cache_hit);
        CHECK(p.model_id == "sessionpath");
        CHECK(p.confidence.size() == p.path.depth());
    }

    auto second = svc.augment(request({"lebron", "trail"}, {"P6", "P1"}));
    CHECK(second.predictions[0].cache_hit);
    CHECK(second.predictions[1].cache_hit);
    CHECK(second.predictions[0].path == first.predictions[1].path);

    auto other_ct = request({"lebron"}, {"P6", "P1"});
    other_ct.ct_override = 0.0;
    CHECK_FALSE(svc.augment(other_ct).predictions[0].cache_hit);

    auto cm = svc.augment(request({"LeBron", "unknown"}, {}, "cm"));
    CHECK(svc.artifacts()->tree->to_string(cm.predictions[0].path) == "sport/basketball/lebron");
    CHECK(cm.predictions[0].confidence.empty());
    CHECK(cm.predictions[1].path.empty());

    CHECK_THROWS_AS(svc.augment(request({"x"}, {}, "nope")), RequestError);
}

TEST_CASE("request parsing rejects malformed bodies") {
    using nlohmann::json;
    CHECK_THROWS_AS(parse_augment_request(json::array(), 10), RequestError);
    CHECK_THROWS_AS(parse_augment_request({{"candidates", json::array()}}, 10), RequestError);
    CHECK_THROWS_AS(parse_augment_request({{"candidates", {"a", "b", "c"}}}, 2), RequestError);
    CHECK_THROWS_AS(parse_augment_request({{"candidates", "a"}}, 10), RequestError);
    CHECK_THROWS_AS(parse_augment_request({{"candidates", {"a"}}, {"ct_override", "x"}}, 10), RequestError);
    auto ok = parse_augment_request({{"candidates", {"a"}}, {"session_products", {"P1"}}, {"ct_override", 0.5}}, 10);
    CHECK(ok.ct_override == 0.5);
    CHECK(to_json(ok)["session_products"] == json{"P1"});
}

TEST_CASE("simulate computes one event") {
    AugmentService svc;
    svc.load(small_artifacts());
    nlohmann::json body{{"result_set", fixtures::worked_example_results()},
                        {"clicked", {"P1", "P4"}},
                        {"predicted_path", "sport/basketball"}};
    auto out = svc.simulate(body);
    CHECK(out["precision"].get<double>() == doctest::Approx(0.6));
    CHECK(out["recall"].get<double>() == doctest::Approx(0.6));
    body["clicked"] = {"P9"};
    CHECK_THROWS_AS(svc.simulate(body), RequestError);
    CHECK_THROWS_AS(svc.simulate({{"result_set", {"P1"}}, {"clicked", {"P1"}}}), RequestError);
}

TEST_CASE("http front maps errors to status codes") {
    auto svc = std::make_shared<AugmentService>();
    HttpServer server(svc);
    const int port = server.bind("127.0.0.1", 0);
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    httplib::Client client("127.0.0.1", port);

    auto body = nlohmann::json{{"candidates", {"lebron"}}, {"session_products", {"P1"}}}.dump();
    CHECK(client.Post("/augment", body, "application/json")->status == 503);
    CHECK(client.Get("/health")->status == 503);

    svc->load(small_artifacts());
    auto ok = client.Post("/augment", body, "application/json");
    REQUIRE(ok);
    CHECK(ok->status == 200);
    auto j = nlohmann::json::parse(ok->body);
    CHECK(j["predictions"].size() == 1);
    CHECK(client.Post("/augment", "{oops", "application/json")->status == 400);
    CHECK(client.Post("/augment", R"({"candidates": []})", "application/json")->status == 400);
    CHECK(client.Get("/sweep")->status == 404);
    CHECK(client.Get("/health")->status == 200);

    auto metrics = client.Get("/metrics");
    REQUIRE(metrics);
    CHECK(metrics->body.find("augment_requests=1") != std::string::npos);
    CHECK(metrics->body.find("errors_4xx=2") != std::string::npos);
    CHECK(metrics->body.find("errors_5xx=1") != std::string::npos);

    server.stop();
    t.join();
}
