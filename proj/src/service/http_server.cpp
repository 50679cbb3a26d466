#include "facetpath/service/http_server.hpp"

#include "httplib.h"

namespace facetpath {

namespace {

constexpr const char* kJson = "application/json";

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), kJson);
}

}  // namespace

HttpServer::HttpServer(std::shared_ptr<AugmentService> service)
    : service_(std::move(service)), server_(std::make_unique<httplib::Server>()) {
    auto& svc = *service_;

    // Shared guard: 503 before models load, 400 for client mistakes, 500 otherwise.
    auto guarded = [&svc](auto handler) {
        return [&svc, handler](const httplib::Request& req, httplib::Response& res) {
            if (!svc.ready()) {
                svc.record_error(503);
                send_json(res, 503, {{"error", "models not loaded"}});
                return;
            }
            try {
                handler(req, res);
            } catch (const RequestError& e) {
                svc.record_error(400);
                send_json(res, 400, {{"error", e.what()}});
            } catch (const nlohmann::json::parse_error& e) {
                svc.record_error(400);
                send_json(res, 400, {{"error", std::string("malformed JSON: ") + e.what()}});
            } catch (const std::exception& e) {
                svc.record_error(500);
                send_json(res, 500, {{"error", e.what()}});
            }
        };
    };

    server_->Post("/augment", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
        auto request = parse_augment_request(nlohmann::json::parse(req.body), svc.config().max_candidates);
        auto response = svc.augment(request);
        send_json(res, 200, to_json(response, *svc.artifacts()->tree));
    }));
    server_->Post("/simulate", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, svc.simulate(nlohmann::json::parse(req.body)));
    }));
    server_->Get("/sweep", guarded([&svc](const httplib::Request&, httplib::Response& res) {
        auto body = svc.sweep();
        if (!body.at("has_trace").get<bool>()) {
            send_json(res, 404, {{"error", "no evaluation trace loaded"}});
            return;
        }
        send_json(res, 200, body);
    }));
    server_->Get("/health", [&svc](const httplib::Request&, httplib::Response& res) {
        send_json(res, svc.ready() ? 200 : 503, svc.health());
    });
    server_->Get("/metrics", [&svc](const httplib::Request&, httplib::Response& res) {
        res.set_content(svc.metrics_text(), "text/plain");
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return server_->bind_to_any_port(host);
    if (!server_->bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpServer::listen_after_bind() { server_->listen_after_bind(); }

void HttpServer::stop() {
    if (server_) server_->stop();
}

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace facetpath
