#pragma once

#include <memory>
#include <string>

#include "facetpath/service/augment.hpp"

namespace httplib {
class Server;
}

namespace facetpath {

// Thin HTTP front for AugmentService:
//   POST /augment  GET /health  GET /metrics  POST /simulate  GET /sweep
class HttpServer {
public:
    explicit HttpServer(std::shared_ptr<AugmentService> service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Binds and returns the port (an ephemeral one when port == 0), without serving yet.
    int bind(const std::string& host, int port);
    // Serves until stop(); blocking.
    void listen_after_bind();
    void stop();
    void wait_until_ready() const;

private:
    std::shared_ptr<AugmentService> service_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace facetpath
