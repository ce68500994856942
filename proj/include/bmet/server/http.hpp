#pragma once

#include <memory>
#include <string>

#include "bmet/common/error.hpp"
#include "bmet/server/desk.hpp"

namespace bmet::server {

// The /v1 JSON API over a Desk. Errors come back as
// {"error": {"code": "<Errc name>", "message": "..."}}.
class HttpService {
public:
    explicit HttpService(Desk& desk);
    ~HttpService();
    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    // Port 0 binds a free port. Returns the bound port; throws Error(PortInUse).
    int bind(const std::string& host, int port);
    // Serves until stop(); call after bind().
    void run();
    void stop();
    bool running() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// HTTP status for an error code.
int http_status_for(Errc code) noexcept;

}  // namespace bmet::server
