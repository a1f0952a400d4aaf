// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <thread>

#include "ldb/error.hpp"
#include "ldb/session.hpp"

namespace ldb::service {

/// HTTP status for each error code. Every code maps to exactly one status.
int http_status(ErrorCode code) noexcept;

/// {code, message, detail} error body.
nlohmann::json error_body(ErrorCode code, const std::string& message, nlohmann::json detail = nullptr);

/// JSON/HTTP front end over a SessionManager.
///
///   POST   /sessions
///   GET    /sessions
///   GET    /sessions/{id}                       manifest
///   DELETE /sessions/{id}
///   GET    /sessions/{id}/image                 composed PNG
///   GET    /sessions/{id}/stats
///   POST   /sessions/{id}/layers
///   PATCH  /sessions/{id}/layers/{k}
///   DELETE /sessions/{id}/layers/{k}
///   POST   /sessions/{id}/layers/{k}/preview
///   POST   /sessions/{id}/layers/{k}/commit
///   GET    /sessions/{id}/layers/{k}/mask       grayscale PNG
///   GET    /sessions/{id}/layers/{k}/latents/{r|b}
class HttpService {
public:
    explicit HttpService(SessionManager& manager);
    ~HttpService();

    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    /// Binds host:port; port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port);

    /// Serves on the calling thread until stop().
    void serve();

    /// Serves on a background thread and returns once the listener is ready.
    void start();
    void stop();

    int port() const noexcept { return m_port; }

private:
    struct Impl;
    std::unique_ptr<Impl> m_impl;
    std::thread m_thread;
    int m_port = -1;
};

/// Splits "host:port"; a bare host selects port 8080.
std::pair<std::string, int> parse_bind_address(const std::string& bind);

}  // namespace ldb::service
