// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#include "ldb/service/http.hpp"

#include <httplib.h>

#include "ldb/hash.hpp"

namespace ldb::service {

using nlohmann::json;

int http_status(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::bad_params: return 400;
        case ErrorCode::not_found: return 404;
        case ErrorCode::conflict: return 409;
        case ErrorCode::bad_shape: return 422;
        case ErrorCode::cache_miss: return 500;
        case ErrorCode::backend_unavailable: return 503;
    }
    return 500;
}

json error_body(ErrorCode code, const std::string& message, json detail) {
    return {{"code", to_string(code)}, {"message", message}, {"detail", std::move(detail)}};
}

std::pair<std::string, int> parse_bind_address(const std::string& bind) {
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) return {bind, 8080};
    try {
        return {bind.substr(0, colon), std::stoi(bind.substr(colon + 1))};
    } catch (const std::exception&) {
        fail(ErrorCode::bad_params, "bad bind address '" + bind + "'");
    }
}

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_bytes(httplib::Response& res, const std::vector<std::uint8_t>& bytes, const char* type) {
    res.status = 200;
    res.set_content(reinterpret_cast<const char*>(bytes.data()), bytes.size(), type);
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::bad_params, std::string("request body is not valid JSON: ") + e.what());
    }
}

int layer_index(const httplib::Request& req) {
    try {
        return std::stoi(req.matches[2].str());
    } catch (const std::exception&) {
        fail(ErrorCode::not_found, "layer index out of range");
    }
}

/// Wraps a handler so library errors become {code, message, detail} bodies.
template <typename F>
httplib::Server::Handler guarded(F&& body) {
    return [body = std::forward<F>(body)](const httplib::Request& req, httplib::Response& res) {
        try {
            body(req, res);
        } catch (const Error& e) {
            send_json(res, error_body(e.code(), e.what(), {{"method", req.method}, {"path", req.path}}),
                      http_status(e.code()));
        } catch (const json::exception& e) {
            send_json(res, error_body(ErrorCode::bad_params, e.what(), {{"method", req.method}, {"path", req.path}}),
                      http_status(ErrorCode::bad_params));
        }
    };
}

}  // namespace

struct HttpService::Impl {
    SessionManager& manager;
    httplib::Server server;

    explicit Impl(SessionManager& m) : manager(m) { routes(); }

    void routes() {
        const std::string sid = R"(/sessions/([0-9a-f]+))";
        const std::string layer = sid + R"(/layers/(\d+))";

        server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto session = manager.create(create_request_from_json(parse_body(req)));
            const PixelImage& base = session->stack->base().image;
            send_json(res,
                      {{"id", session->id},
                       {"n", session->steps},
                       {"backend", session->backend->descriptor().id},
                       {"width", base.width()},
                       {"height", base.height()},
                       {"image_hash", image_hash(base)},
                       {"image_png", base64_encode(encode_png(base))}},
                      201);
        }));
        server.Get("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, {{"sessions", manager.list()}});
        }));
        server.Get(sid, guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, manager.manifest(req.matches[1]));
        }));
        server.Delete(sid, guarded([this](const httplib::Request& req, httplib::Response& res) {
            manager.remove(req.matches[1]);
            res.status = 204;
        }));
        server.Get(sid + "/image", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_bytes(res, encode_png(manager.image(req.matches[1])), "image/png");
        }));
        server.Get(sid + "/stats", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, manager.stats(req.matches[1]));
        }));
        server.Post(sid + "/layers", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            const auto session = manager.get(id);
            EditParams params = edit_params_from_json(parse_body(req), session->backend->descriptor(),
                                                      manager.config().sigma);
            const LayerAddResult added = manager.add_layer(id, std::move(params));
            send_json(res,
                      {{"index", added.index},
                       {"result", edit_result_to_json(added.result)},
                       {"report", report_to_json(added.report)}},
                      201);
        }));
        server.Patch(layer, guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            const auto session = manager.get(id);
            const LayerPatch patch = layer_patch_from_json(parse_body(req), session->backend->descriptor());
            send_json(res, report_to_json(manager.patch_layer(id, layer_index(req), patch)));
        }));
        server.Delete(layer, guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, report_to_json(manager.delete_layer(req.matches[1], layer_index(req))));
        }));
        server.Post(layer + "/preview", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            const auto session = manager.get(id);
            const PreviewRequest request = preview_request_from_json(parse_body(req), session->backend->descriptor());
            const PreviewResult preview = manager.preview(id, layer_index(req), request);
            send_json(res, {{"seed", preview.seed.value}, {"result", edit_result_to_json(preview.result)}});
        }));
        server.Post(layer + "/commit", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, report_to_json(manager.commit_preview(req.matches[1], layer_index(req))));
        }));
        server.Get(layer + "/mask", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_bytes(res, manager.layer_mask_png(req.matches[1], layer_index(req)), "image/png");
        }));
        server.Get(layer + R"(/latents/([rb]))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const char which = req.matches[3].str().front();
            send_bytes(res, manager.layer_latent_blob(req.matches[1], layer_index(req), which),
                       "application/octet-stream");
        }));

        server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
            if (!res.body.empty()) return;
            if (res.status == 404) {
                send_json(res, error_body(ErrorCode::not_found, "no such route", {{"path", req.path}}), 404);
            }
        });
    }
};

HttpService::HttpService(SessionManager& manager) : m_impl(std::make_unique<Impl>(manager)) {}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
    if (port == 0) {
        m_port = m_impl->server.bind_to_any_port(host);
    } else {
        m_port = m_impl->server.bind_to_port(host, port) ? port : -1;
    }
    if (m_port < 0) fail(ErrorCode::backend_unavailable, "cannot bind " + host + ":" + std::to_string(port));
    return m_port;
}

void HttpService::serve() { m_impl->server.listen_after_bind(); }

void HttpService::start() {
    m_thread = std::thread([this] { m_impl->server.listen_after_bind(); });
    m_impl->server.wait_until_ready();
}

void HttpService::stop() {
    if (m_impl) m_impl->server.stop();
    if (m_thread.joinable()) m_thread.join();
}

}  // namespace ldb::service
