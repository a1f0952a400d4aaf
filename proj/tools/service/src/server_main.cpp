// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "ldb/service/http.hpp"

namespace {

ldb::service::HttpService* g_service = nullptr;

void on_signal(int) {
    if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
    ldb::ServiceConfig config = ldb::ServiceConfig::from_env();

    CLI::App app{"ldb-server: layered latent editing sessions over HTTP"};
    std::string store;
    app.add_option("--store", store, "session store directory (LDB_STORE)");
    app.add_option("--bind", config.bind, "host:port to listen on (LDB_BIND)");
    app.add_option("--backend", config.backend_id, "default backend id (LDB_BACKEND)");
    app.add_option("--steps", config.default_steps, "default N (LDB_DEFAULT_STEPS)")->check(CLI::Range(3, 10000));
    app.add_option("--sigma", config.sigma, "default sigma (LDB_SIGMA)");
    CLI11_PARSE(app, argc, argv);
    if (!store.empty()) config.store = store;

    try {
        ldb::SessionManager manager(config);
        const std::size_t loaded = manager.load_store();
        ldb::service::HttpService service(manager);
        const auto [host, port] = ldb::service::parse_bind_address(config.bind);
        const int bound = service.bind(host, port);
        g_service = &service;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        std::cout << "ldb-server listening on " << host << ":" << bound << " (" << loaded << " sessions loaded"
                  << (config.store ? ", store " + config.store->string() : ", no store") << ")" << std::endl;
        service.serve();
        g_service = nullptr;
    } catch (const ldb::Error& e) {
        std::cerr << "ldb-server: " << to_string(e.code()) << ": " << e.what() << '\n';
        return 3;
    }
    return 0;
}
