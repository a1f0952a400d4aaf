// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ldb/backend.hpp"
#include "ldb/cache.hpp"
#include "ldb/engine.hpp"
#include "ldb/layers.hpp"

namespace ldb {

/// Runtime configuration, normally read from the environment:
///   LDB_STORE, LDB_BACKEND, LDB_DEFAULT_STEPS, LDB_SIGMA, LDB_BIND
struct ServiceConfig {
    std::optional<std::filesystem::path> store;
    std::string backend_id = "toy";
    int default_steps = 25;
    double sigma = kDefaultSigma;
    std::string bind = "127.0.0.1:8080";

    static ServiceConfig from_env();
};

struct CreateSessionRequest {
    std::string backend_id;
    ToyBackendConfig toy;
    std::optional<int> steps;
    std::optional<std::string> prompt;
    std::optional<Seed> seed;
    /// Encoded PNG bytes of an uploaded image.
    std::optional<std::vector<std::uint8_t>> image_png;
};

struct BoxSpec {
    int center_x = 0;
    int center_y = 0;
    std::optional<int> size;
};

/// Partial layer update. Unset fields keep their current value.
struct LayerPatch {
    std::optional<std::string> prompt;
    std::optional<Seed> seed;
    std::optional<double> alpha_star;
    std::optional<int> edit_steps;
    std::optional<double> sigma;
    std::optional<StepIndex> blend_step;
    std::optional<Mask> mask;
    std::optional<bool> visible;
};

struct PreviewRequest {
    std::optional<Seed> seed;
    std::optional<std::int64_t> seed_delta;
    std::optional<BoxSpec> box;
    std::optional<std::string> prompt;
    std::optional<double> alpha_star;
    std::optional<int> edit_steps;
    std::optional<Mask> mask;
};

/// Per-edit wall-time histogram with fixed millisecond bucket edges.
struct LatencyHistogram {
    static constexpr std::array<double, 6> kEdgesMs{1, 5, 10, 50, 100, 500};
    std::array<std::uint64_t, kEdgesMs.size() + 1> counts{};
    std::uint64_t samples = 0;
    double total_ms = 0.0;

    void record(double ms);
};

struct SessionStats {
    std::uint64_t edits = 0;
    std::uint64_t previews = 0;
    std::uint64_t edit_calls = 0;
    std::uint64_t inversion_calls = 0;
    std::uint64_t generation_calls = 0;
    LatencyHistogram edit_latency;
};

struct BaseProvenance {
    enum class Kind { generated, uploaded } kind = Kind::generated;
    std::string prompt;
    Seed seed;
    std::vector<std::uint8_t> image_png;
};

struct PreviewState {
    EditParams params;
    int box_size = 0;
    std::optional<EditResult> last;
};

class Session {
public:
    std::string id;
    std::shared_ptr<Backend> backend;
    ToyBackendConfig toy;
    int steps = 0;
    BaseProvenance base;
    std::unique_ptr<LayerStack> stack;
    std::int64_t created_ms = 0;
    std::int64_t updated_ms = 0;

    /// Exclusive for mutations, shared for reads and previews.
    mutable std::shared_mutex lock;
    /// Guards previews and stats, which change under the shared lock.
    mutable std::mutex aux_lock;
    std::map<int, PreviewState> previews;
    SessionStats stats;
};

struct LayerAddResult {
    int index = 0;
    EditResult result;
    RecomputeReport report;
};

struct PreviewResult {
    Seed seed;
    EditResult result;
};

/// Owns every live session, their shared latent cache and the on-disk store.
///
/// Mutations on one session are serialized; a mutation that finds another in
/// flight fails with conflict instead of queueing. Previews run concurrently
/// under the shared lock and are likewise refused while a mutation holds it.
class SessionManager {
public:
    explicit SessionManager(ServiceConfig config);

    const ServiceConfig& config() const noexcept { return m_config; }
    const LatentCache& cache() const noexcept { return *m_cache; }

    std::shared_ptr<Session> create(const CreateSessionRequest& request);
    std::shared_ptr<Session> get(const std::string& id) const;
    void remove(const std::string& id);
    std::vector<std::string> list() const;

    LayerAddResult add_layer(const std::string& id, EditParams params);
    RecomputeReport patch_layer(const std::string& id, int k, const LayerPatch& patch);
    RecomputeReport delete_layer(const std::string& id, int k);
    PreviewResult preview(const std::string& id, int k, const PreviewRequest& request);
    RecomputeReport commit_preview(const std::string& id, int k);

    PixelImage image(const std::string& id) const;
    nlohmann::json manifest(const std::string& id) const;
    nlohmann::json stats(const std::string& id) const;
    std::vector<std::uint8_t> layer_mask_png(const std::string& id, int k) const;
    std::vector<std::uint8_t> layer_latent_blob(const std::string& id, int k, char which) const;

    /// Loads every session found under the store directory. Returns the count.
    std::size_t load_store();

private:
    std::shared_ptr<Session> load_session(const std::filesystem::path& dir);
    void persist(const Session& session) const;
    nlohmann::json manifest_locked(const Session& session) const;
    void record_report(Session& session, const RecomputeReport& report, bool is_edit);

    ServiceConfig m_config;
    std::shared_ptr<LatentCache> m_cache;
    mutable std::shared_mutex m_sessions_lock;
    std::map<std::string, std::shared_ptr<Session>> m_sessions;
};

// JSON helpers shared by the HTTP layer and the CLI.
nlohmann::json report_to_json(const RecomputeReport& report);
nlohmann::json edit_result_to_json(const EditResult& result, bool include_image = true);
ToyBackendConfig toy_config_from_json(const nlohmann::json& j);
nlohmann::json toy_config_to_json(const ToyBackendConfig& config);
/// Writes +infinity as the string "inf" since JSON has no infinity literal.
nlohmann::json psnr_to_json(double psnr_db);

/// Request decoding. Masks come from "mask_png" (base64 grayscale PNG),
/// "mask_path" (resolved against `base_dir`), "box" {center_x, center_y,
/// size} or "mask_fill" (a constant weight). Malformed input is bad_params.
EditParams edit_params_from_json(const nlohmann::json& j, const BackendDescriptor& backend, double default_sigma,
                                 const std::filesystem::path& base_dir = {});
LayerPatch layer_patch_from_json(const nlohmann::json& j, const BackendDescriptor& backend);
PreviewRequest preview_request_from_json(const nlohmann::json& j, const BackendDescriptor& backend);
CreateSessionRequest create_request_from_json(const nlohmann::json& j);

}  // namespace ldb
