// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#include "ldb/session.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>

#include "ldb/error.hpp"
#include "ldb/hash.hpp"

namespace ldb {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kManifestFormat = 1;

std::int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

std::string new_session_id() {
    std::random_device rd;
    const std::uint64_t value = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    return hex64(value);
}

// Masks travel as 8-bit PNG, so snap weights onto the 1/255 grid up front.
// Otherwise a reloaded session could blend with slightly different weights.
Mask quantize(const Mask& mask) {
    std::vector<float> pixel(mask.pixel().size());
    for (std::size_t i = 0; i < pixel.size(); ++i) {
        pixel[i] = static_cast<float>(std::lround(mask.pixel()[i] * 255.0f)) / 255.0f;
    }
    return Mask(mask.height(), mask.width(), std::move(pixel), mask.spatial_factor());
}

std::string mask_file(int k) { return "mask" + std::to_string(k) + ".png"; }

std::shared_ptr<Session> find_session(const std::map<std::string, std::shared_ptr<Session>>& sessions,
                                      const std::string& id) {
    auto it = sessions.find(id);
    if (it == sessions.end()) fail(ErrorCode::not_found, "session '" + id + "' does not exist");
    return it->second;
}

std::unique_lock<std::shared_mutex> lock_for_mutation(const Session& session) {
    std::unique_lock lock(session.lock, std::try_to_lock);
    if (!lock.owns_lock()) fail(ErrorCode::conflict, "another mutation is in flight on session '" + session.id + "'");
    return lock;
}

void merge(RecomputeReport& into, const RecomputeReport& from) {
    into.recomputed.insert(into.recomputed.end(), from.recomputed.begin(), from.recomputed.end());
    into.inversion_calls += from.inversion_calls;
    into.generation_calls += from.generation_calls;
    into.edit_calls += from.edit_calls;
    into.wall_ms += from.wall_ms;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::not_found, "cannot write " + tmp.string());
        out << text;
    }
    fs::rename(tmp, path);
}

template <typename T>
std::optional<T> opt(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

std::optional<Seed> opt_seed(const json& j, const char* key) {
    if (auto v = opt<std::uint64_t>(j, key)) return Seed{*v};
    return std::nullopt;
}

}  // namespace

ServiceConfig ServiceConfig::from_env() {
    ServiceConfig config;
    if (const char* v = std::getenv("LDB_STORE"); v && *v) config.store = fs::path(v);
    if (const char* v = std::getenv("LDB_BACKEND"); v && *v) config.backend_id = v;
    if (const char* v = std::getenv("LDB_DEFAULT_STEPS"); v && *v) config.default_steps = std::atoi(v);
    if (const char* v = std::getenv("LDB_SIGMA"); v && *v) config.sigma = std::atof(v);
    if (const char* v = std::getenv("LDB_BIND"); v && *v) config.bind = v;
    return config;
}

void LatencyHistogram::record(double ms) {
    std::size_t bucket = 0;
    while (bucket < kEdgesMs.size() && ms >= kEdgesMs[bucket]) ++bucket;
    ++counts[bucket];
    ++samples;
    total_ms += ms;
}

SessionManager::SessionManager(ServiceConfig config)
    : m_config(std::move(config)), m_cache(std::make_shared<LatentCache>()) {}

std::shared_ptr<Session> SessionManager::create(const CreateSessionRequest& request) {
    // The prompt doubles as the inversion prompt for uploads, so only the
    // seed tells the two kinds apart.
    const bool has_image = request.image_png.has_value();
    if (has_image && request.seed) fail(ErrorCode::bad_params, "give a seed or an uploaded image, not both");
    if (!has_image && (!request.prompt || !request.seed)) {
        fail(ErrorCode::bad_params, "a session needs prompt + seed, or an uploaded image");
    }
    auto session = std::make_shared<Session>();
    session->id = new_session_id();
    session->toy = request.toy;
    session->backend = make_backend(request.backend_id.empty() ? m_config.backend_id : request.backend_id, request.toy);
    session->steps = request.steps.value_or(m_config.default_steps);
    if (session->steps < kMinSteps) {
        fail(ErrorCode::bad_params, "N must be at least " + std::to_string(kMinSteps));
    }

    BaseImage base;
    if (has_image) {
        session->base.kind = BaseProvenance::Kind::uploaded;
        session->base.prompt = request.prompt.value_or("");
        session->base.image_png = *request.image_png;
        base = invert_base(*session->backend, decode_png(*request.image_png), session->base.prompt, session->steps);
    } else {
        session->base.kind = BaseProvenance::Kind::generated;
        session->base.prompt = *request.prompt;
        session->base.seed = *request.seed;
        base = generate_base(*session->backend, session->base.seed, session->base.prompt, session->steps);
    }
    session->stack = std::make_unique<LayerStack>(session->backend, std::move(base), m_cache, session->id);
    session->created_ms = session->updated_ms = now_ms();

    persist(*session);
    std::unique_lock lock(m_sessions_lock);
    m_sessions[session->id] = session;
    return session;
}

std::shared_ptr<Session> SessionManager::get(const std::string& id) const {
    std::shared_lock lock(m_sessions_lock);
    return find_session(m_sessions, id);
}

void SessionManager::remove(const std::string& id) {
    auto session = get(id);
    auto guard = lock_for_mutation(*session);
    {
        std::unique_lock lock(m_sessions_lock);
        m_sessions.erase(id);
    }
    m_cache->erase_session(id);
    if (m_config.store) {
        std::error_code ec;
        fs::remove_all(*m_config.store / id, ec);
    }
}

std::vector<std::string> SessionManager::list() const {
    std::shared_lock lock(m_sessions_lock);
    std::vector<std::string> ids;
    ids.reserve(m_sessions.size());
    for (const auto& [id, _] : m_sessions) ids.push_back(id);
    return ids;
}

void SessionManager::record_report(Session& session, const RecomputeReport& report, bool is_edit) {
    std::lock_guard lock(session.aux_lock);
    session.stats.edit_calls += report.edit_calls;
    session.stats.inversion_calls += report.inversion_calls;
    session.stats.generation_calls += report.generation_calls;
    if (is_edit && !report.recomputed.empty()) {
        ++session.stats.edits;
        session.stats.edit_latency.record(report.wall_ms);
    }
}

LayerAddResult SessionManager::add_layer(const std::string& id, EditParams params) {
    auto session = get(id);
    auto guard = lock_for_mutation(*session);
    params.mask = quantize(params.mask);
    LayerAddResult out;
    out.index = session->stack->add_layer(std::move(params), &out.report);
    out.result = *session->stack->layer(out.index).output;
    record_report(*session, out.report, true);
    session->updated_ms = now_ms();
    persist(*session);
    return out;
}

RecomputeReport SessionManager::patch_layer(const std::string& id, int k, const LayerPatch& patch) {
    auto session = get(id);
    auto guard = lock_for_mutation(*session);
    const Layer& current = session->stack->layer(k);
    EditParams params = current.params;
    if (patch.prompt) params.prompt = *patch.prompt;
    if (patch.seed) params.seed = *patch.seed;
    if (patch.alpha_star) params.alpha_star = *patch.alpha_star;
    if (patch.edit_steps) params.edit_steps = *patch.edit_steps;
    if (patch.sigma) params.sigma = *patch.sigma;
    if (patch.blend_step) params.blend_step = *patch.blend_step;
    if (patch.mask) params.mask = quantize(*patch.mask);

    RecomputeReport report;
    if (!(params == current.params)) merge(report, session->stack->update_layer(k, std::move(params)));
    if (patch.visible) merge(report, session->stack->set_visibility(k, *patch.visible));
    {
        std::lock_guard lock(session->aux_lock);
        session->previews.erase(k);
    }
    record_report(*session, report, true);
    session->updated_ms = now_ms();
    persist(*session);
    return report;
}

RecomputeReport SessionManager::delete_layer(const std::string& id, int k) {
    auto session = get(id);
    auto guard = lock_for_mutation(*session);
    RecomputeReport report = session->stack->delete_layer(k);
    {
        std::lock_guard lock(session->aux_lock);
        session->previews.clear();
    }
    record_report(*session, report, true);
    session->updated_ms = now_ms();
    persist(*session);
    return report;
}

PreviewResult SessionManager::preview(const std::string& id, int k, const PreviewRequest& request) {
    auto session = get(id);
    std::shared_lock guard(session->lock, std::try_to_lock);
    if (!guard.owns_lock()) {
        fail(ErrorCode::conflict, "session '" + id + "' is being mutated; preview rejected");
    }
    const Layer& layer = session->stack->layer(k);
    const BackendDescriptor& desc = session->backend->descriptor();

    EditParams params;
    {
        std::lock_guard lock(session->aux_lock);
        auto [it, inserted] = session->previews.try_emplace(k);
        PreviewState& state = it->second;
        if (inserted) {
            state.params = layer.params;
            state.box_size = std::max(1, desc.pixel_width() / 8);
        }
        if (request.prompt) state.params.prompt = *request.prompt;
        if (request.alpha_star) state.params.alpha_star = *request.alpha_star;
        if (request.edit_steps) state.params.edit_steps = *request.edit_steps;
        if (request.mask) state.params.mask = quantize(*request.mask);
        if (request.box) {
            const int size = request.box->size.value_or(state.box_size);
            state.params.mask = Mask::box(desc.pixel_height(), desc.pixel_width(), request.box->center_x,
                                          request.box->center_y, size, desc.spatial_factor);
            state.box_size = size;
        }
        if (request.seed) {
            state.params.seed = *request.seed;
        } else if (request.seed_delta) {
            state.params.seed.value += static_cast<std::uint64_t>(*request.seed_delta);
        } else if (request.box) {
            state.params.seed.value += 1;
        }
        params = state.params;
    }

    EditResult result = session->stack->preview(k, params);
    std::lock_guard lock(session->aux_lock);
    auto it = session->previews.find(k);
    // A concurrent preview may have moved the state on; keep the newest result
    // only when it still matches the stored parameters.
    if (it != session->previews.end() && it->second.params == params) it->second.last = result;
    ++session->stats.previews;
    return PreviewResult{params.seed, std::move(result)};
}

RecomputeReport SessionManager::commit_preview(const std::string& id, int k) {
    auto session = get(id);
    auto guard = lock_for_mutation(*session);
    session->stack->layer(k);
    std::optional<EditParams> params;
    {
        std::lock_guard lock(session->aux_lock);
        auto it = session->previews.find(k);
        if (it != session->previews.end()) {
            params = it->second.params;
            session->previews.erase(it);
        }
    }
    RecomputeReport report;
    if (!params) return report;
    report = session->stack->update_layer(k, std::move(*params));
    record_report(*session, report, true);
    session->updated_ms = now_ms();
    persist(*session);
    return report;
}

PixelImage SessionManager::image(const std::string& id) const {
    auto session = get(id);
    std::shared_lock guard(session->lock);
    return session->stack->compose();
}

json SessionManager::manifest(const std::string& id) const {
    auto session = get(id);
    std::shared_lock guard(session->lock);
    return manifest_locked(*session);
}

json SessionManager::manifest_locked(const Session& session) const {
    const LayerStack& stack = *session.stack;
    json base = {{"kind", session.base.kind == BaseProvenance::Kind::generated ? "generated" : "uploaded"},
                 {"prompt", session.base.prompt},
                 {"image_hash", image_hash(stack.base().image)}};
    if (session.base.kind == BaseProvenance::Kind::generated) {
        base["seed"] = session.base.seed.value;
    } else {
        base["image"] = "base.png";
    }
    json layers = json::array();
    for (const Layer& layer : stack.layers()) {
        json entry = {{"index", layer.index},
                      {"prev", layer.prev},
                      {"visible", layer.visible},
                      {"stale", layer.stale},
                      {"prompt", layer.params.prompt},
                      {"seed", layer.params.seed.value},
                      {"alpha_star", layer.params.alpha_star},
                      {"n", layer.params.edit_steps},
                      {"sigma", layer.params.sigma},
                      {"b", layer.params.blend_step ? json(*layer.params.blend_step) : json(nullptr)},
                      {"mask", mask_file(layer.index)}};
        if (layer.cached) {
            entry["cache"] = {{"r", cache_blob_path("", layer.index, 'r').string()},
                              {"b", cache_blob_path("", layer.index, 'b').string()},
                              {"r_step", layer.cached->r},
                              {"b_step", layer.cached->b},
                              {"fingerprint", hex64(stack.cache_fingerprint(layer.index))}};
        }
        // Hidden layers may still hold an output from before they were
        // hidden; it is not part of the composition and is not reloaded.
        if (layer.output && layer.visible) {
            entry["image_hash"] = image_hash(layer.output->image);
            entry["alpha_effective"] = layer.output->alpha_effective;
        }
        layers.push_back(std::move(entry));
    }
    json out = {{"format", kManifestFormat},
                {"id", session.id},
                {"backend", {{"id", session.backend->descriptor().id}, {"toy", toy_config_to_json(session.toy)}}},
                {"steps", session.steps},
                {"base", std::move(base)},
                {"created_ms", session.created_ms},
                {"updated_ms", session.updated_ms},
                {"layers", std::move(layers)}};
    if (!stack.dirty_from()) out["composition_hash"] = image_hash(stack.compose());
    return out;
}

json SessionManager::stats(const std::string& id) const {
    auto session = get(id);
    std::shared_lock guard(session->lock);
    std::lock_guard lock(session->aux_lock);
    const SessionStats& s = session->stats;
    json hist = {{"edges_ms", s.edit_latency.kEdgesMs},
                 {"counts", s.edit_latency.counts},
                 {"samples", s.edit_latency.samples},
                 {"mean_ms", s.edit_latency.samples ? s.edit_latency.total_ms / s.edit_latency.samples : 0.0}};
    return {{"session_id", session->id},
            {"layers", session->stack->size()},
            {"cache_bytes", m_cache->size_bytes(session->id)},
            {"persisted_cache_bytes", m_cache->persisted_bytes(session->id)},
            {"edits", s.edits},
            {"previews", s.previews},
            {"denoiser_calls",
             {{"edit", s.edit_calls},
              {"inversion", s.inversion_calls},
              {"generation", s.generation_calls},
              {"total", s.edit_calls + s.inversion_calls + s.generation_calls}}},
            {"edit_wall_ms", std::move(hist)}};
}

std::vector<std::uint8_t> SessionManager::layer_mask_png(const std::string& id, int k) const {
    auto session = get(id);
    std::shared_lock guard(session->lock);
    return encode_mask_png(session->stack->layer(k).params.mask);
}

std::vector<std::uint8_t> SessionManager::layer_latent_blob(const std::string& id, int k, char which) const {
    if (which != 'r' && which != 'b') fail(ErrorCode::bad_params, "latent selector must be 'r' or 'b'");
    auto session = get(id);
    std::shared_lock guard(session->lock);
    const Layer& layer = session->stack->layer(k);
    if (!layer.cached) fail(ErrorCode::cache_miss, "layer " + std::to_string(k) + " has no cached latents");
    return serialize_latent(which == 'r' ? layer.cached->regeneration : layer.cached->blending);
}

void SessionManager::persist(const Session& session) const {
    if (!m_config.store) return;
    const fs::path dir = *m_config.store / session.id;
    fs::create_directories(dir);
    if (session.base.kind == BaseProvenance::Kind::uploaded) write_file(dir / "base.png", session.base.image_png);
    const auto& layers = session.stack->layers();
    for (const Layer& layer : layers) {
        write_file(dir / mask_file(layer.index), encode_mask_png(layer.params.mask));
        if (layer.cached) save_cached(*layer.cached, dir, layer.index);
    }
    // Drop blobs left behind by deleted layers.
    for (std::size_t k = layers.size();; ++k) {
        const int index = static_cast<int>(k);
        std::error_code ec;
        const bool any = fs::remove(dir / mask_file(index), ec) | fs::remove(cache_blob_path(dir, index, 'r'), ec) |
                         fs::remove(cache_blob_path(dir, index, 'b'), ec);
        if (!any) break;
    }
    write_text_atomic(dir / "manifest.json", manifest_locked(session).dump(2));
}

std::size_t SessionManager::load_store() {
    if (!m_config.store || !fs::is_directory(*m_config.store)) return 0;
    std::size_t loaded = 0;
    for (const auto& entry : fs::directory_iterator(*m_config.store)) {
        if (!entry.is_directory() || !fs::exists(entry.path() / "manifest.json")) continue;
        try {
            auto session = load_session(entry.path());
            std::unique_lock lock(m_sessions_lock);
            m_sessions[session->id] = session;
            ++loaded;
        } catch (const std::exception& e) {
            std::cerr << "ldb: skipping session " << entry.path().filename().string() << ": " << e.what() << '\n';
        }
    }
    return loaded;
}

std::shared_ptr<Session> SessionManager::load_session(const fs::path& dir) {
    const std::vector<std::uint8_t> raw = read_file(dir / "manifest.json");
    json m;
    try {
        m = json::parse(raw.begin(), raw.end());
    } catch (const json::exception& e) {
        fail(ErrorCode::bad_params, std::string("corrupt manifest: ") + e.what());
    }
    if (m.value("format", 0) != kManifestFormat) fail(ErrorCode::bad_params, "unsupported manifest format");

    auto session = std::make_shared<Session>();
    session->id = m.at("id").get<std::string>();
    session->toy = toy_config_from_json(m.at("backend").value("toy", json::object()));
    session->backend = make_backend(m.at("backend").at("id").get<std::string>(), session->toy);
    session->steps = m.at("steps").get<int>();
    session->created_ms = m.value("created_ms", std::int64_t{0});
    session->updated_ms = m.value("updated_ms", std::int64_t{0});

    const json& b = m.at("base");
    session->base.prompt = b.value("prompt", "");
    BaseImage base;
    if (b.at("kind").get<std::string>() == "uploaded") {
        session->base.kind = BaseProvenance::Kind::uploaded;
        session->base.image_png = read_file(dir / b.value("image", "base.png"));
        base = invert_base(*session->backend, decode_png(session->base.image_png), session->base.prompt,
                           session->steps);
    } else {
        session->base.kind = BaseProvenance::Kind::generated;
        session->base.seed = Seed{b.at("seed").get<std::uint64_t>()};
        base = generate_base(*session->backend, session->base.seed, session->base.prompt, session->steps);
    }
    if (image_hash(base.image) != b.value("image_hash", image_hash(base.image))) {
        fail(ErrorCode::conflict, "regenerated base image does not match the stored hash");
    }

    const int factor = session->backend->descriptor().spatial_factor;
    std::vector<Layer> layers;
    for (const json& entry : m.at("layers")) {
        Layer layer;
        layer.index = entry.at("index").get<int>();
        layer.prev = entry.at("prev").get<int>();
        layer.visible = entry.at("visible").get<bool>();
        layer.stale = entry.at("stale").get<bool>();
        layer.params.prompt = entry.at("prompt").get<std::string>();
        layer.params.seed = Seed{entry.at("seed").get<std::uint64_t>()};
        layer.params.alpha_star = entry.at("alpha_star").get<double>();
        layer.params.edit_steps = entry.at("n").get<int>();
        layer.params.sigma = entry.at("sigma").get<double>();
        layer.params.blend_step = opt<int>(entry, "b");
        layer.params.mask = decode_mask_png(read_file(dir / entry.at("mask").get<std::string>()), factor);
        if (entry.contains("cache")) {
            const json& c = entry.at("cache");
            layer.cached = std::make_shared<const CachedLatents>(load_cached(
                dir, layer.index, c.at("r_step").get<int>(), c.at("b_step").get<int>(), session->steps));
        }
        layers.push_back(std::move(layer));
    }
    session->stack = std::make_unique<LayerStack>(
        LayerStack::restore(session->backend, std::move(base), std::move(layers), m_cache, session->id));
    return session;
}

json report_to_json(const RecomputeReport& report) {
    return {{"recomputed", report.recomputed},
            {"denoiser_calls", report.denoiser_calls()},
            {"inversion_calls", report.inversion_calls},
            {"generation_calls", report.generation_calls},
            {"edit_calls", report.edit_calls},
            {"wall_ms", report.wall_ms}};
}

json edit_result_to_json(const EditResult& result, bool include_image) {
    json out = {{"denoiser_calls", result.denoiser_calls},
                {"alpha_effective", result.alpha_effective},
                {"start_step", result.start_step},
                {"image_hash", image_hash(result.image)},
                {"width", result.image.width()},
                {"height", result.image.height()}};
    if (include_image) out["image_png"] = base64_encode(encode_png(result.image));
    return out;
}

ToyBackendConfig toy_config_from_json(const json& j) {
    ToyBackendConfig config;
    try {
        if (j.contains("latent_shape")) {
            const auto dims = j.at("latent_shape").get<std::vector<int>>();
            if (dims.size() != 3) fail(ErrorCode::bad_shape, "latent_shape must be [C, h, w]");
            config.latent_shape = Shape{dims[0], dims[1], dims[2]};
        }
        if (j.contains("lambda_schedule")) config.lambda_schedule = j.at("lambda_schedule").get<std::vector<double>>();
        config.target_scale = j.value("target_scale", config.target_scale);
        config.default_steps = j.value("default_steps", config.default_steps);
    } catch (const json::exception& e) {
        fail(ErrorCode::bad_params, std::string("toy backend config: ") + e.what());
    }
    return config;
}

json toy_config_to_json(const ToyBackendConfig& config) {
    return {{"latent_shape", {config.latent_shape.channels, config.latent_shape.height, config.latent_shape.width}},
            {"lambda_schedule", config.lambda_schedule},
            {"target_scale", config.target_scale},
            {"default_steps", config.default_steps}};
}

namespace {

std::optional<Mask> mask_from_json(const json& j, const BackendDescriptor& backend, const fs::path& base_dir) {
    const int h = backend.pixel_height();
    const int w = backend.pixel_width();
    const int f = backend.spatial_factor;
    std::optional<Mask> mask;
    int sources = 0;
    if (j.contains("mask_png")) {
        ++sources;
        mask = decode_mask_png(base64_decode(j.at("mask_png").get<std::string>()), f);
    }
    if (j.contains("mask_path")) {
        ++sources;
        fs::path path = j.at("mask_path").get<std::string>();
        if (path.is_relative()) path = base_dir / path;
        mask = decode_mask_png(read_file(path), f);
    }
    if (j.contains("box")) {
        ++sources;
        const json& box = j.at("box");
        mask = Mask::box(h, w, box.at("center_x").get<int>(), box.at("center_y").get<int>(),
                         box.at("size").get<int>(), f);
    }
    if (j.contains("mask_fill")) {
        ++sources;
        mask = Mask::filled(h, w, j.at("mask_fill").get<float>(), f);
    }
    if (sources > 1) fail(ErrorCode::bad_params, "give at most one of mask_png, mask_path, box, mask_fill");
    if (mask && (mask->height() != h || mask->width() != w)) {
        fail(ErrorCode::bad_params, "mask is " + std::to_string(mask->width()) + "x" +
                                        std::to_string(mask->height()) + " but the canvas is " + std::to_string(w) +
                                        "x" + std::to_string(h));
    }
    return mask;
}

template <typename F>
auto decoding(const char* what, F&& body) {
    try {
        return body();
    } catch (const json::exception& e) {
        fail(ErrorCode::bad_params, std::string(what) + ": " + e.what());
    }
}

}  // namespace

EditParams edit_params_from_json(const json& j, const BackendDescriptor& backend, double default_sigma,
                                 const fs::path& base_dir) {
    return decoding("edit params", [&] {
        if (!j.is_object()) fail(ErrorCode::bad_params, "edit params must be a JSON object");
        EditParams p;
        p.prompt = j.at("prompt").get<std::string>();
        p.seed = opt_seed(j, "seed").value_or(Seed{0});
        p.alpha_star = j.value("alpha_star", p.alpha_star);
        p.edit_steps = j.value("n", p.edit_steps);
        p.sigma = j.value("sigma", default_sigma);
        p.blend_step = opt<int>(j, "b");
        auto mask = mask_from_json(j, backend, base_dir);
        if (!mask) fail(ErrorCode::bad_params, "edit params need a mask (mask_png, mask_path, box or mask_fill)");
        p.mask = std::move(*mask);
        return p;
    });
}

LayerPatch layer_patch_from_json(const json& j, const BackendDescriptor& backend) {
    return decoding("layer patch", [&] {
        if (!j.is_object()) fail(ErrorCode::bad_params, "layer patch must be a JSON object");
        LayerPatch p;
        p.prompt = opt<std::string>(j, "prompt");
        p.seed = opt_seed(j, "seed");
        p.alpha_star = opt<double>(j, "alpha_star");
        p.edit_steps = opt<int>(j, "n");
        p.sigma = opt<double>(j, "sigma");
        p.blend_step = opt<int>(j, "b");
        p.mask = mask_from_json(j, backend, {});
        p.visible = opt<bool>(j, "visible");
        return p;
    });
}

PreviewRequest preview_request_from_json(const json& j, const BackendDescriptor& backend) {
    return decoding("preview request", [&] {
        if (!j.is_object()) fail(ErrorCode::bad_params, "preview request must be a JSON object");
        PreviewRequest p;
        p.seed = opt_seed(j, "seed");
        p.seed_delta = opt<std::int64_t>(j, "seed_delta");
        if (p.seed && p.seed_delta) fail(ErrorCode::bad_params, "give seed or seed_delta, not both");
        if (j.contains("box")) {
            const json& box = j.at("box");
            p.box = BoxSpec{box.at("center_x").get<int>(), box.at("center_y").get<int>(), opt<int>(box, "size")};
        }
        p.prompt = opt<std::string>(j, "prompt");
        p.alpha_star = opt<double>(j, "alpha_star");
        p.edit_steps = opt<int>(j, "n");
        json rest = j;
        rest.erase("box");
        p.mask = mask_from_json(rest, backend, {});
        return p;
    });
}

CreateSessionRequest create_request_from_json(const json& j) {
    return decoding("session request", [&] {
        if (!j.is_object()) fail(ErrorCode::bad_params, "session request must be a JSON object");
        CreateSessionRequest r;
        r.backend_id = j.value("backend_id", std::string{});
        if (j.contains("toy")) r.toy = toy_config_from_json(j.at("toy"));
        r.steps = opt<int>(j, "n");
        r.prompt = opt<std::string>(j, "prompt");
        r.seed = opt_seed(j, "seed");
        if (j.contains("image_png")) r.image_png = base64_decode(j.at("image_png").get<std::string>());
        return r;
    });
}

json psnr_to_json(double psnr_db) {
    if (is_infinite_psnr(psnr_db)) return "inf";
    return psnr_db;
}

}  // namespace ldb
