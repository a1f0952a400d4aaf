// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#include "ldb/layers.hpp"

#include <chrono>

#include "ldb/error.hpp"
#include "ldb/hash.hpp"

namespace ldb {

namespace {

class Stopwatch {
public:
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - m_start).count();
    }

private:
    std::chrono::steady_clock::time_point m_start = std::chrono::steady_clock::now();
};

}  // namespace

BaseImage generate_base(const Backend& backend, Seed seed, const std::string& prompt, int steps) {
    BaseImage base;
    base.trajectory = backend.generate(seed, backend.embed(prompt), steps);
    base.image = backend.decode(base.trajectory.final_latent());
    return base;
}

BaseImage invert_base(const Backend& backend, const PixelImage& image, const std::string& prompt, int steps) {
    const PromptEmbedding embedding = backend.embed(prompt);
    const Trajectory inverted = backend.invert(backend.encode(image), embedding, steps);
    BaseImage base;
    base.trajectory = backend.denoise_from(inverted.latents.front(), embedding, steps, Seed{0});
    base.image = backend.decode(base.trajectory.final_latent());
    return base;
}

LayerStack::LayerStack(std::shared_ptr<const Backend> backend, BaseImage base, std::shared_ptr<LatentCache> cache,
                       std::string session_id)
    : m_backend(std::move(backend)),
      m_base(std::move(base)),
      m_cache(cache ? std::move(cache) : std::make_shared<LatentCache>()),
      m_session_id(std::move(session_id)) {
    if (!m_backend) fail(ErrorCode::backend_unavailable, "layer stack needs a backend");
    if (m_base.trajectory.latents.size() != static_cast<std::size_t>(m_base.steps()) + 1) {
        fail(ErrorCode::bad_params, "base trajectory is incomplete");
    }
}

const Layer& LayerStack::layer(int k) const {
    check_index(k);
    return m_layers[static_cast<std::size_t>(k)];
}

void LayerStack::check_index(int k) const {
    if (k < 0 || static_cast<std::size_t>(k) >= m_layers.size()) {
        fail(ErrorCode::not_found, "layer " + std::to_string(k) + " does not exist (stack has " +
                                       std::to_string(m_layers.size()) + " layers)");
    }
}

int LayerStack::effective_predecessor(int k) const {
    int j = k - 1;
    while (j >= 0 && !m_layers[static_cast<std::size_t>(j)].visible) --j;
    return j;
}

PhiResult LayerStack::phi(int k, int edit_steps, std::optional<StepIndex> blend_step) const {
    const int steps = m_base.steps();
    const int j = effective_predecessor(k);
    PhiResult out;
    if (j < 0) {
        out.cached = capture(m_base.trajectory, edit_steps, blend_step);
        return out;
    }
    const Layer& prev = m_layers[static_cast<std::size_t>(j)];
    if (!prev.output || prev.stale) {
        fail(ErrorCode::cache_miss, "predecessor layer " + std::to_string(j) + " has no current output");
    }
    // Feed the predecessor's image back through inversion so overlapping
    // edits start from content that already includes it.
    const Trajectory inverted = m_backend->invert(m_backend->encode(prev.output->image), m_base.prompt(), steps);
    const Trajectory regenerated =
        m_backend->denoise_from(inverted.latents.front(), m_base.prompt(), steps, m_base.trajectory.seed);
    out.inversion_calls = static_cast<std::uint64_t>(steps);
    out.generation_calls = static_cast<std::uint64_t>(steps);
    out.cached = capture(regenerated, edit_steps, blend_step);
    return out;
}

void LayerStack::store_cache(int k, std::shared_ptr<const CachedLatents> cached) {
    Layer& layer = m_layers[static_cast<std::size_t>(k)];
    layer.cached = cached;
    m_cache->put(key(k), *cached);
}

void LayerStack::recompute_layer(int k, RecomputeReport& report) {
    Layer& layer = m_layers[static_cast<std::size_t>(k)];
    PhiResult phi_result = phi(k, layer.params.edit_steps, layer.params.blend_step);
    report.inversion_calls += phi_result.inversion_calls;
    report.generation_calls += phi_result.generation_calls;
    store_cache(k, std::make_shared<const CachedLatents>(std::move(phi_result.cached)));
    layer.output = single_layer_edit(*m_backend, layer.params, *layer.cached, m_backend->embed(layer.params.prompt));
    report.edit_calls += static_cast<std::uint64_t>(layer.output->denoiser_calls);
    layer.stale = false;
    report.recomputed.push_back(k);
}

void LayerStack::recompute_from(int k, RecomputeReport& report) {
    for (int i = k; static_cast<std::size_t>(i) < m_layers.size(); ++i) {
        Layer& layer = m_layers[static_cast<std::size_t>(i)];
        if (!layer.visible) {
            // Cache is kept, but it no longer tracks the layers below.
            layer.stale = true;
            continue;
        }
        try {
            recompute_layer(i, report);
        } catch (...) {
            m_dirty_from = i;
            for (std::size_t s = static_cast<std::size_t>(i); s < m_layers.size(); ++s) m_layers[s].stale = true;
            throw;
        }
    }
    m_dirty_from.reset();
}

int LayerStack::add_layer(EditParams params, RecomputeReport* report) {
    params.validate(m_base.steps());
    Stopwatch timer;
    Layer layer;
    layer.index = static_cast<int>(m_layers.size());
    layer.prev = layer.index - 1;
    layer.params = std::move(params);
    m_layers.push_back(std::move(layer));
    RecomputeReport local;
    try {
        recompute_from(static_cast<int>(m_layers.size()) - 1, local);
    } catch (...) {
        m_layers.pop_back();
        m_dirty_from.reset();
        throw;
    }
    local.wall_ms = timer.elapsed_ms();
    if (report) *report = std::move(local);
    return static_cast<int>(m_layers.size()) - 1;
}

RecomputeReport LayerStack::set_visibility(int k, bool visible) {
    check_index(k);
    Stopwatch timer;
    RecomputeReport report;
    Layer& layer = m_layers[static_cast<std::size_t>(k)];
    if (layer.visible == visible && !m_dirty_from) return report;
    layer.visible = visible;
    // Hiding k leaves k untouched and re-chains everything above it;
    // showing k recomputes k itself first.
    recompute_from(visible ? k : k + 1, report);
    report.wall_ms = timer.elapsed_ms();
    return report;
}

RecomputeReport LayerStack::update_layer(int k, EditParams params) {
    check_index(k);
    params.validate(m_base.steps());
    Stopwatch timer;
    RecomputeReport report;
    Layer& layer = m_layers[static_cast<std::size_t>(k)];
    if (layer.params == params && !layer.stale && !m_dirty_from) return report;
    layer.params = std::move(params);
    if (!layer.visible) {
        layer.stale = true;
        layer.output.reset();
    }
    recompute_from(k, report);
    report.wall_ms = timer.elapsed_ms();
    return report;
}

RecomputeReport LayerStack::delete_layer(int k) {
    check_index(k);
    Stopwatch timer;
    RecomputeReport report;
    const int removed_prev = m_layers[static_cast<std::size_t>(k)].prev;
    m_layers.erase(m_layers.begin() + k);
    for (std::size_t i = static_cast<std::size_t>(k); i < m_layers.size(); ++i) {
        Layer& layer = m_layers[i];
        layer.index = static_cast<int>(i);
        layer.prev = (static_cast<int>(i) == k) ? removed_prev : static_cast<int>(i) - 1;
        if (layer.cached) m_cache->put(key(static_cast<int>(i)), *layer.cached);
    }
    m_cache->erase(key(static_cast<int>(m_layers.size())));
    recompute_from(k, report);
    report.wall_ms = timer.elapsed_ms();
    return report;
}

RecomputeReport LayerStack::refresh() {
    RecomputeReport report;
    if (!m_dirty_from) return report;
    Stopwatch timer;
    recompute_from(*m_dirty_from, report);
    report.wall_ms = timer.elapsed_ms();
    return report;
}

const PixelImage& LayerStack::compose() const {
    if (m_dirty_from) fail(ErrorCode::conflict, "layer stack has stale layers; refresh before composing");
    const int top = effective_predecessor(static_cast<int>(m_layers.size()));
    return top < 0 ? m_base.image : m_layers[static_cast<std::size_t>(top)].output->image;
}

const LatentTensor& LayerStack::composed_latent() const {
    if (m_dirty_from) fail(ErrorCode::conflict, "layer stack has stale layers; refresh before composing");
    const int top = effective_predecessor(static_cast<int>(m_layers.size()));
    return top < 0 ? m_base.trajectory.final_latent() : m_layers[static_cast<std::size_t>(top)].output->final_latent;
}

EditResult LayerStack::preview(int k, const EditParams& params) const {
    check_index(k);
    params.validate(m_base.steps());
    const Layer& layer = m_layers[static_cast<std::size_t>(k)];
    if (!layer.visible || layer.stale) {
        fail(ErrorCode::conflict, "layer " + std::to_string(k) + " is hidden or stale; previews need a live layer");
    }
    const PromptEmbedding prompt = m_backend->embed(params.prompt);
    const bool same_cache = layer.cached && params.edit_steps == layer.params.edit_steps &&
                            params.blend_step == layer.params.blend_step;
    if (same_cache) return single_layer_edit(*m_backend, params, *layer.cached, prompt);
    const PhiResult fresh = phi(k, params.edit_steps, params.blend_step);
    return single_layer_edit(*m_backend, params, fresh.cached, prompt);
}

std::uint64_t LayerStack::cache_fingerprint(int k) const {
    const Layer& l = layer(k);
    if (!l.cached) return 0;
    std::vector<std::uint8_t> bytes = serialize_latent(l.cached->regeneration);
    const std::vector<std::uint8_t> blend_bytes = serialize_latent(l.cached->blending);
    bytes.insert(bytes.end(), blend_bytes.begin(), blend_bytes.end());
    return fingerprint64(bytes);
}

LayerStack LayerStack::restore(std::shared_ptr<const Backend> backend, BaseImage base, std::vector<Layer> layers,
                               std::shared_ptr<LatentCache> cache, std::string session_id) {
    LayerStack stack(std::move(backend), std::move(base), std::move(cache), std::move(session_id));
    stack.m_layers = std::move(layers);
    for (std::size_t i = 0; i < stack.m_layers.size(); ++i) {
        Layer& layer = stack.m_layers[i];
        layer.index = static_cast<int>(i);
        layer.output.reset();
        if (layer.cached) stack.m_cache->put(stack.key(layer.index), *layer.cached);
    }
    for (Layer& layer : stack.m_layers) {
        if (!layer.visible) continue;
        if (!layer.cached || layer.stale) {
            RecomputeReport ignored;
            stack.recompute_from(layer.index, ignored);
            break;
        }
        layer.output = single_layer_edit(*stack.m_backend, layer.params, *layer.cached,
                                         stack.m_backend->embed(layer.params.prompt));
    }
    return stack;
}

}  // namespace ldb
