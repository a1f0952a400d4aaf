// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ldb/backend.hpp"
#include "ldb/cache.hpp"
#include "ldb/engine.hpp"

namespace ldb {

/// The unedited image a stack is built on: either a seeded generation or an
/// uploaded image brought in through inversion.
struct BaseImage {
    Trajectory trajectory;
    PixelImage image;

    const PromptEmbedding& prompt() const noexcept { return trajectory.prompt; }
    int steps() const noexcept { return trajectory.steps; }
};

BaseImage generate_base(const Backend& backend, Seed seed, const std::string& prompt, int steps);

/// Encodes, inverts and re-generates an uploaded image.
BaseImage invert_base(const Backend& backend, const PixelImage& image, const std::string& prompt, int steps);

struct Layer {
    int index = 0;
    /// Predecessor the layer was stacked on; -1 is the base image. Hidden
    /// predecessors are skipped when the chain is evaluated.
    int prev = -1;
    EditParams params;
    bool visible = true;
    /// True when the cached latents may not reflect the current predecessor
    /// (only hidden layers are left in this state after a mutation).
    bool stale = false;
    std::shared_ptr<const CachedLatents> cached;
    std::optional<EditResult> output;
};

/// Work done by one mutation.
struct RecomputeReport {
    std::vector<int> recomputed;
    std::uint64_t inversion_calls = 0;
    std::uint64_t generation_calls = 0;
    std::uint64_t edit_calls = 0;
    double wall_ms = 0.0;

    std::uint64_t denoiser_calls() const noexcept { return inversion_calls + generation_calls + edit_calls; }
};

/// Phi for one layer: cached latents plus the model calls it took.
struct PhiResult {
    CachedLatents cached;
    std::uint64_t inversion_calls = 0;
    std::uint64_t generation_calls = 0;
};

/// Ordered, linear stack of edit layers over one base image.
///
/// Layer k restarts from latents derived from the output of its nearest
/// visible predecessor: the base trajectory for the first visible layer, and
/// for later layers the trajectory obtained by inverting the predecessor's
/// output image and re-generating it under the base prompt. Any mutation at
/// k recomputes k..top eagerly; nothing below k is touched.
class LayerStack {
public:
    LayerStack(std::shared_ptr<const Backend> backend, BaseImage base, std::shared_ptr<LatentCache> cache = {},
               std::string session_id = "local");

    const Backend& backend() const noexcept { return *m_backend; }
    const BaseImage& base() const noexcept { return m_base; }
    const std::vector<Layer>& layers() const noexcept { return m_layers; }
    const Layer& layer(int k) const;
    std::size_t size() const noexcept { return m_layers.size(); }
    const std::string& session_id() const noexcept { return m_session_id; }
    const LatentCache& cache() const noexcept { return *m_cache; }
    std::optional<int> dirty_from() const noexcept { return m_dirty_from; }

    /// Appends a layer on top, runs Phi and the edit.
    int add_layer(EditParams params, RecomputeReport* report = nullptr);
    RecomputeReport set_visibility(int k, bool visible);
    RecomputeReport update_layer(int k, EditParams params);
    RecomputeReport delete_layer(int k);

    /// Re-runs any stale visible work left behind by a failed mutation.
    RecomputeReport refresh();

    /// Output of the topmost visible layer, or the base image.
    const PixelImage& compose() const;
    const LatentTensor& composed_latent() const;

    /// Nearest visible layer below k, or -1 for the base.
    int effective_predecessor(int k) const;

    /// Computes Phi for layer k against its current predecessor without storing it.
    PhiResult phi(int k, int edit_steps, std::optional<StepIndex> blend_step) const;

    /// Edit of layer k with alternative parameters, leaving the stack as is.
    EditResult preview(int k, const EditParams& params) const;

    /// 64-bit fingerprint of layer k's cached (Z_r, Z_b); 0 when absent.
    std::uint64_t cache_fingerprint(int k) const;

    /// Rebuilds a stack from persisted layers whose caches are current. Only
    /// the edit steps of visible layers are re-run.
    static LayerStack restore(std::shared_ptr<const Backend> backend, BaseImage base, std::vector<Layer> layers,
                              std::shared_ptr<LatentCache> cache, std::string session_id);

private:
    CacheKey key(int k) const { return CacheKey{m_session_id, k}; }
    void check_index(int k) const;
    void recompute_from(int k, RecomputeReport& report);
    void recompute_layer(int k, RecomputeReport& report);
    void store_cache(int k, std::shared_ptr<const CachedLatents> cached);

    std::shared_ptr<const Backend> m_backend;
    BaseImage m_base;
    std::shared_ptr<LatentCache> m_cache;
    std::string m_session_id;
    std::vector<Layer> m_layers;
    std::optional<int> m_dirty_from;
};

}  // namespace ldb
