// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#include "ldb/cache.hpp"

#include <limits>
#include <mutex>

#include "ldb/error.hpp"
#include "ldb/image.hpp"

namespace ldb {

CachedLatents capture(const Trajectory& trajectory, int edit_steps, std::optional<StepIndex> b_override) {
    const int steps = trajectory.steps;
    if (trajectory.latents.size() != static_cast<std::size_t>(steps) + 1) {
        fail(ErrorCode::bad_params, "capture needs a complete trajectory of " + std::to_string(steps + 1) + " latents");
    }
    if (edit_steps < kMinSteps || edit_steps > steps) {
        fail(ErrorCode::bad_params, "edit steps n=" + std::to_string(edit_steps) + " must lie in [" +
                                        std::to_string(kMinSteps) + ", " + std::to_string(steps) + "]");
    }
    const StepIndex r = steps - edit_steps;
    const StepIndex b = b_override.value_or(default_blend_step(steps));
    if (b <= r || b >= steps) {
        fail(ErrorCode::bad_params, "blend step b=" + std::to_string(b) + " must satisfy r=" + std::to_string(r) +
                                        " < b < N=" + std::to_string(steps));
    }
    CachedLatents out;
    out.regeneration = trajectory.latents[static_cast<std::size_t>(r)];
    out.blending = trajectory.latents[static_cast<std::size_t>(b)];
    out.r = r;
    out.b = b;
    out.steps = steps;
    return out;
}

void LatentCache::put(const CacheKey& key, CachedLatents cached) {
    auto entry = std::make_shared<const CachedLatents>(std::move(cached));
    std::unique_lock lock(m_mutex);
    m_entries[key] = std::move(entry);
}

std::shared_ptr<const CachedLatents> LatentCache::get(const CacheKey& key) const {
    auto entry = find(key);
    if (!entry) {
        fail(ErrorCode::cache_miss, "no cached latents for session '" + key.session_id + "' layer " +
                                        std::to_string(key.layer_index));
    }
    return entry;
}

std::shared_ptr<const CachedLatents> LatentCache::find(const CacheKey& key) const {
    std::shared_lock lock(m_mutex);
    auto it = m_entries.find(key);
    return it == m_entries.end() ? nullptr : it->second;
}

bool LatentCache::contains(const CacheKey& key) const {
    std::shared_lock lock(m_mutex);
    return m_entries.count(key) != 0;
}

void LatentCache::erase(const CacheKey& key) {
    std::unique_lock lock(m_mutex);
    m_entries.erase(key);
}

void LatentCache::erase_session(const std::string& session_id) {
    std::unique_lock lock(m_mutex);
    auto it = m_entries.lower_bound(CacheKey{session_id, std::numeric_limits<int>::min()});
    while (it != m_entries.end() && it->first.session_id == session_id) it = m_entries.erase(it);
}

std::size_t LatentCache::layer_count(const std::string& session_id) const {
    std::shared_lock lock(m_mutex);
    std::size_t n = 0;
    for (auto it = m_entries.lower_bound(CacheKey{session_id, std::numeric_limits<int>::min()});
         it != m_entries.end() && it->first.session_id == session_id; ++it) {
        ++n;
    }
    return n;
}

std::size_t LatentCache::size_bytes(const std::string& session_id) const {
    std::shared_lock lock(m_mutex);
    std::size_t total = 0;
    for (auto it = m_entries.lower_bound(CacheKey{session_id, std::numeric_limits<int>::min()});
         it != m_entries.end() && it->first.session_id == session_id; ++it) {
        total += (it->second->regeneration.size() + it->second->blending.size()) * sizeof(float);
    }
    return total;
}

std::size_t LatentCache::persisted_bytes(const std::string& session_id) const {
    return size_bytes(session_id) + 2 * kLatentHeaderBytes * layer_count(session_id);
}

std::filesystem::path cache_blob_path(const std::filesystem::path& dir, int layer_index, char which) {
    return dir / ("layer" + std::to_string(layer_index) + "_" + which + ".ldbl");
}

void save_cached(const CachedLatents& cached, const std::filesystem::path& dir, int layer_index) {
    write_file(cache_blob_path(dir, layer_index, 'r'), serialize_latent(cached.regeneration));
    write_file(cache_blob_path(dir, layer_index, 'b'), serialize_latent(cached.blending));
}

CachedLatents load_cached(const std::filesystem::path& dir, int layer_index, StepIndex r, StepIndex b, int steps) {
    CachedLatents out;
    out.regeneration = deserialize_latent(read_file(cache_blob_path(dir, layer_index, 'r')));
    out.blending = deserialize_latent(read_file(cache_blob_path(dir, layer_index, 'b')));
    out.r = r;
    out.b = b;
    out.steps = steps;
    return out;
}

}  // namespace ldb
