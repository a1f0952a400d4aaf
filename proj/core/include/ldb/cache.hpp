// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>

#include "ldb/backend.hpp"
#include "ldb/latent.hpp"

namespace ldb {

/// The two intermediate latents a layer restarts from: Z_r (regeneration)
/// and Z_b (blending), with 0 <= r < b < N.
struct CachedLatents {
    LatentTensor regeneration;
    LatentTensor blending;
    StepIndex r = 0;
    StepIndex b = 0;
    int steps = 0;

    int edit_steps() const noexcept { return steps - r; }

    friend bool operator==(const CachedLatents&, const CachedLatents&) = default;
};

/// Picks (Z_r, Z_b) out of a full trajectory: r = N - n, b = N - 2 unless
/// overridden. Requires 3 <= n <= N and r < b < N.
CachedLatents capture(const Trajectory& trajectory, int edit_steps, std::optional<StepIndex> b_override = {});

/// Default blend index for an N-step schedule.
constexpr StepIndex default_blend_step(int steps) noexcept { return steps - 2; }

struct CacheKey {
    std::string session_id;
    int layer_index = 0;

    friend auto operator<=>(const CacheKey&, const CacheKey&) = default;
};

/// In-memory store of per-layer cached latents.
///
/// Readers share a lock; a put swaps in a new immutable entry, so a get that
/// races an overwrite sees either the old or the new pair in full.
class LatentCache {
public:
    void put(const CacheKey& key, CachedLatents cached);

    /// Throws Error(cache_miss) when the key is absent.
    std::shared_ptr<const CachedLatents> get(const CacheKey& key) const;
    std::shared_ptr<const CachedLatents> find(const CacheKey& key) const;

    bool contains(const CacheKey& key) const;
    void erase(const CacheKey& key);
    void erase_session(const std::string& session_id);

    std::size_t layer_count(const std::string& session_id) const;

    /// Tensor payload held for a session: 2 x 4 bytes x C*h*w per layer.
    /// In-memory entries carry no serialized header.
    std::size_t size_bytes(const std::string& session_id) const;

    /// Bytes the session occupies once spilled as blobs (payload plus one
    /// 16-byte header per blob).
    std::size_t persisted_bytes(const std::string& session_id) const;

private:
    mutable std::shared_mutex m_mutex;
    std::map<CacheKey, std::shared_ptr<const CachedLatents>> m_entries;
};

/// Blob paths: <dir>/layer<k>_r.ldbl and <dir>/layer<k>_b.ldbl.
std::filesystem::path cache_blob_path(const std::filesystem::path& dir, int layer_index, char which);

void save_cached(const CachedLatents& cached, const std::filesystem::path& dir, int layer_index);
CachedLatents load_cached(const std::filesystem::path& dir, int layer_index, StepIndex r, StepIndex b, int steps);

}  // namespace ldb
