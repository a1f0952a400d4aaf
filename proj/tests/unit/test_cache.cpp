// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "ldb/cache.hpp"
#include "test_util.hpp"

namespace ldb {
namespace {

using testing::error_of;

Trajectory base_trajectory(const ToyBackend& toy, int steps = 25) {
    return toy.generate(Seed{1}, toy.embed("a cat on a sofa"), steps);
}

TEST(Capture, DefaultIndices) {
    const ToyBackend toy;
    const Trajectory tr = base_trajectory(toy);
    const CachedLatents c = capture(tr, 8);
    EXPECT_EQ(c.r, 17);
    EXPECT_EQ(c.b, 23);
    EXPECT_EQ(c.steps, 25);
    EXPECT_EQ(c.edit_steps(), 8);
    EXPECT_EQ(capture(tr, 25).r, 0);
    EXPECT_EQ(capture(tr, 8, 20).b, 20);
}

TEST(Capture, RejectsBadIndices) {
    const ToyBackend toy;
    const Trajectory tr = base_trajectory(toy);
    EXPECT_EQ(error_of([&] { capture(tr, 8, 17); }), ErrorCode::bad_params);  // b == r
    EXPECT_EQ(error_of([&] { capture(tr, 8, 25); }), ErrorCode::bad_params);  // b == N
    EXPECT_EQ(error_of([&] { capture(tr, 2); }), ErrorCode::bad_params);
    EXPECT_EQ(error_of([&] { capture(tr, 26); }), ErrorCode::bad_params);
    Trajectory partial = tr;
    partial.latents.pop_back();
    EXPECT_EQ(error_of([&] { capture(partial, 8); }), ErrorCode::bad_params);
}

TEST(Capture, BitwiseEqualToRegeneration) {
    const ToyBackend toy;
    const CachedLatents c = capture(base_trajectory(toy), 8);
    const Trajectory again = base_trajectory(toy);
    EXPECT_EQ(c.regeneration, again.latents[17]);
    EXPECT_EQ(c.blending, again.latents[23]);
}

TEST(LatentCache, PutGetOverwrite) {
    const ToyBackend toy;
    const Trajectory tr = base_trajectory(toy);
    LatentCache cache;
    const CacheKey key{"s", 0};
    EXPECT_EQ(error_of([&] { cache.get(key); }), ErrorCode::cache_miss);
    EXPECT_EQ(cache.find(key), nullptr);

    cache.put(key, capture(tr, 8));
    EXPECT_TRUE(cache.contains(key));
    EXPECT_EQ(cache.get(key)->r, 17);
    const auto held = cache.get(key);

    cache.put(key, capture(tr, 4));
    EXPECT_EQ(cache.get(key)->r, 21);
    EXPECT_EQ(held->r, 17);  // readers keep their snapshot

    cache.erase(key);
    EXPECT_FALSE(cache.contains(key));
    EXPECT_EQ(error_of([&] { cache.get(key); }), ErrorCode::cache_miss);
}

TEST(LatentCache, SessionsAreIsolated) {
    const ToyBackend toy;
    const CachedLatents c = capture(base_trajectory(toy), 8);
    LatentCache cache;
    cache.put({"a", 0}, c);
    cache.put({"a", 1}, c);
    cache.put({"b", 0}, c);
    EXPECT_EQ(cache.layer_count("a"), 2u);
    EXPECT_EQ(cache.layer_count("b"), 1u);
    cache.erase_session("a");
    EXPECT_EQ(cache.layer_count("a"), 0u);
    EXPECT_TRUE(cache.contains({"b", 0}));
}

TEST(LatentCache, SizeIsLinearInLayers) {
    const ToyBackend toy;
    const CachedLatents c = capture(base_trajectory(toy), 8);
    LatentCache cache;
    EXPECT_EQ(cache.size_bytes("s"), 0u);
    cache.put({"s", 0}, c);
    // 2 latents x 4 x 16 x 16 floats.
    EXPECT_EQ(cache.size_bytes("s"), 8192u);
    for (int k = 1; k < 6; ++k) {
        cache.put({"s", k}, c);
        EXPECT_EQ(cache.size_bytes("s"), 8192u * static_cast<std::size_t>(k + 1));
    }
    EXPECT_EQ(cache.persisted_bytes("s"), 6u * (8192u + 2u * kLatentHeaderBytes));
}

TEST(LatentCache, TenLayersAtSixtyFourSquare) {
    ToyBackendConfig cfg;
    cfg.latent_shape = Shape{4, 64, 64};
    const ToyBackend toy(cfg);
    const CachedLatents c = capture(toy.generate(Seed{2}, toy.embed("x"), 25), 8);
    LatentCache cache;
    for (int k = 0; k < 10; ++k) cache.put({"s", k}, c);
    EXPECT_EQ(cache.size_bytes("s"), 1'310'720u);
}

TEST(CacheFiles, SaveLoadRoundTrip) {
    const ToyBackend toy;
    const CachedLatents c = capture(base_trajectory(toy), 6, 21);
    const auto dir = testing::temp_dir("cache");
    save_cached(c, dir, 3);
    EXPECT_TRUE(std::filesystem::exists(cache_blob_path(dir, 3, 'r')));
    EXPECT_EQ(cache_blob_path(dir, 3, 'b').filename(), "layer3_b.ldbl");
    EXPECT_EQ(load_cached(dir, 3, 19, 21, 25), c);
    EXPECT_EQ(error_of([&] { load_cached(dir, 4, 19, 21, 25); }), ErrorCode::not_found);
    std::filesystem::remove_all(dir);
}

TEST(LatentCache, ConcurrentReadersSeeWholeEntries) {
    const ToyBackend toy;
    const Trajectory tr = base_trajectory(toy);
    const CachedLatents first = capture(tr, 8);
    const CachedLatents second = capture(tr, 4);
    LatentCache cache;
    const CacheKey key{"s", 0};
    cache.put(key, first);

    std::atomic<bool> stop{false};
    std::atomic<int> torn{0};
    std::vector<std::thread> readers;
    for (int t = 0; t < 4; ++t) {
        readers.emplace_back([&] {
            while (!stop) {
                const auto e = cache.get(key);
                if (!(*e == first) && !(*e == second)) ++torn;
            }
        });
    }
    for (int i = 0; i < 200; ++i) cache.put(key, i % 2 == 0 ? second : first);
    stop = true;
    for (auto& t : readers) t.join();
    EXPECT_EQ(torn.load(), 0);
}

}  // namespace
}  // namespace ldb
