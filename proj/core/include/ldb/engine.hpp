// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ldb/backend.hpp"
#include "ldb/cache.hpp"
#include "ldb/error.hpp"
#include "ldb/image.hpp"
#include "ldb/latent.hpp"

namespace ldb {

inline constexpr double kDefaultSigma = 0.25;

struct EditParams {
    std::string prompt;
    Mask mask;
    Seed seed;
    /// User-facing strength in [0, 100].
    double alpha_star = 50.0;
    /// Number of edit steps n; the edit restarts from r = N - n.
    int edit_steps = 8;
    double sigma = kDefaultSigma;
    /// Blend step b; defaults to N - 2.
    std::optional<StepIndex> blend_step;

    void validate(int steps) const;

    friend bool operator==(const EditParams&, const EditParams&) = default;
};

struct EditResult {
    LatentTensor final_latent;
    PixelImage image;
    /// Edit-branch latents Z'_s .. Z'_N where s = start_step. The entry at
    /// index b holds the latent right after blending.
    Trajectory trajectory;
    StepIndex start_step = 0;
    int denoiser_calls = 0;
    double alpha_effective = 0.0;

    const LatentTensor& latent_at(StepIndex global_step) const {
        return trajectory.latents.at(static_cast<std::size_t>(global_step - start_step));
    }
};

/// Maps the user strength alpha* in [0,100] to the injection coefficient:
///
///   alpha = sqrt(|alpha*/100 * (sigma - 2 Cov(Z_r, noise) / Var(Z_r))|)
///           / sqrt(#{m != 0} / W)
///
/// `noise` is the variance-matched sample and W the pixel width of the mask
/// reference. An empty mask yields 0.
double map_strength(double alpha_star, const LatentTensor& regeneration, const LatentTensor& noise,
                    const Mask& mask, double sigma, int reference_width);

/// Seeded sample rescaled by sqrt(Var(Z_r)).
LatentTensor scaled_noise(Seed seed, const LatentTensor& regeneration);

/// Z_r + alpha * (noise (.) m), with the noise drawn by scaled_noise().
LatentTensor inject_noise(const LatentTensor& regeneration, Seed seed, double alpha, const Mask& mask);
LatentTensor inject_noise(const LatentTensor& regeneration, const LatentTensor& noise, double alpha,
                          const Mask& mask);

/// One layer edit over cached latents: inject seeded noise at r, denoise
/// through global steps r..N-1 with the edit prompt, and at step b replace
/// the unmasked part of the running latent with the cached Z_b before that
/// step executes.
EditResult single_layer_edit(const Backend& backend, const EditParams& params, const CachedLatents& cached,
                             const PromptEmbedding& prompt);

struct PreviewItem {
    Seed seed;
    std::optional<EditResult> result;
    std::optional<ErrorCode> error_code;
    std::string error;
};

/// Lazily evaluates single_layer_edit for a list of seeds over shared cached
/// latents. Failures are reported per item.
class PreviewStream {
public:
    PreviewStream(std::shared_ptr<const Backend> backend, EditParams params,
                  std::shared_ptr<const CachedLatents> cached, PromptEmbedding prompt, std::vector<Seed> seeds);

    std::optional<PreviewItem> next();
    std::size_t remaining() const noexcept { return m_seeds.size() - m_position; }

private:
    std::shared_ptr<const Backend> m_backend;
    EditParams m_params;
    std::shared_ptr<const CachedLatents> m_cached;
    PromptEmbedding m_prompt;
    std::vector<Seed> m_seeds;
    std::size_t m_position = 0;
};

}  // namespace ldb
