// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#include "ldb/engine.hpp"

#include <cmath>

#include "ldb/error.hpp"

namespace ldb {

void EditParams::validate(int steps) const {
    if (!(alpha_star >= 0.0 && alpha_star <= 100.0)) {
        fail(ErrorCode::bad_params, "alpha_star must lie in [0, 100], got " + std::to_string(alpha_star));
    }
    if (edit_steps < kMinSteps || edit_steps > steps) {
        fail(ErrorCode::bad_params, "edit steps n=" + std::to_string(edit_steps) + " must lie in [" +
                                        std::to_string(kMinSteps) + ", N=" + std::to_string(steps) + "]");
    }
    if (!std::isfinite(sigma) || sigma < 0.0) fail(ErrorCode::bad_params, "sigma must be a finite value >= 0");
    if (blend_step) {
        const StepIndex r = steps - edit_steps;
        if (*blend_step <= r || *blend_step >= steps) {
            fail(ErrorCode::bad_params, "blend step b=" + std::to_string(*blend_step) + " must satisfy r=" +
                                            std::to_string(r) + " < b < N=" + std::to_string(steps));
        }
    }
}

double map_strength(double alpha_star, const LatentTensor& regeneration, const LatentTensor& noise,
                    const Mask& mask, double sigma, int reference_width) {
    if (!(alpha_star >= 0.0 && alpha_star <= 100.0)) {
        fail(ErrorCode::bad_params, "alpha_star must lie in [0, 100], got " + std::to_string(alpha_star));
    }
    if (reference_width <= 0) fail(ErrorCode::bad_params, "reference width must be positive");
    if (mask.empty()) return 0.0;
    const double var = variance(regeneration);
    if (var == 0.0) fail(ErrorCode::bad_params, "regeneration latent has zero variance");
    const double cov = covariance(regeneration, noise);
    const double numerator = std::sqrt(std::abs(alpha_star / 100.0 * (sigma - 2.0 * cov / var)));
    const double denominator =
        std::sqrt(static_cast<double>(mask.coverage()) / static_cast<double>(reference_width));
    return numerator / denominator;
}

LatentTensor scaled_noise(Seed seed, const LatentTensor& regeneration) {
    const LatentTensor raw = sample_gaussian(seed, regeneration.shape());
    return scale(raw, static_cast<float>(std::sqrt(variance(regeneration))));
}

LatentTensor inject_noise(const LatentTensor& regeneration, const LatentTensor& noise, double alpha,
                          const Mask& mask) {
    if (alpha < 0.0 || !std::isfinite(alpha)) fail(ErrorCode::bad_params, "alpha must be finite and >= 0");
    if (noise.shape() != regeneration.shape()) {
        fail(ErrorCode::bad_shape, "noise shape " + to_string(noise.shape()) + " does not match latent " +
                                       to_string(regeneration.shape()));
    }
    const MaskField& m = mask.latent();
    if (m.height != regeneration.shape().height || m.width != regeneration.shape().width) {
        fail(ErrorCode::bad_shape, "mask does not match latent grid " + to_string(regeneration.shape()));
    }
    LatentTensor out = regeneration;
    if (alpha == 0.0) return out;
    const float a = static_cast<float>(alpha);
    const std::size_t plane = regeneration.shape().plane();
    auto pn = noise.data();
    auto po = out.data();
    for (std::size_t i = 0; i < po.size(); ++i) {
        const float w = m.values[i % plane];
        if (w != 0.0f) po[i] += a * (pn[i] * w);
    }
    return out;
}

LatentTensor inject_noise(const LatentTensor& regeneration, Seed seed, double alpha, const Mask& mask) {
    return inject_noise(regeneration, scaled_noise(seed, regeneration), alpha, mask);
}

EditResult single_layer_edit(const Backend& backend, const EditParams& params, const CachedLatents& cached,
                             const PromptEmbedding& prompt) {
    const BackendDescriptor& desc = backend.descriptor();
    const int steps = cached.steps;
    params.validate(steps);
    if (cached.r != steps - params.edit_steps) {
        fail(ErrorCode::bad_params, "cached regeneration step r=" + std::to_string(cached.r) +
                                        " does not match N - n = " + std::to_string(steps - params.edit_steps));
    }
    if (params.blend_step && *params.blend_step != cached.b) {
        fail(ErrorCode::bad_params, "requested blend step " + std::to_string(*params.blend_step) +
                                        " differs from the cached one (" + std::to_string(cached.b) + ")");
    }
    if (cached.regeneration.shape() != desc.latent_shape || cached.blending.shape() != desc.latent_shape) {
        fail(ErrorCode::bad_shape, "cached latents do not match backend shape " + to_string(desc.latent_shape));
    }
    if (params.mask.height() != desc.pixel_height() || params.mask.width() != desc.pixel_width()) {
        fail(ErrorCode::bad_shape, "mask " + std::to_string(params.mask.height()) + "x" +
                                       std::to_string(params.mask.width()) + " does not match the " +
                                       std::to_string(desc.pixel_height()) + "x" +
                                       std::to_string(desc.pixel_width()) + " canvas");
    }

    const StepIndex b = cached.b;
    const MaskField& m = params.mask.latent();

    EditResult result;
    result.trajectory.prompt = prompt;
    result.trajectory.seed = params.seed;
    result.trajectory.steps = steps;

    LatentTensor current;
    StepIndex first = cached.r;
    if (params.mask.empty()) {
        // Everything before b is overwritten by the blend, so start there.
        first = b;
        current = cached.blending;
    } else {
        const LatentTensor noise = scaled_noise(params.seed, cached.regeneration);
        result.alpha_effective = map_strength(params.alpha_star, cached.regeneration, noise, params.mask,
                                              params.sigma, desc.pixel_width());
        current = inject_noise(cached.regeneration, noise, result.alpha_effective, params.mask);
    }
    result.start_step = first;

    result.trajectory.latents.reserve(static_cast<std::size_t>(steps - first) + 1);
    for (StepIndex i = first; i < steps; ++i) {
        if (i == b) current = blend(current, cached.blending, m);
        result.trajectory.latents.push_back(current);
        current = backend.denoise_step(current, prompt, i, steps, params.seed);
        ++result.denoiser_calls;
    }
    result.trajectory.latents.push_back(current);
    result.final_latent = std::move(current);
    result.image = backend.decode(result.final_latent);
    return result;
}

PreviewStream::PreviewStream(std::shared_ptr<const Backend> backend, EditParams params,
                             std::shared_ptr<const CachedLatents> cached, PromptEmbedding prompt,
                             std::vector<Seed> seeds)
    : m_backend(std::move(backend)),
      m_params(std::move(params)),
      m_cached(std::move(cached)),
      m_prompt(std::move(prompt)),
      m_seeds(std::move(seeds)) {
    if (!m_backend || !m_cached) fail(ErrorCode::bad_params, "preview stream needs a backend and cached latents");
}

std::optional<PreviewItem> PreviewStream::next() {
    if (m_position >= m_seeds.size()) return std::nullopt;
    PreviewItem item;
    item.seed = m_seeds[m_position++];
    EditParams params = m_params;
    params.seed = item.seed;
    try {
        item.result = single_layer_edit(*m_backend, params, *m_cached, m_prompt);
    } catch (const Error& e) {
        item.error_code = e.code();
        item.error = e.what();
    }
    return item;
}

}  // namespace ldb
