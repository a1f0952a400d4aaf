// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#include "ldb/backend.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "ldb/error.hpp"
#include "ldb/hash.hpp"

namespace ldb {

void Backend::check_steps(int steps) const {
    if (steps < kMinSteps) {
        fail(ErrorCode::bad_params, "number of denoising steps must be >= " + std::to_string(kMinSteps) +
                                        ", got " + std::to_string(steps));
    }
}

void Backend::check_latent(const LatentTensor& z, const char* what) const {
    if (z.shape() != descriptor().latent_shape) {
        fail(ErrorCode::bad_shape, std::string(what) + ": latent " + to_string(z.shape()) +
                                       " does not match backend shape " + to_string(descriptor().latent_shape));
    }
}

LatentTensor Backend::initial_noise(Seed seed) const {
    return sample_gaussian(seed, descriptor().latent_shape);
}

LatentTensor Backend::denoise_step(const LatentTensor& z, const PromptEmbedding& prompt, StepIndex i, int steps,
                                   Seed seed) const {
    check_steps(steps);
    if (i < 0 || i >= steps) {
        fail(ErrorCode::bad_params,
             "step index " + std::to_string(i) + " out of range [0, " + std::to_string(steps) + ")");
    }
    check_latent(z, "denoise_step");
    ++m_denoiser_calls;
    return step_impl(z, prompt, i, steps, seed);
}

Trajectory Backend::generate(Seed seed, const PromptEmbedding& prompt, int steps) const {
    check_steps(steps);
    return denoise_from(initial_noise(seed), prompt, steps, seed);
}

Trajectory Backend::denoise_from(LatentTensor start, const PromptEmbedding& prompt, int steps, Seed seed) const {
    check_steps(steps);
    check_latent(start, "denoise_from");
    Trajectory traj;
    traj.prompt = prompt;
    traj.seed = seed;
    traj.steps = steps;
    traj.latents.reserve(static_cast<std::size_t>(steps) + 1);
    traj.latents.push_back(std::move(start));
    for (StepIndex i = 0; i < steps; ++i) {
        traj.latents.push_back(denoise_step(traj.latents.back(), prompt, i, steps, seed));
    }
    return traj;
}

Trajectory Backend::invert(const LatentTensor& final_latent, const PromptEmbedding& prompt, int steps) const {
    check_steps(steps);
    check_latent(final_latent, "invert");
    if (!descriptor().supports_inversion) {
        fail(ErrorCode::backend_unavailable, "backend '" + descriptor().id +
                                                 "' does not support inversion; uploads and layered edits need it");
    }
    Trajectory traj;
    traj.prompt = prompt;
    traj.steps = steps;
    traj.latents = invert_impl(final_latent, prompt, steps);
    if (traj.latents.size() != static_cast<std::size_t>(steps) + 1) {
        fail(ErrorCode::bad_shape, "inversion returned " + std::to_string(traj.latents.size()) +
                                       " latents, expected " + std::to_string(steps + 1));
    }
    return traj;
}

// --- toy backend -----------------------------------------------------------

ToyBackend::ToyBackend(ToyBackendConfig config) : m_config(std::move(config)) {
    if (!m_config.latent_shape.valid()) {
        fail(ErrorCode::bad_shape, "toy latent shape must be positive, got " + to_string(m_config.latent_shape));
    }
    for (double l : m_config.lambda_schedule) {
        if (!(l > 0.0 && l <= 1.0)) {
            fail(ErrorCode::bad_params, "toy lambda schedule entries must lie in (0, 1], got " + std::to_string(l));
        }
    }
    if (!std::isfinite(m_config.target_scale)) fail(ErrorCode::bad_params, "toy target_scale must be finite");
    if (!m_config.lambda_schedule.empty()) {
        m_config.default_steps = static_cast<int>(m_config.lambda_schedule.size());
    }
    if (m_config.default_steps < kMinSteps) {
        fail(ErrorCode::bad_params, "toy backend needs at least " + std::to_string(kMinSteps) + " steps");
    }
    m_descriptor.id = "toy";
    m_descriptor.latent_shape = m_config.latent_shape;
    m_descriptor.spatial_factor = 1;
    m_descriptor.supports_exact_inversion = true;
    m_descriptor.default_steps = m_config.default_steps;
}

double ToyBackend::lambda(StepIndex i, int steps) const {
    if (!m_config.lambda_schedule.empty()) {
        if (static_cast<std::size_t>(steps) != m_config.lambda_schedule.size()) {
            fail(ErrorCode::bad_params, "toy lambda schedule has " + std::to_string(m_config.lambda_schedule.size()) +
                                            " entries but " + std::to_string(steps) + " steps were requested");
        }
        return m_config.lambda_schedule[static_cast<std::size_t>(i)];
    }
    return i < steps - 2 ? 0.3 : 0.05;
}

PromptEmbedding ToyBackend::embed(std::string_view text) const {
    const auto seed = fingerprint64({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
    const LatentTensor raw = sample_gaussian(Seed{seed}, Shape{static_cast<int>(kEmbeddingSize), 1, 1});
    double norm = 0.0;
    for (float v : raw.data()) norm += static_cast<double>(v) * v;
    norm = std::sqrt(norm);
    PromptEmbedding out;
    out.text = std::string(text);
    out.vector.reserve(kEmbeddingSize);
    for (float v : raw.data()) out.vector.push_back(static_cast<float>(v / norm));
    return out;
}

LatentTensor ToyBackend::target(const PromptEmbedding& prompt) const {
    const std::span<const std::uint8_t> bytes{reinterpret_cast<const std::uint8_t*>(prompt.vector.data()),
                                              prompt.vector.size() * sizeof(float)};
    LatentTensor t = sample_gaussian(Seed{fingerprint64(bytes)}, m_config.latent_shape);
    if (m_config.target_scale != 1.0) t = scale(t, static_cast<float>(m_config.target_scale));
    return t;
}

LatentTensor ToyBackend::step_impl(const LatentTensor& z, const PromptEmbedding& prompt, StepIndex i, int steps,
                                   Seed /*seed: only Z_0 depends on it*/) const {
    const float l = static_cast<float>(lambda(i, steps));
    const LatentTensor t = target(prompt);
    LatentTensor out(z.shape());
    auto pz = z.data();
    auto pt = t.data();
    auto po = out.data();
    for (std::size_t k = 0; k < po.size(); ++k) po[k] = pz[k] + l * (pt[k] - pz[k]);
    return out;
}

std::vector<LatentTensor> ToyBackend::invert_impl(const LatentTensor& final_latent, const PromptEmbedding& prompt,
                                                  int steps) const {
    std::vector<double> lambdas(static_cast<std::size_t>(steps));
    for (StepIndex i = 0; i < steps; ++i) {
        lambdas[static_cast<std::size_t>(i)] = lambda(i, steps);
        if (lambdas[static_cast<std::size_t>(i)] >= 1.0) {
            fail(ErrorCode::bad_params,
                 "toy schedule is not invertible: lambda_" + std::to_string(i) + " = 1 collapses the step");
        }
    }
    const LatentTensor t = target(prompt);
    std::vector<LatentTensor> latents(static_cast<std::size_t>(steps) + 1);
    latents.back() = final_latent;
    for (StepIndex i = steps - 1; i >= 0; --i) {
        // Same float-rounded factor the forward step applies.
        const double l = static_cast<float>(lambdas[static_cast<std::size_t>(i)]);
        const LatentTensor& next = latents[static_cast<std::size_t>(i) + 1];
        LatentTensor prev(next.shape());
        auto pn = next.data();
        auto pt = t.data();
        auto pp = prev.data();
        for (std::size_t k = 0; k < pp.size(); ++k) {
            pp[k] = static_cast<float>((static_cast<double>(pn[k]) - l * pt[k]) / (1.0 - l));
        }
        latents[static_cast<std::size_t>(i)] = std::move(prev);
        count_inversion();
    }
    return latents;
}

PixelImage ToyBackend::decode(const LatentTensor& z) const {
    check_latent(z, "decode");
    const Shape& s = z.shape();
    PixelImage img(s.height, s.width);
    for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
            for (int ch = 0; ch < 3; ++ch) {
                const float v = z.at(std::min(ch, s.channels - 1), y, x);
                const double px = std::clamp(127.5 + 127.5 * static_cast<double>(v), 0.0, 255.0);
                img.at(y, x, ch) = static_cast<std::uint8_t>(std::lround(px));
            }
        }
    }
    return img;
}

LatentTensor ToyBackend::encode(const PixelImage& image) const {
    const Shape& s = m_config.latent_shape;
    if (image.height() != s.height || image.width() != s.width) {
        fail(ErrorCode::bad_shape, "image " + std::to_string(image.height()) + "x" + std::to_string(image.width()) +
                                       " does not match toy latent grid " + std::to_string(s.height) + "x" +
                                       std::to_string(s.width));
    }
    LatentTensor z(s, 0.0f);
    for (int c = 0; c < std::min(3, s.channels); ++c) {
        for (int y = 0; y < s.height; ++y) {
            for (int x = 0; x < s.width; ++x) {
                z.at(c, y, x) = static_cast<float>(image.at(y, x, c) / 127.5 - 1.0);
            }
        }
    }
    return z;
}

// --- LDM adapter -------------------------------------------------------------

LdmAdapter::LdmAdapter(std::string model_ref, std::shared_ptr<LdmRuntime> runtime) : m_runtime(std::move(runtime)) {
    if (!m_runtime) fail(ErrorCode::backend_unavailable, "no runtime for ldm:" + model_ref);
    m_descriptor.id = "ldm:" + model_ref;
    m_descriptor.latent_shape = m_runtime->latent_shape();
    m_descriptor.spatial_factor = m_runtime->spatial_factor();
    m_descriptor.supports_inversion = m_runtime->supports_inversion();
    m_descriptor.supports_exact_inversion = false;
    m_descriptor.default_steps = m_runtime->default_steps();
}

PromptEmbedding LdmAdapter::embed(std::string_view text) const {
    std::lock_guard lock(m_mutex);
    return PromptEmbedding{std::string(text), m_runtime->encode_prompt(text)};
}

PixelImage LdmAdapter::decode(const LatentTensor& z) const {
    check_latent(z, "decode");
    std::lock_guard lock(m_mutex);
    return m_runtime->vae_decode(z);
}

LatentTensor LdmAdapter::encode(const PixelImage& image) const {
    if (image.height() != m_descriptor.pixel_height() || image.width() != m_descriptor.pixel_width()) {
        fail(ErrorCode::bad_shape, "image does not match the model's pixel resolution");
    }
    std::lock_guard lock(m_mutex);
    return m_runtime->vae_encode(image);
}

LatentTensor LdmAdapter::initial_noise(Seed seed) const {
    std::lock_guard lock(m_mutex);
    return m_runtime->initial_noise(seed, m_descriptor.latent_shape);
}

LatentTensor LdmAdapter::step_impl(const LatentTensor& z, const PromptEmbedding& prompt, StepIndex i, int steps,
                                   Seed seed) const {
    std::lock_guard lock(m_mutex);
    return m_runtime->scheduler_step(z, prompt.vector, i, steps, seed);
}

std::vector<LatentTensor> LdmAdapter::invert_impl(const LatentTensor& final_latent, const PromptEmbedding& prompt,
                                                  int steps) const {
    std::lock_guard lock(m_mutex);
    auto latents = m_runtime->invert(final_latent, prompt.vector, steps);
    count_inversion(static_cast<std::uint64_t>(steps));
    return latents;
}

// --- registry ----------------------------------------------------------------

namespace {

std::mutex& registry_mutex() {
    static std::mutex m;
    return m;
}

LdmRuntimeFactory& registry() {
    static LdmRuntimeFactory factory;
    return factory;
}

}  // namespace

void register_ldm_runtime(LdmRuntimeFactory factory) {
    std::lock_guard lock(registry_mutex());
    registry() = std::move(factory);
}

std::shared_ptr<Backend> make_backend(const std::string& id, const ToyBackendConfig& toy) {
    if (id == "toy") return std::make_shared<ToyBackend>(toy);
    if (id.rfind("ldm:", 0) == 0) {
        const std::string ref = id.substr(4);
        if (ref.empty()) fail(ErrorCode::backend_unavailable, "ldm backend id needs a model reference");
        LdmRuntimeFactory factory;
        {
            std::lock_guard lock(registry_mutex());
            factory = registry();
        }
        if (!factory) {
            fail(ErrorCode::backend_unavailable,
                 "backend '" + id + "' requested but no latent-diffusion runtime is linked into this build");
        }
        return std::make_shared<LdmAdapter>(ref, factory(ref));
    }
    fail(ErrorCode::backend_unavailable, "unknown backend id '" + id + "'");
}

}  // namespace ldb
