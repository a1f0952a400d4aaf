// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ldb/image.hpp"
#include "ldb/latent.hpp"

namespace ldb {

struct PromptEmbedding {
    std::string text;
    std::vector<float> vector;

    friend bool operator==(const PromptEmbedding&, const PromptEmbedding&) = default;
};

struct BackendDescriptor {
    std::string id;
    Shape latent_shape;
    int spatial_factor = 1;
    bool supports_inversion = true;
    bool supports_exact_inversion = false;
    int default_steps = 25;

    int pixel_height() const noexcept { return latent_shape.height * spatial_factor; }
    int pixel_width() const noexcept { return latent_shape.width * spatial_factor; }
};

/// Denoising sequence Z_0 .. Z_N, index i at noise level sigma_i (decreasing).
struct Trajectory {
    std::vector<LatentTensor> latents;
    PromptEmbedding prompt;
    Seed seed;
    int steps = 0;

    const LatentTensor& final_latent() const { return latents.back(); }
};

/// Minimum trajectory length: room for r < b < N with b = N - 2.
inline constexpr int kMinSteps = 3;

/// Iterative denoiser. Implementations supply one step, inversion and the
/// latent/pixel codec; the base class validates arguments and counts every
/// denoiser invocation at this boundary.
class Backend {
public:
    virtual ~Backend() = default;

    virtual const BackendDescriptor& descriptor() const = 0;
    virtual PromptEmbedding embed(std::string_view text) const = 0;
    virtual PixelImage decode(const LatentTensor& z) const = 0;
    virtual LatentTensor encode(const PixelImage& image) const = 0;

    /// One update Z_i -> Z_{i+1} of an N-step schedule.
    LatentTensor denoise_step(const LatentTensor& z, const PromptEmbedding& prompt, StepIndex i, int steps,
                              Seed seed) const;

    /// Z_0 = sample_gaussian(seed), then N denoising steps.
    Trajectory generate(Seed seed, const PromptEmbedding& prompt, int steps) const;

    /// N denoising steps from a given starting latent.
    Trajectory denoise_from(LatentTensor start, const PromptEmbedding& prompt, int steps, Seed seed) const;

    /// Trajectory whose forward re-generation reproduces `final_latent`.
    Trajectory invert(const LatentTensor& final_latent, const PromptEmbedding& prompt, int steps) const;

    std::uint64_t denoiser_calls() const noexcept { return m_denoiser_calls.load(); }
    std::uint64_t inversion_calls() const noexcept { return m_inversion_calls.load(); }

protected:
    virtual LatentTensor initial_noise(Seed seed) const;
    virtual LatentTensor step_impl(const LatentTensor& z, const PromptEmbedding& prompt, StepIndex i, int steps,
                                   Seed seed) const = 0;
    /// Returns Z_0..Z_N. Implementations call count_inversion() per model evaluation.
    virtual std::vector<LatentTensor> invert_impl(const LatentTensor& final_latent, const PromptEmbedding& prompt,
                                                  int steps) const = 0;

    void count_inversion(std::uint64_t calls = 1) const noexcept { m_inversion_calls += calls; }
    void check_steps(int steps) const;
    void check_latent(const LatentTensor& z, const char* what) const;

private:
    mutable std::atomic<std::uint64_t> m_denoiser_calls{0};
    mutable std::atomic<std::uint64_t> m_inversion_calls{0};
};

struct ToyBackendConfig {
    Shape latent_shape{4, 16, 16};
    /// Explicit per-step contraction factors. Empty selects the default rule:
    /// 0.3 for i < N - 2 and 0.05 for the final two steps.
    std::vector<double> lambda_schedule;
    double target_scale = 1.0;
    int default_steps = 25;
};

/// Deterministic affine denoiser used as the verification oracle.
///
/// Each step contracts towards a prompt-dependent target:
///   Z_{i+1} = Z_i + lambda_i * (T(p) - Z_i)
/// so inversion is exact whenever every lambda_i < 1. The target T(p) is a
/// Gaussian field seeded by a hash of the prompt vector, times target_scale.
/// Latent channels 0..2 decode to RGB through 127.5 * (1 + z); remaining
/// channels are latent-only and encode back as zero.
class ToyBackend final : public Backend {
public:
    explicit ToyBackend(ToyBackendConfig config = {});

    const BackendDescriptor& descriptor() const override { return m_descriptor; }
    const ToyBackendConfig& config() const noexcept { return m_config; }

    PromptEmbedding embed(std::string_view text) const override;
    PixelImage decode(const LatentTensor& z) const override;
    LatentTensor encode(const PixelImage& image) const override;

    double lambda(StepIndex i, int steps) const;
    LatentTensor target(const PromptEmbedding& prompt) const;

    static constexpr std::size_t kEmbeddingSize = 64;

protected:
    LatentTensor step_impl(const LatentTensor& z, const PromptEmbedding& prompt, StepIndex i, int steps,
                           Seed seed) const override;
    std::vector<LatentTensor> invert_impl(const LatentTensor& final_latent, const PromptEmbedding& prompt,
                                          int steps) const override;

private:
    ToyBackendConfig m_config;
    BackendDescriptor m_descriptor;
};

/// Runtime hooks a real latent-diffusion model must provide. The adapter
/// forwards to these one-for-one; scheduler and VAE choices live entirely on
/// the runtime side.
class LdmRuntime {
public:
    virtual ~LdmRuntime() = default;

    virtual Shape latent_shape() const = 0;
    virtual int spatial_factor() const = 0;
    virtual int default_steps() const { return 25; }
    virtual bool supports_inversion() const { return true; }

    virtual std::vector<float> encode_prompt(std::string_view text) = 0;
    virtual LatentTensor initial_noise(Seed seed, const Shape& shape) { return sample_gaussian(seed, shape); }
    virtual LatentTensor scheduler_step(const LatentTensor& z, std::span<const float> condition, StepIndex i,
                                        int steps, Seed seed) = 0;
    /// Returns Z_0..Z_N such that stepping forward approximately reproduces the input.
    virtual std::vector<LatentTensor> invert(const LatentTensor& final_latent, std::span<const float> condition,
                                             int steps) = 0;
    virtual PixelImage vae_decode(const LatentTensor& z) = 0;
    virtual LatentTensor vae_encode(const PixelImage& image) = 0;
};

/// Backend over an external latent-diffusion runtime. Calls are serialized.
class LdmAdapter final : public Backend {
public:
    LdmAdapter(std::string model_ref, std::shared_ptr<LdmRuntime> runtime);

    const BackendDescriptor& descriptor() const override { return m_descriptor; }
    PromptEmbedding embed(std::string_view text) const override;
    PixelImage decode(const LatentTensor& z) const override;
    LatentTensor encode(const PixelImage& image) const override;

protected:
    LatentTensor initial_noise(Seed seed) const override;
    LatentTensor step_impl(const LatentTensor& z, const PromptEmbedding& prompt, StepIndex i, int steps,
                           Seed seed) const override;
    std::vector<LatentTensor> invert_impl(const LatentTensor& final_latent, const PromptEmbedding& prompt,
                                          int steps) const override;

private:
    std::shared_ptr<LdmRuntime> m_runtime;
    BackendDescriptor m_descriptor;
    mutable std::mutex m_mutex;
};

using LdmRuntimeFactory = std::function<std::shared_ptr<LdmRuntime>(const std::string& model_ref)>;

/// Installs the process-wide factory used for "ldm:<model-ref>" ids.
void register_ldm_runtime(LdmRuntimeFactory factory);

/// "toy" or "ldm:<model-ref>". Unknown ids and ldm ids without a registered
/// runtime throw backend_unavailable.
std::shared_ptr<Backend> make_backend(const std::string& id, const ToyBackendConfig& toy = {});

}  // namespace ldb
