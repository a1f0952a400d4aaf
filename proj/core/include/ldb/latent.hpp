// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ldb {

/// Latent layout: channels x height x width, row-major within a channel.
struct Shape {
    int channels = 0;
    int height = 0;
    int width = 0;

    std::size_t count() const noexcept {
        return static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) *
               static_cast<std::size_t>(width);
    }
    std::size_t plane() const noexcept {
        return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    }
    bool valid() const noexcept { return channels > 0 && height > 0 && width > 0; }

    friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& shape);

struct Seed {
    std::uint64_t value = 0;

    friend bool operator==(const Seed&, const Seed&) = default;
    friend auto operator<=>(const Seed&, const Seed&) = default;
};

/// Latent step index within a trajectory of N denoising steps (0..N).
using StepIndex = int;

class LatentTensor {
public:
    LatentTensor() = default;
    explicit LatentTensor(Shape shape, float fill = 0.0f);
    LatentTensor(Shape shape, std::vector<float> data);

    const Shape& shape() const noexcept { return m_shape; }
    std::size_t size() const noexcept { return m_data.size(); }
    bool empty() const noexcept { return m_data.empty(); }

    std::span<float> data() noexcept { return m_data; }
    std::span<const float> data() const noexcept { return m_data; }

    float& at(int c, int y, int x) noexcept { return m_data[index(c, y, x)]; }
    float at(int c, int y, int x) const noexcept { return m_data[index(c, y, x)]; }

    bool all_finite() const noexcept;

    friend bool operator==(const LatentTensor&, const LatentTensor&) = default;

private:
    std::size_t index(int c, int y, int x) const noexcept {
        return (static_cast<std::size_t>(c) * m_shape.height + y) * m_shape.width + x;
    }

    Shape m_shape;
    std::vector<float> m_data;
};

/// Spatial h x w field broadcast across latent channels (the latent-space mask).
struct MaskField {
    int height = 0;
    int width = 0;
    std::vector<float> values;

    float at(int y, int x) const noexcept {
        return values[static_cast<std::size_t>(y) * width + x];
    }
};

/// I.i.d. standard normal draws keyed by (seed, shape).
///
/// The stream comes from std::mt19937_64 seeded with the seed value and fed
/// through std::normal_distribution<double>, then narrowed to float. Element
/// order is the tensor's row-major order. The stream is stable across runs of
/// one build; it is not meant to match other implementations.
LatentTensor sample_gaussian(Seed seed, const Shape& shape);

/// Population variance over all elements as one flat population.
double variance(const LatentTensor& z);

/// Population covariance over flattened elements. Shapes must match.
double covariance(const LatentTensor& a, const LatentTensor& b);

double mean(const LatentTensor& z);

/// out = a * m + b * (1 - m), with m broadcast over channels.
LatentTensor blend(const LatentTensor& a, const LatentTensor& b, const MaskField& m);

LatentTensor add(const LatentTensor& a, const LatentTensor& b);
LatentTensor scale(const LatentTensor& a, float factor);

/// Largest absolute elementwise difference. Shapes must match.
double max_abs_diff(const LatentTensor& a, const LatentTensor& b);

/// Largest absolute difference restricted to cells where the mask is zero.
double max_abs_diff_outside(const LatentTensor& a, const LatentTensor& b, const MaskField& m);

/// Serialized blob: 16-byte little-endian header then row-major float32 data.
///   bytes 0-3  magic "LDBL"
///   byte  4    format version (1)
///   byte  5    dtype (0 = float32)
///   bytes 6-11 channels, height, width as uint16
///   bytes 12-15 reserved, zero
inline constexpr std::size_t kLatentHeaderBytes = 16;
inline constexpr std::uint8_t kLatentFormatVersion = 1;
inline constexpr std::uint8_t kLatentDtypeFloat32 = 0;

std::vector<std::uint8_t> serialize_latent(const LatentTensor& z);
LatentTensor deserialize_latent(std::span<const std::uint8_t> bytes);

}  // namespace ldb
