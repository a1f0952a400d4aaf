// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ldb/latent.hpp"

namespace ldb {

/// 8-bit RGB image, interleaved HWC.
class PixelImage {
public:
    PixelImage() = default;
    PixelImage(int height, int width, std::uint8_t fill = 0);
    PixelImage(int height, int width, std::vector<std::uint8_t> rgb);

    int height() const noexcept { return m_height; }
    int width() const noexcept { return m_width; }
    bool empty() const noexcept { return m_rgb.empty(); }

    std::span<std::uint8_t> data() noexcept { return m_rgb; }
    std::span<const std::uint8_t> data() const noexcept { return m_rgb; }

    std::uint8_t& at(int y, int x, int ch) noexcept { return m_rgb[offset(y, x, ch)]; }
    std::uint8_t at(int y, int x, int ch) const noexcept { return m_rgb[offset(y, x, ch)]; }

    friend bool operator==(const PixelImage&, const PixelImage&) = default;

private:
    std::size_t offset(int y, int x, int ch) const noexcept {
        return (static_cast<std::size_t>(y) * m_width + x) * 3 + ch;
    }

    int m_height = 0;
    int m_width = 0;
    std::vector<std::uint8_t> m_rgb;
};

/// Edit region in pixel space with its latent-space counterpart.
///
/// Pixel weights are clamped to [0,1]. The latent field is the f x f block
/// mean of the pixel field, where f is the backend's spatial factor.
class Mask {
public:
    Mask() = default;
    Mask(int height, int width, std::vector<float> pixel, int spatial_factor);

    static Mask filled(int height, int width, float value, int spatial_factor);

    /// Square of half-extent `size` centered on (center_x, center_y), clipped
    /// to the canvas. Throws bad_params if the center lies off-canvas.
    static Mask box(int height, int width, int center_x, int center_y, int size, int spatial_factor);

    int height() const noexcept { return m_height; }
    int width() const noexcept { return m_width; }
    int spatial_factor() const noexcept { return m_factor; }
    const std::vector<float>& pixel() const noexcept { return m_pixel; }
    const MaskField& latent() const noexcept { return m_latent; }

    /// Number of pixel entries strictly greater than zero.
    std::size_t coverage() const noexcept { return m_coverage; }
    bool empty() const noexcept { return m_coverage == 0; }

    float at(int y, int x) const noexcept { return m_pixel[static_cast<std::size_t>(y) * m_width + x]; }

    friend bool operator==(const Mask& a, const Mask& b) {
        return a.m_height == b.m_height && a.m_width == b.m_width && a.m_factor == b.m_factor &&
               a.m_pixel == b.m_pixel;
    }

private:
    int m_height = 0;
    int m_width = 0;
    int m_factor = 1;
    std::vector<float> m_pixel;
    MaskField m_latent;
    std::size_t m_coverage = 0;
};

/// Block-mean downsampling of an H x W pixel field by an integer factor.
/// H and W must be divisible by `factor`.
MaskField downsample_mask(int height, int width, std::span<const float> pixel, int factor);

/// Peak signal-to-noise ratio with a 255 peak. Returns +infinity for
/// identical inputs. When `region` is given only pixels whose mask weight is
/// below 0.5 (the untouched background) are scored.
double psnr(const PixelImage& a, const PixelImage& b, const Mask* region = nullptr);

inline bool is_infinite_psnr(double value) noexcept { return value == std::numeric_limits<double>::infinity(); }

enum class Region { masked, unmasked, all };

/// Mean squared error over the chosen region (mask >= 0.5 is "masked").
/// Returns nullopt when the region contains no pixels.
std::optional<double> mse(const PixelImage& a, const PixelImage& b, const Mask* mask, Region region);

// PNG codec. RGB images are 8-bit truecolor; masks are 8-bit grayscale with
// weight = value / 255.
std::vector<std::uint8_t> encode_png(const PixelImage& image);
PixelImage decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_mask_png(const Mask& mask);
Mask decode_mask_png(std::span<const std::uint8_t> bytes, int spatial_factor);

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace ldb
