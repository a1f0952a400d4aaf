// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#include "ldb/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "ldb/error.hpp"

namespace ldb {

namespace {

void require_same_dims(const PixelImage& a, const PixelImage& b) {
    if (a.height() != b.height() || a.width() != b.width()) {
        fail(ErrorCode::bad_shape, "image shape mismatch: " + std::to_string(a.height()) + "x" +
                                       std::to_string(a.width()) + " vs " + std::to_string(b.height()) +
                                       "x" + std::to_string(b.width()));
    }
}

void require_mask_dims(const PixelImage& a, const Mask& m) {
    if (a.height() != m.height() || a.width() != m.width()) {
        fail(ErrorCode::bad_shape, "mask " + std::to_string(m.height()) + "x" + std::to_string(m.width()) +
                                       " does not cover image " + std::to_string(a.height()) + "x" +
                                       std::to_string(a.width()));
    }
}

bool in_region(const Mask* mask, std::size_t pixel, Region region) {
    if (mask == nullptr || region == Region::all) return true;
    const bool masked = mask->pixel()[pixel] >= 0.5f;
    return region == Region::masked ? masked : !masked;
}

struct SquaredError {
    double sum = 0.0;
    std::size_t samples = 0;
};

SquaredError squared_error(const PixelImage& a, const PixelImage& b, const Mask* mask, Region region) {
    require_same_dims(a, b);
    if (mask != nullptr) require_mask_dims(a, *mask);
    SquaredError acc;
    const std::size_t pixels = static_cast<std::size_t>(a.height()) * a.width();
    auto pa = a.data();
    auto pb = b.data();
    for (std::size_t p = 0; p < pixels; ++p) {
        if (!in_region(mask, p, region)) continue;
        for (int ch = 0; ch < 3; ++ch) {
            const double d = static_cast<double>(pa[p * 3 + ch]) - pb[p * 3 + ch];
            acc.sum += d * d;
        }
        acc.samples += 3;
    }
    return acc;
}

std::vector<std::uint8_t> write_png(png_image& image, const void* pixels) {
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels, 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        fail(ErrorCode::bad_params, "png encode failed: " + msg);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels, 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        fail(ErrorCode::bad_params, "png encode failed: " + msg);
    }
    out.resize(size);
    return out;
}

std::vector<std::uint8_t> read_png(std::span<const std::uint8_t> bytes, png_uint_32 format, int& height,
                                   int& width) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        fail(ErrorCode::bad_params, std::string("png decode failed: ") + image.message);
    }
    image.format = format;
    std::vector<std::uint8_t> out(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, out.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        fail(ErrorCode::bad_params, "png decode failed: " + msg);
    }
    height = static_cast<int>(image.height);
    width = static_cast<int>(image.width);
    return out;
}

}  // namespace

PixelImage::PixelImage(int height, int width, std::uint8_t fill)
    : m_height(height), m_width(width), m_rgb(static_cast<std::size_t>(height) * width * 3, fill) {
    if (height <= 0 || width <= 0) fail(ErrorCode::bad_shape, "image dimensions must be positive");
}

PixelImage::PixelImage(int height, int width, std::vector<std::uint8_t> rgb)
    : m_height(height), m_width(width), m_rgb(std::move(rgb)) {
    if (height <= 0 || width <= 0) fail(ErrorCode::bad_shape, "image dimensions must be positive");
    if (m_rgb.size() != static_cast<std::size_t>(height) * width * 3) {
        fail(ErrorCode::bad_shape, "rgb buffer length does not match image dimensions");
    }
}

MaskField downsample_mask(int height, int width, std::span<const float> pixel, int factor) {
    if (factor < 1) fail(ErrorCode::bad_params, "spatial factor must be >= 1");
    if (height % factor != 0 || width % factor != 0) {
        fail(ErrorCode::bad_shape, "mask " + std::to_string(height) + "x" + std::to_string(width) +
                                       " is not divisible by spatial factor " + std::to_string(factor));
    }
    MaskField out;
    out.height = height / factor;
    out.width = width / factor;
    out.values.assign(static_cast<std::size_t>(out.height) * out.width, 0.0f);
    if (factor == 1) {
        std::copy(pixel.begin(), pixel.end(), out.values.begin());
        return out;
    }
    const double area = static_cast<double>(factor) * factor;
    for (int ly = 0; ly < out.height; ++ly) {
        for (int lx = 0; lx < out.width; ++lx) {
            double sum = 0.0;
            for (int dy = 0; dy < factor; ++dy) {
                const std::size_t row = static_cast<std::size_t>(ly * factor + dy) * width;
                for (int dx = 0; dx < factor; ++dx) sum += pixel[row + lx * factor + dx];
            }
            out.values[static_cast<std::size_t>(ly) * out.width + lx] =
                std::clamp(static_cast<float>(sum / area), 0.0f, 1.0f);
        }
    }
    return out;
}

Mask::Mask(int height, int width, std::vector<float> pixel, int spatial_factor)
    : m_height(height), m_width(width), m_factor(spatial_factor), m_pixel(std::move(pixel)) {
    if (height <= 0 || width <= 0) fail(ErrorCode::bad_shape, "mask dimensions must be positive");
    if (m_pixel.size() != static_cast<std::size_t>(height) * width) {
        fail(ErrorCode::bad_shape, "mask buffer length does not match dimensions");
    }
    for (float& v : m_pixel) {
        v = std::isfinite(v) ? std::clamp(v, 0.0f, 1.0f) : 0.0f;
        if (v > 0.0f) ++m_coverage;
    }
    m_latent = downsample_mask(height, width, m_pixel, spatial_factor);
}

Mask Mask::filled(int height, int width, float value, int spatial_factor) {
    return Mask(height, width, std::vector<float>(static_cast<std::size_t>(height) * width, value),
                spatial_factor);
}

Mask Mask::box(int height, int width, int center_x, int center_y, int size, int spatial_factor) {
    if (center_x < 0 || center_y < 0 || center_x >= width || center_y >= height) {
        fail(ErrorCode::bad_params, "box center (" + std::to_string(center_x) + ", " +
                                        std::to_string(center_y) + ") lies outside the " +
                                        std::to_string(width) + "x" + std::to_string(height) + " canvas");
    }
    if (size < 0) fail(ErrorCode::bad_params, "box size must be non-negative");
    std::vector<float> pixel(static_cast<std::size_t>(height) * width, 0.0f);
    const int y0 = std::max(0, center_y - size);
    const int y1 = std::min(height - 1, center_y + size);
    const int x0 = std::max(0, center_x - size);
    const int x1 = std::min(width - 1, center_x + size);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) pixel[static_cast<std::size_t>(y) * width + x] = 1.0f;
    }
    return Mask(height, width, std::move(pixel), spatial_factor);
}

double psnr(const PixelImage& a, const PixelImage& b, const Mask* region) {
    const SquaredError err = squared_error(a, b, region, region ? Region::unmasked : Region::all);
    if (err.samples == 0) fail(ErrorCode::bad_params, "psnr: evaluation region is empty");
    if (err.sum == 0.0) return std::numeric_limits<double>::infinity();
    const double mse_value = err.sum / static_cast<double>(err.samples);
    return 10.0 * std::log10(255.0 * 255.0 / mse_value);
}

std::optional<double> mse(const PixelImage& a, const PixelImage& b, const Mask* mask, Region region) {
    const SquaredError err = squared_error(a, b, mask, region);
    if (err.samples == 0) return std::nullopt;
    return err.sum / static_cast<double>(err.samples);
}

std::vector<std::uint8_t> encode_png(const PixelImage& img) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = PNG_FORMAT_RGB;
    return write_png(image, img.data().data());
}

PixelImage decode_png(std::span<const std::uint8_t> bytes) {
    int h = 0;
    int w = 0;
    auto rgb = read_png(bytes, PNG_FORMAT_RGB, h, w);
    return PixelImage(h, w, std::move(rgb));
}

std::vector<std::uint8_t> encode_mask_png(const Mask& mask) {
    std::vector<std::uint8_t> gray(mask.pixel().size());
    std::transform(mask.pixel().begin(), mask.pixel().end(), gray.begin(), [](float v) {
        return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
    });
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(mask.width());
    image.height = static_cast<png_uint_32>(mask.height());
    image.format = PNG_FORMAT_GRAY;
    return write_png(image, gray.data());
}

Mask decode_mask_png(std::span<const std::uint8_t> bytes, int spatial_factor) {
    int h = 0;
    int w = 0;
    auto gray = read_png(bytes, PNG_FORMAT_GRAY, h, w);
    std::vector<float> pixel(gray.size());
    std::transform(gray.begin(), gray.end(), pixel.begin(),
                   [](std::uint8_t v) { return static_cast<float>(v) / 255.0f; });
    return Mask(h, w, std::move(pixel), spatial_factor);
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::bad_params, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::bad_params, "failed writing " + path.string());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::not_found, "cannot open " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace ldb
