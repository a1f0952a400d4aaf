// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#include "ldb/latent.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include "ldb/error.hpp"

namespace ldb {

namespace {

void require_same_shape(const LatentTensor& a, const LatentTensor& b, const char* what) {
    if (a.shape() != b.shape()) {
        fail(ErrorCode::bad_shape, std::string(what) + ": shape mismatch " + to_string(a.shape()) +
                                       " vs " + to_string(b.shape()));
    }
}

void require_mask_fits(const LatentTensor& z, const MaskField& m, const char* what) {
    if (m.height != z.shape().height || m.width != z.shape().width ||
        m.values.size() != z.shape().plane()) {
        fail(ErrorCode::bad_shape, std::string(what) + ": mask field " + std::to_string(m.height) +
                                       "x" + std::to_string(m.width) + " does not match latent " +
                                       to_string(z.shape()));
    }
}

void put_u16(std::uint8_t* out, std::uint16_t v) {
    out[0] = static_cast<std::uint8_t>(v & 0xff);
    out[1] = static_cast<std::uint8_t>(v >> 8);
}

std::uint16_t get_u16(const std::uint8_t* in) {
    return static_cast<std::uint16_t>(in[0] | (in[1] << 8));
}

}  // namespace

std::string to_string(const Shape& shape) {
    std::ostringstream os;
    os << shape.channels << "x" << shape.height << "x" << shape.width;
    return os.str();
}

namespace {

// Runs before any allocation so a negative dimension never reaches count().
const Shape& checked(const Shape& shape) {
    if (!shape.valid()) {
        fail(ErrorCode::bad_shape, "latent shape must have positive dimensions, got " + to_string(shape));
    }
    return shape;
}

}  // namespace

LatentTensor::LatentTensor(Shape shape, float fill) : m_shape(checked(shape)), m_data(shape.count(), fill) {}

LatentTensor::LatentTensor(Shape shape, std::vector<float> data)
    : m_shape(checked(shape)), m_data(std::move(data)) {
    if (m_data.size() != shape.count()) {
        fail(ErrorCode::bad_shape, "latent data length " + std::to_string(m_data.size()) +
                                       " does not match shape " + to_string(shape));
    }
}

bool LatentTensor::all_finite() const noexcept {
    return std::all_of(m_data.begin(), m_data.end(), [](float v) { return std::isfinite(v); });
}

LatentTensor sample_gaussian(Seed seed, const Shape& shape) {
    LatentTensor out(shape);
    std::mt19937_64 engine(seed.value);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (float& v : out.data()) {
        v = static_cast<float>(normal(engine));
    }
    return out;
}

double mean(const LatentTensor& z) {
    if (z.empty()) return 0.0;
    double sum = 0.0;
    for (float v : z.data()) sum += v;
    return sum / static_cast<double>(z.size());
}

double variance(const LatentTensor& z) {
    return covariance(z, z);
}

double covariance(const LatentTensor& a, const LatentTensor& b) {
    require_same_shape(a, b, "covariance");
    if (a.empty()) return 0.0;
    const double mean_a = mean(a);
    const double mean_b = mean(b);
    auto da = a.data();
    auto db = b.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) {
        acc += (static_cast<double>(da[i]) - mean_a) * (static_cast<double>(db[i]) - mean_b);
    }
    return acc / static_cast<double>(da.size());
}

LatentTensor blend(const LatentTensor& a, const LatentTensor& b, const MaskField& m) {
    require_same_shape(a, b, "blend");
    require_mask_fits(a, m, "blend");
    LatentTensor out(a.shape());
    const std::size_t plane = a.shape().plane();
    auto pa = a.data();
    auto pb = b.data();
    auto po = out.data();
    for (std::size_t i = 0; i < po.size(); ++i) {
        const float w = m.values[i % plane];
        // Hard mask values copy through so unmasked cells stay bit-identical.
        if (w == 0.0f) {
            po[i] = pb[i];
        } else if (w == 1.0f) {
            po[i] = pa[i];
        } else {
            po[i] = pa[i] * w + pb[i] * (1.0f - w);
        }
    }
    return out;
}

LatentTensor add(const LatentTensor& a, const LatentTensor& b) {
    require_same_shape(a, b, "add");
    LatentTensor out(a.shape());
    auto pa = a.data();
    auto pb = b.data();
    auto po = out.data();
    for (std::size_t i = 0; i < po.size(); ++i) po[i] = pa[i] + pb[i];
    return out;
}

LatentTensor scale(const LatentTensor& a, float factor) {
    LatentTensor out(a.shape());
    auto pa = a.data();
    auto po = out.data();
    for (std::size_t i = 0; i < po.size(); ++i) po[i] = pa[i] * factor;
    return out;
}

double max_abs_diff(const LatentTensor& a, const LatentTensor& b) {
    require_same_shape(a, b, "max_abs_diff");
    double worst = 0.0;
    auto pa = a.data();
    auto pb = b.data();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        worst = std::max(worst, std::abs(static_cast<double>(pa[i]) - pb[i]));
    }
    return worst;
}

double max_abs_diff_outside(const LatentTensor& a, const LatentTensor& b, const MaskField& m) {
    require_same_shape(a, b, "max_abs_diff_outside");
    require_mask_fits(a, m, "max_abs_diff_outside");
    const std::size_t plane = a.shape().plane();
    double worst = 0.0;
    auto pa = a.data();
    auto pb = b.data();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        if (m.values[i % plane] != 0.0f) continue;
        worst = std::max(worst, std::abs(static_cast<double>(pa[i]) - pb[i]));
    }
    return worst;
}

std::vector<std::uint8_t> serialize_latent(const LatentTensor& z) {
    const Shape& s = z.shape();
    if (s.channels > 0xffff || s.height > 0xffff || s.width > 0xffff) {
        fail(ErrorCode::bad_shape, "latent dimensions exceed 16-bit blob header: " + to_string(s));
    }
    std::vector<std::uint8_t> out(kLatentHeaderBytes + z.size() * sizeof(float), 0);
    std::memcpy(out.data(), "LDBL", 4);
    out[4] = kLatentFormatVersion;
    out[5] = kLatentDtypeFloat32;
    put_u16(&out[6], static_cast<std::uint16_t>(s.channels));
    put_u16(&out[8], static_cast<std::uint16_t>(s.height));
    put_u16(&out[10], static_cast<std::uint16_t>(s.width));

    std::uint8_t* dst = out.data() + kLatentHeaderBytes;
    for (float v : z.data()) {
        const auto bits = std::bit_cast<std::uint32_t>(v);
        dst[0] = static_cast<std::uint8_t>(bits);
        dst[1] = static_cast<std::uint8_t>(bits >> 8);
        dst[2] = static_cast<std::uint8_t>(bits >> 16);
        dst[3] = static_cast<std::uint8_t>(bits >> 24);
        dst += 4;
    }
    return out;
}

LatentTensor deserialize_latent(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kLatentHeaderBytes || std::memcmp(bytes.data(), "LDBL", 4) != 0) {
        fail(ErrorCode::bad_params, "not a latent blob (missing LDBL header)");
    }
    if (bytes[4] != kLatentFormatVersion) {
        fail(ErrorCode::bad_params, "unsupported latent blob version " + std::to_string(bytes[4]));
    }
    if (bytes[5] != kLatentDtypeFloat32) {
        fail(ErrorCode::bad_params, "unsupported latent blob dtype " + std::to_string(bytes[5]));
    }
    const Shape shape{get_u16(&bytes[6]), get_u16(&bytes[8]), get_u16(&bytes[10])};
    if (!shape.valid()) {
        fail(ErrorCode::bad_shape, "latent blob has a zero dimension: " + to_string(shape));
    }
    if (bytes.size() != kLatentHeaderBytes + shape.count() * sizeof(float)) {
        fail(ErrorCode::bad_shape, "latent blob payload length does not match header shape " +
                                       to_string(shape));
    }
    std::vector<float> data(shape.count());
    const std::uint8_t* src = bytes.data() + kLatentHeaderBytes;
    for (float& v : data) {
        const std::uint32_t bits = static_cast<std::uint32_t>(src[0]) |
                                   (static_cast<std::uint32_t>(src[1]) << 8) |
                                   (static_cast<std::uint32_t>(src[2]) << 16) |
                                   (static_cast<std::uint32_t>(src[3]) << 24);
        v = std::bit_cast<float>(bits);
        src += 4;
    }
    return LatentTensor(shape, std::move(data));
}

}  // namespace ldb
