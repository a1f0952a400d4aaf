// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ldb {

class LatentTensor;
class PixelImage;

/// Lowercase hex SHA-256 of a byte range.
std::string sha256_hex(std::span<const std::uint8_t> bytes);

/// 64-bit fingerprint: the first eight bytes of the SHA-256 digest.
std::uint64_t fingerprint64(std::span<const std::uint8_t> bytes);

std::uint64_t fingerprint(const LatentTensor& z);

/// Hash of the decoded pixel bytes (dimensions included), independent of PNG encoding.
std::string image_hash(const PixelImage& image);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

std::string hex64(std::uint64_t value);

}  // namespace ldb
