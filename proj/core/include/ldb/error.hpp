// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ldb {

/// Error categories surfaced by the library. The service maps each one to a
/// single wire code, so every throw site picks exactly one.
enum class ErrorCode {
    cache_miss,
    bad_shape,
    bad_params,
    backend_unavailable,
    not_found,
    conflict,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), m_code(code) {}

    ErrorCode code() const noexcept { return m_code; }

private:
    ErrorCode m_code;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace ldb
