// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#include "ldb/error.hpp"

namespace ldb {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::cache_miss: return "cache_miss";
        case ErrorCode::bad_shape: return "bad_shape";
        case ErrorCode::bad_params: return "bad_params";
        case ErrorCode::backend_unavailable: return "backend_unavailable";
        case ErrorCode::not_found: return "not_found";
        case ErrorCode::conflict: return "conflict";
    }
    return "unknown";
}

}  // namespace ldb
