// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ldb/backend.hpp"
#include "ldb/engine.hpp"

namespace ldb::cli {

/// Schema violation in an edit script. `where` is a field path such as
/// "layers[1].alpha_star", or "line 4, column 12" for syntax errors.
class ScriptError : public std::runtime_error {
public:
    ScriptError(std::string where, const std::string& message)
        : std::runtime_error(where + ": " + message), m_where(std::move(where)) {}

    const std::string& where() const noexcept { return m_where; }

private:
    std::string m_where;
};

struct LayerSpec {
    /// Edit parameters in the service's JSON shape, with "mask" rewritten to
    /// an absolute "mask_path".
    nlohmann::json params;
    bool visible = true;
};

/// JSON edit script (schema in docs/script.schema.json). Relative paths
/// are resolved against the script's directory.
struct EditScript {
    std::filesystem::path source_dir;
    std::string backend_id = "toy";
    ToyBackendConfig toy;
    int steps = 25;
    double sigma = kDefaultSigma;
    std::string base_prompt;
    std::optional<Seed> base_seed;
    std::optional<std::filesystem::path> base_image;
    std::vector<LayerSpec> layers;
    std::filesystem::path output_dir;
};

EditScript parse_script(const nlohmann::json& j, const std::filesystem::path& source_dir);
EditScript load_script(const std::filesystem::path& path);

/// Decodes every layer against the backend's canvas. Library errors are
/// rethrown as ScriptError naming the offending layer.
std::vector<EditParams> resolve_layers(const EditScript& script, const BackendDescriptor& backend);

}  // namespace ldb::cli
