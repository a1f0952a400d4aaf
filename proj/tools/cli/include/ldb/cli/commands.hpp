// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ldb/cli/script.hpp"
#include "ldb/layers.hpp"

namespace ldb::cli {

// ---- run -------------------------------------------------------------------

struct EditEntry {
    int layer = 0;
    std::string image_file;
    std::string image_hash;
    int denoiser_calls = 0;
    double alpha_effective = 0.0;
    RecomputeReport recompute;
};

struct RunResult {
    std::string base_hash;
    std::vector<EditEntry> edits;
    std::string composition_hash;
    std::size_t cache_bytes = 0;
    nlohmann::json report;
};

/// In-process stack built from a script, kept alive for bench and ablate.
struct LocalRun {
    std::shared_ptr<Backend> backend;
    std::unique_ptr<LayerStack> stack;
    std::vector<EditParams> params;
    /// Composition right after each layer was added.
    std::vector<PixelImage> compositions;
    RunResult result;
};

/// Builds the base and every layer in order without writing anything.
LocalRun execute_script(const EditScript& script);

/// Runs the script and writes base.png, layer<k>.png (the composition after
/// layer k) and report.json into the output directory.
RunResult run_script(const EditScript& script, const std::optional<std::filesystem::path>& output_dir = {});

/// Same outputs, produced by driving an ldb-server at `base_url`.
RunResult run_script_remote(const EditScript& script, const std::string& base_url,
                            const std::optional<std::filesystem::path>& output_dir = {});

// ---- bench -----------------------------------------------------------------

struct BenchRow {
    int layer = 0;
    int steps = 0;
    int edit_steps = 0;
    int repeats = 0;
    double mean_ms = 0.0;
    double stddev_ms = 0.0;
    double min_ms = 0.0;
    double max_ms = 0.0;
    /// Measured at the backend boundary for one edit.
    std::uint64_t denoiser_calls = 0;
    /// Measured for one full generation.
    std::uint64_t generation_calls = 0;

    double call_ratio() const noexcept {
        return static_cast<double>(generation_calls) / static_cast<double>(denoiser_calls);
    }
};

std::vector<BenchRow> bench_script(const EditScript& script, int repeats);
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

// ---- ablate ----------------------------------------------------------------

enum class AblateParam { r, b, alpha };

AblateParam parse_ablate_param(const std::string& name);
std::string to_string(AblateParam param);

/// "lo:hi[:step]" (inclusive) or a comma list.
std::vector<double> parse_range(const std::string& text);

struct AblationRow {
    double value = 0.0;
    StepIndex r = 0;
    StepIndex b = 0;
    double alpha_star = 0.0;
    /// PSNR over pixels with mask < 0.5 against the base image; +inf when identical.
    double psnr_background = 0.0;
    /// MSE over pixels with mask >= 0.5 against the base image.
    double mse_masked = 0.0;
    /// Max-norm of (edited final latent - base final latent) over latent cells with zero mask.
    double drift = 0.0;
    double alpha_effective = 0.0;
    int denoiser_calls = 0;
};

/// Sweeps one parameter of a single-layer script's edit over the base image.
/// Values outside the valid index bounds are rejected before any work.
std::vector<AblationRow> ablate(const EditScript& script, AblateParam param, const std::vector<double>& values);
void write_ablation_csv(std::ostream& out, AblateParam param, const std::vector<AblationRow>& rows);

/// Line chart of the three metric curves, each normalized to its own range.
PixelImage plot_ablation(AblateParam param, const std::vector<AblationRow>& rows, int width = 640, int height = 360);

// ---- metrics ---------------------------------------------------------------

/// {psnr_unmasked, mse_masked, mse_unmasked}; +inf PSNR is written as "inf"
/// and an empty region yields null for the corresponding MSE.
nlohmann::json compute_metrics(const PixelImage& before, const PixelImage& after, const Mask& mask);

}  // namespace ldb::cli
