// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#include "ldb/cli/app.hpp"

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ldb/cli/commands.hpp"
#include "ldb/error.hpp"

namespace ldb::cli {

namespace fs = std::filesystem;

namespace {

int exit_code(ErrorCode code) {
    switch (code) {
        case ErrorCode::bad_params:
        case ErrorCode::bad_shape:
        case ErrorCode::not_found:
            return kExitValidation;
        default:
            return kExitRuntime;
    }
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) fail(ErrorCode::not_found, "cannot write " + path.string());
    return out;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"ldb: layered latent editing from scripts"};
    app.require_subcommand(1);

    std::string script_path;
    std::string out_dir;
    std::string remote;
    auto* run = app.add_subcommand("run", "execute an edit script and write PNGs plus report.json");
    run->add_option("script", script_path, "edit script (JSON)")->required();
    run->add_option("--out", out_dir, "output directory (overrides the script)");
    run->add_option("--remote", remote, "drive an ldb-server at this URL instead of running in-process");

    int repeats = 10;
    std::string csv_path;
    auto* bench = app.add_subcommand("bench", "time every edit of a script");
    bench->add_option("script", script_path, "edit script (JSON)")->required();
    bench->add_option("--repeat", repeats, "repeats per edit")->check(CLI::PositiveNumber);
    bench->add_option("--csv", csv_path, "write CSV here instead of stdout");

    std::string param;
    std::string range;
    std::string plot_path;
    auto* ablate_cmd = app.add_subcommand("ablate", "sweep r, b or alpha over a single-layer script");
    ablate_cmd->add_option("script", script_path, "single-layer edit script (JSON)")->required();
    ablate_cmd->add_option("--param", param, "r, b or alpha")->required();
    ablate_cmd->add_option("--range", range, "lo:hi[:step] or a comma list")->required();
    ablate_cmd->add_option("--csv", csv_path, "write CSV here instead of stdout");
    ablate_cmd->add_option("--plot", plot_path, "write a line-chart PNG here");

    std::string before_path, after_path, mask_path;
    auto* metrics = app.add_subcommand("metrics", "PSNR/MSE between two images under a mask");
    metrics->add_option("--before", before_path, "reference PNG")->required();
    metrics->add_option("--after", after_path, "edited PNG")->required();
    metrics->add_option("--mask", mask_path, "grayscale mask PNG")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*run) {
            const EditScript script = load_script(script_path);
            std::optional<fs::path> dir;
            if (!out_dir.empty()) dir = out_dir;
            const RunResult result = remote.empty() ? run_script(script, dir) : run_script_remote(script, remote, dir);
            out << result.report.dump(2) << '\n';
        } else if (*bench) {
            const auto rows = bench_script(load_script(script_path), repeats);
            if (csv_path.empty()) {
                write_bench_csv(out, rows);
            } else {
                auto file = open_out(csv_path);
                write_bench_csv(file, rows);
            }
        } else if (*ablate_cmd) {
            const AblateParam which = parse_ablate_param(param);
            const auto rows = ablate(load_script(script_path), which, parse_range(range));
            if (csv_path.empty()) {
                write_ablation_csv(out, which, rows);
            } else {
                auto file = open_out(csv_path);
                write_ablation_csv(file, which, rows);
            }
            if (!plot_path.empty()) write_file(plot_path, encode_png(plot_ablation(which, rows)));
        } else if (*metrics) {
            const PixelImage before = decode_png(read_file(before_path));
            const PixelImage after = decode_png(read_file(after_path));
            const Mask mask = decode_mask_png(read_file(mask_path), 1);
            out << compute_metrics(before, after, mask).dump(2) << '\n';
        }
    } catch (const ScriptError& e) {
        err << "ldb: invalid script: " << e.what() << '\n';
        return kExitValidation;
    } catch (const Error& e) {
        err << "ldb: " << to_string(e.code()) << ": " << e.what() << '\n';
        return exit_code(e.code());
    } catch (const std::exception& e) {
        err << "ldb: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace ldb::cli
