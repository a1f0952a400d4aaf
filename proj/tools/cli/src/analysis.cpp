// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "ldb/cli/commands.hpp"
#include "ldb/error.hpp"
#include "ldb/session.hpp"

namespace ldb::cli {

using nlohmann::json;

// ---- bench -------------------------------------------------------------------

std::vector<BenchRow> bench_script(const EditScript& script, int repeats) {
    if (repeats < 1) fail(ErrorCode::bad_params, "--repeat must be at least 1");
    LocalRun run = execute_script(script);
    const Backend& backend = *run.backend;

    const std::uint64_t before_generation = backend.denoiser_calls();
    backend.generate(Seed{0}, run.stack->base().prompt(), script.steps);
    const std::uint64_t generation_calls = backend.denoiser_calls() - before_generation;

    std::vector<BenchRow> rows;
    for (const Layer& layer : run.stack->layers()) {
        if (!layer.cached) continue;
        const PromptEmbedding prompt = backend.embed(layer.params.prompt);
        BenchRow row;
        row.layer = layer.index;
        row.steps = script.steps;
        row.edit_steps = layer.params.edit_steps;
        row.repeats = repeats;
        row.generation_calls = generation_calls;
        row.min_ms = std::numeric_limits<double>::infinity();

        std::vector<double> samples;
        samples.reserve(static_cast<std::size_t>(repeats));
        for (int i = 0; i < repeats; ++i) {
            const std::uint64_t calls0 = backend.denoiser_calls();
            const auto t0 = std::chrono::steady_clock::now();
            const EditResult result = single_layer_edit(backend, layer.params, *layer.cached, prompt);
            const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            row.denoiser_calls = backend.denoiser_calls() - calls0;
            samples.push_back(ms);
            row.min_ms = std::min(row.min_ms, ms);
            row.max_ms = std::max(row.max_ms, ms);
        }
        double sum = 0.0;
        for (double s : samples) sum += s;
        row.mean_ms = sum / repeats;
        double sq = 0.0;
        for (double s : samples) sq += (s - row.mean_ms) * (s - row.mean_ms);
        row.stddev_ms = repeats > 1 ? std::sqrt(sq / (repeats - 1)) : 0.0;
        rows.push_back(row);
    }
    return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
    out << "layer,N,n,repeats,mean_ms,stddev_ms,min_ms,max_ms,denoiser_calls,generation_calls,call_ratio\n";
    for (const BenchRow& r : rows) {
        out << r.layer << ',' << r.steps << ',' << r.edit_steps << ',' << r.repeats << ',' << r.mean_ms << ','
            << r.stddev_ms << ',' << r.min_ms << ',' << r.max_ms << ',' << r.denoiser_calls << ','
            << r.generation_calls << ',' << r.call_ratio() << '\n';
    }
}

// ---- ablate ------------------------------------------------------------------

AblateParam parse_ablate_param(const std::string& name) {
    if (name == "r") return AblateParam::r;
    if (name == "b") return AblateParam::b;
    if (name == "alpha" || name == "alpha_star") return AblateParam::alpha;
    fail(ErrorCode::bad_params, "unknown ablation parameter '" + name + "' (expected r, b or alpha)");
}

std::string to_string(AblateParam param) {
    switch (param) {
        case AblateParam::r: return "r";
        case AblateParam::b: return "b";
        case AblateParam::alpha: return "alpha_star";
    }
    return "?";
}

std::vector<double> parse_range(const std::string& text) {
    auto number = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            fail(ErrorCode::bad_params, "bad range '" + text + "'");
        }
    };
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() < 2 || parts.size() > 3) fail(ErrorCode::bad_params, "range must be lo:hi[:step]");
        const double lo = number(parts[0]);
        const double hi = number(parts[1]);
        const double step = parts.size() == 3 ? number(parts[2]) : 1.0;
        if (step <= 0.0 || hi < lo) fail(ErrorCode::bad_params, "range needs lo <= hi and a positive step");
        const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
        if (count > 100000) fail(ErrorCode::bad_params, "range has too many values");
        for (std::size_t i = 0; i < count; ++i) out.push_back(lo + step * static_cast<double>(i));
    } else {
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ',');) out.push_back(number(p));
    }
    if (out.empty()) fail(ErrorCode::bad_params, "empty range");
    return out;
}

namespace {

int as_step(double v, const char* name) {
    if (std::abs(v) > 1e6) fail(ErrorCode::bad_params, std::string(name) + " value out of range");
    if (v != std::floor(v)) fail(ErrorCode::bad_params, std::string(name) + " values must be integers");
    return static_cast<int>(v);
}

}  // namespace

std::vector<AblationRow> ablate(const EditScript& script, AblateParam param, const std::vector<double>& values) {
    if (script.layers.size() != 1) throw ScriptError("layers", "ablate needs a single-layer script");
    auto backend = make_backend(script.backend_id, script.toy);
    const EditParams params = resolve_layers(script, backend->descriptor()).front();
    const int steps = script.steps;
    const StepIndex r0 = steps - params.edit_steps;
    const StepIndex b0 = params.blend_step.value_or(default_blend_step(steps));

    // Reject the whole sweep before doing any work.
    for (double v : values) {
        switch (param) {
            case AblateParam::r: {
                const int r = as_step(v, "r");
                const int hi = std::min(b0 - 1, steps - kMinSteps);
                if (r < 0 || r > hi) {
                    fail(ErrorCode::bad_params, "r=" + std::to_string(r) + " outside [0, " + std::to_string(hi) + "]");
                }
                break;
            }
            case AblateParam::b: {
                const int b = as_step(v, "b");
                if (b <= r0 || b >= steps) {
                    fail(ErrorCode::bad_params, "b=" + std::to_string(b) + " outside [" + std::to_string(r0 + 1) +
                                                    ", " + std::to_string(steps - 1) + "]");
                }
                break;
            }
            case AblateParam::alpha:
                if (!(v >= 0.0 && v <= 100.0)) fail(ErrorCode::bad_params, "alpha_star values must lie in [0, 100]");
                break;
        }
    }

    const BaseImage base = script.base_image
                               ? invert_base(*backend, decode_png(read_file(*script.base_image)), script.base_prompt,
                                             steps)
                               : generate_base(*backend, *script.base_seed, script.base_prompt, steps);
    const PromptEmbedding prompt = backend->embed(params.prompt);

    std::vector<AblationRow> rows;
    for (double v : values) {
        EditParams p = params;
        switch (param) {
            case AblateParam::r: p.edit_steps = steps - as_step(v, "r"); break;
            case AblateParam::b: p.blend_step = as_step(v, "b"); break;
            case AblateParam::alpha: p.alpha_star = v; break;
        }
        const CachedLatents cached = capture(base.trajectory, p.edit_steps, p.blend_step);
        const EditResult result = single_layer_edit(*backend, p, cached, prompt);

        AblationRow row;
        row.value = v;
        row.r = cached.r;
        row.b = cached.b;
        row.alpha_star = p.alpha_star;
        row.psnr_background = psnr(base.image, result.image, &p.mask);
        row.mse_masked = mse(base.image, result.image, &p.mask, Region::masked).value_or(0.0);
        row.drift = max_abs_diff_outside(result.final_latent, base.trajectory.final_latent(), p.mask.latent());
        row.alpha_effective = result.alpha_effective;
        row.denoiser_calls = result.denoiser_calls;
        rows.push_back(row);
    }
    return rows;
}

void write_ablation_csv(std::ostream& out, AblateParam param, const std::vector<AblationRow>& rows) {
    out << "param,value,r,b,alpha_star,psnr_background,mse_masked,drift,alpha_effective,denoiser_calls\n";
    for (const AblationRow& row : rows) {
        out << to_string(param) << ',' << row.value << ',' << row.r << ',' << row.b << ',' << row.alpha_star << ',';
        if (is_infinite_psnr(row.psnr_background)) {
            out << "inf";
        } else {
            out << row.psnr_background;
        }
        out << ',' << row.mse_masked << ',' << row.drift << ',' << row.alpha_effective << ',' << row.denoiser_calls
            << '\n';
    }
}

// ---- plot --------------------------------------------------------------------

namespace {

struct Canvas {
    PixelImage image;

    void dot(int x, int y, const std::array<std::uint8_t, 3>& c) {
        if (x < 0 || y < 0 || x >= image.width() || y >= image.height()) return;
        for (int ch = 0; ch < 3; ++ch) image.at(y, x, ch) = c[static_cast<std::size_t>(ch)];
    }

    void line(int x0, int y0, int x1, int y1, const std::array<std::uint8_t, 3>& c, int thickness = 1) {
        const int dx = std::abs(x1 - x0);
        const int dy = -std::abs(y1 - y0);
        const int sx = x0 < x1 ? 1 : -1;
        const int sy = y0 < y1 ? 1 : -1;
        int err = dx + dy;
        for (;;) {
            for (int t = 0; t < thickness; ++t) {
                dot(x0, y0 + t, c);
                dot(x0 + t, y0, c);
            }
            if (x0 == x1 && y0 == y1) break;
            const int e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                x0 += sx;
            }
            if (e2 <= dx) {
                err += dx;
                y0 += sy;
            }
        }
    }
};

}  // namespace

PixelImage plot_ablation(AblateParam, const std::vector<AblationRow>& rows, int width, int height) {
    Canvas canvas{PixelImage(height, width, 255)};
    const int left = 40, right = width - 20, top = 20, bottom = height - 30;
    const std::array<std::uint8_t, 3> axis{90, 90, 90};
    canvas.line(left, bottom, right, bottom, axis);
    canvas.line(left, top, left, bottom, axis);
    if (rows.empty()) return canvas.image;

    const double x_lo = rows.front().value;
    const double x_hi = rows.back().value;
    auto px = [&](double v) {
        const double t = x_hi > x_lo ? (v - x_lo) / (x_hi - x_lo) : 0.5;
        return left + static_cast<int>(std::lround(t * (right - left)));
    };

    const std::array<std::array<std::uint8_t, 3>, 3> colors{{{31, 119, 180}, {214, 39, 40}, {44, 160, 44}}};
    const std::array<double AblationRow::*, 3> series{&AblationRow::psnr_background, &AblationRow::mse_masked,
                                                      &AblationRow::drift};
    for (std::size_t s = 0; s < series.size(); ++s) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const AblationRow& row : rows) {
            const double v = row.*series[s];
            if (std::isfinite(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        auto py = [&](double v) {
            // Infinite PSNR pins to the top of the plot.
            const double t = !std::isfinite(v) ? 1.0 : (hi > lo ? (v - lo) / (hi - lo) : 0.5);
            return bottom - static_cast<int>(std::lround(t * (bottom - top)));
        };
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const int x = px(rows[i].value);
            const int y = py(rows[i].*series[s]);
            if (i > 0) canvas.line(px(rows[i - 1].value), py(rows[i - 1].*series[s]), x, y, colors[s], 2);
            for (int d = -2; d <= 2; ++d) canvas.line(x - 2, y + d, x + 2, y + d, colors[s]);
        }
        // Legend swatch.
        const int ly = top + 4 + static_cast<int>(s) * 10;
        for (int d = 0; d < 6; ++d) canvas.line(right - 30, ly + d, right - 10, ly + d, colors[s]);
    }
    return canvas.image;
}

// ---- metrics -----------------------------------------------------------------

json compute_metrics(const PixelImage& before, const PixelImage& after, const Mask& mask) {
    if (before.height() != after.height() || before.width() != after.width()) {
        fail(ErrorCode::bad_shape, "images differ in size");
    }
    if (mask.height() != before.height() || mask.width() != before.width()) {
        fail(ErrorCode::bad_shape, "mask does not match the image size");
    }
    auto opt_json = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    return {{"psnr_unmasked", psnr_to_json(psnr(before, after, &mask))},
            {"mse_masked", opt_json(mse(before, after, &mask, Region::masked))},
            {"mse_unmasked", opt_json(mse(before, after, &mask, Region::unmasked))}};
}

}  // namespace ldb::cli
