// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run on the toy backend. Prints one PASS/FAIL line per criterion
// and exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include <httplib.h>

#include "ldb/cli/commands.hpp"
#include "ldb/hash.hpp"
#include "ldb/service/http.hpp"
#include "ldb/session.hpp"
#include "oracle.hpp"
#include "test_util.hpp"

namespace {

using namespace ldb;
using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kSteps = 25;
constexpr double kLatentTol = 1e-5;

struct Verdict {
    bool pass = true;
    std::ostringstream detail;
    std::vector<std::string> failures;

    void require(bool ok, const std::string& what) {
        if (ok) return;
        pass = false;
        failures.push_back(what);
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int precision = 3) {
    std::ostringstream s;
    s << std::setprecision(precision) << v;
    return s.str();
}

const char* kPrompts[] = {"a cat on a sofa", "a dog", "a red hat", "a lighthouse", "a bowl of fruit",
                          "a blue scarf", "snow", "a wooden chair"};

std::string random_prompt(std::mt19937_64& rng) { return kPrompts[rng() % std::size(kPrompts)]; }

/// Random mask: a box, a soft field, or (rarely) empty.
Mask random_mask(std::mt19937_64& rng, int h, int w) {
    const auto kind = rng() % 10;
    if (kind == 0) return Mask::filled(h, w, 0.0f, 1);
    if (kind <= 2) {
        std::uniform_real_distribution<float> u(0.0f, 1.0f);
        std::vector<float> px(static_cast<std::size_t>(h) * w);
        for (float& v : px) v = u(rng) < 0.5f ? 0.0f : u(rng);
        return Mask(h, w, std::move(px), 1);
    }
    return ldb::testing::random_box(rng, h, w);
}

// ---- criteria -------------------------------------------------------------

Verdict cache_equivalence() {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20260101);
    const ToyBackend toy;
    double worst = 0.0;
    int cases = 0;
    for (; cases < 200; ++cases) {
        const std::uint64_t base_seed = rng() % 100000;
        const std::string base_text = random_prompt(rng);
        const std::string edit_text = random_prompt(rng);
        const PromptEmbedding base_prompt = toy.embed(base_text);
        const PromptEmbedding edit_prompt = toy.embed(edit_text);
        EditParams p;
        p.prompt = edit_text;
        p.mask = random_mask(rng, 16, 16);
        p.seed = Seed{rng() % 100000};
        p.alpha_star = std::uniform_real_distribution<double>(0.0, 100.0)(rng);
        p.edit_steps = 3 + static_cast<int>(rng() % (kSteps - 2));

        const Trajectory base = toy.generate(Seed{base_seed}, base_prompt, kSteps);
        const EditResult got = single_layer_edit(toy, p, capture(base, p.edit_steps), edit_prompt);

        oracle::Case c;
        c.grid = {4, 16, 16};
        c.steps = kSteps;
        c.edit_steps = p.edit_steps;
        c.base_seed = base_seed;
        c.edit_seed = p.seed.value;
        c.alpha_star = p.alpha_star;
        c.pixel_mask = p.mask.pixel();
        c.target_base = oracle::to_doubles(toy.target(base_prompt));
        c.target_edit = oracle::to_doubles(toy.target(edit_prompt));
        const oracle::Outcome want = oracle::full_path_edit(c);
        worst = std::max(worst, oracle::max_abs_diff(oracle::to_doubles(got.final_latent), want.final_latent));
    }
    const double secs = seconds_since(t0);
    v.require(worst <= kLatentTol, "max error " + fmt(worst) + " > 1e-5");
    v.require(secs < 60.0, "runtime " + fmt(secs) + " s >= 60 s");
    v.detail << cases << " cases, max |diff| = " << fmt(worst) << ", " << fmt(secs) << " s";
    return v;
}

Verdict identity_suite() {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(7);
    const ToyBackend toy;
    double worst = 0.0;
    int hash_mismatches = 0;
    for (int i = 0; i < 50; ++i) {
        const std::string text = random_prompt(rng);
        const BaseImage base = generate_base(toy, Seed{rng() % 100000}, text, kSteps);
        EditParams p;
        p.prompt = text;
        p.seed = Seed{rng() % 100000};
        p.edit_steps = 3 + static_cast<int>(rng() % (kSteps - 2));
        if (i % 2 == 0) {
            p.alpha_star = 0.0;
            p.mask = random_mask(rng, 16, 16);
        } else {
            p.alpha_star = std::uniform_real_distribution<double>(0.0, 100.0)(rng);
            p.mask = Mask::filled(16, 16, 0.0f, 1);
        }
        const EditResult out = single_layer_edit(toy, p, capture(base.trajectory, p.edit_steps), base.prompt());
        worst = std::max(worst, max_abs_diff(out.final_latent, base.trajectory.final_latent()));
        if (image_hash(out.image) != image_hash(base.image)) ++hash_mismatches;
    }
    const double secs = seconds_since(t0);
    v.require(worst <= kLatentTol, "max error " + fmt(worst));
    v.require(hash_mismatches == 0, std::to_string(hash_mismatches) + " image hash mismatches");
    v.require(secs < 10.0, "runtime " + fmt(secs) + " s >= 10 s");
    v.detail << "50 cases (25 zero-strength, 25 empty-mask), max |diff| = " << fmt(worst)
             << ", " << fmt(secs) << " s";
    return v;
}

Verdict blend_exactness() {
    Verdict v;
    std::mt19937_64 rng(99);
    const ToyBackend toy;
    int bit_mismatches = 0;
    int finite_psnr = 0;
    for (int i = 0; i < 50; ++i) {
        const std::string text = random_prompt(rng);
        const BaseImage base = generate_base(toy, Seed{rng() % 100000}, text, kSteps);
        EditParams p;
        p.mask = ldb::testing::random_box(rng, 16, 16);
        p.seed = Seed{rng() % 100000};
        p.alpha_star = std::uniform_real_distribution<double>(0.0, 100.0)(rng);
        p.edit_steps = 3 + static_cast<int>(rng() % (kSteps - 2));
        const CachedLatents cached = capture(base.trajectory, p.edit_steps);

        // Any edit prompt: cells outside the mask hold Z_b bit for bit at b.
        p.prompt = random_prompt(rng);
        const EditResult any = single_layer_edit(toy, p, cached, toy.embed(p.prompt));
        const LatentTensor& at_b = any.latent_at(cached.b);
        const MaskField& m = p.mask.latent();
        for (std::size_t k = 0; k < at_b.size(); ++k) {
            if (m.values[k % m.values.size()] != 0.0f) continue;
            if (std::bit_cast<std::uint32_t>(at_b.data()[k]) != std::bit_cast<std::uint32_t>(cached.blending.data()[k])) {
                ++bit_mismatches;
            }
        }

        // Same prompt: the background of the final image is untouched.
        p.prompt = text;
        const EditResult same = single_layer_edit(toy, p, cached, base.prompt());
        if (!is_infinite_psnr(psnr(base.image, same.image, &p.mask))) ++finite_psnr;
    }
    v.require(bit_mismatches == 0, std::to_string(bit_mismatches) + " unmasked cells differ from Z_b");
    v.require(finite_psnr == 0, std::to_string(finite_psnr) + " cases with finite background PSNR");
    v.detail << "50 cases, unmasked cells at b bit-equal to Z_b, background PSNR = inf";
    return v;
}

Verdict call_accounting(const cli::EditScript& three) {
    Verdict v;
    std::mt19937_64 rng(5);
    const ToyBackend toy;
    const BaseImage base = generate_base(toy, Seed{1}, "a cat on a sofa", kSteps);
    v.require(toy.denoiser_calls() == static_cast<std::uint64_t>(kSteps), "generation did not take N calls");
    for (int i = 0; i < 30; ++i) {
        EditParams p;
        p.prompt = random_prompt(rng);
        p.mask = ldb::testing::random_box(rng, 16, 16);
        p.seed = Seed{rng()};
        p.edit_steps = 3 + static_cast<int>(rng() % (kSteps - 2));
        const std::uint64_t before = toy.denoiser_calls();
        const EditResult out = single_layer_edit(toy, p, capture(base.trajectory, p.edit_steps), toy.embed(p.prompt));
        const std::uint64_t measured = toy.denoiser_calls() - before;
        v.require(out.denoiser_calls == p.edit_steps && measured == static_cast<std::uint64_t>(p.edit_steps),
                  "edit with n=" + std::to_string(p.edit_steps) + " reported " +
                      std::to_string(out.denoiser_calls) + ", measured " + std::to_string(measured));
    }
    cli::EditScript script = three;
    script.layers.resize(2);
    script.layers[0].params["n"] = 8;
    script.layers[1].params["n"] = 4;
    const auto rows = cli::bench_script(script, 1);
    const double r8 = rows.at(0).call_ratio();
    const double r4 = rows.at(1).call_ratio();
    v.require(r8 == 3.125, "ratio for n=8 is " + fmt(r8));
    v.require(r4 == 6.25, "ratio for n=4 is " + fmt(r4));
    v.detail << "30 edits report n calls, generation = N, bench N/n = " << fmt(r8, 5)
             << " (n=8), " << fmt(r4, 5) << " (n=4)";
    return v;
}

Verdict memory_accounting() {
    Verdict v;
    SessionManager mgr{ServiceConfig{}};
    CreateSessionRequest r;
    r.prompt = "a cat on a sofa";
    r.seed = Seed{1};
    r.toy.latent_shape = Shape{4, 64, 64};
    r.steps = kSteps;
    const auto s = mgr.create(r);
    for (int k = 0; k < 10; ++k) {
        EditParams p;
        p.prompt = kPrompts[k % std::size(kPrompts)];
        p.mask = Mask::box(64, 64, 6 * k + 3, 32, 3, 1);
        p.seed = Seed{static_cast<std::uint64_t>(k)};
        p.edit_steps = 4;
        mgr.add_layer(s->id, p);
    }
    const auto bytes = mgr.stats(s->id)["cache_bytes"].get<std::size_t>();
    const double reference = 1.25 * 1024 * 1024;
    const double rel = std::abs(static_cast<double>(bytes) - reference) / reference;
    v.require(bytes == 1'310'720u, "size_bytes = " + std::to_string(bytes));
    v.require(rel <= 0.05, "off by " + fmt(100 * rel) + "%");
    v.detail << "10 layers at 4x64x64: " << bytes << " B, " << fmt(100 * rel)
             << "% from 1.25 MB";
    return v;
}

EditParams random_layer(std::mt19937_64& rng) {
    EditParams p;
    p.prompt = random_prompt(rng);
    p.mask = ldb::testing::random_box(rng, 16, 16);
    p.seed = Seed{rng() % 100000};
    p.alpha_star = std::uniform_real_distribution<double>(10.0, 100.0)(rng);
    p.edit_steps = 3 + static_cast<int>(rng() % 12);
    return p;
}

std::vector<std::uint64_t> fingerprints(const LayerStack& s) {
    std::vector<std::uint64_t> out;
    for (std::size_t k = 0; k < s.size(); ++k) out.push_back(s.cache_fingerprint(static_cast<int>(k)));
    return out;
}

Verdict layer_determinism() {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(123);
    auto toy = std::make_shared<ToyBackend>();
    int toggles = 0, readds = 0, updates = 0, deletes = 0, failures = 0;
    for (int seq = 0; seq < 100; ++seq) {
        LayerStack s(toy, generate_base(*toy, Seed{rng() % 1000}, random_prompt(rng), kSteps));
        const int layers = 3 + static_cast<int>(rng() % 3);
        for (int k = 0; k < layers; ++k) s.add_layer(random_layer(rng));
        for (int op = 0; op < 4; ++op) {
            const int k = static_cast<int>(rng() % s.size());
            const std::string hash = image_hash(s.compose());
            const auto fps = fingerprints(s);
            switch (rng() % 4) {
                case 0: {  // toggle off/on
                    if (!s.layer(k).visible) {
                        s.set_visibility(k, true);
                        break;
                    }
                    s.set_visibility(k, false);
                    s.set_visibility(k, true);
                    ++toggles;
                    failures += image_hash(s.compose()) != hash || fingerprints(s) != fps;
                    break;
                }
                case 1: {  // delete the top layer and add it back
                    const EditParams top = s.layers().back().params;
                    const bool visible = s.layers().back().visible;
                    s.delete_layer(static_cast<int>(s.size()) - 1);
                    s.add_layer(top);
                    if (!visible) s.set_visibility(static_cast<int>(s.size()) - 1, false);
                    ++readds;
                    failures += image_hash(s.compose()) != hash;
                    break;
                }
                case 2: {  // update k
                    s.update_layer(k, random_layer(rng));
                    ++updates;
                    const auto after = fingerprints(s);
                    failures += !std::equal(fps.begin(), fps.begin() + k, after.begin());
                    break;
                }
                default: {  // delete k (never the last layer)
                    if (s.size() <= 1) break;
                    s.delete_layer(k);
                    ++deletes;
                    const auto after = fingerprints(s);
                    failures += !std::equal(fps.begin(), fps.begin() + k, after.begin());
                    s.add_layer(random_layer(rng));
                    break;
                }
            }
        }
    }
    const double secs = seconds_since(t0);
    v.require(failures == 0, std::to_string(failures) + " round-trip or fingerprint violations");
    v.require(secs < 120.0, "runtime " + fmt(secs) + " s >= 120 s");
    v.detail << "100 sequences (" << toggles << " toggles, " << readds << " re-adds, "
             << updates << " updates, " << deletes << " deletes), " << fmt(secs) << " s";
    return v;
}

Verdict overlap_propagation() {
    Verdict v;
    auto toy = std::make_shared<ToyBackend>();
    LayerStack s(toy, generate_base(*toy, Seed{1}, "a cat on a sofa", kSteps));
    EditParams first;
    first.prompt = "a red hat";
    first.mask = Mask::box(16, 16, 6, 6, 4, 1);
    first.seed = Seed{11};
    first.alpha_star = 60.0;
    EditParams second = first;
    second.prompt = "a blue scarf";
    second.mask = Mask::box(16, 16, 10, 6, 3, 1);
    second.seed = Seed{12};
    s.add_layer(first);
    s.add_layer(second);

    const LatentTensor zr_visible = s.layer(1).cached->regeneration;
    const PixelImage first_out = s.layer(0).output->image;
    const PixelImage composed = s.compose();
    s.set_visibility(0, false);
    const LatentTensor zr_hidden = s.layer(1).cached->regeneration;
    v.require(!(zr_hidden == zr_visible), "layer 2's Z_r did not change when layer 1 was hidden");
    v.require(zr_hidden == s.base().trajectory.latents[17], "hidden predecessor: Z_r should come from the base");
    s.set_visibility(0, true);
    v.require(s.layer(1).cached->regeneration == zr_visible, "Z_r not restored after re-showing layer 1");

    // Compose reflects both edits: layer 1 survives where only it applies,
    // and layer 2 changed its own region.
    double to_first = 0.0, to_base = 0.0, own = 0.0;
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) {
            const bool in1 = first.mask.at(y, x) != 0.0f;
            const bool in2 = second.mask.at(y, x) != 0.0f;
            for (int c = 0; c < 3; ++c) {
                const double now = composed.at(y, x, c);
                if (in1 && !in2) {
                    to_first += std::abs(now - first_out.at(y, x, c));
                    to_base += std::abs(now - s.base().image.at(y, x, c));
                }
                if (in2) own += std::abs(now - first_out.at(y, x, c));
            }
        }
    }
    v.require(to_first < 0.25 * to_base, "layer 1's edit is not visible in the composition");
    v.require(own > 0.0, "layer 2's edit is not visible in the composition");
    v.detail << "Z_r changes on hide and restores on show; layer-1-only region diff "
             << fmt(to_first) << " vs " << fmt(to_base) << " to base";
    return v;
}

template <typename F>
bool monotone(const std::vector<cli::AblationRow>& rows, F key, bool increasing) {
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double a = key(rows[i - 1]);
        const double b = key(rows[i]);
        if (increasing ? b < a : b > a) return false;
    }
    return true;
}

std::string series(const std::vector<cli::AblationRow>& rows, double cli::AblationRow::*field) {
    std::ostringstream s;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double x = rows[i].*field;
        s << (i ? " " : "") << (std::isinf(x) ? std::string("inf") : fmt(x, 4));
    }
    return s.str();
}

Verdict ablation_trends(const cli::EditScript& single) {
    Verdict v;
    const int n = single.layers.at(0).params.at("n").get<int>();
    const int r0 = kSteps - n;

    // b over the full admissible range r < b < N.
    std::vector<double> bs;
    for (int b = r0 + 1; b < kSteps; ++b) bs.push_back(b);
    const auto b_rows = cli::ablate(single, cli::AblateParam::b, bs);
    const auto psnr_of = [](const cli::AblationRow& r) { return r.psnr_background; };
    v.require(monotone(b_rows, psnr_of, true), "b-sweep background PSNR decreases somewhere");
    const auto best = std::max_element(b_rows.begin(), b_rows.end(),
                                       [](const auto& a, const auto& b) { return a.psnr_background < b.psnr_background; });
    const bool max_at_default = best->b == kSteps - 2 ||
                                b_rows[static_cast<std::size_t>(kSteps - 2 - r0 - 1)].psnr_background ==
                                    best->psnr_background;
    v.require(max_at_default, "b-sweep maximum at b=" + std::to_string(best->b) + ", not N-2 [PSNR " +
                                  series(b_rows, &cli::AblationRow::psnr_background) + "]");

    // r from 0 up to b - 1 with b = N - 2.
    std::vector<double> rs;
    for (int r = 0; r <= kSteps - kMinSteps; ++r) rs.push_back(r);
    const auto r_rows = cli::ablate(single, cli::AblateParam::r, rs);
    v.require(monotone(r_rows, [](const auto& r) { return r.mse_masked; }, false),
              "r-sweep masked MSE increases somewhere [" + series(r_rows, &cli::AblationRow::mse_masked) + "]");

    // alpha with the base prompt, so the masked change comes from the injected noise alone.
    cli::EditScript same = single;
    same.layers[0].params["prompt"] = single.base_prompt;
    std::vector<double> as;
    for (int a = 0; a <= 100; a += 10) as.push_back(a);
    const auto a_rows = cli::ablate(same, cli::AblateParam::alpha, as);
    v.require(monotone(a_rows, [](const auto& r) { return r.mse_masked; }, true),
              "alpha-sweep masked MSE decreases somewhere [" + series(a_rows, &cli::AblationRow::mse_masked) + "]");
    v.require(a_rows.front().alpha_effective == 0.0, "alpha(0) != 0");

    // alpha proportional to sqrt(alpha*) on fixed inputs.
    const LatentTensor zr = sample_gaussian(Seed{3}, Shape{4, 16, 16});
    const LatentTensor noise = scaled_noise(Seed{4}, zr);
    const Mask m = Mask::box(16, 16, 8, 8, 3, 1);
    const double a100 = map_strength(100.0, zr, noise, m, kDefaultSigma, 16);
    double worst_rel = 0.0;
    for (double s = 1.0; s <= 100.0; s += 1.0) {
        const double got = map_strength(s, zr, noise, m, kDefaultSigma, 16);
        worst_rel = std::max(worst_rel, std::abs(got - a100 * std::sqrt(s / 100.0)) / (a100 * std::sqrt(s / 100.0)));
    }
    v.require(map_strength(0.0, zr, noise, m, kDefaultSigma, 16) == 0.0, "map_strength(0) != 0");
    v.require(worst_rel <= 1e-9, "sqrt scaling off by " + fmt(worst_rel) + " relative");

    v.detail << "b=" << r0 + 1 << ".." << kSteps - 1 << " PSNR "
             << series(b_rows, &cli::AblationRow::psnr_background) << "; r-sweep MSE nonincreasing; alpha-sweep MSE "
             << "nondecreasing; sqrt scaling rel err " << fmt(worst_rel);
    return v;
}

Verdict inversion_round_trip() {
    Verdict v;
    std::mt19937_64 rng(31);
    const ToyBackend toy;
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const PromptEmbedding p = toy.embed(random_prompt(rng));
        const Trajectory g = toy.generate(Seed{rng() % 100000}, p, kSteps);
        const Trajectory inv = toy.invert(g.final_latent(), p, kSteps);
        const Trajectory again = toy.denoise_from(inv.latents.front(), p, kSteps, Seed{0});
        worst = std::max(worst, max_abs_diff(again.final_latent(), g.final_latent()));
    }
    v.require(worst <= kLatentTol, "latent round-trip error " + fmt(worst));

    // An arbitrary upload (not produced by the backend) through the session path.
    SessionManager mgr{ServiceConfig{}};
    int worst_px = 0;
    for (int i = 0; i < 5; ++i) {
        PixelImage img(16, 16);
        for (auto& px : img.data()) px = static_cast<std::uint8_t>(rng() % 256);
        CreateSessionRequest r;
        r.prompt = random_prompt(rng);
        r.image_png = encode_png(img);
        const PixelImage back = mgr.image(mgr.create(r)->id);
        for (std::size_t k = 0; k < img.data().size(); ++k) {
            worst_px = std::max(worst_px, std::abs(int(back.data()[k]) - int(img.data()[k])));
        }
    }
    v.require(worst_px <= 1, "uploaded image off by " + std::to_string(worst_px) + " levels");
    v.detail << "20 trajectories, max |diff| = " << fmt(worst) << "; 5 uploads, max pixel "
             << "error " << worst_px << " level(s)";
    return v;
}

Verdict service_durability(const cli::EditScript& three) {
    Verdict v;
    const fs::path store = ldb::testing::temp_dir("acceptance-store");
    const fs::path outputs = ldb::testing::temp_dir("acceptance-out");
    ServiceConfig config;
    config.store = store;

    std::string id, before;
    {
        SessionManager mgr{config};
        service::HttpService server(mgr);
        server.bind("127.0.0.1", 0);
        server.start();
        const cli::RunResult run =
            cli::run_script_remote(three, "http://127.0.0.1:" + std::to_string(server.port()), outputs / "remote");
        id = run.report.at("session_id").get<std::string>();
        before = run.composition_hash;
        server.stop();
    }
    std::string after, image_after;
    {
        SessionManager mgr{config};
        const std::size_t loaded = mgr.load_store();
        v.require(loaded == 1, std::to_string(loaded) + " sessions reloaded");
        service::HttpService server(mgr);
        server.bind("127.0.0.1", 0);
        server.start();
        httplib::Client client("127.0.0.1", server.port());
        if (auto res = client.Get("/sessions/" + id); res && res->status == 200) {
            after = json::parse(res->body).value("composition_hash", "");
        }
        if (auto res = client.Get("/sessions/" + id + "/image"); res && res->status == 200) {
            image_after = image_hash(decode_png(
                std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(res->body.data()), res->body.size())));
        }
        server.stop();
    }
    const cli::RunResult local = cli::run_script(three, outputs / "local");
    fs::remove_all(store);
    fs::remove_all(outputs);
    v.require(!before.empty() && before == after, "manifest hash changed across restart");
    v.require(image_after == before, "served image hash changed across restart");
    v.require(local.composition_hash == before, "remote composition differs from the in-process run");
    v.detail << "3-layer script over HTTP, restart, reload: " << before.substr(0, 16)
             << "... identical";
    return v;
}

}  // namespace

int main() {
    const fs::path examples = fs::path(LDB_DOCS_DIR) / "examples";
    const cli::EditScript three = cli::load_script(examples / "three_layers.json");
    const cli::EditScript single = cli::load_script(examples / "single_layer.json");

    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"cache-equivalence", cache_equivalence},
        {"identity", identity_suite},
        {"blend-exactness", blend_exactness},
        {"call-accounting", [&] { return call_accounting(three); }},
        {"memory-accounting", memory_accounting},
        {"layer-determinism", layer_determinism},
        {"overlap-propagation", overlap_propagation},
        {"ablation-trends", [&] { return ablation_trends(single); }},
        {"inversion-round-trip", inversion_round_trip},
        {"service-durability", [&] { return service_durability(three); }},
    };

    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Verdict v;
        try {
            v = run();
        } catch (const std::exception& e) {
            v.require(false, std::string("exception: ") + e.what());
        }
        failed += v.pass ? 0 : 1;
        std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail.str();
        for (const auto& f : v.failures) std::cout << " | " << f;
        std::cout << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
