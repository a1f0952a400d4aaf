// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "ldb/cli/app.hpp"
#include "ldb/cli/commands.hpp"
#include "ldb/hash.hpp"
#include "ldb/service/http.hpp"
#include "test_util.hpp"

namespace ldb::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

const fs::path kExamples = fs::path(LDB_DOCS_DIR) / "examples";

struct Invocation {
    int code = 0;
    std::string out;
    std::string err;
};

Invocation invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "ldb");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Invocation inv;
    inv.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    inv.out = out.str();
    inv.err = err.str();
    return inv;
}

json single_layer_json(const std::string& layer_prompt = "a dog on a sofa") {
    return {{"n", 25},
            {"base", {{"prompt", "a cat on a sofa"}, {"seed", 1}}},
            {"layers",
             {{{"prompt", layer_prompt},
               {"seed", 11},
               {"alpha_star", 60},
               {"n", 8},
               {"box", {{"center_x", 7}, {"center_y", 7}, {"size", 3}}}}}}};
}

std::string script_error(const json& j) {
    try {
        parse_script(j, ".");
    } catch (const ScriptError& e) {
        return e.where();
    }
    return "";
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override { dir = ldb::testing::temp_dir("cli"); }
    void TearDown() override { fs::remove_all(dir); }

    fs::path write_script(const std::string& name, const json& j) {
        const fs::path p = dir / name;
        std::ofstream(p) << j.dump(2);
        return p;
    }

    fs::path dir;
};

TEST(ScriptParse, ExamplesAreValid) {
    const EditScript s = load_script(kExamples / "three_layers.json");
    EXPECT_EQ(s.layers.size(), 3u);
    EXPECT_EQ(s.steps, 25);
    EXPECT_EQ(s.base_prompt, "a cat on a sofa");
    EXPECT_EQ(s.output_dir, kExamples / "out/three_layers");
}

TEST(ScriptParse, ErrorsNameTheField) {
    json j = single_layer_json();
    j["layers"][0]["alpha_star"] = 150;
    EXPECT_EQ(script_error(j), "layers[0].alpha_star");
    j = single_layer_json();
    j["layers"][0]["seed"] = "eleven";
    EXPECT_EQ(script_error(j), "layers[0].seed");
    j = single_layer_json();
    j["layers"][0].erase("box");
    EXPECT_EQ(script_error(j), "layers[0]");
    j = single_layer_json();
    j["layers"][0]["mask_fill"] = 1.0;
    EXPECT_EQ(script_error(j), "layers[0]");
    j = single_layer_json();
    j["base"].erase("seed");
    EXPECT_EQ(script_error(j), "base");
    j = single_layer_json();
    j["colour"] = "red";
    EXPECT_EQ(script_error(j), "colour");
    j = single_layer_json();
    j["n"] = 2;
    EXPECT_EQ(script_error(j), "n");
    j = single_layer_json();
    j["layers"] = json::object();
    EXPECT_EQ(script_error(j), "layers");
    EXPECT_EQ(script_error(single_layer_json()), "");
}

TEST_F(CliTest, SyntaxErrorsReportPosition) {
    const fs::path p = dir / "broken.json";
    std::ofstream(p) << "{\n  \"n\": 25,\n  oops\n}";
    try {
        load_script(p);
        FAIL() << "expected ScriptError";
    } catch (const ScriptError& e) {
        EXPECT_EQ(e.where(), "line 3, column 3");
    }
}

TEST_F(CliTest, ValidationFailuresExitWithTwo) {
    json j = single_layer_json();
    j["layers"][0]["n"] = 40;
    const Invocation inv = invoke({"run", write_script("bad.json", j).string(), "--out", (dir / "o").string()});
    EXPECT_EQ(inv.code, kExitValidation);
    EXPECT_NE(inv.err.find("layers[0].n"), std::string::npos) << inv.err;
    EXPECT_EQ(invoke({"run", (dir / "missing.json").string()}).code, kExitValidation);
    EXPECT_EQ(invoke({"frobnicate"}).code, kExitValidation);
    EXPECT_EQ(invoke({"bench", write_script("ok.json", single_layer_json()).string(), "--repeat", "0"}).code,
              kExitValidation);
    EXPECT_EQ(invoke({"--help"}).code, kExitOk);
}

TEST_F(CliTest, RunWritesImagesAndReport) {
    const fs::path out = dir / "three";
    const Invocation inv = invoke({"run", (kExamples / "three_layers.json").string(), "--out", out.string()});
    ASSERT_EQ(inv.code, kExitOk) << inv.err;
    for (const char* name : {"base.png", "layer0.png", "layer1.png", "layer2.png", "report.json"}) {
        EXPECT_TRUE(fs::exists(out / name)) << name;
    }
    std::ifstream in(out / "report.json");
    const json report = json::parse(in);
    ASSERT_EQ(report["edits"].size(), 3u);
    EXPECT_EQ(report["edits"][0]["denoiser_calls"], 8);
    EXPECT_EQ(report["edits"][1]["denoiser_calls"], 8);
    EXPECT_EQ(report["edits"][2]["denoiser_calls"], 4);
    EXPECT_EQ(report["base"]["denoiser_calls"], 25);
    EXPECT_EQ(report["cache_bytes"], 3 * 8192);
    const PixelImage last = decode_png(read_file(out / "layer2.png"));
    EXPECT_EQ(image_hash(last), report["composition_hash"]);
}

TEST_F(CliTest, RunIsDeterministic) {
    const EditScript s = load_script(kExamples / "three_layers.json");
    const RunResult a = run_script(s, dir / "a");
    const RunResult b = run_script(s, dir / "b");
    EXPECT_EQ(a.composition_hash, b.composition_hash);
    ASSERT_EQ(a.edits.size(), b.edits.size());
    for (std::size_t i = 0; i < a.edits.size(); ++i) EXPECT_EQ(a.edits[i].image_hash, b.edits[i].image_hash);
    EXPECT_EQ(read_file(dir / "a" / "layer1.png"), read_file(dir / "b" / "layer1.png"));
}

TEST_F(CliTest, RemoteRunMatchesLocal) {
    SessionManager manager{ServiceConfig{}};
    service::HttpService server(manager);
    server.bind("127.0.0.1", 0);
    server.start();
    const EditScript s = load_script(kExamples / "three_layers.json");
    const RunResult local = run_script(s, dir / "local");
    const RunResult remote = run_script_remote(s, "http://127.0.0.1:" + std::to_string(server.port()), dir / "remote");
    server.stop();
    EXPECT_EQ(remote.base_hash, local.base_hash);
    EXPECT_EQ(remote.composition_hash, local.composition_hash);
    ASSERT_EQ(remote.edits.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(remote.edits[i].image_hash, local.edits[i].image_hash);
    EXPECT_EQ(remote.report["remote"], "http://127.0.0.1:" + std::to_string(server.port()));
}

TEST_F(CliTest, RemoteErrorsKeepTheirCode) {
    const EditScript s = load_script(kExamples / "three_layers.json");
    // Nothing listens on port 1.
    EXPECT_EQ(ldb::testing::error_of([&] { run_script_remote(s, "http://127.0.0.1:1", dir / "x"); }),
              ErrorCode::backend_unavailable);
}

TEST_F(CliTest, BenchReportsCallRatios) {
    json j = single_layer_json();
    j["layers"].push_back(j["layers"][0]);
    j["layers"][1]["n"] = 4;
    const auto rows = bench_script(parse_script(j, dir), 2);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].denoiser_calls, 8u);
    EXPECT_DOUBLE_EQ(rows[0].call_ratio(), 3.125);
    EXPECT_EQ(rows[1].denoiser_calls, 4u);
    EXPECT_DOUBLE_EQ(rows[1].call_ratio(), 6.25);
    std::ostringstream csv;
    write_bench_csv(csv, rows);
    const std::string header = csv.str().substr(0, csv.str().find('\n'));
    EXPECT_NE(header.find("call_ratio"), std::string::npos) << header;
}

TEST(Range, Parsing) {
    EXPECT_EQ(parse_range("1:3"), (std::vector<double>{1, 2, 3}));
    EXPECT_EQ(parse_range("0:100:50"), (std::vector<double>{0, 50, 100}));
    EXPECT_EQ(parse_range("5,1,2.5"), (std::vector<double>{5, 1, 2.5}));
    EXPECT_EQ(ldb::testing::error_of([] { parse_range("3:1"); }), ErrorCode::bad_params);
    EXPECT_EQ(ldb::testing::error_of([] { parse_range("1:x"); }), ErrorCode::bad_params);
    EXPECT_EQ(ldb::testing::error_of([] { parse_ablate_param("gamma"); }), ErrorCode::bad_params);
    EXPECT_EQ(parse_ablate_param("alpha"), AblateParam::alpha);
}

template <typename Get>
bool non_decreasing(const std::vector<AblationRow>& rows, Get get) {
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (get(rows[i]) < get(rows[i - 1])) return false;
    }
    return true;
}

TEST(Ablate, LaterBlendKeepsMoreBackground) {
    const EditScript s = parse_script(single_layer_json(), ".");
    const auto rows = ablate(s, AblateParam::b, parse_range("18:23"));
    ASSERT_EQ(rows.size(), 6u);
    EXPECT_TRUE(non_decreasing(rows, [](const AblationRow& r) { return r.psnr_background; }));
    EXPECT_EQ(rows.front().r, 17);
    EXPECT_EQ(rows.back().b, 23);
}

TEST(Ablate, LaterRestartChangesLessInsideMask) {
    const EditScript s = parse_script(single_layer_json(), ".");
    const auto rows = ablate(s, AblateParam::r, parse_range("5:20:5"));
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_TRUE(non_decreasing(rows, [](const AblationRow& r) { return -r.mse_masked; }));
    EXPECT_EQ(rows[1].denoiser_calls, 15);
}

TEST(Ablate, StrengthGrowsEffectiveAlpha) {
    const EditScript s = parse_script(single_layer_json("a cat on a sofa"), ".");
    const auto rows = ablate(s, AblateParam::alpha, parse_range("0:100:25"));
    EXPECT_EQ(rows.front().alpha_effective, 0.0);
    EXPECT_TRUE(std::isinf(rows.front().psnr_background));
    EXPECT_TRUE(non_decreasing(rows, [](const AblationRow& r) { return r.mse_masked; }));
    EXPECT_NEAR(rows[4].alpha_effective / rows[1].alpha_effective, 2.0, 1e-9);
    const PixelImage chart = plot_ablation(AblateParam::alpha, rows);
    EXPECT_EQ(chart.width(), 640);
}

TEST(Ablate, OutOfRangeValuesAreRejectedUpFront) {
    const EditScript s = parse_script(single_layer_json(), ".");
    EXPECT_EQ(ldb::testing::error_of([&] { ablate(s, AblateParam::r, {0, 23}); }), ErrorCode::bad_params);
    EXPECT_EQ(ldb::testing::error_of([&] { ablate(s, AblateParam::b, {17}); }), ErrorCode::bad_params);
    EXPECT_EQ(ldb::testing::error_of([&] { ablate(s, AblateParam::alpha, {101}); }), ErrorCode::bad_params);
    json two = single_layer_json();
    two["layers"].push_back(two["layers"][0]);
    EXPECT_THROW(ablate(parse_script(two, "."), AblateParam::r, {5}), ScriptError);
}

TEST_F(CliTest, AblateCommandWritesCsvAndPlot) {
    const fs::path script = write_script("one.json", single_layer_json());
    const Invocation inv = invoke({"ablate", script.string(), "--param", "alpha", "--range", "0,50,100", "--plot",
                                   (dir / "plot.png").string()});
    ASSERT_EQ(inv.code, kExitOk) << inv.err;
    EXPECT_EQ(inv.out.rfind("param,value,r,b,alpha_star,psnr_background,mse_masked,drift", 0), 0u);
    EXPECT_EQ(std::count(inv.out.begin(), inv.out.end(), '\n'), 4);
    EXPECT_TRUE(fs::exists(dir / "plot.png"));
    EXPECT_EQ(invoke({"ablate", script.string(), "--param", "r", "--range", "23"}).code, kExitValidation);
}

TEST_F(CliTest, MetricsCommand) {
    const PixelImage a(4, 4, 100);
    PixelImage b(4, 4, 100);
    for (auto& v : b.data()) v = 102;
    std::vector<float> half(16, 0.0f);
    for (int i = 0; i < 8; ++i) half[static_cast<std::size_t>(i)] = 1.0f;
    write_file(dir / "a.png", encode_png(a));
    write_file(dir / "b.png", encode_png(b));
    write_file(dir / "m.png", encode_mask_png(Mask(4, 4, half, 1)));
    write_file(dir / "full.png", encode_mask_png(Mask::filled(4, 4, 1.0f, 1)));

    Invocation inv = invoke({"metrics", "--before", (dir / "a.png").string(), "--after", (dir / "a.png").string(),
                             "--mask", (dir / "m.png").string()});
    ASSERT_EQ(inv.code, kExitOk) << inv.err;
    EXPECT_EQ(json::parse(inv.out)["psnr_unmasked"], "inf");

    inv = invoke({"metrics", "--before", (dir / "a.png").string(), "--after", (dir / "b.png").string(), "--mask",
                  (dir / "m.png").string()});
    ASSERT_EQ(inv.code, kExitOk) << inv.err;
    const json m = json::parse(inv.out);
    EXPECT_NEAR(m["psnr_unmasked"].get<double>(), 42.11, 0.01);
    EXPECT_DOUBLE_EQ(m["mse_masked"].get<double>(), 4.0);

    // Every pixel masked: no background left to score.
    inv = invoke({"metrics", "--before", (dir / "a.png").string(), "--after", (dir / "b.png").string(), "--mask",
                  (dir / "full.png").string()});
    EXPECT_EQ(inv.code, kExitValidation);
}

}  // namespace
}  // namespace ldb::cli
