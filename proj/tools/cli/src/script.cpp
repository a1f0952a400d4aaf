// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#include "ldb/cli/script.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "ldb/error.hpp"
#include "ldb/session.hpp"

namespace ldb::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) throw ScriptError(where.empty() ? key : where + "." + key, "unknown field");
    }
}

const json& require(const json& j, const std::string& where, const char* key) {
    if (!j.contains(key)) throw ScriptError(where.empty() ? key : where + "." + key, "required field is missing");
    return j.at(key);
}

std::string path_of(const std::string& where, const char* key) { return where.empty() ? key : where + "." + key; }

void expect(bool ok, const std::string& where, const char* message) {
    if (!ok) throw ScriptError(where, message);
}

void check_number(const json& j, const std::string& where, const char* key, double lo, double hi) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    expect(v.is_number(), path_of(where, key), "expected a number");
    const double x = v.get<double>();
    if (x < lo || x > hi) {
        std::ostringstream msg;
        msg << "value " << x << " outside [" << lo << ", " << hi << "]";
        throw ScriptError(path_of(where, key), msg.str());
    }
}

void check_integer(const json& j, const std::string& where, const char* key, long long lo, long long hi) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    expect(v.is_number_integer(), path_of(where, key), "expected an integer");
    const bool huge = v.is_number_unsigned() && v.get<unsigned long long>() > static_cast<unsigned long long>(hi);
    const long long x = huge ? hi : v.get<long long>();
    if (huge || x < lo || x > hi) {
        throw ScriptError(path_of(where, key),
                          "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
}

void check_seed(const json& j, const std::string& where, const char* key) {
    if (!j.contains(key)) return;
    expect(j.at(key).is_number_unsigned() || (j.at(key).is_number_integer() && j.at(key).get<long long>() >= 0),
           path_of(where, key), "expected a non-negative integer seed");
}

void check_string(const json& j, const std::string& where, const char* key) {
    if (!j.contains(key)) return;
    expect(j.at(key).is_string(), path_of(where, key), "expected a string");
}

void check_box(const json& box, const std::string& where) {
    expect(box.is_object(), where, "expected an object {center_x, center_y, size}");
    reject_unknown(box, where, {"center_x", "center_y", "size"});
    for (const char* key : {"center_x", "center_y", "size"}) {
        require(box, where, key);
        check_integer(box, where, key, 0, 1 << 20);
    }
}

}  // namespace

EditScript parse_script(const json& j, const fs::path& source_dir) {
    expect(j.is_object(), "$", "script must be a JSON object");
    reject_unknown(j, "", {"backend_id", "toy", "n", "sigma", "base", "layers", "output_dir"});

    EditScript s;
    s.source_dir = source_dir;
    check_string(j, "", "backend_id");
    s.backend_id = j.value("backend_id", s.backend_id);
    if (j.contains("toy")) {
        expect(j.at("toy").is_object(), "toy", "expected an object");
        reject_unknown(j.at("toy"), "toy", {"latent_shape", "lambda_schedule", "target_scale", "default_steps"});
        try {
            s.toy = toy_config_from_json(j.at("toy"));
        } catch (const Error& e) {
            throw ScriptError("toy", e.what());
        }
    }
    check_integer(j, "", "n", kMinSteps, 10000);
    s.steps = j.value("n", s.steps);
    check_number(j, "", "sigma", -1e6, 1e6);
    s.sigma = j.value("sigma", s.sigma);

    const json& base = require(j, "", "base");
    expect(base.is_object(), "base", "expected an object");
    reject_unknown(base, "base", {"prompt", "seed", "image"});
    check_string(base, "base", "prompt");
    check_seed(base, "base", "seed");
    check_string(base, "base", "image");
    const bool has_image = base.contains("image");
    const bool has_seed = base.contains("seed");
    if (has_image == has_seed) throw ScriptError("base", "give exactly one of seed (with prompt) or image");
    s.base_prompt = base.value("prompt", "");
    if (has_seed) {
        require(base, "base", "prompt");
        s.base_seed = Seed{base.at("seed").get<std::uint64_t>()};
    } else {
        fs::path image = base.at("image").get<std::string>();
        s.base_image = image.is_relative() ? source_dir / image : image;
    }

    const json& layers = require(j, "", "layers");
    expect(layers.is_array(), "layers", "expected an array");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string where = "layers[" + std::to_string(i) + "]";
        const json& l = layers[i];
        expect(l.is_object(), where, "expected an object");
        reject_unknown(l, where, {"prompt", "seed", "alpha_star", "n", "sigma", "b", "mask", "box", "mask_fill", "visible"});
        require(l, where, "prompt");
        check_string(l, where, "prompt");
        check_seed(l, where, "seed");
        check_number(l, where, "alpha_star", 0.0, 100.0);
        check_integer(l, where, "n", kMinSteps, s.steps);
        check_number(l, where, "sigma", -1e6, 1e6);
        check_integer(l, where, "b", 1, s.steps - 1);
        check_string(l, where, "mask");
        check_number(l, where, "mask_fill", 0.0, 1.0);
        if (l.contains("box")) check_box(l.at("box"), where + ".box");
        if (l.contains("visible")) expect(l.at("visible").is_boolean(), where + ".visible", "expected a boolean");
        const int sources = static_cast<int>(l.contains("mask")) + static_cast<int>(l.contains("box")) +
                            static_cast<int>(l.contains("mask_fill"));
        if (sources != 1) throw ScriptError(where, "give exactly one of mask, box or mask_fill");

        LayerSpec spec;
        spec.params = l;
        spec.params.erase("visible");
        if (l.contains("mask")) {
            fs::path mask = l.at("mask").get<std::string>();
            spec.params.erase("mask");
            spec.params["mask_path"] = (mask.is_relative() ? source_dir / mask : mask).string();
        }
        spec.visible = l.value("visible", true);
        s.layers.push_back(std::move(spec));
    }

    check_string(j, "", "output_dir");
    const fs::path out = j.value("output_dir", std::string("out"));
    s.output_dir = out.is_relative() ? source_dir / out : out;
    return s;
}

EditScript load_script(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ScriptError(path.string(), "cannot open script");
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        // e.byte is 1-based and points just past the offending character.
        const std::size_t end = std::min(text.size(), e.byte == 0 ? 0 : e.byte - 1);
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n');
        const std::size_t line_start = text.rfind('\n', end == 0 ? 0 : end - 1);
        const std::size_t column = line_start == std::string::npos || end == 0 ? end + 1 : end - line_start;
        throw ScriptError("line " + std::to_string(line) + ", column " + std::to_string(column),
                          path.string() + " is not valid JSON");
    }
    return parse_script(j, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

std::vector<EditParams> resolve_layers(const EditScript& script, const BackendDescriptor& backend) {
    std::vector<EditParams> out;
    for (std::size_t i = 0; i < script.layers.size(); ++i) {
        try {
            EditParams params = edit_params_from_json(script.layers[i].params, backend, script.sigma);
            params.validate(script.steps);
            out.push_back(std::move(params));
        } catch (const Error& e) {
            throw ScriptError("layers[" + std::to_string(i) + "]", e.what());
        }
    }
    return out;
}

}  // namespace ldb::cli
