// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#include <httplib.h>

#include "ldb/cli/commands.hpp"
#include "ldb/error.hpp"
#include "ldb/hash.hpp"
#include "ldb/session.hpp"

namespace ldb::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string layer_file(int k) { return "layer" + std::to_string(k) + ".png"; }

json edit_entry_json(const EditEntry& e) {
    return {{"layer", e.layer},
            {"image", e.image_file},
            {"image_hash", e.image_hash},
            {"denoiser_calls", e.denoiser_calls},
            {"alpha_effective", e.alpha_effective},
            {"wall_ms", e.recompute.wall_ms},
            {"recompute", report_to_json(e.recompute)}};
}

void write_report(const fs::path& dir, const RunResult& result) {
    const std::string text = result.report.dump(2) + "\n";
    write_file(dir / "report.json", std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace

LocalRun execute_script(const EditScript& script) {
    LocalRun run;
    run.backend = make_backend(script.backend_id, script.toy);
    run.params = resolve_layers(script, run.backend->descriptor());

    const std::uint64_t calls_before = run.backend->denoiser_calls();
    BaseImage base = script.base_image
                         ? invert_base(*run.backend, decode_png(read_file(*script.base_image)), script.base_prompt,
                                       script.steps)
                         : generate_base(*run.backend, *script.base_seed, script.base_prompt, script.steps);
    const std::uint64_t base_calls = run.backend->denoiser_calls() - calls_before;
    run.result.base_hash = image_hash(base.image);
    run.stack = std::make_unique<LayerStack>(run.backend, std::move(base));

    for (std::size_t i = 0; i < run.params.size(); ++i) {
        EditEntry entry;
        entry.layer = run.stack->add_layer(run.params[i], &entry.recompute);
        const EditResult& out = *run.stack->layer(entry.layer).output;
        entry.denoiser_calls = out.denoiser_calls;
        entry.alpha_effective = out.alpha_effective;
        if (!script.layers[i].visible) {
            const RecomputeReport hidden = run.stack->set_visibility(entry.layer, false);
            entry.recompute.inversion_calls += hidden.inversion_calls;
            entry.recompute.generation_calls += hidden.generation_calls;
            entry.recompute.edit_calls += hidden.edit_calls;
            entry.recompute.wall_ms += hidden.wall_ms;
        }
        entry.image_file = layer_file(entry.layer);
        run.compositions.push_back(run.stack->compose());
        entry.image_hash = image_hash(run.compositions.back());
        run.result.edits.push_back(std::move(entry));
    }
    run.result.composition_hash = image_hash(run.stack->compose());
    run.result.cache_bytes = run.stack->cache().size_bytes(run.stack->session_id());

    json edits = json::array();
    for (const EditEntry& e : run.result.edits) edits.push_back(edit_entry_json(e));
    run.result.report = {{"backend", run.backend->descriptor().id},
                         {"n", script.steps},
                         {"base", {{"image", "base.png"}, {"image_hash", run.result.base_hash}, {"denoiser_calls", base_calls}}},
                         {"edits", std::move(edits)},
                         {"composition_hash", run.result.composition_hash},
                         {"cache_bytes", run.result.cache_bytes},
                         {"backend_denoiser_calls", run.backend->denoiser_calls()}};
    return run;
}

RunResult run_script(const EditScript& script, const std::optional<fs::path>& output_dir) {
    LocalRun run = execute_script(script);
    const fs::path dir = output_dir.value_or(script.output_dir);
    fs::create_directories(dir);
    write_file(dir / "base.png", encode_png(run.stack->base().image));
    for (std::size_t k = 0; k < run.compositions.size(); ++k) {
        write_file(dir / layer_file(static_cast<int>(k)), encode_png(run.compositions[k]));
    }
    write_report(dir, run.result);
    return std::move(run.result);
}

namespace {

class RemoteClient {
public:
    explicit RemoteClient(const std::string& url) : m_client(url) {
        m_client.set_read_timeout(300, 0);
        m_client.set_write_timeout(300, 0);
    }

    json call(const std::string& method, const std::string& path, const json& body = nullptr) {
        const std::string payload = body.is_null() ? std::string() : body.dump();
        httplib::Result res = method == "POST"    ? m_client.Post(path, payload, "application/json")
                              : method == "PATCH" ? m_client.Patch(path, payload, "application/json")
                                                  : m_client.Get(path);
        return check(res, method, path);
    }

    std::vector<std::uint8_t> get_bytes(const std::string& path) {
        httplib::Result res = m_client.Get(path);
        check(res, "GET", path);
        return {res->body.begin(), res->body.end()};
    }

private:
    static json check(const httplib::Result& res, const std::string& method, const std::string& path) {
        if (!res) {
            fail(ErrorCode::backend_unavailable, method + " " + path + ": " + httplib::to_string(res.error()));
        }
        if (res->status >= 400) {
            json err = json::parse(res->body, nullptr, false);
            const std::string code = err.is_object() ? err.value("code", "") : "";
            const std::string message = err.is_object() ? err.value("message", res->body) : res->body;
            for (ErrorCode c : {ErrorCode::cache_miss, ErrorCode::bad_shape, ErrorCode::bad_params,
                                ErrorCode::backend_unavailable, ErrorCode::not_found, ErrorCode::conflict}) {
                if (to_string(c) == code) fail(c, "remote: " + message);
            }
            fail(ErrorCode::backend_unavailable, "remote " + method + " " + path + " -> HTTP " + std::to_string(res->status));
        }
        if (res->get_header_value("Content-Type") == "application/json") return json::parse(res->body);
        return nullptr;
    }

    httplib::Client m_client;
};

}  // namespace

RunResult run_script_remote(const EditScript& script, const std::string& base_url,
                            const std::optional<fs::path>& output_dir) {
    RemoteClient client(base_url);
    json create = {{"backend_id", script.backend_id}, {"toy", toy_config_to_json(script.toy)}, {"n", script.steps}};
    if (script.base_image) {
        create["image_png"] = base64_encode(read_file(*script.base_image));
        create["prompt"] = script.base_prompt;
    } else {
        create["prompt"] = script.base_prompt;
        create["seed"] = script.base_seed->value;
    }

    // Validate locally first so schema errors never reach the server.
    resolve_layers(script, make_backend(script.backend_id, script.toy)->descriptor());

    const json session = client.call("POST", "/sessions", create);
    const std::string id = session.at("id").get<std::string>();
    const std::string root = "/sessions/" + id;
    const fs::path dir = output_dir.value_or(script.output_dir);
    fs::create_directories(dir);
    write_file(dir / "base.png", base64_decode(session.at("image_png").get<std::string>()));

    RunResult result;
    result.base_hash = session.at("image_hash").get<std::string>();
    json edits = json::array();
    for (const LayerSpec& spec : script.layers) {
        json body = spec.params;
        if (body.contains("mask_path")) {
            body["mask_png"] = base64_encode(read_file(body.at("mask_path").get<std::string>()));
            body.erase("mask_path");
        }
        if (!body.contains("sigma")) body["sigma"] = script.sigma;
        const json added = client.call("POST", root + "/layers", body);
        EditEntry entry;
        entry.layer = added.at("index").get<int>();
        entry.denoiser_calls = added.at("result").at("denoiser_calls").get<int>();
        entry.alpha_effective = added.at("result").at("alpha_effective").get<double>();
        const json& rep = added.at("report");
        entry.recompute.inversion_calls = rep.at("inversion_calls").get<std::uint64_t>();
        entry.recompute.generation_calls = rep.at("generation_calls").get<std::uint64_t>();
        entry.recompute.edit_calls = rep.at("edit_calls").get<std::uint64_t>();
        entry.recompute.wall_ms = rep.at("wall_ms").get<double>();
        entry.recompute.recomputed = rep.at("recomputed").get<std::vector<int>>();
        if (!spec.visible) client.call("PATCH", root + "/layers/" + std::to_string(entry.layer), {{"visible", false}});
        const std::vector<std::uint8_t> png = client.get_bytes(root + "/image");
        entry.image_file = layer_file(entry.layer);
        entry.image_hash = image_hash(decode_png(png));
        write_file(dir / entry.image_file, png);
        edits.push_back(edit_entry_json(entry));
        result.edits.push_back(std::move(entry));
    }
    result.composition_hash = image_hash(decode_png(client.get_bytes(root + "/image")));
    const json stats = client.call("GET", root + "/stats");
    result.cache_bytes = stats.at("cache_bytes").get<std::size_t>();
    result.report = {{"backend", session.at("backend")},
                     {"n", script.steps},
                     {"session_id", id},
                     {"remote", base_url},
                     {"base", {{"image", "base.png"}, {"image_hash", result.base_hash}}},
                     {"edits", std::move(edits)},
                     {"composition_hash", result.composition_hash},
                     {"cache_bytes", result.cache_bytes}};
    write_report(dir, result);
    return result;
}

}  // namespace ldb::cli
