#include "condid/inference.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <thread>

namespace condid {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

nlohmann::ordered_json Backend::manifest_config() const {
    ojson j;
    j["kind"] = describe();
    return j;
}

HttpBackend::HttpBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {}

CompletionResult HttpBackend::complete(const InstructionRecord&,
                                       const std::string& rendered_prompt) {
    return execute_completion(cfg_, rendered_prompt);
}

std::string HttpBackend::describe() const {
    return "http(" + cfg_.endpoint + ", " + cfg_.model + ")";
}

nlohmann::ordered_json HttpBackend::manifest_config() const {
    ojson j;
    j["kind"] = "http";
    j["endpoint"] = cfg_.endpoint;
    j["model"] = cfg_.model;
    j["mode"] = std::string(backend_mode_name(cfg_.mode));
    j["temperature"] = cfg_.temperature;
    j["max_output_tokens"] = cfg_.max_output_tokens;
    j["parallelism"] = cfg_.parallelism;
    j["retry"] = ojson{{"max_attempts", cfg_.retry.max_attempts},
                       {"base_backoff_ms", cfg_.retry.base_backoff_ms}};
    j["auth_token_env"] = cfg_.auth_token_env;  // variable name only
    j["timeout_s"] = cfg_.timeout_s;
    return j;
}

void HttpBackend::preflight() { preflight_backend(cfg_); }

CompletionResult MockEchoBackend::complete(const InstructionRecord& rec,
                                           const std::string&) {
    CompletionResult r;
    r.text = rec.gold_output;
    r.ok = true;
    r.attempts = 1;
    r.http_status = 200;
    return r;
}

CompletionResult MockConstantBackend::complete(const InstructionRecord&,
                                               const std::string&) {
    CompletionResult r;
    r.text = text_;
    r.ok = true;
    r.attempts = 1;
    r.http_status = 200;
    return r;
}

nlohmann::ordered_json MockConstantBackend::manifest_config() const {
    ojson j;
    j["kind"] = "mock-constant";
    j["text"] = text_;
    return j;
}

RunManifest run_task(const std::vector<InstructionRecord>& records, Backend& backend,
                     int parallelism, const std::string& dataset_ref) {
    if (records.empty()) throw DataError("run_task: no records to run");
    backend.preflight();

    RunManifest manifest;
    manifest.dataset_ref = dataset_ref;
    manifest.backend = backend.manifest_config();
    manifest.started_at = iso8601_utc_now();
    manifest.records.resize(records.size());

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= records.size()) return;
            const std::string prompt = render_prompt(records[i]);
            const auto t0 = std::chrono::steady_clock::now();
            const CompletionResult r = backend.complete(records[i], prompt);
            const auto t1 = std::chrono::steady_clock::now();

            RunRecord& slot = manifest.records[i];
            slot.index = i;
            slot.source_id = records[i].source_id;
            slot.response = r.text;
            slot.ok = r.ok;
            slot.attempts = r.attempts;
            slot.http_status = r.http_status;
            slot.error = r.error;
            slot.latency_ms =
                std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
        }
    };

    const int workers = std::max(
        1, std::min<int>(parallelism, static_cast<int>(records.size())));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    manifest.finished_at = iso8601_utc_now();
    return manifest;
}

void write_run_manifest(const RunManifest& m, const fs::path& path) {
    ojson j;
    j["dataset_ref"] = m.dataset_ref;
    j["backend"] = m.backend;
    j["started_at"] = m.started_at;
    j["finished_at"] = m.finished_at;
    ojson items = ojson::array();
    for (const auto& r : m.records) {
        ojson item;
        item["index"] = r.index;
        item["source_id"] = r.source_id;
        item["response"] = r.response;
        item["ok"] = r.ok;
        item["attempts"] = r.attempts;
        item["http_status"] = r.http_status;
        item["latency_ms"] = r.latency_ms;
        item["error"] = r.error;
        items.push_back(std::move(item));
    }
    j["responses"] = std::move(items);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open file for writing: " + path.string());
    out << j.dump(2) << '\n';
}

RunManifest read_run_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open run manifest: " + path.string());
    ojson j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError("bad run manifest " + path.string() + ": " + e.what());
    }
    RunManifest m;
    m.dataset_ref = j.value("dataset_ref", std::string());
    if (j.contains("backend")) m.backend = j["backend"];
    m.started_at = j.value("started_at", std::string());
    m.finished_at = j.value("finished_at", std::string());
    if (!j.contains("responses") || !j["responses"].is_array())
        throw DataError("run manifest " + path.string() + " missing 'responses' array");
    for (const auto& item : j["responses"]) {
        RunRecord r;
        r.index = item.value("index", static_cast<std::size_t>(m.records.size()));
        r.source_id = item.value("source_id", std::string());
        if (!item.contains("response") || !item["response"].is_string())
            throw DataError("run manifest " + path.string() +
                            ": response entry missing 'response'");
        r.response = item["response"].get<std::string>();
        r.ok = item.value("ok", true);
        r.attempts = item.value("attempts", 1);
        r.http_status = item.value("http_status", 0);
        r.latency_ms = item.value("latency_ms", 0LL);
        r.error = item.value("error", std::string());
        m.records.push_back(std::move(r));
    }
    return m;
}

}  // namespace condid
