// Executes an instruction dataset against a model backend with bounded
// concurrency, per-request retries and a reproducible run manifest.
#pragma once

#include "condid/backend.hpp"
#include "condid/instructions.hpp"

#include "json.hpp"

#include <filesystem>
#include <memory>
#include <vector>

namespace condid {

class Backend {
public:
    virtual ~Backend() = default;
    // The rendered prompt is the only record content a backend may send;
    // gold_output never leaves the process.
    virtual CompletionResult complete(const InstructionRecord& rec,
                                      const std::string& rendered_prompt) = 0;
    virtual std::string describe() const = 0;
    // Kind/config summary for the run manifest (auth token never included).
    virtual nlohmann::ordered_json manifest_config() const;
    // Called once before a run; throws BackendError to abort early.
    virtual void preflight() {}
};

class HttpBackend : public Backend {
public:
    explicit HttpBackend(BackendConfig cfg);
    CompletionResult complete(const InstructionRecord& rec,
                              const std::string& rendered_prompt) override;
    std::string describe() const override;
    nlohmann::ordered_json manifest_config() const override;
    void preflight() override;
    const BackendConfig& config() const { return cfg_; }

private:
    BackendConfig cfg_;
};

// Answers every prompt with the record's gold output; end-to-end identity
// checks without a live model.
class MockEchoBackend : public Backend {
public:
    CompletionResult complete(const InstructionRecord& rec, const std::string&) override;
    std::string describe() const override { return "mock-echo"; }
};

class MockConstantBackend : public Backend {
public:
    explicit MockConstantBackend(std::string text) : text_(std::move(text)) {}
    CompletionResult complete(const InstructionRecord&, const std::string&) override;
    std::string describe() const override { return "mock-constant"; }
    nlohmann::ordered_json manifest_config() const override;

private:
    std::string text_;
};

struct RunRecord {
    std::size_t index = 0;
    std::string source_id;
    std::string response;  // verbatim; empty when the request failed
    bool ok = false;
    int attempts = 0;
    int http_status = 0;
    long long latency_ms = 0;
    std::string error;
};

struct RunManifest {
    std::string dataset_ref;  // path or hash of the dataset this run covers
    nlohmann::ordered_json backend;
    std::string started_at;
    std::string finished_at;
    std::vector<RunRecord> records;  // one slot per input record, input order
};

// Sends every rendered prompt once (plus retries) through `backend` with a
// worker pool of the given size. Failed records keep their slot with an
// empty response and ok=false; the run only aborts if preflight fails.
RunManifest run_task(const std::vector<InstructionRecord>& records, Backend& backend,
                     int parallelism = 1, const std::string& dataset_ref = "");

void write_run_manifest(const RunManifest& m, const std::filesystem::path& path);
RunManifest read_run_manifest(const std::filesystem::path& path);

}  // namespace condid
