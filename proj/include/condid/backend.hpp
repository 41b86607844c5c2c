// Chat-completion wire protocol client: request building, response
// extraction, retries with exponential backoff. Shared by the task runner
// and the remote affective-analysis provider.
#pragma once

#include "condid/common.hpp"

#include <optional>
#include <string>

namespace condid {

struct RetryPolicy {
    int max_attempts = 3;
    int base_backoff_ms = 250;  // doubled on each retry
};

enum class BackendMode { Chat, Completion };

std::string_view backend_mode_name(BackendMode m);
std::optional<BackendMode> backend_mode_from_string(std::string_view s);

struct BackendConfig {
    std::string endpoint;  // scheme://host[:port]
    std::string model;
    BackendMode mode = BackendMode::Chat;
    double temperature = 0.0;
    int max_output_tokens = 256;
    int parallelism = 1;
    RetryPolicy retry;
    // Name of the environment variable holding the bearer token. The token
    // value itself is read at request time and never serialized.
    std::string auth_token_env;
    int timeout_s = 60;
};

struct CompletionResult {
    std::string text;
    bool ok = false;
    int attempts = 0;
    int http_status = 0;
    std::string error;
};

// "Human:\n{prompt}\nAssistant:\n" — the wrapper used in completion mode.
std::string wrap_completion_prompt(std::string_view prompt);

// Request body for the configured mode; chat sends the prompt as a single
// user message, completion sends the wrapped prompt.
std::string build_request_body(const BackendConfig& cfg, const std::string& prompt);
std::string completion_path(BackendMode mode);

// choices[0].message.content (chat) / choices[0].text (completion).
std::optional<std::string> extract_completion_text(BackendMode mode,
                                                   const std::string& body);

// Resolves the endpoint host; throws BackendError if the URL is malformed
// or the host does not resolve. Called once before a run issues requests.
void preflight_backend(const BackendConfig& cfg);

// One prompt -> one completion, with retries on timeouts and HTTP 429/5xx.
// Never throws for per-request failures; the result carries the error.
CompletionResult execute_completion(const BackendConfig& cfg, const std::string& prompt);

}  // namespace condid
