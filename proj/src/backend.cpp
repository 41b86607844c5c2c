#include "condid/backend.hpp"

#include "httplib.h"
#include "json.hpp"

#include <netdb.h>

#include <chrono>
#include <cstdlib>
#include <thread>

namespace condid {

using ojson = nlohmann::ordered_json;

namespace {

struct ParsedEndpoint {
    std::string base;  // scheme://host[:port], what httplib::Client takes
    std::string host;
    std::string port;
};

ParsedEndpoint parse_endpoint(const std::string& endpoint) {
    ParsedEndpoint out;
    std::string rest;
    if (endpoint.rfind("http://", 0) == 0) {
        rest = endpoint.substr(7);
        out.port = "80";
    } else if (endpoint.rfind("https://", 0) == 0) {
        rest = endpoint.substr(8);
        out.port = "443";
    } else {
        throw BackendError("endpoint must start with http:// or https://: " + endpoint);
    }
    // strip any path suffix; the completion paths are fixed
    const auto slash = rest.find('/');
    if (slash != std::string::npos) rest = rest.substr(0, slash);
    const auto colon = rest.rfind(':');
    if (colon != std::string::npos) {
        out.host = rest.substr(0, colon);
        out.port = rest.substr(colon + 1);
    } else {
        out.host = rest;
    }
    if (out.host.empty()) throw BackendError("endpoint has no host: " + endpoint);
    const bool https = endpoint.rfind("https://", 0) == 0;
    out.base = (https ? "https://" : "http://") + out.host;
    if (!(out.port == (https ? "443" : "80"))) out.base += ":" + out.port;
    return out;
}

bool is_transient_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

std::optional<std::string> bearer_token(const BackendConfig& cfg) {
    if (cfg.auth_token_env.empty()) return std::nullopt;
    const char* v = std::getenv(cfg.auth_token_env.c_str());
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
}

}  // namespace

std::string_view backend_mode_name(BackendMode m) {
    return m == BackendMode::Chat ? "chat" : "completion";
}

std::optional<BackendMode> backend_mode_from_string(std::string_view s) {
    const std::string v = to_lower(trim(s));
    if (v == "chat") return BackendMode::Chat;
    if (v == "completion") return BackendMode::Completion;
    return std::nullopt;
}

std::string wrap_completion_prompt(std::string_view prompt) {
    std::string out = "Human:\n";
    out += prompt;
    out += "\nAssistant:\n";
    return out;
}

std::string build_request_body(const BackendConfig& cfg, const std::string& prompt) {
    ojson j;
    j["model"] = cfg.model;
    if (cfg.mode == BackendMode::Chat) {
        j["messages"] = ojson::array({ojson{{"role", "user"}, {"content", prompt}}});
    } else {
        j["prompt"] = wrap_completion_prompt(prompt);
    }
    j["temperature"] = cfg.temperature;
    j["max_tokens"] = cfg.max_output_tokens;
    return j.dump();
}

std::string completion_path(BackendMode mode) {
    return mode == BackendMode::Chat ? "/v1/chat/completions" : "/v1/completions";
}

std::optional<std::string> extract_completion_text(BackendMode mode,
                                                   const std::string& body) {
    ojson j = ojson::parse(body, nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
        return std::nullopt;
    const auto& choice = j["choices"][0];
    if (mode == BackendMode::Chat) {
        if (choice.contains("message") && choice["message"].contains("content") &&
            choice["message"]["content"].is_string())
            return choice["message"]["content"].get<std::string>();
        return std::nullopt;
    }
    if (choice.contains("text") && choice["text"].is_string())
        return choice["text"].get<std::string>();
    return std::nullopt;
}

void preflight_backend(const BackendConfig& cfg) {
    const ParsedEndpoint ep = parse_endpoint(cfg.endpoint);
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const int rc = getaddrinfo(ep.host.c_str(), ep.port.c_str(), &hints, &res);
    if (rc != 0)
        throw BackendError("endpoint unresolvable: " + cfg.endpoint + " (" +
                           gai_strerror(rc) + ")");
    freeaddrinfo(res);
}

CompletionResult execute_completion(const BackendConfig& cfg, const std::string& prompt) {
    CompletionResult result;
    ParsedEndpoint ep;
    try {
        ep = parse_endpoint(cfg.endpoint);
    } catch (const BackendError& e) {
        result.error = e.what();
        result.attempts = 1;
        return result;
    }

    const std::string body = build_request_body(cfg, prompt);
    const std::string path = completion_path(cfg.mode);

    httplib::Client cli(ep.base);
    cli.set_connection_timeout(cfg.timeout_s, 0);
    cli.set_read_timeout(cfg.timeout_s, 0);
    cli.set_write_timeout(cfg.timeout_s, 0);
    httplib::Headers headers;
    if (auto token = bearer_token(cfg)) headers.emplace("Authorization", "Bearer " + *token);

    const int max_attempts = std::max(1, cfg.retry.max_attempts);
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        result.attempts = attempt;
        auto res = cli.Post(path, headers, body, "application/json");
        if (!res) {
            result.error = "transport error: " + httplib::to_string(res.error());
        } else if (res->status == 200) {
            result.http_status = res->status;
            auto text = extract_completion_text(cfg.mode, res->body);
            if (!text) {
                result.error = "malformed backend response body";
                return result;  // a 200 with an unusable body is not retried
            }
            result.text = *text;
            result.ok = true;
            result.error.clear();
            return result;
        } else {
            result.http_status = res->status;
            result.error = "HTTP " + std::to_string(res->status);
            if (!is_transient_status(res->status)) return result;  // hard 4xx
        }
        if (attempt < max_attempts) {
            const auto delay = std::chrono::milliseconds(
                static_cast<long long>(cfg.retry.base_backoff_ms) << (attempt - 1));
            std::this_thread::sleep_for(delay);
        }
    }
    return result;  // retries exhausted; ok stays false
}

}  // namespace condid
