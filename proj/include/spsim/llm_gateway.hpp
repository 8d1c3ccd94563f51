#pragma once

// Chat-completion client over OpenAI-compatible endpoints. One wire protocol
// covers local and cloud backends; transport is injectable so the retry and
// wire-format logic is testable without a network.

#include "spsim/prompt_forge.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

namespace spsim {

struct BackendConfig {
    std::string backend_id = "local";
    std::string base_url = "http://localhost:11434/v1";
    std::string model_name = "llama3.1:8b";
    std::string api_key_env;  // environment variable holding the key; empty = none
    double temperature = 1.0;
    double top_p = 1.0;
    int max_output_tokens = 300;
    std::chrono::milliseconds timeout{30000};
    int max_retries = 3;
    int max_concurrency = 4;
    std::chrono::milliseconds retry_initial_delay{500};

    void validate() const {
        if (temperature < 0.0 || temperature > 2.0)
            fail(ErrorKind::config, "temperature must be in [0,2]");
        if (top_p <= 0.0 || top_p > 1.0) fail(ErrorKind::config, "top_p must be in (0,1]");
        if (max_concurrency < 1) fail(ErrorKind::config, "max_concurrency must be >= 1");
        if (max_retries < 0) fail(ErrorKind::config, "max_retries must be >= 0");
        if (base_url.empty()) fail(ErrorKind::config, "base_url must not be empty");
    }

    static BackendConfig from_json(const ojson& j) {
        BackendConfig c;
        c.backend_id = j.value("backend_id", c.backend_id);
        c.base_url = j.value("base_url", c.base_url);
        c.model_name = j.value("model_name", c.model_name);
        c.api_key_env = j.value("api_key_env", c.api_key_env);
        c.temperature = j.value("temperature", c.temperature);
        c.top_p = j.value("top_p", c.top_p);
        c.max_output_tokens = j.value("max_output_tokens", c.max_output_tokens);
        c.timeout = std::chrono::milliseconds(j.value("timeout_ms", c.timeout.count()));
        c.max_retries = j.value("max_retries", c.max_retries);
        c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
        c.retry_initial_delay = std::chrono::milliseconds(
            j.value("retry_initial_delay_ms", c.retry_initial_delay.count()));
        c.validate();
        return c;
    }

    ojson to_json() const {
        return ojson{{"backend_id", backend_id},
                     {"base_url", base_url},
                     {"model_name", model_name},
                     {"api_key_env", api_key_env},
                     {"temperature", temperature},
                     {"top_p", top_p},
                     {"max_output_tokens", max_output_tokens},
                     {"timeout_ms", timeout.count()},
                     {"max_retries", max_retries},
                     {"max_concurrency", max_concurrency},
                     {"retry_initial_delay_ms", retry_initial_delay.count()}};
    }
};

enum class FinishReason { stop, length, error };

inline const char* to_string(FinishReason r) {
    switch (r) {
        case FinishReason::stop: return "stop";
        case FinishReason::length: return "length";
        case FinishReason::error: return "error";
    }
    return "?";
}

struct TokenUsage {
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

struct CompletionResult {
    std::string raw_text;
    FinishReason finish_reason = FinishReason::stop;
    std::chrono::milliseconds latency{0};
    std::optional<TokenUsage> usage;
    int attempt_count = 1;
};

// `sample_key` identifies the (cell, attempt) a completion belongs to so that
// scripted backends can resample deterministically regardless of scheduling;
// HTTP backends ignore it.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual CompletionResult complete(const PromptBundle& bundle, uint64_t sample_key = 0) = 0;
    virtual const BackendConfig& config() const = 0;
};

// Bounds in-flight requests per backend.
class ConcurrencyGate {
public:
    explicit ConcurrencyGate(int slots) : available_(slots) {}

    void acquire() {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&] { return available_ > 0; });
        --available_;
    }
    void release() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            ++available_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int available_;
};

class GateLock {
public:
    explicit GateLock(ConcurrencyGate& gate) : gate_(gate) { gate_.acquire(); }
    ~GateLock() { gate_.release(); }
    GateLock(const GateLock&) = delete;
    GateLock& operator=(const GateLock&) = delete;

private:
    ConcurrencyGate& gate_;
};

// Thread-safe JSONL appender used for request/response audit logs.
class AuditLog {
public:
    explicit AuditLog(const std::string& path) : path_(path) {}

    void append(const ojson& entry) {
        std::lock_guard<std::mutex> lock(mutex_);
        std::ofstream out(path_, std::ios::app | std::ios::binary);
        if (!out) return;  // auditing never takes the run down
        out << entry.dump() << '\n';
    }

private:
    std::string path_;
    std::mutex mutex_;
};

struct HttpReply {
    bool network_error = false;
    std::string error_detail;
    int status = 0;
    std::string body;
};

// (path, request body, bearer key or empty) -> reply
using HttpTransport =
    std::function<HttpReply(const std::string& path, const std::string& body,
                            const std::string& api_key)>;

HttpTransport make_httplib_transport(const BackendConfig& cfg);  // defined below

class HttpChatBackend : public ChatBackend {
public:
    explicit HttpChatBackend(BackendConfig cfg, HttpTransport transport = nullptr)
        : cfg_(std::move(cfg)),
          gate_(cfg_.max_concurrency),
          transport_(transport ? std::move(transport) : make_httplib_transport(cfg_)) {
        cfg_.validate();
    }

    void set_audit_log(std::shared_ptr<AuditLog> log) { audit_ = std::move(log); }

    const BackendConfig& config() const override { return cfg_; }

    CompletionResult complete(const PromptBundle& bundle, uint64_t /*sample_key*/ = 0) override {
        if (bundle.system_message.empty() && bundle.user_message.empty())
            fail(ErrorKind::config, "refusing to send an empty prompt");

        const ojson request = {
            {"model", cfg_.model_name},
            {"messages",
             ojson::array({ojson{{"role", "system"}, {"content", bundle.system_message}},
                           ojson{{"role", "user"}, {"content", bundle.user_message}}})},
            {"temperature", cfg_.temperature},
            {"top_p", cfg_.top_p},
            {"max_tokens", cfg_.max_output_tokens}};
        const std::string body = request.dump();

        std::string api_key;
        if (!cfg_.api_key_env.empty()) {
            const char* v = std::getenv(cfg_.api_key_env.c_str());
            if (!v)
                fail(ErrorKind::config, "backend '" + cfg_.backend_id +
                                            "': environment variable " + cfg_.api_key_env +
                                            " is not set");
            api_key = v;
        }

        const auto started = std::chrono::steady_clock::now();
        std::string last_error;
        for (int attempt = 1; attempt <= cfg_.max_retries + 1; ++attempt) {
            HttpReply reply;
            {
                GateLock lock(gate_);
                reply = transport_("/chat/completions", body, api_key);
            }
            if (audit_) {
                audit_->append({{"backend_id", cfg_.backend_id},
                                {"attempt", attempt},
                                {"request", request},
                                {"status", reply.status},
                                {"network_error", reply.network_error},
                                {"response", reply.body}});
            }

            if (!reply.network_error && reply.status == 200) {
                CompletionResult res = parse_completion(reply.body);
                res.attempt_count = attempt;
                res.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - started);
                return res;
            }

            const bool retryable = reply.network_error || reply.status == 408 ||
                                   reply.status == 429 || reply.status >= 500;
            last_error = reply.network_error
                             ? "network error: " + reply.error_detail
                             : "HTTP " + std::to_string(reply.status);
            if (!retryable)
                fail(ErrorKind::request, "backend '" + cfg_.backend_id + "': " + last_error +
                                             " (attempt " + std::to_string(attempt) + ")");
            if (attempt <= cfg_.max_retries) {
                auto delay = cfg_.retry_initial_delay * (1ll << (attempt - 1));
                std::this_thread::sleep_for(delay);
            }
        }
        fail(ErrorKind::transport, "backend '" + cfg_.backend_id + "': " + last_error +
                                       " after " + std::to_string(cfg_.max_retries + 1) +
                                       " attempts");
    }

private:
    CompletionResult parse_completion(const std::string& body) const {
        ojson j = ojson::parse(body, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || j["choices"].empty())
            fail(ErrorKind::request,
                 "backend '" + cfg_.backend_id + "': unparsable completion body");
        const auto& choice = j["choices"][0];
        CompletionResult res;
        res.raw_text = choice.contains("message") ? choice["message"].value("content", "")
                                                  : choice.value("text", "");
        const std::string reason = choice.value("finish_reason", "stop");
        res.finish_reason = reason == "length" ? FinishReason::length
                            : reason == "stop" ? FinishReason::stop
                                               : FinishReason::error;
        if (j.contains("usage")) {
            TokenUsage u;
            u.prompt_tokens = j["usage"].value("prompt_tokens", 0);
            u.completion_tokens = j["usage"].value("completion_tokens", 0);
            res.usage = u;
        }
        return res;
    }

    BackendConfig cfg_;
    ConcurrencyGate gate_;
    HttpTransport transport_;
    std::shared_ptr<AuditLog> audit_;
};

}  // namespace spsim

// The real transport lives behind the same signature as the test doubles.
#include <httplib.h>

namespace spsim {

inline HttpTransport make_httplib_transport(const BackendConfig& cfg) {
    // split base_url into client root and path prefix
    std::string root = cfg.base_url, prefix;
    const size_t scheme = root.find("://");
    if (scheme != std::string::npos) {
        const size_t slash = root.find('/', scheme + 3);
        if (slash != std::string::npos) {
            prefix = root.substr(slash);
            root = root.substr(0, slash);
        }
    }
    if (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    const auto timeout = cfg.timeout;

    return [root, prefix, timeout](const std::string& path, const std::string& body,
                                   const std::string& api_key) -> HttpReply {
        httplib::Client client(root);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        httplib::Headers headers;
        if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
        auto res = client.Post(prefix + path, headers, body, "application/json");
        HttpReply reply;
        if (!res) {
            reply.network_error = true;
            reply.error_detail = httplib::to_string(res.error());
            return reply;
        }
        reply.status = res->status;
        reply.body = res->body;
        return reply;
    };
}

}  // namespace spsim
