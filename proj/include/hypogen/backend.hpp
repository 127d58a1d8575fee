#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hypogen/dates.hpp"

namespace hypogen::backend {

// ---------------------------------------------------------------------------
// Chat-completion wire types
// ---------------------------------------------------------------------------

enum class Role { system, user, assistant, tool };

std::string_view to_string(Role role);
Role role_from_string(std::string_view text);

struct ChatMessage {
    Role role = Role::user;
    std::string content;
    std::string tool_name;  // set iff role == tool
};

/// Function made available to the model (OpenAI-style function calling).
struct ToolFunction {
    std::string name;
    std::string description;
    std::string parameters_json;  // JSON schema text
};

struct CompletionRequest {
    std::string model_id;
    std::vector<ChatMessage> messages;
    double temperature = 0.7;
    int max_tokens = 1024;
    std::vector<ToolFunction> tools;

    /// Throws InvalidInput on an ill-formed request (no messages, first
    /// message neither system nor user, tool_name on a non-tool message, ...).
    void validate() const;
};

/// Structured tool invocation requested by the model.
struct ToolCall {
    std::string name;
    std::string arguments_json;
};

struct TokenUsage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

struct CompletionResult {
    std::string text;
    std::optional<ToolCall> tool_call;
    TokenUsage usage;
    double latency_ms = 0.0;
    int retry_count = 0;
};

/// Stable request fingerprint: FNV-1a 64 over the model id and the message
/// roles + contents, hex encoded. Used to key scripted-mock tables.
std::string fingerprint(const CompletionRequest& request);

struct CompletionResult;

/// Builds the result a scripted reply stands for: a JSON object with a
/// "tool_call" member becomes a structured tool call, anything else is plain
/// text. Token usage is derived from whitespace counts so mocks stay
/// deterministic.
CompletionResult make_scripted_result(const CompletionRequest& request,
                                      const std::string& reply);

// ---------------------------------------------------------------------------
// Backend interface
// ---------------------------------------------------------------------------

struct CallRecord {
    CompletionRequest request;
    CompletionResult result;
};

nlohmann::json to_json(const ChatMessage& message);
ChatMessage message_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CallRecord& record);

class Backend {
public:
    virtual ~Backend() = default;

    /// Validates, dispatches, and appends the call to the log (atomically
    /// per call; concurrent callers are safe).
    CompletionResult complete(const CompletionRequest& request);

    std::vector<CallRecord> call_log() const;
    std::size_t call_count() const;
    void clear_log();

protected:
    virtual CompletionResult do_complete(const CompletionRequest& request) = 0;

private:
    mutable std::mutex mutex_;
    std::vector<CallRecord> log_;
};

/// Wraps a function; handy for wiring bespoke providers and test doubles.
class CallbackBackend : public Backend {
public:
    using Fn = std::function<CompletionResult(const CompletionRequest&)>;
    explicit CallbackBackend(Fn fn) : fn_(std::move(fn)) {}

protected:
    CompletionResult do_complete(const CompletionRequest& request) override {
        return fn_(request);
    }

private:
    Fn fn_;
};

// ---------------------------------------------------------------------------
// Scripted mock
// ---------------------------------------------------------------------------

/// Deterministic mock: complete() is a pure lookup from request fingerprint
/// to reply. Unmatched fingerprints get the default reply and are logged.
/// A reply that is a JSON object with a "tool_call" member surfaces as a
/// structured tool call.
class ScriptedBackend : public Backend {
public:
    ScriptedBackend(std::map<std::string, std::string> script, std::string default_reply);

    /// Fallback reply for one model id, consulted before the global default.
    /// Lets a single mock drive multi-stage runs (generator vs judge).
    void set_model_default(std::string model_id, std::string reply);

    std::vector<std::string> unmatched_fingerprints() const;

    /// File schema: {"default_reply": str, "model_defaults": {model: str},
    /// "entries": {fingerprint: str}}.
    static std::unique_ptr<ScriptedBackend> from_file(const std::filesystem::path& path);

protected:
    CompletionResult do_complete(const CompletionRequest& request) override;

private:
    std::map<std::string, std::string> script_;
    std::map<std::string, std::string> model_defaults_;
    std::string default_reply_;
    mutable std::mutex mutex_;
    std::vector<std::string> unmatched_;
};

// ---------------------------------------------------------------------------
// HTTP provider
// ---------------------------------------------------------------------------

struct RetryPolicy {
    int max_attempts = 4;  // total attempts, first try included
    double base_delay_ms = 250.0;
    double backoff_factor = 2.0;
    double jitter_frac = 0.1;  // delay varies within +-jitter_frac * nominal

    /// Nominal delay before retry n (0-based): base * factor^n, jittered by
    /// unit_random in [0, 1).
    double delay_ms(int retry_index, double unit_random) const;
};

struct HttpConfig {
    std::string endpoint;  // scheme://host[:port]
    std::string path = "/v1/chat/completions";
    std::string api_key_env = "HYPOGEN_API_KEY";
    double timeout_sec = 60.0;
    RetryPolicy retry;
    /// Token-bucket rate limit; 0 disables it.
    double requests_per_sec = 0.0;
    int bucket_capacity = 1;
};

struct HttpResponse {
    int status = 0;  // <= 0 means transport failure
    std::string body;
};

using Transport = std::function<HttpResponse(const std::string& request_body)>;
using SleepFn = std::function<void(double ms)>;

/// De-facto chat-completions client: messages array in, choices array out.
/// Transient failures (429, 5xx, transport errors) are retried with
/// exponential backoff; auth failures are not.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpConfig config);

    /// Injectable transport and sleep, for fault-injection tests.
    HttpBackend(HttpConfig config, Transport transport, SleepFn sleep);

    static nlohmann::json request_body(const CompletionRequest& request);

protected:
    CompletionResult do_complete(const CompletionRequest& request) override;

private:
    void rate_limit_acquire();

    HttpConfig config_;
    Transport transport_;
    SleepFn sleep_;
    std::uint64_t jitter_state_;
    std::mutex bucket_mutex_;
    double bucket_tokens_;
    std::chrono::steady_clock::time_point bucket_last_;
};

// ---------------------------------------------------------------------------
// Model registry and the visibility gate
// ---------------------------------------------------------------------------

enum class ModelCategory { api, general, medicine, sft };

std::string_view to_string(ModelCategory category);
ModelCategory category_from_string(std::string_view text);

struct ModelEntry {
    std::string name;
    ModelCategory category = ModelCategory::general;
    std::string base_model;
    std::string sft_data;  // fine-tuning corpus description, as published
    std::optional<YearMonth> sft_data_date;
    YearMonth released;
};

std::vector<ModelEntry> load_registry(const std::filesystem::path& path);

ModelEntry model_entry_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModelEntry& entry);

struct VisibilityVerdict {
    bool pass = false;
    std::string reason;
};

/// Passes iff the model's training-data date (SFT data date when known,
/// release date otherwise) strictly precedes the unseen window start.
VisibilityVerdict validate_visibility(const ModelEntry& entry, YearMonth unseen_window_start);

}  // namespace hypogen::backend
