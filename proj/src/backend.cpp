#include "hypogen/backend.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "hypogen/errors.hpp"
#include "hypogen/jsonl.hpp"
#include "hypogen/metrics.hpp"

namespace hypogen::backend {

using nlohmann::json;

std::string_view to_string(Role role) {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
        case Role::tool: return "tool";
    }
    return "user";
}

Role role_from_string(std::string_view text) {
    if (text == "system") return Role::system;
    if (text == "user") return Role::user;
    if (text == "assistant") return Role::assistant;
    if (text == "tool") return Role::tool;
    throw InvalidInput("unknown chat role: '" + std::string(text) + "'");
}

void CompletionRequest::validate() const {
    if (model_id.empty()) throw InvalidInput("completion request: empty model id");
    if (messages.empty()) throw InvalidInput("completion request: no messages");
    if (messages.front().role != Role::system && messages.front().role != Role::user) {
        throw InvalidInput("completion request: first message must be system or user");
    }
    for (const auto& message : messages) {
        const bool is_tool = message.role == Role::tool;
        if (is_tool != !message.tool_name.empty()) {
            throw InvalidInput("completion request: tool_name must be set iff role is tool");
        }
    }
    if (temperature < 0.0) throw InvalidInput("completion request: negative temperature");
    if (max_tokens <= 0) throw InvalidInput("completion request: max_tokens must be > 0");
}

std::string fingerprint(const CompletionRequest& request) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::string_view text) {
        for (unsigned char c : text) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        h ^= 0x1f;  // field separator
        h *= 0x100000001b3ULL;
    };
    mix(request.model_id);
    for (const auto& message : request.messages) {
        mix(to_string(message.role));
        mix(message.content);
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json to_json(const ChatMessage& message) {
    json j = {{"role", std::string(to_string(message.role))}, {"content", message.content}};
    if (!message.tool_name.empty()) j["tool_name"] = message.tool_name;
    return j;
}

ChatMessage message_from_json(const json& j) {
    ChatMessage message;
    message.role = role_from_string(j.at("role").get<std::string>());
    message.content = j.at("content").get<std::string>();
    message.tool_name = j.value("tool_name", std::string{});
    return message;
}

json to_json(const CallRecord& record) {
    json messages = json::array();
    for (const auto& message : record.request.messages) messages.push_back(to_json(message));
    return {{"model", record.request.model_id},
            {"messages", std::move(messages)},
            {"reply", record.result.text},
            {"retry_count", record.result.retry_count},
            {"latency_ms", record.result.latency_ms}};
}

CompletionResult Backend::complete(const CompletionRequest& request) {
    request.validate();
    auto result = do_complete(request);
    std::lock_guard lock(mutex_);
    log_.push_back({request, result});
    return result;
}

std::vector<CallRecord> Backend::call_log() const {
    std::lock_guard lock(mutex_);
    return log_;
}

std::size_t Backend::call_count() const {
    std::lock_guard lock(mutex_);
    return log_.size();
}

void Backend::clear_log() {
    std::lock_guard lock(mutex_);
    log_.clear();
}

// ---------------------------------------------------------------------------
// ScriptedBackend
// ---------------------------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::map<std::string, std::string> script,
                                 std::string default_reply)
    : script_(std::move(script)), default_reply_(std::move(default_reply)) {}

void ScriptedBackend::set_model_default(std::string model_id, std::string reply) {
    model_defaults_[std::move(model_id)] = std::move(reply);
}

std::vector<std::string> ScriptedBackend::unmatched_fingerprints() const {
    std::lock_guard lock(mutex_);
    return unmatched_;
}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_file(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open mock script: " + path.string());
    json j = json::parse(in);
    std::map<std::string, std::string> script;
    if (j.contains("entries")) {
        for (const auto& [fp, reply] : j.at("entries").items()) {
            script[fp] = reply.get<std::string>();
        }
    }
    auto mock = std::make_unique<ScriptedBackend>(std::move(script),
                                                  j.value("default_reply", std::string{}));
    if (j.contains("model_defaults")) {
        for (const auto& [model, reply] : j.at("model_defaults").items()) {
            mock->set_model_default(model, reply.get<std::string>());
        }
    }
    return mock;
}

CompletionResult make_scripted_result(const CompletionRequest& request,
                                      const std::string& reply) {
    CompletionResult result;
    result.text = reply;
    // A JSON object reply with a "tool_call" member encodes a structured call.
    if (!reply.empty() && reply.front() == '{') {
        auto parsed = json::parse(reply, nullptr, false);
        if (parsed.is_object() && parsed.contains("tool_call")) {
            const auto& call = parsed.at("tool_call");
            ToolCall tool_call;
            tool_call.name = call.value("name", std::string{});
            const auto& args = call.at("arguments");
            tool_call.arguments_json = args.is_string() ? args.get<std::string>() : args.dump();
            result.tool_call = std::move(tool_call);
            result.text.clear();
        }
    }
    result.usage.prompt_tokens = 0;
    for (const auto& message : request.messages) {
        result.usage.prompt_tokens +=
            static_cast<std::int64_t>(metrics::whitespace_split(message.content).size());
    }
    result.usage.completion_tokens =
        static_cast<std::int64_t>(metrics::whitespace_split(reply).size());
    return result;
}

CompletionResult ScriptedBackend::do_complete(const CompletionRequest& request) {
    const auto fp = fingerprint(request);
    std::string reply;
    auto it = script_.find(fp);
    if (it != script_.end()) {
        reply = it->second;
    } else {
        {
            std::lock_guard lock(mutex_);
            unmatched_.push_back(fp);
        }
        auto model_it = model_defaults_.find(request.model_id);
        reply = model_it != model_defaults_.end() ? model_it->second : default_reply_;
    }
    return make_scripted_result(request, reply);
}

// ---------------------------------------------------------------------------
// HttpBackend
// ---------------------------------------------------------------------------

double RetryPolicy::delay_ms(int retry_index, double unit_random) const {
    const double nominal = base_delay_ms * std::pow(backoff_factor, retry_index);
    const double spread = jitter_frac * nominal;
    return nominal - spread + 2.0 * spread * unit_random;
}

namespace {

Transport make_httplib_transport(const HttpConfig& config) {
    return [config](const std::string& body) -> HttpResponse {
        httplib::Client client(config.endpoint);
        client.set_connection_timeout(static_cast<int>(config.timeout_sec));
        client.set_read_timeout(static_cast<int>(config.timeout_sec));
        httplib::Headers headers;
        if (const char* key = std::getenv(config.api_key_env.c_str()); key && *key) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
        auto res = client.Post(config.path, headers, body, "application/json");
        if (!res) return {0, httplib::to_string(res.error())};
        return {res->status, res->body};
    };
}

}  // namespace

HttpBackend::HttpBackend(HttpConfig config)
    : HttpBackend(config, make_httplib_transport(config),
                  [](double ms) {
                      std::this_thread::sleep_for(
                          std::chrono::duration<double, std::milli>(ms));
                  }) {}

HttpBackend::HttpBackend(HttpConfig config, Transport transport, SleepFn sleep)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      sleep_(std::move(sleep)),
      jitter_state_(0x6a09e667f3bcc909ULL),
      bucket_tokens_(static_cast<double>(config_.bucket_capacity)),
      bucket_last_(std::chrono::steady_clock::now()) {}

json HttpBackend::request_body(const CompletionRequest& request) {
    json messages = json::array();
    for (const auto& message : request.messages) {
        json m = {{"role", std::string(to_string(message.role))},
                  {"content", message.content}};
        if (message.role == Role::tool) m["name"] = message.tool_name;
        messages.push_back(std::move(m));
    }
    json body = {{"model", request.model_id},
                 {"messages", std::move(messages)},
                 {"temperature", request.temperature},
                 {"max_tokens", request.max_tokens}};
    if (!request.tools.empty()) {
        json tools = json::array();
        for (const auto& tool : request.tools) {
            tools.push_back(
                {{"type", "function"},
                 {"function",
                  {{"name", tool.name},
                   {"description", tool.description},
                   {"parameters", json::parse(tool.parameters_json)}}}});
        }
        body["tools"] = std::move(tools);
    }
    return body;
}

void HttpBackend::rate_limit_acquire() {
    if (config_.requests_per_sec <= 0.0) return;
    double wait_ms = 0.0;
    {
        std::lock_guard lock(bucket_mutex_);
        const auto now = std::chrono::steady_clock::now();
        const double elapsed = std::chrono::duration<double>(now - bucket_last_).count();
        bucket_last_ = now;
        bucket_tokens_ = std::min(static_cast<double>(config_.bucket_capacity),
                                  bucket_tokens_ + elapsed * config_.requests_per_sec);
        if (bucket_tokens_ >= 1.0) {
            bucket_tokens_ -= 1.0;
        } else {
            wait_ms = (1.0 - bucket_tokens_) / config_.requests_per_sec * 1000.0;
            bucket_tokens_ = 0.0;
        }
    }
    if (wait_ms > 0.0) sleep_(wait_ms);
}

CompletionResult HttpBackend::do_complete(const CompletionRequest& request) {
    const std::string body = request_body(request).dump();
    const auto start = std::chrono::steady_clock::now();

    int attempt = 0;
    while (true) {
        rate_limit_acquire();
        const auto response = transport_(body);

        if (response.status == 401 || response.status == 403) {
            throw BackendError(BackendError::Kind::auth,
                               "authentication failed (HTTP " +
                                   std::to_string(response.status) + ")",
                               attempt);
        }

        if (response.status == 200) {
            json reply = json::parse(response.body, nullptr, false);
            if (reply.is_discarded() || !reply.contains("choices") ||
                reply.at("choices").empty()) {
                throw BackendError(BackendError::Kind::malformed_reply,
                                   "malformed provider reply", attempt);
            }
            const auto& message = reply.at("choices").at(0).at("message");
            CompletionResult result;
            if (message.contains("content") && message.at("content").is_string()) {
                result.text = message.at("content").get<std::string>();
            }
            if (message.contains("tool_calls") && !message.at("tool_calls").empty()) {
                const auto& call = message.at("tool_calls").at(0).at("function");
                result.tool_call = ToolCall{call.value("name", std::string{}),
                                            call.value("arguments", std::string{})};
            }
            if (reply.contains("usage")) {
                result.usage.prompt_tokens = reply["usage"].value("prompt_tokens", 0);
                result.usage.completion_tokens = reply["usage"].value("completion_tokens", 0);
            }
            result.retry_count = attempt;
            result.latency_ms = std::chrono::duration<double, std::milli>(
                                    std::chrono::steady_clock::now() - start)
                                    .count();
            return result;
        }

        const bool retryable = response.status == 429 || response.status <= 0 ||
                               response.status >= 500;
        if (!retryable) {
            throw BackendError(BackendError::Kind::transport,
                               "provider error (HTTP " + std::to_string(response.status) +
                                   "): " + response.body,
                               attempt);
        }
        if (attempt + 1 >= config_.retry.max_attempts) {
            const auto kind = response.status == 429 ? BackendError::Kind::rate_limit
                                                     : BackendError::Kind::transport;
            throw BackendError(kind,
                               "gave up after " + std::to_string(attempt + 1) +
                                   " attempts (last HTTP " +
                                   std::to_string(response.status) + ")",
                               attempt);
        }
        // xorshift64 for jitter; deterministic per backend instance.
        jitter_state_ ^= jitter_state_ << 13;
        jitter_state_ ^= jitter_state_ >> 7;
        jitter_state_ ^= jitter_state_ << 17;
        const double unit = static_cast<double>(jitter_state_ >> 11) * 0x1.0p-53;
        sleep_(config_.retry.delay_ms(attempt, unit));
        ++attempt;
    }
}

// ---------------------------------------------------------------------------
// Model registry
// ---------------------------------------------------------------------------

std::string_view to_string(ModelCategory category) {
    switch (category) {
        case ModelCategory::api: return "api";
        case ModelCategory::general: return "general";
        case ModelCategory::medicine: return "medicine";
        case ModelCategory::sft: return "sft";
    }
    return "general";
}

ModelCategory category_from_string(std::string_view text) {
    if (text == "api") return ModelCategory::api;
    if (text == "general") return ModelCategory::general;
    if (text == "medicine") return ModelCategory::medicine;
    if (text == "sft") return ModelCategory::sft;
    throw InvalidInput("unknown model category: '" + std::string(text) + "'");
}

ModelEntry model_entry_from_json(const json& j) {
    ModelEntry entry;
    entry.name = j.at("name").get<std::string>();
    entry.category = category_from_string(j.at("category").get<std::string>());
    entry.base_model = j.value("base_model", std::string{});
    entry.sft_data = j.value("sft_data", std::string{});
    if (j.contains("sft_data_date") && !j.at("sft_data_date").is_null()) {
        entry.sft_data_date = parse_year_month(j.at("sft_data_date").get<std::string>());
    }
    entry.released = parse_year_month(j.at("released").get<std::string>());
    return entry;
}

json to_json(const ModelEntry& entry) {
    json j = {{"name", entry.name},
              {"category", std::string(to_string(entry.category))},
              {"base_model", entry.base_model},
              {"sft_data", entry.sft_data},
              {"released", entry.released.to_string()}};
    j["sft_data_date"] =
        entry.sft_data_date ? json(entry.sft_data_date->to_string()) : json();
    return j;
}

std::vector<ModelEntry> load_registry(const std::filesystem::path& path) {
    std::vector<ModelEntry> entries;
    for (const auto& j : jsonl::read_file(path)) {
        entries.push_back(model_entry_from_json(j));
    }
    return entries;
}

VisibilityVerdict validate_visibility(const ModelEntry& entry, YearMonth unseen_window_start) {
    const YearMonth gate_date = entry.sft_data_date.value_or(entry.released);
    const char* basis = entry.sft_data_date ? "SFT data date" : "release date";
    if (gate_date < unseen_window_start) {
        return {true, std::string(basis) + " " + gate_date.to_string() +
                          " precedes unseen window " + unseen_window_start.to_string()};
    }
    return {false, std::string(basis) + " " + gate_date.to_string() +
                       " does not precede unseen window " + unseen_window_start.to_string()};
}

}  // namespace hypogen::backend
