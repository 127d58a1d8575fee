#include "hypogen/agents.hpp"

#include <algorithm>
#include <cctype>

#include "hypogen/errors.hpp"
#include "hypogen/templates.hpp"

namespace hypogen::agents {

namespace {

std::string trim(std::string_view text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return std::string(text.substr(begin, end - begin));
}

std::string speaker_label(const std::string& speaker) {
    if (speaker == "tool") return "Search";
    std::string label = speaker;
    if (!label.empty()) label[0] = static_cast<char>(std::toupper(label[0]));
    return label;
}

constexpr std::string_view kFinalAnswerMarker = "Final Answer:";

}  // namespace

const RoleSpec& role_spec(AgentRole role) {
    static const std::vector<RoleSpec> kSpecs = {
        {AgentRole::analyst, "Analyst", std::string(templates::kRoleAnalyst)},
        {AgentRole::engineer, "Engineer", std::string(templates::kRoleEngineer)},
        {AgentRole::scientist, "Scientist", std::string(templates::kRoleScientist)},
        {AgentRole::critic, "Critic", std::string(templates::kRoleCritic)},
    };
    return kSpecs[static_cast<std::size_t>(role)];
}

const std::vector<RoleSpec>& all_role_specs() {
    static const std::vector<RoleSpec> kSpecs = {
        role_spec(AgentRole::analyst), role_spec(AgentRole::engineer),
        role_spec(AgentRole::scientist), role_spec(AgentRole::critic)};
    return kSpecs;
}

std::string_view to_string(Variant variant) {
    switch (variant) {
        case Variant::single: return "single";
        case Variant::single_react: return "single_react";
        case Variant::single_fncall: return "single_fncall";
        case Variant::multi: return "multi";
        case Variant::multi_tool: return "multi_tool";
    }
    return "single";
}

Variant variant_from_string(std::string_view text) {
    if (text == "single") return Variant::single;
    if (text == "single_react") return Variant::single_react;
    if (text == "single_fncall") return Variant::single_fncall;
    if (text == "multi") return Variant::multi;
    if (text == "multi_tool") return Variant::multi_tool;
    throw InvalidInput("unknown agent variant: '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// SearchTool
// ---------------------------------------------------------------------------

SearchTool::SearchTool(std::span<const corpus::PaperRecord> records, std::size_t max_hits)
    : max_hits_(max_hits) {
    std::vector<prompting::Document> docs;
    docs.reserve(records.size());
    for (const auto& record : records) {
        docs.push_back({record.id, record.title + ". " + record.abstract});
        std::string snippet = record.abstract;
        if (snippet.size() > 200) {
            snippet.resize(200);
            snippet += "...";
        }
        meta_[record.id] = {record.title, std::move(snippet)};
    }
    index_ = prompting::build_index(docs);
}

ToolResult SearchTool::search(std::string_view query) const {
    return search(query, max_hits_);
}

ToolResult SearchTool::search(std::string_view query, std::size_t k) const {
    ToolResult result;
    const auto ranked = prompting::top_k(index_, query, std::min(k, max_hits_));
    for (const auto& hit : ranked.hits) {
        const auto& meta = meta_.at(hit.id);
        result.hits.push_back({meta.title, meta.snippet, hit.id});
    }
    return result;
}

backend::ToolFunction SearchTool::function_spec() const {
    return {"search",
            "Search the literature corpus for work related to a query.",
            R"({"type": "object", "properties": {"query": {"type": "string"}}, "required": ["query"]})"};
}

std::string SearchTool::format_hits(const ToolResult& result) {
    if (result.hits.empty()) return "No results.";
    std::string text;
    for (std::size_t i = 0; i < result.hits.size(); ++i) {
        if (i > 0) text += '\n';
        text += std::to_string(i + 1) + ". " + result.hits[i].title + " — " +
                result.hits[i].snippet + " [" + result.hits[i].source_id + "]";
    }
    return text;
}

nlohmann::json to_json(const TranscriptEntry& entry) {
    auto j = backend::to_json(entry.message);
    j["speaker"] = entry.speaker;
    return j;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

ReactStep parse_react(std::string_view text) {
    std::size_t line_start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i != text.size() && text[i] != '\n') continue;
        std::string_view line = text.substr(line_start, i - line_start);
        const std::size_t content_offset = line_start;
        line_start = i + 1;

        std::size_t indent = 0;
        while (indent < line.size() &&
               std::isspace(static_cast<unsigned char>(line[indent]))) {
            ++indent;
        }
        line.remove_prefix(indent);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        if (line.starts_with("Thought:")) {
            return {ReactStep::Kind::thought, trim(line.substr(8)), {}, {}};
        }
        if (line.starts_with(kFinalAnswerMarker)) {
            // The payload runs to the end of the reply, not just the line.
            const auto payload_offset =
                content_offset + indent + kFinalAnswerMarker.size();
            return {ReactStep::Kind::final_answer, trim(text.substr(payload_offset)), {}, {}};
        }
        if (line.starts_with("Action:")) {
            const std::string rest = trim(line.substr(7));
            const auto open = rest.find('[');
            if (open == std::string::npos || rest.empty() || rest.back() != ']' ||
                open + 1 > rest.size() - 1) {
                return {ReactStep::Kind::malformed, std::string(trim(text)), {}, {}};
            }
            std::string tool = trim(std::string_view(rest).substr(0, open));
            std::string argument = rest.substr(open + 1, rest.size() - open - 2);
            if (tool.empty()) {
                return {ReactStep::Kind::malformed, std::string(trim(text)), {}, {}};
            }
            return {ReactStep::Kind::action, {}, std::move(tool), std::move(argument)};
        }
    }
    return {ReactStep::Kind::malformed, trim(text), {}, {}};
}

std::optional<std::vector<std::string>> detect_final_answer(std::string_view critic_text,
                                                            bool* empty_answer) {
    if (empty_answer) *empty_answer = false;
    const auto pos = critic_text.rfind(kFinalAnswerMarker);
    if (pos == std::string_view::npos) return std::nullopt;
    auto items = prompting::extract_numbered(
        critic_text.substr(pos + kFinalAnswerMarker.size()));
    if (items.empty()) {
        if (empty_answer) *empty_answer = true;
        return std::nullopt;
    }
    return items;
}

// ---------------------------------------------------------------------------
// Sessions
// ---------------------------------------------------------------------------

namespace {

class MultiAgentSession {
public:
    MultiAgentSession(std::span<const std::string> background, backend::Backend& llm,
                      const SessionOptions& options, const SearchTool* tool)
        : llm_(llm), options_(options), tool_(tool) {
        env_prompt_ = prompting::render_template(
            templates::kAgentEnv,
            {{"background", prompting::render_statements(background)}});
    }

    SessionResult run() {
        SessionResult result;
        result.variant = tool_ ? Variant::multi_tool : Variant::multi;

        std::string last_scientist;
        for (int round = 1; round <= options_.max_rounds; ++round) {
            const std::string analyst = call_role(AgentRole::analyst, result);
            if (tool_) {
                const auto hits = tool_->search(analyst);
                ++result.tool_calls;
                transcript_.push_back(
                    {"tool",
                     {backend::Role::tool, SearchTool::format_hits(hits), "search"}});
                call_role(AgentRole::engineer, result);
            }
            last_scientist = call_role(AgentRole::scientist, result);
            const std::string critic = call_role(AgentRole::critic, result);

            if (auto final_answer = detect_final_answer(critic)) {
                result.hypothesis = std::move(*final_answer);
                result.approved = true;
                result.rounds_used = round;
                result.transcript = std::move(transcript_);
                return result;
            }
            // Critic feedback is already on the shared transcript; the next
            // round's Analyst sees it there.
        }

        if (trim(last_scientist).empty()) {
            result.fallback_parse = true;
        } else {
            auto parsed = prompting::parse_hypotheses(last_scientist);
            result.hypothesis = std::move(parsed.statements);
            result.fallback_parse = parsed.fallback;
        }
        result.approved = false;
        result.rounds_used = options_.max_rounds;
        result.transcript = std::move(transcript_);
        return result;
    }

private:
    std::string call_role(AgentRole role, SessionResult& result) {
        backend::CompletionRequest request;
        request.model_id = options_.model_id;
        request.temperature = options_.temperature;
        request.max_tokens = options_.max_tokens;
        request.messages.push_back({backend::Role::system, env_prompt_, {}});
        request.messages.push_back(
            {backend::Role::system, role_spec(role).system_prompt, {}});
        for (const auto& entry : transcript_) {
            request.messages.push_back(
                {backend::Role::user,
                 speaker_label(entry.speaker) + ": " + entry.message.content,
                 {}});
        }

        backend::CompletionResult reply;
        try {
            reply = llm_.complete(request);
        } catch (const std::exception& e) {
            throw SessionError(std::string("backend failure during ") +
                                   role_spec(role).name + " turn: " + e.what(),
                               std::move(transcript_));
        }
        ++result.model_calls;
        std::string speaker = role_spec(role).name;
        std::transform(speaker.begin(), speaker.end(), speaker.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        transcript_.push_back({speaker, {backend::Role::assistant, reply.text, {}}});
        return reply.text;
    }

    backend::Backend& llm_;
    const SessionOptions& options_;
    const SearchTool* tool_;
    std::string env_prompt_;
    Transcript transcript_;
};

std::string extract_query(const backend::ToolCall& call) {
    auto parsed = nlohmann::json::parse(call.arguments_json, nullptr, false);
    if (parsed.is_object() && parsed.contains("query") && parsed["query"].is_string()) {
        return parsed["query"].get<std::string>();
    }
    return call.arguments_json;
}

}  // namespace

SessionResult run_multi(std::span<const std::string> background, backend::Backend& llm,
                        const SessionOptions& options, const SearchTool* tool) {
    if (background.empty()) throw InvalidInput("run_multi: empty background");
    return MultiAgentSession(background, llm, options, tool).run();
}

SessionResult run_single(std::span<const std::string> background, backend::Backend& llm,
                         const SessionOptions& options, Variant variant,
                         const SearchTool* tool) {
    if (background.empty()) throw InvalidInput("run_single: empty background");

    SessionResult result;
    result.variant = variant;
    Transcript transcript;

    auto call = [&](const std::vector<backend::ChatMessage>& messages,
                    bool with_tools) -> backend::CompletionResult {
        backend::CompletionRequest request;
        request.model_id = options.model_id;
        request.temperature = options.temperature;
        request.max_tokens = options.max_tokens;
        request.messages = messages;
        if (with_tools && tool) request.tools.push_back(tool->function_spec());
        try {
            auto reply = llm.complete(request);
            ++result.model_calls;
            return reply;
        } catch (const std::exception& e) {
            throw SessionError(std::string("backend failure: ") + e.what(),
                               std::move(transcript));
        }
    };

    if (variant == Variant::single) {
        const std::string prompt = prompting::render_zero_shot(background);
        transcript.push_back({"user", {backend::Role::user, prompt, {}}});
        const auto reply = call({{backend::Role::user, prompt, {}}}, false);
        transcript.push_back({"agent", {backend::Role::assistant, reply.text, {}}});
        auto parsed = prompting::parse_hypotheses(reply.text);
        result.hypothesis = std::move(parsed.statements);
        result.fallback_parse = parsed.fallback;
        result.transcript = std::move(transcript);
        result.rounds_used = 1;
        return result;
    }

    if (!tool) throw InvalidInput("tool-use variant requires a search tool");

    if (variant == Variant::single_react) {
        std::string prompt =
            "You answer by interleaving reasoning and tool use, one step per reply, "
            "using exactly these line formats:\n\n"
            "Thought: <your reasoning>\n"
            "Action: search[<query>]\n"
            "Final Answer: <your numbered hypotheses>\n\n"
            "After each Action you receive an Observation with search results over the "
            "literature corpus. When ready, give the Final Answer as numbered statements "
            "\"(1) ... (2) ... (3) ...\".\n\n"
            "Now give hypothesis based on the following background:\n";
        prompt += prompting::render_statements(background);
        transcript.push_back({"user", {backend::Role::user, prompt, {}}});

        for (int step = 0; step < options.max_steps; ++step) {
            std::vector<backend::ChatMessage> messages;
            for (const auto& entry : transcript) {
                if (entry.speaker == "tool") {
                    messages.push_back({backend::Role::user, entry.message.content, {}});
                } else {
                    messages.push_back(entry.message);
                }
            }
            const auto reply = call(messages, false);
            transcript.push_back({"agent", {backend::Role::assistant, reply.text, {}}});

            const auto parsed_step = parse_react(reply.text);
            switch (parsed_step.kind) {
                case ReactStep::Kind::thought:
                    continue;
                case ReactStep::Kind::action: {
                    if (parsed_step.tool != "search") {
                        throw SessionError("unknown tool '" + parsed_step.tool + "'",
                                           std::move(transcript));
                    }
                    const auto hits = tool->search(parsed_step.argument);
                    ++result.tool_calls;
                    transcript.push_back(
                        {"tool",
                         {backend::Role::tool,
                          "Observation: " + SearchTool::format_hits(hits), "search"}});
                    continue;
                }
                case ReactStep::Kind::final_answer: {
                    auto parsed = prompting::parse_hypotheses(parsed_step.text);
                    result.hypothesis = std::move(parsed.statements);
                    result.fallback_parse = parsed.fallback;
                    result.transcript = std::move(transcript);
                    result.rounds_used = 1;
                    return result;
                }
                case ReactStep::Kind::malformed:
                    throw SessionError("malformed react step: " + parsed_step.text,
                                       std::move(transcript));
            }
        }
        throw SessionError("react step cap (" + std::to_string(options.max_steps) +
                               ") exceeded without a Final Answer",
                           std::move(transcript));
    }

    // Variant::single_fncall
    const std::string prompt = prompting::render_zero_shot(background);
    transcript.push_back({"user", {backend::Role::user, prompt, {}}});

    for (int step = 0; step < options.max_steps; ++step) {
        std::vector<backend::ChatMessage> messages;
        for (const auto& entry : transcript) messages.push_back(entry.message);
        const auto reply = call(messages, true);

        if (reply.tool_call) {
            transcript.push_back(
                {"agent",
                 {backend::Role::assistant,
                  "[tool_call] " + reply.tool_call->name + "(" +
                      reply.tool_call->arguments_json + ")",
                  {}}});
            if (reply.tool_call->name != "search") {
                throw SessionError("unknown tool '" + reply.tool_call->name + "'",
                                   std::move(transcript));
            }
            const auto hits = tool->search(extract_query(*reply.tool_call));
            ++result.tool_calls;
            transcript.push_back(
                {"tool", {backend::Role::tool, SearchTool::format_hits(hits), "search"}});
            continue;
        }

        transcript.push_back({"agent", {backend::Role::assistant, reply.text, {}}});
        auto parsed = prompting::parse_hypotheses(reply.text);
        result.hypothesis = std::move(parsed.statements);
        result.fallback_parse = parsed.fallback;
        result.transcript = std::move(transcript);
        result.rounds_used = 1;
        return result;
    }
    throw SessionError("function-call step cap (" + std::to_string(options.max_steps) +
                           ") exceeded without a plain reply",
                       std::move(transcript));
}

SessionResult run_session(std::span<const std::string> background, backend::Backend& llm,
                          const SessionOptions& options, Variant variant,
                          const SearchTool* tool) {
    switch (variant) {
        case Variant::multi:
            return run_multi(background, llm, options, nullptr);
        case Variant::multi_tool:
            if (!tool) throw InvalidInput("multi_tool variant requires a search tool");
            return run_multi(background, llm, options, tool);
        default:
            return run_single(background, llm, options, variant, tool);
    }
}

bool transcript_follows_state_machine(Variant variant, const Transcript& transcript,
                                      std::string* error) {
    auto fail = [&](const std::string& message) {
        if (error) *error = message;
        return false;
    };

    if (variant == Variant::multi || variant == Variant::multi_tool) {
        const std::vector<std::string> pattern =
            variant == Variant::multi
                ? std::vector<std::string>{"analyst", "scientist", "critic"}
                : std::vector<std::string>{"analyst", "tool", "engineer", "scientist",
                                           "critic"};
        if (transcript.empty() || transcript.size() % pattern.size() != 0) {
            return fail("transcript length does not cover whole rounds");
        }
        for (std::size_t i = 0; i < transcript.size(); ++i) {
            const auto& expected = pattern[i % pattern.size()];
            if (transcript[i].speaker != expected) {
                return fail("entry " + std::to_string(i) + ": expected " + expected +
                            ", got " + transcript[i].speaker);
            }
        }
        return true;
    }

    if (transcript.empty() || transcript.front().speaker != "user") {
        return fail("transcript must open with the user prompt");
    }
    if (variant == Variant::single && transcript.size() != 2) {
        return fail("single variant transcript must be user + agent");
    }
    for (std::size_t i = 1; i < transcript.size(); ++i) {
        const auto& speaker = transcript[i].speaker;
        if (speaker != "agent" && speaker != "tool") {
            return fail("entry " + std::to_string(i) + ": unexpected speaker " + speaker);
        }
        if (speaker == "tool" && transcript[i - 1].speaker != "agent") {
            return fail("tool result not preceded by an agent turn");
        }
    }
    if (transcript.back().speaker != "agent") {
        return fail("transcript must end with an agent turn");
    }
    return true;
}

}  // namespace hypogen::agents
