#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hypogen/backend.hpp"
#include "hypogen/corpus.hpp"
#include "hypogen/prompting.hpp"

namespace hypogen::agents {

// ---------------------------------------------------------------------------
// Roles and variants
// ---------------------------------------------------------------------------

enum class AgentRole { analyst, engineer, scientist, critic };

struct RoleSpec {
    AgentRole role;
    std::string name;           // "Analyst", ...
    std::string system_prompt;  // golden role prompt
};

const RoleSpec& role_spec(AgentRole role);
const std::vector<RoleSpec>& all_role_specs();

/// The five run variants: plain single call, single agent with ReAct-style
/// or function-call-style tool use, and the role pipeline with or without
/// the search tool.
enum class Variant { single, single_react, single_fncall, multi, multi_tool };

std::string_view to_string(Variant variant);
Variant variant_from_string(std::string_view text);

// ---------------------------------------------------------------------------
// Search tool
// ---------------------------------------------------------------------------

enum class ToolStyle { react, function_call };

struct SearchHit {
    std::string title;
    std::string snippet;
    std::string source_id;
};

struct ToolResult {
    std::vector<SearchHit> hits;
};

/// Offline literature search over titles + abstracts, backed by the
/// prompting module's tf-idf index. Deterministic for a fixed corpus.
class SearchTool {
public:
    explicit SearchTool(std::span<const corpus::PaperRecord> records,
                        std::size_t max_hits = 5);

    ToolResult search(std::string_view query) const;
    ToolResult search(std::string_view query, std::size_t k) const;

    std::size_t max_hits() const { return max_hits_; }
    backend::ToolFunction function_spec() const;

    /// "Observation"-style text rendering of the hits.
    static std::string format_hits(const ToolResult& result);

private:
    struct DocMeta {
        std::string title;
        std::string snippet;
    };

    prompting::RetrievalIndex index_;
    std::unordered_map<std::string, DocMeta> meta_;
    std::size_t max_hits_;
};

// ---------------------------------------------------------------------------
// Sessions
// ---------------------------------------------------------------------------

struct TranscriptEntry {
    std::string speaker;  // "analyst", "engineer", "scientist", "critic",
                          // "agent" (single variants), "tool", "user"
    backend::ChatMessage message;
};

using Transcript = std::vector<TranscriptEntry>;

nlohmann::json to_json(const TranscriptEntry& entry);

struct SessionOptions {
    std::string model_id;
    double temperature = 0.7;
    int max_tokens = 1024;
    int max_rounds = 6;  // role pipeline rounds
    int max_steps = 8;   // react / function-call model calls
};

struct SessionResult {
    Variant variant = Variant::single;
    std::vector<std::string> hypothesis;
    Transcript transcript;
    int rounds_used = 0;
    bool approved = false;       // Critic emitted a Final Answer
    bool fallback_parse = false;  // hypothesis came from the unnumbered-text fallback
    std::size_t model_calls = 0;
    std::size_t tool_calls = 0;
};

/// Session abort (backend failure, malformed step, step cap). Carries the
/// partial transcript so callers can persist it.
class SessionError : public std::runtime_error {
public:
    SessionError(const std::string& what, Transcript transcript)
        : std::runtime_error(what), transcript_(std::move(transcript)) {}

    const Transcript& transcript() const noexcept { return transcript_; }

private:
    Transcript transcript_;
};

/// Analyst -> (search + Engineer, iff tool) -> Scientist -> Critic, looping
/// on Critic feedback until a Final Answer or max_rounds. Without approval
/// the latest Scientist hypothesis is returned with approved = false.
SessionResult run_multi(std::span<const std::string> background, backend::Backend& llm,
                        const SessionOptions& options, const SearchTool* tool = nullptr);

/// variant = single: one zero-shot call. single_react / single_fncall:
/// tool-use loops (tool required).
SessionResult run_single(std::span<const std::string> background, backend::Backend& llm,
                         const SessionOptions& options, Variant variant,
                         const SearchTool* tool = nullptr);

/// Dispatch over all five variants.
SessionResult run_session(std::span<const std::string> background, backend::Backend& llm,
                          const SessionOptions& options, Variant variant,
                          const SearchTool* tool = nullptr);

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct ReactStep {
    enum class Kind { thought, action, final_answer, malformed };
    Kind kind = Kind::malformed;
    std::string text;      // thought text or final-answer payload
    std::string tool;      // action only
    std::string argument;  // action only
};

/// Line-oriented grammar: "Thought: ...", "Action: <tool>[<arg>]",
/// "Final Answer: ..." — first matching line wins, labels are
/// case-sensitive. A Final Answer payload extends to the end of the reply.
ReactStep parse_react(std::string_view text);

/// Numbered statements following the last "Final Answer:" marker, or nullopt
/// when the marker is absent. A marker with no numbered items is treated as
/// non-approval and reported through `empty_answer`.
std::optional<std::vector<std::string>> detect_final_answer(std::string_view critic_text,
                                                            bool* empty_answer = nullptr);

/// Replays a transcript against the variant's speaker state machine. Used by
/// tests; returns false and fills `error` when a speaker is out of turn.
bool transcript_follows_state_machine(Variant variant, const Transcript& transcript,
                                      std::string* error = nullptr);

}  // namespace hypogen::agents
