#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hypogen/backend.hpp"
#include "hypogen/errors.hpp"
#include "hypogen/prompting.hpp"

namespace hypogen::judge {

// ---------------------------------------------------------------------------
// The four metrics
// ---------------------------------------------------------------------------

enum class Metric { novelty, relevance, significance, verifiability };

inline constexpr std::array<Metric, 4> kMetrics = {
    Metric::novelty, Metric::relevance, Metric::significance, Metric::verifiability};

inline constexpr int kMinScore = 0;
inline constexpr int kMaxScore = 3;

std::string_view to_string(Metric metric);
Metric metric_from_string(std::string_view text);

prompting::PromptTemplate metric_template(Metric metric);

/// Golden evaluation prompt with background and hypothesis filled in.
/// Throws InvalidInput when either side is empty.
std::string render_judge_prompt(Metric metric, std::span<const std::string> background,
                                std::span<const std::string> hypothesis);

// ---------------------------------------------------------------------------
// Score extraction
// ---------------------------------------------------------------------------

class ScoreParseError : public ParseError {
public:
    enum class Kind { missing_marker, out_of_range };

    ScoreParseError(Kind kind, const std::string& what, std::string raw)
        : ParseError(what, std::move(raw)), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Integer after the last "Score:" marker (optionally bracketed), range
/// checked against 0..3. Throws ScoreParseError otherwise.
int parse_score(std::string_view text);

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct MetricOutcome {
    std::optional<int> score;  // empty when this metric failed to parse
    std::string explanation;   // reply text before the score marker
    std::string raw;           // full reply, kept for audit
};

struct JudgeVerdict {
    std::map<Metric, MetricOutcome> metrics;
    double avg = 0.0;     // mean over the metrics that parsed
    bool partial = false;  // at least one metric failed
};

struct JudgeOptions {
    std::string model_id;
    int max_tokens = 1024;
    /// One retry with an appended restatement instruction when the score
    /// marker is missing.
    bool retry_unparseable = true;
};

/// Four independent calls at temperature 0, one per metric. A parse failure
/// on one metric marks the verdict partial without voiding the others.
JudgeVerdict evaluate(std::span<const std::string> background,
                      std::span<const std::string> hypothesis, backend::Backend& llm,
                      const JudgeOptions& options);

nlohmann::json to_json(const JudgeVerdict& verdict);
JudgeVerdict verdict_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Human-correlation statistics
// ---------------------------------------------------------------------------

struct HumanScoreRecord {
    std::string example_id;
    std::string annotator_id;
    std::map<Metric, int> scores;
};

HumanScoreRecord human_record_from_json(const nlohmann::json& j);

struct CorrelationReport {
    double pearson = 0.0;
    double spearman = 0.0;
    std::size_t n = 0;        // aligned examples
    std::size_t dropped = 0;  // ids present on only one side
};

/// Aligns judge averages with human scores by example id (annotators are
/// averaged first, then metrics) and correlates the two vectors. Throws
/// InvalidInput with fewer than two aligned examples.
CorrelationReport correlate_with_human(const std::map<std::string, double>& judge_avgs,
                                       std::span<const HumanScoreRecord> humans);

}  // namespace hypogen::judge
