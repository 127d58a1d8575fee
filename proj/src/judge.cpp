#include "hypogen/judge.hpp"

#include <cctype>

#include "hypogen/metrics.hpp"
#include "hypogen/templates.hpp"

namespace hypogen::judge {

namespace {

constexpr std::string_view kScoreMarker = "Score:";

std::string trim(std::string_view text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return std::string(text.substr(begin, end - begin));
}

std::string_view template_body(Metric metric) {
    switch (metric) {
        case Metric::novelty: return templates::kEvalNovelty;
        case Metric::relevance: return templates::kEvalRelevance;
        case Metric::significance: return templates::kEvalSignificance;
        case Metric::verifiability: return templates::kEvalVerifiability;
    }
    return templates::kEvalNovelty;
}

bool all_blank(std::span<const std::string> statements) {
    for (const auto& statement : statements) {
        if (!trim(statement).empty()) return false;
    }
    return true;
}

}  // namespace

std::string_view to_string(Metric metric) {
    switch (metric) {
        case Metric::novelty: return "novelty";
        case Metric::relevance: return "relevance";
        case Metric::significance: return "significance";
        case Metric::verifiability: return "verifiability";
    }
    return "novelty";
}

Metric metric_from_string(std::string_view text) {
    for (auto metric : kMetrics) {
        if (to_string(metric) == text) return metric;
    }
    throw InvalidInput("unknown judge metric: '" + std::string(text) + "'");
}

prompting::PromptTemplate metric_template(Metric metric) {
    return {prompting::TemplateKind::judge, std::string(template_body(metric))};
}

std::string render_judge_prompt(Metric metric, std::span<const std::string> background,
                                std::span<const std::string> hypothesis) {
    if (background.empty() || all_blank(background)) {
        throw InvalidInput("render_judge_prompt: empty background");
    }
    if (hypothesis.empty() || all_blank(hypothesis)) {
        throw InvalidInput("render_judge_prompt: empty hypothesis");
    }
    return prompting::render_template(
        template_body(metric),
        {{"background", prompting::render_statements(background)},
         {"hypothesis", prompting::render_statements(hypothesis)}});
}

int parse_score(std::string_view text) {
    const auto pos = text.rfind(kScoreMarker);
    if (pos == std::string_view::npos) {
        throw ScoreParseError(ScoreParseError::Kind::missing_marker,
                              "no 'Score:' marker in judge reply", std::string(text));
    }
    std::size_t i = pos + kScoreMarker.size();
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    if (i < text.size() && text[i] == '[') {
        ++i;
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    }
    bool negative = false;
    if (i < text.size() && text[i] == '-') {
        negative = true;
        ++i;
    }
    if (i >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i]))) {
        throw ScoreParseError(ScoreParseError::Kind::missing_marker,
                              "no integer after the 'Score:' marker", std::string(text));
    }
    long value = 0;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
        value = value * 10 + (text[i] - '0');
        ++i;
    }
    if (negative) value = -value;
    if (value < kMinScore || value > kMaxScore) {
        throw ScoreParseError(ScoreParseError::Kind::out_of_range,
                              "score " + std::to_string(value) + " outside 0..3",
                              std::string(text));
    }
    return static_cast<int>(value);
}

JudgeVerdict evaluate(std::span<const std::string> background,
                      std::span<const std::string> hypothesis, backend::Backend& llm,
                      const JudgeOptions& options) {
    JudgeVerdict verdict;
    double sum = 0.0;
    int parsed = 0;

    for (auto metric : kMetrics) {
        backend::CompletionRequest request;
        request.model_id = options.model_id;
        request.temperature = 0.0;  // scoring stability
        request.max_tokens = options.max_tokens;
        request.messages.push_back(
            {backend::Role::user, render_judge_prompt(metric, background, hypothesis), {}});

        auto reply = llm.complete(request);
        MetricOutcome outcome;
        outcome.raw = reply.text;
        try {
            outcome.score = parse_score(reply.text);
        } catch (const ScoreParseError& e) {
            if (options.retry_unparseable &&
                e.kind() == ScoreParseError::Kind::missing_marker) {
                auto retry_request = request;
                retry_request.messages.push_back(
                    {backend::Role::assistant, reply.text, {}});
                retry_request.messages.push_back(
                    {backend::Role::user,
                     "Please restate your score in the format 'Score: [value]'.",
                     {}});
                auto retry_reply = llm.complete(retry_request);
                outcome.raw += "\n---\n" + retry_reply.text;
                try {
                    outcome.score = parse_score(retry_reply.text);
                } catch (const ScoreParseError&) {
                    // second failure is final
                }
            }
        }
        if (outcome.score) {
            const auto marker = outcome.raw.rfind("Score:");
            outcome.explanation = trim(outcome.raw.substr(0, marker));
            sum += *outcome.score;
            ++parsed;
        } else {
            outcome.explanation = trim(outcome.raw);
        }
        verdict.metrics[metric] = std::move(outcome);
    }

    verdict.partial = parsed < static_cast<int>(kMetrics.size());
    verdict.avg = parsed > 0 ? sum / parsed : 0.0;
    return verdict;
}

nlohmann::json to_json(const JudgeVerdict& verdict) {
    nlohmann::json metrics = nlohmann::json::object();
    for (const auto& [metric, outcome] : verdict.metrics) {
        nlohmann::json entry = {{"explanation", outcome.explanation},
                                {"raw", outcome.raw}};
        entry["score"] = outcome.score ? nlohmann::json(*outcome.score) : nlohmann::json();
        metrics[std::string(to_string(metric))] = std::move(entry);
    }
    return {{"metrics", std::move(metrics)},
            {"avg", verdict.avg},
            {"partial", verdict.partial}};
}

JudgeVerdict verdict_from_json(const nlohmann::json& j) {
    JudgeVerdict verdict;
    verdict.avg = j.at("avg").get<double>();
    verdict.partial = j.value("partial", false);
    for (const auto& [name, entry] : j.at("metrics").items()) {
        MetricOutcome outcome;
        if (entry.contains("score") && !entry.at("score").is_null()) {
            outcome.score = entry.at("score").get<int>();
        }
        outcome.explanation = entry.value("explanation", std::string{});
        outcome.raw = entry.value("raw", std::string{});
        verdict.metrics[metric_from_string(name)] = std::move(outcome);
    }
    return verdict;
}

HumanScoreRecord human_record_from_json(const nlohmann::json& j) {
    HumanScoreRecord record;
    record.example_id = j.at("example_id").get<std::string>();
    record.annotator_id = j.value("annotator_id", std::string{});
    for (auto metric : kMetrics) {
        const auto key = std::string(to_string(metric));
        if (!j.contains(key)) {
            throw InvalidInput("human score record '" + record.example_id +
                               "' lacks metric '" + key + "'");
        }
        const int score = j.at(key).get<int>();
        if (score < kMinScore || score > kMaxScore) {
            throw InvalidInput("human score record '" + record.example_id + "': " + key +
                               " = " + std::to_string(score) + " outside 0..3");
        }
        record.scores[metric] = score;
    }
    return record;
}

CorrelationReport correlate_with_human(const std::map<std::string, double>& judge_avgs,
                                       std::span<const HumanScoreRecord> humans) {
    // Average annotators per example and metric first, then the metrics.
    struct Accumulator {
        std::map<Metric, std::pair<double, std::size_t>> per_metric;
    };
    std::map<std::string, Accumulator> by_example;
    for (const auto& record : humans) {
        auto& acc = by_example[record.example_id];
        for (const auto& [metric, score] : record.scores) {
            auto& [sum, count] = acc.per_metric[metric];
            sum += score;
            ++count;
        }
    }

    std::vector<double> judge_vec;
    std::vector<double> human_vec;
    std::size_t dropped = 0;
    for (const auto& [id, acc] : by_example) {
        auto it = judge_avgs.find(id);
        if (it == judge_avgs.end()) {
            ++dropped;
            continue;
        }
        double metric_sum = 0.0;
        for (const auto& [metric, sum_count] : acc.per_metric) {
            metric_sum += sum_count.first / static_cast<double>(sum_count.second);
        }
        human_vec.push_back(metric_sum / static_cast<double>(acc.per_metric.size()));
        judge_vec.push_back(it->second);
    }
    for (const auto& [id, avg] : judge_avgs) {
        if (!by_example.contains(id)) ++dropped;
    }

    if (judge_vec.size() < 2) {
        throw InvalidInput("correlate_with_human: fewer than two aligned examples (" +
                           std::to_string(judge_vec.size()) + " aligned, " +
                           std::to_string(dropped) + " dropped)");
    }
    CorrelationReport report;
    report.pearson = metrics::pearson(judge_vec, human_vec);
    report.spearman = metrics::spearman(judge_vec, human_vec);
    report.n = judge_vec.size();
    report.dropped = dropped;
    return report;
}

}  // namespace hypogen::judge
