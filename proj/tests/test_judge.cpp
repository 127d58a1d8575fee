#include "hypogen/judge.hpp"

#include <gtest/gtest.h>

#include <array>

#include "hypogen/backend.hpp"
#include "hypogen/errors.hpp"
#include "hypogen/metrics.hpp"
#include "parser_fixtures.hpp"

using namespace hypogen;
using judge::Metric;

namespace {

const std::vector<std::string> kBackground = {"telemonitoring reduces detection delays"};
const std::vector<std::string> kHypothesis = {"wearables will partly replace implants"};

judge::JudgeOptions options() {
    judge::JudgeOptions o;
    o.model_id = "mock-judge";
    return o;
}

/// Replies per metric, keyed by the metric word in the rendered prompt.
class MetricScriptBackend : public backend::Backend {
public:
    std::map<Metric, std::vector<std::string>> replies;

protected:
    backend::CompletionResult do_complete(
        const backend::CompletionRequest& request) override {
        const auto& prompt = request.messages.front().content;
        for (auto metric : judge::kMetrics) {
            const auto needle = "Evaluate the " + std::string(judge::to_string(metric));
            if (prompt.find(needle) != std::string::npos) {
                auto& queue = replies[metric];
                auto& index = index_[metric];
                if (index >= queue.size()) {
                    throw BackendError(BackendError::Kind::transport, "script exhausted");
                }
                backend::CompletionResult result;
                result.text = queue[index++];
                return result;
            }
        }
        throw BackendError(BackendError::Kind::transport, "unrecognized judge prompt");
    }

private:
    std::map<Metric, std::size_t> index_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Templates and rendering
// ---------------------------------------------------------------------------

TEST(JudgeTemplates, NoveltyZeroLevelWording) {
    const auto prompt = judge::render_judge_prompt(Metric::novelty, kBackground, kHypothesis);
    EXPECT_NE(prompt.find("0 means there's no novelty"), std::string::npos);
    EXPECT_NE(prompt.find("Score: [value]"), std::string::npos);
}

TEST(JudgeTemplates, EmptyHypothesisThrows) {
    EXPECT_THROW(judge::render_judge_prompt(Metric::novelty, kBackground, {}), InvalidInput);
    EXPECT_THROW(judge::render_judge_prompt(Metric::novelty, {}, kHypothesis), InvalidInput);
}

TEST(JudgeTemplates, FourRendersDifferOnlyInMetricWording) {
    std::map<Metric, std::string> prompts;
    for (auto metric : judge::kMetrics) {
        prompts[metric] = judge::render_judge_prompt(metric, kBackground, kHypothesis);
    }
    // Shared scaffold: identical opener, identical slot section.
    for (const auto& [metric, prompt] : prompts) {
        EXPECT_EQ(prompt.find("You are an expert in biomedicine."), 0u);
        EXPECT_NE(prompt.find("Background: (1) " + kBackground[0]), std::string::npos);
        EXPECT_NE(prompt.find("Generated scientific hypothesis: (1) " + kHypothesis[0]),
                  std::string::npos);
        EXPECT_NE(prompt.find("The score range should be 0 to 3."), std::string::npos);
    }
    // Metric-specific wording really differs.
    EXPECT_NE(prompts[Metric::novelty], prompts[Metric::relevance]);
    EXPECT_NE(prompts[Metric::significance].find("significance"), std::string::npos);
    EXPECT_NE(prompts[Metric::verifiability].find("verifiability"), std::string::npos);
}

// ---------------------------------------------------------------------------
// parse_score
// ---------------------------------------------------------------------------

TEST(ParseScore, StepByStepReplyEndingWithScore) {
    EXPECT_EQ(judge::parse_score("The hypothesis builds upon...\nScore: 2"), 2);
}

TEST(ParseScore, OutOfRange) {
    EXPECT_THROW(judge::parse_score("Score: 5"), judge::ScoreParseError);
    try {
        judge::parse_score("Score: 5");
    } catch (const judge::ScoreParseError& e) {
        EXPECT_EQ(e.kind(), judge::ScoreParseError::Kind::out_of_range);
    }
}

TEST(ParseScore, LastMarkerWins) {
    EXPECT_EQ(judge::parse_score("Score: 1 ... Score: 3"), 3);
}

TEST(ParseScore, FixtureSuite) {
    const auto& cases = fixtures::score_cases();
    ASSERT_EQ(cases.size(), 30u);
    std::size_t passed = 0;
    for (const auto& c : cases) {
        if (c.expected >= 0) {
            EXPECT_EQ(judge::parse_score(c.text), c.expected) << c.text;
            if (judge::parse_score(c.text) == c.expected) ++passed;
        } else {
            const auto want_kind = c.expected == -1
                                       ? judge::ScoreParseError::Kind::missing_marker
                                       : judge::ScoreParseError::Kind::out_of_range;
            try {
                judge::parse_score(c.text);
                ADD_FAILURE() << "expected throw: " << c.text;
            } catch (const judge::ScoreParseError& e) {
                EXPECT_EQ(e.kind(), want_kind) << c.text;
                if (e.kind() == want_kind) ++passed;
            }
        }
    }
    EXPECT_EQ(passed, 30u);
}

TEST(ParseScore, RoundTripsRenderedScores) {
    for (int k = 0; k <= 3; ++k) {
        EXPECT_EQ(judge::parse_score("Score: " + std::to_string(k)), k);
    }
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

TEST(Evaluate, AveragesFourMetrics) {
    MetricScriptBackend mock;
    mock.replies[Metric::novelty] = {"because...\nScore: 1"};
    mock.replies[Metric::relevance] = {"because...\nScore: 2"};
    mock.replies[Metric::significance] = {"because...\nScore: 3"};
    mock.replies[Metric::verifiability] = {"because...\nScore: 2"};

    const auto verdict = judge::evaluate(kBackground, kHypothesis, mock, options());
    EXPECT_FALSE(verdict.partial);
    EXPECT_DOUBLE_EQ(verdict.avg, 2.0);
    EXPECT_EQ(verdict.metrics.at(Metric::novelty).score, 1);
    EXPECT_EQ(verdict.metrics.at(Metric::significance).score, 3);
    EXPECT_EQ(verdict.metrics.at(Metric::novelty).explanation, "because...");
    EXPECT_EQ(mock.call_count(), 4u);
}

TEST(Evaluate, AllZeros) {
    MetricScriptBackend mock;
    for (auto metric : judge::kMetrics) mock.replies[metric] = {"Score: 0"};
    const auto verdict = judge::evaluate(kBackground, kHypothesis, mock, options());
    EXPECT_DOUBLE_EQ(verdict.avg, 0.0);
    EXPECT_FALSE(verdict.partial);
}

TEST(Evaluate, TemperatureIsZeroOnEveryCall) {
    MetricScriptBackend mock;
    for (auto metric : judge::kMetrics) mock.replies[metric] = {"Score: 1"};
    judge::evaluate(kBackground, kHypothesis, mock, options());
    for (const auto& record : mock.call_log()) {
        EXPECT_DOUBLE_EQ(record.request.temperature, 0.0);
    }
}

TEST(Evaluate, UnparseableMetricYieldsPartialVerdict) {
    MetricScriptBackend mock;
    mock.replies[Metric::novelty] = {"no marker here", "still no marker"};  // retry fails too
    mock.replies[Metric::relevance] = {"Score: 2"};
    mock.replies[Metric::significance] = {"Score: 2"};
    mock.replies[Metric::verifiability] = {"Score: 2"};

    const auto verdict = judge::evaluate(kBackground, kHypothesis, mock, options());
    EXPECT_TRUE(verdict.partial);
    EXPECT_FALSE(verdict.metrics.at(Metric::novelty).score.has_value());
    EXPECT_DOUBLE_EQ(verdict.avg, 2.0);  // mean over the three parsed metrics
    EXPECT_EQ(mock.call_count(), 5u);    // 4 calls + 1 retry
}

TEST(Evaluate, RetryRecoversTheScore) {
    MetricScriptBackend mock;
    mock.replies[Metric::novelty] = {"forgot the marker", "Score: 1"};
    mock.replies[Metric::relevance] = {"Score: 2"};
    mock.replies[Metric::significance] = {"Score: 2"};
    mock.replies[Metric::verifiability] = {"Score: 2"};

    const auto verdict = judge::evaluate(kBackground, kHypothesis, mock, options());
    EXPECT_FALSE(verdict.partial);
    EXPECT_EQ(verdict.metrics.at(Metric::novelty).score, 1);

    // The retry carries the restatement instruction.
    const auto log = mock.call_log();
    bool saw_restate = false;
    for (const auto& record : log) {
        for (const auto& message : record.request.messages) {
            if (message.content.find("restate your score") != std::string::npos) {
                saw_restate = true;
            }
        }
    }
    EXPECT_TRUE(saw_restate);
}

TEST(Evaluate, ExactlyFourCallsPerHypothesis) {
    MetricScriptBackend mock;
    for (auto metric : judge::kMetrics) mock.replies[metric] = {"Score: 2"};
    judge::evaluate(kBackground, kHypothesis, mock, options());
    EXPECT_EQ(mock.call_count(), 4u);
}

TEST(Verdict, JsonRoundTrip) {
    MetricScriptBackend mock;
    for (auto metric : judge::kMetrics) mock.replies[metric] = {"why\nScore: 3"};
    const auto verdict = judge::evaluate(kBackground, kHypothesis, mock, options());
    const auto restored = judge::verdict_from_json(judge::to_json(verdict));
    EXPECT_DOUBLE_EQ(restored.avg, verdict.avg);
    EXPECT_EQ(restored.partial, verdict.partial);
    EXPECT_EQ(restored.metrics.at(Metric::novelty).score,
              verdict.metrics.at(Metric::novelty).score);
}

// ---------------------------------------------------------------------------
// correlate_with_human
// ---------------------------------------------------------------------------

namespace {

judge::HumanScoreRecord human(const std::string& id, const std::string& annotator, int n,
                              int r, int s, int v) {
    judge::HumanScoreRecord record;
    record.example_id = id;
    record.annotator_id = annotator;
    record.scores = {{Metric::novelty, n},
                     {Metric::relevance, r},
                     {Metric::significance, s},
                     {Metric::verifiability, v}};
    return record;
}

}  // namespace

TEST(Correlate, JudgeEqualToHumanIsPerfect) {
    std::map<std::string, double> judge_avgs;
    std::vector<judge::HumanScoreRecord> humans;
    const std::vector<std::array<int, 4>> scores = {
        {1, 2, 3, 2}, {0, 1, 1, 2}, {3, 3, 2, 3}, {2, 2, 2, 2}, {1, 0, 0, 1}};
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto id = "e" + std::to_string(i);
        const auto& s = scores[i];
        humans.push_back(human(id, "a1", s[0], s[1], s[2], s[3]));
        judge_avgs[id] = (s[0] + s[1] + s[2] + s[3]) / 4.0;
    }
    const auto report = judge::correlate_with_human(judge_avgs, humans);
    EXPECT_NEAR(report.pearson, 1.0, 1e-12);
    EXPECT_NEAR(report.spearman, 1.0, 1e-12);
    EXPECT_EQ(report.n, 5u);
    EXPECT_EQ(report.dropped, 0u);
}

TEST(Correlate, AnnotatorsAveragedBeforeMetrics) {
    std::map<std::string, double> judge_avgs = {{"e0", 1.0}, {"e1", 2.0}, {"e2", 3.0}};
    std::vector<judge::HumanScoreRecord> humans = {
        human("e0", "a1", 0, 0, 0, 0), human("e0", "a2", 2, 2, 2, 2),  // avg 1.0
        human("e1", "a1", 2, 2, 2, 2), human("e1", "a2", 2, 2, 2, 2),  // avg 2.0
        human("e2", "a1", 3, 3, 3, 3),                                 // avg 3.0
    };
    const auto report = judge::correlate_with_human(judge_avgs, humans);
    EXPECT_NEAR(report.pearson, 1.0, 1e-12);
    EXPECT_NEAR(report.spearman, 1.0, 1e-12);
}

TEST(Correlate, SyntheticTenExampleFixtureMatchesMetricsModule) {
    std::map<std::string, double> judge_avgs;
    std::vector<judge::HumanScoreRecord> humans;
    std::vector<double> judge_vec;
    std::vector<double> human_vec;
    const int judge_scores[10] = {0, 3, 1, 2, 2, 1, 3, 0, 2, 1};
    const int human_scores[10] = {1, 3, 0, 2, 3, 1, 2, 0, 2, 2};
    for (int i = 0; i < 10; ++i) {
        const auto id = "e" + std::to_string(i);
        judge_avgs[id] = judge_scores[i];
        humans.push_back(human(id, "a1", human_scores[i], human_scores[i], human_scores[i],
                               human_scores[i]));
        judge_vec.push_back(judge_scores[i]);
        human_vec.push_back(human_scores[i]);
    }
    const auto report = judge::correlate_with_human(judge_avgs, humans);
    EXPECT_NEAR(report.pearson, metrics::pearson(judge_vec, human_vec), 1e-12);
    EXPECT_NEAR(report.spearman, metrics::spearman(judge_vec, human_vec), 1e-12);
    EXPECT_EQ(report.n, 10u);
}

TEST(Correlate, DisjointIdSetsThrowWithDropCount) {
    std::map<std::string, double> judge_avgs = {{"a", 1.0}, {"b", 2.0}};
    std::vector<judge::HumanScoreRecord> humans = {human("x", "a1", 1, 1, 1, 1),
                                                   human("y", "a1", 2, 2, 2, 2)};
    try {
        judge::correlate_with_human(judge_avgs, humans);
        FAIL() << "expected InvalidInput";
    } catch (const InvalidInput& e) {
        EXPECT_NE(std::string(e.what()).find("4 dropped"), std::string::npos);
    }
}

TEST(Correlate, UnmatchedIdsDroppedAndCounted) {
    std::map<std::string, double> judge_avgs = {
        {"e0", 1.0}, {"e1", 2.0}, {"e2", 3.0}, {"only-judge", 2.0}};
    std::vector<judge::HumanScoreRecord> humans = {
        human("e0", "a1", 1, 1, 1, 1), human("e1", "a1", 2, 2, 2, 2),
        human("e2", "a1", 3, 3, 3, 3), human("only-human", "a1", 0, 0, 0, 0)};
    const auto report = judge::correlate_with_human(judge_avgs, humans);
    EXPECT_EQ(report.n, 3u);
    EXPECT_EQ(report.dropped, 2u);
}

TEST(HumanRecord, JsonValidation) {
    const nlohmann::json good = {{"example_id", "e0"}, {"annotator_id", "a1"},
                                 {"novelty", 2},       {"relevance", 3},
                                 {"significance", 1},  {"verifiability", 0}};
    const auto record = judge::human_record_from_json(good);
    EXPECT_EQ(record.scores.at(Metric::relevance), 3);

    auto out_of_range = good;
    out_of_range["novelty"] = 7;
    EXPECT_THROW(judge::human_record_from_json(out_of_range), InvalidInput);

    auto missing = good;
    missing.erase("significance");
    EXPECT_THROW(judge::human_record_from_json(missing), InvalidInput);
}
