#include "hypogen/agents.hpp"

#include <gtest/gtest.h>

#include <algorithm>

#include "hypogen/errors.hpp"
#include "agent_mocks.hpp"
#include "parser_fixtures.hpp"

using namespace hypogen;
using agents::ReactStep;
using agents::Variant;

namespace {

const std::vector<std::string> kBackground = {
    "alpha short and alpha long separate early infarction samples",
    "elastic moduli discriminate mid and late stages",
};

agents::SessionOptions options_with(int max_rounds = 6, int max_steps = 8) {
    agents::SessionOptions options;
    options.model_id = "mock-agent";
    options.max_rounds = max_rounds;
    options.max_steps = max_steps;
    return options;
}

agents::SearchTool make_tool() { return fixtures::small_search_tool(); }

}  // namespace

// ---------------------------------------------------------------------------
// parse_react grammar
// ---------------------------------------------------------------------------

TEST(ParseReact, GrammarFixtures) {
    const auto& cases = fixtures::react_cases();
    ASSERT_EQ(cases.size(), 12u);
    std::size_t passed = 0;
    for (const auto& c : cases) {
        const auto step = agents::parse_react(c.text);
        EXPECT_EQ(step.kind, c.kind) << c.text;
        bool ok = step.kind == c.kind;
        if (c.kind == ReactStep::Kind::action) {
            EXPECT_EQ(step.tool, c.tool) << c.text;
            EXPECT_EQ(step.argument, c.argument) << c.text;
            ok = ok && step.tool == c.tool && step.argument == c.argument;
        }
        if (ok) ++passed;
    }
    EXPECT_EQ(passed, 12u);
}

TEST(ParseReact, FinalAnswerPayloadExtendsToReplyEnd) {
    const auto step = agents::parse_react("Final Answer:\n(1) X\n(2) Y");
    ASSERT_EQ(step.kind, ReactStep::Kind::final_answer);
    EXPECT_EQ(step.text, "(1) X\n(2) Y");
}

// ---------------------------------------------------------------------------
// detect_final_answer
// ---------------------------------------------------------------------------

TEST(DetectFinalAnswer, ParsesNumberedItems) {
    const auto items =
        agents::detect_final_answer("The hypothesis is solid.\nFinal Answer:\n(1) X\n(2) Y");
    ASSERT_TRUE(items.has_value());
    EXPECT_EQ(*items, (std::vector<std::string>{"X", "Y"}));
}

TEST(DetectFinalAnswer, AbsentMarkerIsNone) {
    bool empty_answer = true;
    EXPECT_FALSE(
        agents::detect_final_answer("needs more work", &empty_answer).has_value());
    EXPECT_FALSE(empty_answer);
}

TEST(DetectFinalAnswer, MarkerWithoutItemsIsNonApprovalWithWarning) {
    bool empty_answer = false;
    EXPECT_FALSE(
        agents::detect_final_answer("Final Answer:\n(no items)", &empty_answer).has_value());
    EXPECT_TRUE(empty_answer);
}

TEST(DetectFinalAnswer, LastMarkerWins) {
    const auto items = agents::detect_final_answer(
        "Use the format Final Answer: when ready.\nFinal Answer:\n(1) Z");
    ASSERT_TRUE(items.has_value());
    EXPECT_EQ(*items, (std::vector<std::string>{"Z"}));
}

// ---------------------------------------------------------------------------
// run_multi
// ---------------------------------------------------------------------------

TEST(RunMulti, CriticApprovalInRoundOne) {
    fixtures::RoleScriptBackend mock;
    mock.role_replies["Analyst"] = {"keywords: infarction, stiffness"};
    mock.role_replies["Scientist"] = {"(1) Stiffness markers predict onset."};
    mock.role_replies["Critic"] = {"Looks strong.\nFinal Answer:\n(1) Stiffness markers predict onset."};

    const auto result = agents::run_multi(kBackground, mock, options_with());
    EXPECT_TRUE(result.approved);
    EXPECT_EQ(result.rounds_used, 1);
    EXPECT_EQ(result.hypothesis,
              (std::vector<std::string>{"Stiffness markers predict onset."}));
    EXPECT_EQ(result.model_calls, 3u);
    EXPECT_TRUE(agents::transcript_follows_state_machine(Variant::multi, result.transcript));
}

TEST(RunMulti, NeverApprovingCriticFallsBackToLastScientist) {
    fixtures::RoleScriptBackend mock;
    for (int round = 0; round < 3; ++round) {
        mock.role_replies["Analyst"].push_back("more keywords");
        mock.role_replies["Scientist"].push_back(
            "(1) Round " + std::to_string(round + 1) + " hypothesis.");
        mock.role_replies["Critic"].push_back("Not convincing, refine further.");
    }
    const auto result = agents::run_multi(kBackground, mock, options_with(3));
    EXPECT_FALSE(result.approved);
    EXPECT_EQ(result.rounds_used, 3);
    EXPECT_EQ(result.hypothesis, (std::vector<std::string>{"Round 3 hypothesis."}));
    EXPECT_EQ(result.model_calls, 9u);
    EXPECT_TRUE(agents::transcript_follows_state_machine(Variant::multi, result.transcript));
}

TEST(RunMulti, SixRoundSessionSpeakerSequence) {
    fixtures::RoleScriptBackend mock;
    for (int round = 0; round < 6; ++round) {
        mock.role_replies["Analyst"].push_back("analysis " + std::to_string(round));
        mock.role_replies["Scientist"].push_back("(1) candidate " + std::to_string(round));
        mock.role_replies["Critic"].push_back(
            round == 5 ? "Final Answer:\n(1) converged" : "keep refining");
    }
    const auto result = agents::run_multi(kBackground, mock, options_with(6));
    EXPECT_TRUE(result.approved);
    EXPECT_EQ(result.rounds_used, 6);

    std::size_t analyst_turns = 0;
    for (const auto& entry : result.transcript) {
        if (entry.speaker == "analyst") ++analyst_turns;
    }
    EXPECT_EQ(analyst_turns, 6u);
    EXPECT_TRUE(agents::transcript_follows_state_machine(Variant::multi, result.transcript));
    // Role order per round: analyst, scientist, critic.
    for (std::size_t i = 0; i < result.transcript.size(); ++i) {
        const std::vector<std::string> pattern = {"analyst", "scientist", "critic"};
        EXPECT_EQ(result.transcript[i].speaker, pattern[i % 3]);
    }
}

TEST(RunMulti, ToolVariantAddsSearchAndEngineerPerRound) {
    fixtures::RoleScriptBackend mock;
    for (int round = 0; round < 2; ++round) {
        mock.role_replies["Analyst"].push_back("infarction stiffness markers");
        mock.role_replies["Engineer"].push_back("clue: mechanical markers literature");
        mock.role_replies["Scientist"].push_back("(1) candidate");
        mock.role_replies["Critic"].push_back(
            round == 1 ? "Final Answer:\n(1) approved idea" : "refine");
    }
    const auto tool = make_tool();
    const auto result = agents::run_multi(kBackground, mock, options_with(6), &tool);
    EXPECT_TRUE(result.approved);
    EXPECT_EQ(result.rounds_used, 2);
    EXPECT_EQ(result.model_calls, 8u);  // 4 per round
    EXPECT_EQ(result.tool_calls, 2u);   // 1 per round
    EXPECT_TRUE(
        agents::transcript_follows_state_machine(Variant::multi_tool, result.transcript));
}

TEST(RunMulti, BackendFailureCarriesPartialTranscript) {
    fixtures::RoleScriptBackend mock;
    mock.role_replies["Analyst"] = {"keywords"};
    // Scientist queue empty -> failure mid-round.
    try {
        agents::run_multi(kBackground, mock, options_with());
        FAIL() << "expected SessionError";
    } catch (const agents::SessionError& e) {
        EXPECT_EQ(e.transcript().size(), 1u);
        EXPECT_EQ(e.transcript()[0].speaker, "analyst");
    }
}

TEST(RunMulti, EmptyBackgroundThrows) {
    fixtures::RoleScriptBackend mock;
    EXPECT_THROW(agents::run_multi({}, mock, options_with()), InvalidInput);
}

TEST(RunMulti, EveryRoleSeesEnvironmentRolePromptAndSharedTranscript) {
    fixtures::RoleScriptBackend mock;
    mock.role_replies["Analyst"] = {"keywords here"};
    mock.role_replies["Scientist"] = {"(1) S."};
    mock.role_replies["Critic"] = {"Final Answer:\n(1) S."};
    agents::run_multi(kBackground, mock, options_with());

    const auto log = mock.call_log();
    ASSERT_EQ(log.size(), 3u);
    // Critic call: env prompt, role prompt, then the two prior turns.
    const auto& critic_messages = log[2].request.messages;
    ASSERT_EQ(critic_messages.size(), 4u);
    EXPECT_NE(critic_messages[0].content.find("collaborative multi-agent system"),
              std::string::npos);
    EXPECT_NE(critic_messages[0].content.find("(1) " + kBackground[0]), std::string::npos);
    EXPECT_EQ(critic_messages[1].content.find("You are the Critic"), 0u);
    EXPECT_EQ(critic_messages[2].content.find("Analyst: "), 0u);
    EXPECT_EQ(critic_messages[3].content.find("Scientist: "), 0u);
}

// ---------------------------------------------------------------------------
// run_single
// ---------------------------------------------------------------------------

TEST(RunSingle, PlainVariantMakesExactlyOneCall) {
    fixtures::RoleScriptBackend mock;
    mock.single_replies = {"(1) H"};
    const auto result =
        agents::run_single(kBackground, mock, options_with(), Variant::single);
    EXPECT_EQ(result.hypothesis, (std::vector<std::string>{"H"}));
    EXPECT_EQ(result.model_calls, 1u);
    EXPECT_EQ(mock.call_count(), 1u);
    EXPECT_TRUE(agents::transcript_follows_state_machine(Variant::single, result.transcript));
}

TEST(RunSingle, ReactLoopRecordsOneToolInvocation) {
    fixtures::RoleScriptBackend mock;
    mock.single_replies = {
        "Thought: I should look for related markers",
        "Action: search[infarction mechanical markers]",
        "Final Answer: (1) Mechanical markers generalize across stages.",
    };
    const auto tool = make_tool();
    const auto result =
        agents::run_single(kBackground, mock, options_with(), Variant::single_react, &tool);
    EXPECT_EQ(result.tool_calls, 1u);
    EXPECT_EQ(result.model_calls, 3u);
    EXPECT_EQ(result.hypothesis,
              (std::vector<std::string>{"Mechanical markers generalize across stages."}));
    // Observation follows the action on the transcript.
    bool saw_observation = false;
    for (const auto& entry : result.transcript) {
        if (entry.speaker == "tool") {
            saw_observation = true;
            EXPECT_EQ(entry.message.content.find("Observation: "), 0u);
        }
    }
    EXPECT_TRUE(saw_observation);
    EXPECT_TRUE(
        agents::transcript_follows_state_machine(Variant::single_react, result.transcript));
}

TEST(RunSingle, MalformedReactStepAborts) {
    fixtures::RoleScriptBackend mock;
    mock.single_replies = {"no recognizable marker"};
    const auto tool = make_tool();
    try {
        agents::run_single(kBackground, mock, options_with(), Variant::single_react, &tool);
        FAIL() << "expected SessionError";
    } catch (const agents::SessionError& e) {
        EXPECT_NE(std::string(e.what()).find("malformed"), std::string::npos);
        EXPECT_FALSE(e.transcript().empty());
    }
}

TEST(RunSingle, ReactStepCapTerminatesAdversarialMock) {
    fixtures::RoleScriptBackend mock;
    for (int i = 0; i < 50; ++i) {
        mock.single_replies.push_back("Thought: still thinking");
    }
    const auto tool = make_tool();
    try {
        agents::run_single(kBackground, mock, options_with(6, 4), Variant::single_react,
                           &tool);
        FAIL() << "expected SessionError";
    } catch (const agents::SessionError& e) {
        EXPECT_NE(std::string(e.what()).find("cap"), std::string::npos);
    }
    EXPECT_EQ(mock.call_count(), 4u);
}

TEST(RunSingle, FunctionCallRoundTrip) {
    fixtures::RoleScriptBackend mock;
    mock.single_replies = {
        R"({"tool_call": {"name": "search", "arguments": {"query": "cardiac markers"}}})",
        "(1) Tool-informed hypothesis.",
    };
    const auto tool = make_tool();
    const auto result =
        agents::run_single(kBackground, mock, options_with(), Variant::single_fncall, &tool);
    EXPECT_EQ(result.tool_calls, 1u);
    EXPECT_EQ(result.model_calls, 2u);
    EXPECT_EQ(result.hypothesis, (std::vector<std::string>{"Tool-informed hypothesis."}));
    EXPECT_TRUE(
        agents::transcript_follows_state_machine(Variant::single_fncall, result.transcript));

    // The tool spec rode along on the requests.
    for (const auto& record : mock.call_log()) {
        ASSERT_EQ(record.request.tools.size(), 1u);
        EXPECT_EQ(record.request.tools[0].name, "search");
    }
}

TEST(RunSingle, FunctionCallCapTerminates) {
    fixtures::RoleScriptBackend mock;
    for (int i = 0; i < 50; ++i) {
        mock.single_replies.push_back(
            R"({"tool_call": {"name": "search", "arguments": {"query": "loop"}}})");
    }
    const auto tool = make_tool();
    EXPECT_THROW(agents::run_single(kBackground, mock, options_with(6, 3),
                                    Variant::single_fncall, &tool),
                 agents::SessionError);
    EXPECT_EQ(mock.call_count(), 3u);
}

TEST(RunSingle, ToolVariantsRequireTool) {
    fixtures::RoleScriptBackend mock;
    EXPECT_THROW(
        agents::run_single(kBackground, mock, options_with(), Variant::single_react),
        InvalidInput);
}

// ---------------------------------------------------------------------------
// Local search tool
// ---------------------------------------------------------------------------

TEST(SearchTool, DeterministicRankedHits) {
    const auto tool = make_tool();
    const auto first = tool.search("cardiac infarction markers");
    const auto second = tool.search("cardiac infarction markers");
    ASSERT_FALSE(first.hits.empty());
    ASSERT_EQ(first.hits.size(), second.hits.size());
    for (std::size_t i = 0; i < first.hits.size(); ++i) {
        EXPECT_EQ(first.hits[i].source_id, second.hits[i].source_id);
    }
    EXPECT_EQ(first.hits[0].source_id, "rec-1");
}

TEST(SearchTool, HitCountCapped) {
    const auto tool = make_tool();
    EXPECT_LE(tool.search("cardiac tumor cells markers rhythm").hits.size(),
              tool.max_hits());
    EXPECT_LE(tool.search("cardiac", 2).hits.size(), 2u);
}

TEST(SearchTool, UnknownQueryGivesNoResults) {
    const auto tool = make_tool();
    EXPECT_TRUE(tool.search("zzz qqq").hits.empty());
    EXPECT_EQ(agents::SearchTool::format_hits({}), "No results.");
}

// ---------------------------------------------------------------------------
// Role prompts
// ---------------------------------------------------------------------------

TEST(RoleSpecs, GoldenPromptOpenings) {
    EXPECT_EQ(agents::role_spec(agents::AgentRole::analyst)
                  .system_prompt.find("You are the Analyst"),
              0u);
    EXPECT_EQ(agents::role_spec(agents::AgentRole::engineer)
                  .system_prompt.find("You are the Engineer"),
              0u);
    EXPECT_EQ(agents::role_spec(agents::AgentRole::scientist)
                  .system_prompt.find("You are the Scientist"),
              0u);
    EXPECT_EQ(agents::role_spec(agents::AgentRole::critic)
                  .system_prompt.find("You are the Critic"),
              0u);
    // The Critic prompt carries the structured approval format.
    EXPECT_NE(agents::role_spec(agents::AgentRole::critic)
                  .system_prompt.find("Final Answer:"),
              std::string::npos);
}

TEST(Variants, RoundTripNames) {
    for (auto variant : {Variant::single, Variant::single_react, Variant::single_fncall,
                         Variant::multi, Variant::multi_tool}) {
        EXPECT_EQ(agents::variant_from_string(agents::to_string(variant)), variant);
    }
    EXPECT_THROW(agents::variant_from_string("bogus"), InvalidInput);
}
