#include "hypogen/prompting.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "hypogen/errors.hpp"
#include "hypogen/metrics.hpp"
#include "oracles.hpp"
#include "parser_fixtures.hpp"

using namespace hypogen;
using prompting::ShotSelector;

namespace {

std::string read_file(const std::string& relpath) {
    std::ifstream in(std::string(HYPOGEN_REPO_ROOT) + "/" + relpath, std::ios::binary);
    EXPECT_TRUE(in.good()) << "missing file: " << relpath;
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

corpus::BHPair bh_pair(const std::string& id, std::vector<std::string> background,
                         std::vector<std::string> hypothesis) {
    corpus::BHPair pair;
    pair.id = id;
    pair.source_id = "src-" + id;
    pair.background = std::move(background);
    pair.hypothesis = std::move(hypothesis);
    return pair;
}

}  // namespace

// ---------------------------------------------------------------------------
// Golden templates
// ---------------------------------------------------------------------------

TEST(Templates, EmbeddedBodiesMatchTemplateFilesByteForByte) {
    const auto& all = prompting::paper_templates();
    ASSERT_EQ(all.size(), 11u);
    for (const auto& [name, body] : all) {
        EXPECT_EQ(body, read_file("templates/" + name + ".txt")) << name;
    }
}

TEST(Templates, PlaceholderInventory) {
    EXPECT_EQ(prompting::find_placeholders(prompting::zero_shot_template().body),
              (std::vector<std::string>{"user_input"}));
    EXPECT_EQ(prompting::find_placeholders(prompting::few_shot_template().body),
              (std::vector<std::string>{"examples", "input"}));
}

TEST(RenderTemplate, FillsSlotsWithoutRescanning) {
    // A slot value containing brace text must be kept literally.
    const auto out = prompting::render_template("a {x} b", {{"x", "{y}"}});
    EXPECT_EQ(out, "a {y} b");
}

TEST(RenderTemplate, UnfilledPlaceholderThrows) {
    EXPECT_THROW(prompting::render_template("a {x} b", {}), InvalidInput);
}

// ---------------------------------------------------------------------------
// Zero-shot rendering
// ---------------------------------------------------------------------------

TEST(RenderZeroShot, SubstitutesNumberedBackground) {
    const std::vector<std::string> background = {"A"};
    const auto prompt = prompting::render_zero_shot(background);
    EXPECT_NE(prompt.find("(1) A"), std::string::npos);
    // Everything else is the golden template, byte for byte.
    std::string expected = read_file("templates/zero_shot.txt");
    const auto slot = expected.find("{user_input}");
    ASSERT_NE(slot, std::string::npos);
    expected.replace(slot, 12, "(1) A");
    EXPECT_EQ(prompt, expected);
}

TEST(RenderZeroShot, EmptyBackgroundThrows) {
    EXPECT_THROW(prompting::render_zero_shot({}), InvalidInput);
}

TEST(RenderZeroShot, Pure) {
    const std::vector<std::string> background = {"A", "B"};
    EXPECT_EQ(prompting::render_zero_shot(background),
              prompting::render_zero_shot(background));
}

// ---------------------------------------------------------------------------
// Few-shot rendering
// ---------------------------------------------------------------------------

TEST(RenderFewShot, TwoShotsPlusQueryHasThreeBackgroundMarkers) {
    const std::vector<corpus::BHPair> shots = {
        bh_pair("s1", {"b1", "b2"}, {"h1"}),
        bh_pair("s2", {"c1"}, {"g1", "g2"}),
    };
    const std::vector<std::string> background = {"q1", "q2"};
    const auto prompt = prompting::render_few_shot(shots, background);

    std::size_t markers = 0;
    for (std::size_t pos = prompt.find("Background:"); pos != std::string::npos;
         pos = prompt.find("Background:", pos + 1)) {
        ++markers;
    }
    EXPECT_EQ(markers, 3u);
}

TEST(RenderFewShot, EndsWithHypothesisMarker) {
    const std::vector<corpus::BHPair> shots = {bh_pair("s1", {"b"}, {"h"})};
    const std::vector<std::string> background = {"q"};
    const auto prompt = prompting::render_few_shot(shots, background);
    ASSERT_GE(prompt.size(), 11u);
    EXPECT_EQ(prompt.substr(prompt.size() - 11), "Hypothesis:");
}

TEST(RenderFewShot, ShotBlockLayout) {
    const std::vector<corpus::BHPair> shots = {bh_pair("s1", {"b1", "b2"}, {"h1"})};
    const std::vector<std::string> background = {"q1"};
    const auto prompt = prompting::render_few_shot(shots, background);
    EXPECT_NE(prompt.find("Background:\n(1) b1\n(2) b2\nHypothesis:\n(1) h1\n\n"
                          "Background: (1) q1\nHypothesis:"),
              std::string::npos);
}

TEST(RenderFewShot, EmptyShotsOrBackgroundThrow) {
    const std::vector<corpus::BHPair> shots = {bh_pair("s1", {"b"}, {"h"})};
    const std::vector<std::string> background = {"q"};
    EXPECT_THROW(prompting::render_few_shot({}, background), InvalidInput);
    EXPECT_THROW(prompting::render_few_shot(shots, {}), InvalidInput);
}

TEST(RenderFewShot, Deterministic) {
    const std::vector<corpus::BHPair> shots = {bh_pair("s1", {"b"}, {"h"})};
    const std::vector<std::string> background = {"q"};
    EXPECT_EQ(prompting::render_few_shot(shots, background),
              prompting::render_few_shot(shots, background));
}

// ---------------------------------------------------------------------------
// Shot selection
// ---------------------------------------------------------------------------

namespace {

std::vector<corpus::BHPair> synthetic_pool() {
    std::vector<corpus::BHPair> pool;
    const std::vector<std::string> texts = {
        "cardiac tissue stiffness markers in early infarction",
        "tumor microenvironment stromal cell recruitment",
        "neonatal intensive care parental stress outcomes",
        "cardiac rhythm monitoring with wearable devices",
        "stromal reprogramming of mesenchymal stem cells",
        "deep learning for protein structure prediction",
        "infarction biomarkers alpha short alpha long",
        "wearable photoplethysmography accuracy studies",
        "parental caregiving strain after discharge",
        "hypothesis generation from biomedical literature",
    };
    for (std::size_t i = 0; i < texts.size(); ++i) {
        pool.push_back(bh_pair("p" + std::to_string(i), {texts[i]},
                                 {"hypothesis " + std::to_string(i)}));
    }
    return pool;
}

}  // namespace

TEST(SelectShots, KZeroReturnsEmpty) {
    const auto pool = synthetic_pool();
    ShotSelector selector;
    selector.k = 0;
    EXPECT_TRUE(prompting::select_shots(pool, "anything", selector).empty());
}

TEST(SelectShots, KBeyondPoolThrows) {
    const auto pool = synthetic_pool();
    ShotSelector selector;
    selector.k = pool.size() + 1;
    EXPECT_THROW(prompting::select_shots(pool, "q", selector), InvalidInput);
}

TEST(SelectShots, RandomModeDeterministicUnderSeed) {
    const auto pool = synthetic_pool();
    ShotSelector selector;
    selector.mode = ShotSelector::Mode::random;
    selector.k = 5;
    selector.seed = 1234;
    const auto a = prompting::select_shots(pool, "q", selector);
    const auto b = prompting::select_shots(pool, "q", selector);
    ASSERT_EQ(a.size(), 5u);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].id, b[i].id);

    selector.seed = 99;
    const auto c = prompting::select_shots(pool, "q", selector);
    bool all_same = true;
    for (std::size_t i = 0; i < a.size(); ++i) all_same &= a[i].id == c[i].id;
    EXPECT_FALSE(all_same);

    // Without replacement: ids are distinct.
    std::set<std::string> ids;
    for (const auto& shot : a) ids.insert(shot.id);
    EXPECT_EQ(ids.size(), a.size());
}

TEST(SelectShots, SimilaritySelfMatchRanksFirst) {
    const auto pool = synthetic_pool();
    ShotSelector selector;
    selector.mode = ShotSelector::Mode::similarity;
    selector.k = 3;
    const auto shots = prompting::select_shots(pool, pool[3].background[0], selector);
    ASSERT_EQ(shots.size(), 3u);
    EXPECT_EQ(shots[0].id, pool[3].id);
}

TEST(SelectShots, SimilarityRankingMatchesBruteForceCosine) {
    const auto pool = synthetic_pool();
    const std::string query = "cardiac infarction markers in tissue";

    ShotSelector selector;
    selector.mode = ShotSelector::Mode::similarity;
    selector.k = pool.size();
    const auto shots = prompting::select_shots(pool, query, selector);

    std::vector<oracles::Tokens> docs;
    for (const auto& pair : pool) docs.push_back(metrics::tokenize(pair.background[0]));
    const auto scores = oracles::tfidf_cosine(docs, metrics::tokenize(query));
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return pool[a].id < pool[b].id;
    });

    ASSERT_EQ(shots.size(), pool.size());
    for (std::size_t i = 0; i < shots.size(); ++i) {
        EXPECT_EQ(shots[i].id, pool[order[i]].id) << "rank " << i;
    }
}

// ---------------------------------------------------------------------------
// Retrieval index
// ---------------------------------------------------------------------------

TEST(RetrievalIndex, SingleDocSelfQueryScoresOne) {
    const std::vector<prompting::Document> docs = {{"d0", "alpha beta gamma"}};
    const auto index = prompting::build_index(docs);
    const auto result = prompting::top_k(index, "alpha beta gamma", 1);
    ASSERT_EQ(result.hits.size(), 1u);
    EXPECT_EQ(result.hits[0].id, "d0");
    EXPECT_NEAR(result.hits[0].score, 1.0, 1e-9);
}

TEST(RetrievalIndex, UnknownQueryTermsFlagged) {
    const std::vector<prompting::Document> docs = {{"d0", "alpha beta"}};
    const auto index = prompting::build_index(docs);
    const auto result = prompting::top_k(index, "zeta eta", 1);
    EXPECT_TRUE(result.hits.empty());
    EXPECT_TRUE(result.no_known_terms);
}

TEST(RetrievalIndex, EmptyPoolThrows) {
    EXPECT_THROW(prompting::build_index({}), InvalidInput);
}

TEST(RetrievalIndex, IdfFormula) {
    // 3 docs, "shared" in all, "rare" in one:
    // idf(shared) = ln(4/4) + 1 = 1, idf(rare) = ln(4/2) + 1.
    const std::vector<prompting::Document> docs = {
        {"d0", "shared rare"}, {"d1", "shared"}, {"d2", "shared"}};
    const auto index = prompting::build_index(docs);
    EXPECT_NEAR(index.idf[index.vocabulary.at("shared")], 1.0, 1e-12);
    EXPECT_NEAR(index.idf[index.vocabulary.at("rare")], std::log(2.0) + 1.0, 1e-12);
}

TEST(RetrievalIndex, DocVectorsAreUnitLength) {
    const std::vector<prompting::Document> docs = {
        {"d0", "a b c a"}, {"d1", "b c d"}, {"d2", "e f"}};
    const auto index = prompting::build_index(docs);
    for (const auto& vec : index.doc_vectors) {
        double norm = 0;
        for (const auto& [_, w] : vec) norm += w * w;
        EXPECT_NEAR(norm, 1.0, 1e-12);
    }
}

TEST(RetrievalIndex, FiveDocScoresMatchHandComputedCosine) {
    const std::vector<prompting::Document> docs = {
        {"d0", "heart attack risk"},
        {"d1", "heart rhythm device"},
        {"d2", "tumor cell growth"},
        {"d3", "attack risk factors"},
        {"d4", "cell device sensors"},
    };
    const auto index = prompting::build_index(docs);
    const std::string query = "heart attack";
    const auto result = prompting::top_k(index, query, 5);

    std::vector<oracles::Tokens> tokenized;
    for (const auto& doc : docs) tokenized.push_back(metrics::tokenize(doc.text));
    const auto expected = oracles::tfidf_cosine(tokenized, metrics::tokenize(query));

    ASSERT_EQ(result.hits.size(), 5u);
    for (const auto& hit : result.hits) {
        const std::size_t doc_index = static_cast<std::size_t>(hit.id[1] - '0');
        EXPECT_NEAR(hit.score, expected[doc_index], 1e-9) << hit.id;
    }
}

TEST(RetrievalIndex, ScoresNonIncreasingInRank) {
    const std::vector<prompting::Document> docs = {
        {"d0", "a b c"}, {"d1", "a b"}, {"d2", "a"}, {"d3", "x y"}, {"d4", "a c"}};
    const auto index = prompting::build_index(docs);
    const auto result = prompting::top_k(index, "a b c", 5);
    for (std::size_t i = 1; i < result.hits.size(); ++i) {
        EXPECT_LE(result.hits[i].score, result.hits[i - 1].score + 1e-12);
    }
}

TEST(RetrievalIndex, RankingInvariantUnderPoolReordering) {
    std::vector<prompting::Document> docs = {
        {"d0", "alpha beta gamma"}, {"d1", "alpha beta"},   {"d2", "beta gamma"},
        {"d3", "delta epsilon"},    {"d4", "alpha epsilon"}};
    const auto forward = prompting::top_k(prompting::build_index(docs), "alpha beta", 5);
    std::reverse(docs.begin(), docs.end());
    const auto reversed = prompting::top_k(prompting::build_index(docs), "alpha beta", 5);
    ASSERT_EQ(forward.hits.size(), reversed.hits.size());
    for (std::size_t i = 0; i < forward.hits.size(); ++i) {
        EXPECT_EQ(forward.hits[i].id, reversed.hits[i].id);
        EXPECT_NEAR(forward.hits[i].score, reversed.hits[i].score, 1e-12);
    }
}

TEST(RetrievalIndex, TiesBrokenByAscendingDocId) {
    const std::vector<prompting::Document> docs = {
        {"z", "same text"}, {"a", "same text"}, {"m", "same text"}};
    const auto index = prompting::build_index(docs);
    const auto result = prompting::top_k(index, "same text", 3);
    ASSERT_EQ(result.hits.size(), 3u);
    EXPECT_EQ(result.hits[0].id, "a");
    EXPECT_EQ(result.hits[1].id, "m");
    EXPECT_EQ(result.hits[2].id, "z");
}

// ---------------------------------------------------------------------------
// Numbered-list parsing
// ---------------------------------------------------------------------------

TEST(ParseHypotheses, MandatedFormat) {
    const auto parsed = prompting::parse_hypotheses("(1) A\n(2) B\n(3) C");
    EXPECT_FALSE(parsed.fallback);
    EXPECT_EQ(parsed.statements, (std::vector<std::string>{"A", "B", "C"}));
}

TEST(ParseHypotheses, ProseFallsBackToSingleStatement) {
    const auto parsed = prompting::parse_hypotheses("Some prose without numbering");
    EXPECT_TRUE(parsed.fallback);
    EXPECT_EQ(parsed.statements,
              (std::vector<std::string>{"Some prose without numbering"}));
}

TEST(ParseHypotheses, BlankInputThrows) {
    EXPECT_THROW(prompting::parse_hypotheses(""), InvalidInput);
    EXPECT_THROW(prompting::parse_hypotheses("  \n\t"), InvalidInput);
}

TEST(ParseHypotheses, RoundTripsRenderedStatements) {
    const std::vector<std::string> statements = {
        "Alpha short tracks early infarction.",
        "E2 and E3 discriminate late stages.",
        "Rheology is independent of disease status.",
    };
    const auto parsed =
        prompting::parse_hypotheses(prompting::render_statements(statements));
    EXPECT_FALSE(parsed.fallback);
    EXPECT_EQ(parsed.statements, statements);
}

TEST(ParseHypotheses, LabeledOutputFixtures) {
    const auto& cases = fixtures::hypotheses_cases();
    ASSERT_EQ(cases.size(), 15u);
    std::size_t passed = 0;
    for (const auto& c : cases) {
        const auto parsed = prompting::parse_hypotheses(c.text);
        EXPECT_EQ(parsed.statements, c.expected) << c.text;
        EXPECT_EQ(parsed.fallback, c.fallback) << c.text;
        if (parsed.statements == c.expected && parsed.fallback == c.fallback) ++passed;
    }
    EXPECT_EQ(passed, 15u);
}

TEST(RenderStatements, NumbersFromOne) {
    const std::vector<std::string> statements = {"a", "b"};
    EXPECT_EQ(prompting::render_statements(statements), "(1) a\n(2) b");
    EXPECT_EQ(prompting::render_statements({}), "");
}
