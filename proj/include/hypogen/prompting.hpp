#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hypogen/corpus.hpp"

namespace hypogen::prompting {

// ---------------------------------------------------------------------------
// Templates
// ---------------------------------------------------------------------------

enum class TemplateKind { zero_shot, few_shot, judge, agent_role, agent_env };

struct PromptTemplate {
    TemplateKind kind;
    std::string body;
};

PromptTemplate zero_shot_template();
PromptTemplate few_shot_template();

/// All shipped paper templates as (name, body), named after the files under
/// templates/. The golden-file tests diff these against disk.
const std::vector<std::pair<std::string, std::string>>& paper_templates();

/// Placeholder names ({lower_snake} tokens) appearing in a template body.
std::vector<std::string> find_placeholders(std::string_view body);

/// Single left-to-right substitution pass; slot values are never rescanned.
/// Throws InvalidInput if the body contains a placeholder with no value.
std::string render_template(std::string_view body,
                            const std::map<std::string, std::string>& slots);

/// "(1) first\n(2) second" rendering of clean statements.
std::string render_statements(std::span<const std::string> statements);

// ---------------------------------------------------------------------------
// Prompt construction
// ---------------------------------------------------------------------------

/// Zero-shot generation prompt. Throws InvalidInput on an empty background.
std::string render_zero_shot(std::span<const std::string> background);

/// One in-context example: Background/Hypothesis blocks with numbered lines.
std::string render_shot_block(const corpus::BHPair& shot);

/// Few-shot generation prompt: every shot as a block, the query background
/// last, terminated by "Hypothesis:". Throws InvalidInput when shots or
/// background are empty (use the zero-shot path instead).
std::string render_few_shot(std::span<const corpus::BHPair> shots,
                            std::span<const std::string> background);

// ---------------------------------------------------------------------------
// In-context example selection
// ---------------------------------------------------------------------------

struct ShotSelector {
    enum class Mode { random, similarity };
    Mode mode = Mode::random;
    std::uint64_t seed = 0;  // random mode only
    std::size_t k = 5;
};

/// k pool pairs: uniform without replacement under the seed, or top-k by
/// tf-idf cosine against the pool backgrounds (ties -> ascending pair id).
/// Throws InvalidInput when k exceeds the pool size.
std::vector<corpus::BHPair> select_shots(std::span<const corpus::BHPair> pool,
                                         std::string_view query_background,
                                         const ShotSelector& selector);

// ---------------------------------------------------------------------------
// Retrieval index
// ---------------------------------------------------------------------------

struct Document {
    std::string id;
    std::string text;
};

/// In-memory tf-idf index: idf(t) = ln((N+1)/(df_t+1)) + 1, term weight
/// (1 + ln tf) * idf, document vectors L2-normalized. Rebuilding from the
/// same pool reproduces the same index.
struct RetrievalIndex {
    std::unordered_map<std::string, std::size_t> vocabulary;  // term -> index
    std::vector<double> idf;
    std::vector<std::vector<std::pair<std::size_t, double>>> doc_vectors;  // sparse, sorted by term
    std::vector<std::string> doc_ids;
};

RetrievalIndex build_index(std::span<const Document> docs);

struct ScoredDoc {
    std::string id;
    double score;
};

struct TopKResult {
    std::vector<ScoredDoc> hits;
    bool no_known_terms = false;  // query shared no vocabulary with the pool
};

/// Top-k by cosine, ties broken by ascending doc id. A query with no known
/// terms yields an empty result with the warning flag set.
TopKResult top_k(const RetrievalIndex& index, std::string_view query, std::size_t k);

// ---------------------------------------------------------------------------
// Output parsing
// ---------------------------------------------------------------------------

/// Statements of "(n)"-numbered lines, markers stripped, continuation lines
/// appended to the statement they follow. No fallback: returns empty when no
/// numbered line exists.
std::vector<std::string> extract_numbered(std::string_view text);

struct ParsedStatements {
    std::vector<std::string> statements;
    bool fallback = false;  // no numbered lines; whole trimmed text as one statement
};

/// Hypothesis-list parser for model output. Throws InvalidInput on blank input.
ParsedStatements parse_hypotheses(std::string_view text);

}  // namespace hypogen::prompting
