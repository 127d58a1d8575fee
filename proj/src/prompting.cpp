#include "hypogen/prompting.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hypogen/errors.hpp"
#include "hypogen/metrics.hpp"
#include "hypogen/rng.hpp"
#include "hypogen/templates.hpp"

namespace hypogen::prompting {

namespace {

bool is_placeholder_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

std::string trim(std::string_view text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return std::string(text.substr(begin, end - begin));
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == '\n') {
            auto line = text.substr(start, i - start);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            lines.push_back(line);
            start = i + 1;
        }
    }
    return lines;
}

/// If `line` starts with "(<digits>)", returns the offset just past the
/// marker (and any following spaces); otherwise npos.
std::size_t numbered_marker_end(std::string_view line) {
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size() || line[i] != '(') return std::string_view::npos;
    std::size_t j = i + 1;
    while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
    if (j == i + 1 || j >= line.size() || line[j] != ')') return std::string_view::npos;
    ++j;
    while (j < line.size() && (line[j] == ' ' || line[j] == '\t')) ++j;
    return j;
}

}  // namespace

PromptTemplate zero_shot_template() {
    return {TemplateKind::zero_shot, std::string(templates::kZeroShot)};
}

PromptTemplate few_shot_template() {
    return {TemplateKind::few_shot, std::string(templates::kFewShot)};
}

const std::vector<std::pair<std::string, std::string>>& paper_templates() {
    static const std::vector<std::pair<std::string, std::string>> kAll = {
        {"zero_shot", std::string(templates::kZeroShot)},
        {"few_shot", std::string(templates::kFewShot)},
        {"role_analyst", std::string(templates::kRoleAnalyst)},
        {"role_engineer", std::string(templates::kRoleEngineer)},
        {"role_scientist", std::string(templates::kRoleScientist)},
        {"role_critic", std::string(templates::kRoleCritic)},
        {"agent_env", std::string(templates::kAgentEnv)},
        {"eval_novelty", std::string(templates::kEvalNovelty)},
        {"eval_relevance", std::string(templates::kEvalRelevance)},
        {"eval_significance", std::string(templates::kEvalSignificance)},
        {"eval_verifiability", std::string(templates::kEvalVerifiability)},
    };
    return kAll;
}

std::vector<std::string> find_placeholders(std::string_view body) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (body[i] != '{') continue;
        std::size_t j = i + 1;
        while (j < body.size() && is_placeholder_char(body[j])) ++j;
        if (j > i + 1 && j < body.size() && body[j] == '}') {
            names.emplace_back(body.substr(i + 1, j - i - 1));
            i = j;
        }
    }
    return names;
}

std::string render_template(std::string_view body,
                            const std::map<std::string, std::string>& slots) {
    std::string out;
    out.reserve(body.size());
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (body[i] == '{') {
            std::size_t j = i + 1;
            while (j < body.size() && is_placeholder_char(body[j])) ++j;
            if (j > i + 1 && j < body.size() && body[j] == '}') {
                std::string name(body.substr(i + 1, j - i - 1));
                auto it = slots.find(name);
                if (it == slots.end()) {
                    throw InvalidInput("unfilled placeholder '{" + name + "}'");
                }
                out += it->second;
                i = j;
                continue;
            }
        }
        out += body[i];
    }
    return out;
}

std::string render_statements(std::span<const std::string> statements) {
    std::string out;
    for (std::size_t i = 0; i < statements.size(); ++i) {
        if (i > 0) out += '\n';
        out += '(' + std::to_string(i + 1) + ") " + statements[i];
    }
    return out;
}

std::string render_zero_shot(std::span<const std::string> background) {
    if (background.empty()) throw InvalidInput("render_zero_shot: empty background");
    return render_template(templates::kZeroShot,
                           {{"user_input", render_statements(background)}});
}

std::string render_shot_block(const corpus::BHPair& shot) {
    std::string block = "Background:\n";
    block += render_statements(shot.background);
    block += "\nHypothesis:\n";
    block += render_statements(shot.hypothesis);
    return block;
}

std::string render_few_shot(std::span<const corpus::BHPair> shots,
                            std::span<const std::string> background) {
    if (shots.empty()) {
        throw InvalidInput("render_few_shot: no shots (use the zero-shot prompt)");
    }
    if (background.empty()) throw InvalidInput("render_few_shot: empty background");
    std::string examples;
    for (std::size_t i = 0; i < shots.size(); ++i) {
        if (i > 0) examples += "\n\n";
        examples += render_shot_block(shots[i]);
    }
    examples += '\n';
    return render_template(templates::kFewShot,
                           {{"examples", examples},
                            {"input", render_statements(background)}});
}

std::vector<corpus::BHPair> select_shots(std::span<const corpus::BHPair> pool,
                                         std::string_view query_background,
                                         const ShotSelector& selector) {
    if (selector.k > pool.size()) {
        throw InvalidInput("select_shots: k (" + std::to_string(selector.k) +
                           ") exceeds pool size (" + std::to_string(pool.size()) + ")");
    }
    if (selector.k == 0) return {};

    if (selector.mode == ShotSelector::Mode::random) {
        std::vector<std::size_t> indices(pool.size());
        for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
        Rng rng(selector.seed);
        std::vector<corpus::BHPair> shots;
        shots.reserve(selector.k);
        for (std::size_t i = 0; i < selector.k; ++i) {
            const std::size_t j = i + rng.bounded(indices.size() - i);
            std::swap(indices[i], indices[j]);
            shots.push_back(pool[indices[i]]);
        }
        return shots;
    }

    std::vector<Document> docs;
    docs.reserve(pool.size());
    for (const auto& pair : pool) {
        std::string text;
        for (const auto& statement : pair.background) {
            if (!text.empty()) text += ' ';
            text += statement;
        }
        docs.push_back({pair.id, std::move(text)});
    }
    auto ranked = top_k(build_index(docs), query_background, selector.k);
    if (ranked.no_known_terms) {
        throw InvalidInput("select_shots: query shares no vocabulary with the pool");
    }
    std::unordered_map<std::string, const corpus::BHPair*> by_id;
    for (const auto& pair : pool) by_id.emplace(pair.id, &pair);
    std::vector<corpus::BHPair> shots;
    shots.reserve(ranked.hits.size());
    for (const auto& hit : ranked.hits) shots.push_back(*by_id.at(hit.id));
    return shots;
}

RetrievalIndex build_index(std::span<const Document> docs) {
    if (docs.empty()) throw InvalidInput("build_index: empty pool");

    // Per-document term frequencies.
    std::vector<std::map<std::string, std::size_t>> doc_tf(docs.size());
    std::map<std::string, std::size_t> df;  // ordered, so term ids are stable
    for (std::size_t d = 0; d < docs.size(); ++d) {
        for (auto& token : metrics::tokenize(docs[d].text)) ++doc_tf[d][token];
        for (const auto& [term, count] : doc_tf[d]) ++df[term];
    }

    RetrievalIndex index;
    index.doc_ids.reserve(docs.size());
    for (const auto& doc : docs) index.doc_ids.push_back(doc.id);
    index.idf.reserve(df.size());
    const double n = static_cast<double>(docs.size());
    for (const auto& [term, doc_freq] : df) {
        index.vocabulary.emplace(term, index.idf.size());
        index.idf.push_back(std::log((n + 1.0) / (static_cast<double>(doc_freq) + 1.0)) + 1.0);
    }

    index.doc_vectors.resize(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d) {
        auto& vec = index.doc_vectors[d];
        double norm_sq = 0.0;
        for (const auto& [term, count] : doc_tf[d]) {
            const std::size_t term_id = index.vocabulary.at(term);
            const double weight =
                (1.0 + std::log(static_cast<double>(count))) * index.idf[term_id];
            vec.emplace_back(term_id, weight);
            norm_sq += weight * weight;
        }
        if (norm_sq > 0.0) {
            const double inv = 1.0 / std::sqrt(norm_sq);
            for (auto& [_, weight] : vec) weight *= inv;
        }
        std::sort(vec.begin(), vec.end());
    }
    return index;
}

TopKResult top_k(const RetrievalIndex& index, std::string_view query, std::size_t k) {
    std::map<std::size_t, std::size_t> query_tf;  // term id -> count
    for (auto& token : metrics::tokenize(query)) {
        auto it = index.vocabulary.find(token);
        if (it != index.vocabulary.end()) ++query_tf[it->second];
    }
    if (query_tf.empty()) return {.hits = {}, .no_known_terms = true};

    std::vector<std::pair<std::size_t, double>> query_vec;
    double norm_sq = 0.0;
    for (const auto& [term_id, count] : query_tf) {
        const double weight =
            (1.0 + std::log(static_cast<double>(count))) * index.idf[term_id];
        query_vec.emplace_back(term_id, weight);
        norm_sq += weight * weight;
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (auto& [_, weight] : query_vec) weight *= inv;

    std::vector<std::size_t> order(index.doc_vectors.size());
    std::vector<double> scores(index.doc_vectors.size(), 0.0);
    for (std::size_t d = 0; d < index.doc_vectors.size(); ++d) {
        order[d] = d;
        // Sparse dot product; both sides sorted by term id.
        const auto& doc_vec = index.doc_vectors[d];
        auto qi = query_vec.begin();
        auto di = doc_vec.begin();
        double dot = 0.0;
        while (qi != query_vec.end() && di != doc_vec.end()) {
            if (qi->first < di->first) {
                ++qi;
            } else if (di->first < qi->first) {
                ++di;
            } else {
                dot += qi->second * di->second;
                ++qi;
                ++di;
            }
        }
        scores[d] = dot;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return index.doc_ids[a] < index.doc_ids[b];
    });

    TopKResult result;
    const std::size_t count = std::min(k, order.size());
    result.hits.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        result.hits.push_back({index.doc_ids[order[i]], scores[order[i]]});
    }
    return result;
}

std::vector<std::string> extract_numbered(std::string_view text) {
    std::vector<std::string> statements;
    bool open = false;
    std::string current;
    auto flush = [&] {
        if (open) {
            current = trim(current);
            if (!current.empty()) statements.push_back(current);
            current.clear();
            open = false;
        }
    };
    for (auto line : split_lines(text)) {
        const auto marker_end = numbered_marker_end(line);
        if (marker_end != std::string_view::npos) {
            flush();
            open = true;
            current = std::string(line.substr(marker_end));
        } else if (open) {
            const auto continuation = trim(line);
            if (!continuation.empty()) {
                if (!current.empty()) current += ' ';
                current += continuation;
            }
        }
    }
    flush();
    return statements;
}

ParsedStatements parse_hypotheses(std::string_view text) {
    const auto whole = trim(text);
    if (whole.empty()) throw InvalidInput("parse_hypotheses: blank input");
    auto statements = extract_numbered(text);
    if (statements.empty()) return {.statements = {whole}, .fallback = true};
    return {.statements = std::move(statements), .fallback = false};
}

}  // namespace hypogen::prompting
