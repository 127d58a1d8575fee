#include "hypogen/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "hypogen/backend.hpp"
#include "hypogen/errors.hpp"
#include "hypogen/metrics.hpp"
#include "hypogen/prompting.hpp"
#include "hypogen/rng.hpp"

namespace hypogen::corpus {

namespace {

std::string trim(std::string_view text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return std::string(text.substr(begin, end - begin));
}

std::size_t non_blank_count(const std::vector<std::string>& statements) {
    std::size_t count = 0;
    for (const auto& statement : statements) {
        if (!trim(statement).empty()) ++count;
    }
    return count;
}

}  // namespace

std::string_view to_string(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::valid: return "valid";
        case Split::seen_test: return "seen_test";
        case Split::unseen_test: return "unseen_test";
        case Split::excluded: return "excluded";
    }
    return "excluded";
}

Split split_from_string(std::string_view text) {
    if (text == "train") return Split::train;
    if (text == "valid") return Split::valid;
    if (text == "seen_test") return Split::seen_test;
    if (text == "unseen_test") return Split::unseen_test;
    if (text == "excluded") return Split::excluded;
    throw InvalidInput("unknown split: '" + std::string(text) + "'");
}

void SplitConfig::validate() const {
    if (unseen_window.end < unseen_window.start) {
        throw InvalidInput("unseen window end precedes its start");
    }
    const Date window_start{unseen_window.start.year, unseen_window.start.month, 1};
    if (!(train_cutoff < window_start)) {
        throw InvalidInput("train cutoff must lie strictly before the unseen window");
    }
}

DateLookup date_lookup(std::span<const PaperRecord> records) {
    DateLookup lookup;
    lookup.reserve(records.size());
    for (const auto& record : records) lookup[record.id] = record.publication_date;
    return lookup;
}

std::vector<Split> partition_by_date(std::span<const BHPair> pairs,
                                     const DateLookup& dates,
                                     const SplitConfig& config) {
    config.validate();
    if (pairs.empty()) return {};

    std::vector<Split> assignment(pairs.size(), Split::excluded);
    std::vector<std::size_t> pre_pool;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        auto it = dates.find(pairs[i].source_id);
        if (it == dates.end()) {
            throw InvalidInput("pair '" + pairs[i].id + "': source record '" +
                               pairs[i].source_id + "' not found");
        }
        const Date& date = it->second;
        if (date < config.train_cutoff) {
            assignment[i] = Split::train;
            pre_pool.push_back(i);
        } else if (config.unseen_window.contains(year_month_of(date))) {
            assignment[i] = Split::unseen_test;
        } else {
            assignment[i] = Split::excluded;
        }
    }

    if (config.valid_count + config.seen_test_count > pre_pool.size()) {
        throw InvalidInput("pre-cutoff pool (" + std::to_string(pre_pool.size()) +
                           " pairs) too small for valid_count + seen_test_count");
    }

    // Sampling runs over pair ids in sorted order so the result does not
    // depend on the order pairs were supplied in.
    std::sort(pre_pool.begin(), pre_pool.end(), [&](std::size_t a, std::size_t b) {
        if (pairs[a].id != pairs[b].id) return pairs[a].id < pairs[b].id;
        return a < b;
    });
    Rng rng(config.shuffle_seed);
    for (std::size_t i = 0; i + 1 < pre_pool.size(); ++i) {
        const std::size_t j = i + rng.bounded(pre_pool.size() - i);
        std::swap(pre_pool[i], pre_pool[j]);
    }
    for (std::size_t i = 0; i < config.valid_count; ++i) {
        assignment[pre_pool[i]] = Split::valid;
    }
    for (std::size_t i = 0; i < config.seen_test_count; ++i) {
        assignment[pre_pool[config.valid_count + i]] = Split::seen_test;
    }
    return assignment;
}

void assign_splits(std::vector<BHPair>& pairs, const DateLookup& dates,
                   const SplitConfig& config) {
    const auto assignment = partition_by_date(pairs, dates, config);
    for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i].split = assignment[i];
}

FilterOutcome filter_low_quality(std::span<const BHPair> pairs, const FilterRules& rules) {
    FilterOutcome outcome;
    std::set<std::string> seen_backgrounds;
    for (const auto& pair : pairs) {
        std::string rule;
        if (rules.require_min_statements &&
            (non_blank_count(pair.background) < 1 || non_blank_count(pair.hypothesis) < 1)) {
            rule = "min_statements";
        } else if (rules.require_min_tokens) {
            for (const auto* side : {&pair.background, &pair.hypothesis}) {
                for (const auto& statement : *side) {
                    if (metrics::whitespace_split(statement).size() < rules.min_statement_tokens) {
                        rule = "min_statement_tokens";
                        break;
                    }
                }
                if (!rule.empty()) break;
            }
        }
        if (rule.empty() && rules.drop_duplicate_backgrounds) {
            std::string key;
            for (const auto& statement : pair.background) {
                key += statement;
                key += '\n';
            }
            if (!seen_backgrounds.insert(key).second) rule = "duplicate_background";
        }
        if (rule.empty()) {
            outcome.retained.push_back(pair);
        } else {
            outcome.rejected.push_back({pair.id, rule});
        }
    }
    return outcome;
}

DatasetManifest make_manifest(std::span<const BHPair> pairs, const DateLookup& dates,
                              std::vector<std::string> pipeline_steps) {
    DatasetManifest manifest;
    manifest.pipeline_steps = std::move(pipeline_steps);
    for (auto split : {Split::train, Split::valid, Split::seen_test, Split::unseen_test,
                       Split::excluded}) {
        manifest.splits[split] = {};
    }
    for (const auto& pair : pairs) {
        auto& stats = manifest.splits[pair.split];
        ++stats.count;
        auto it = dates.find(pair.source_id);
        if (it == dates.end()) continue;
        if (!stats.date_min || it->second < *stats.date_min) stats.date_min = it->second;
        if (!stats.date_max || *stats.date_max < it->second) stats.date_max = it->second;
    }
    manifest.seen_total =
        manifest.splits[Split::train].count + manifest.splits[Split::valid].count;
    manifest.unseen_total = manifest.splits[Split::unseen_test].count;
    return manifest;
}

std::string summarize_prompt(const PaperRecord& record) {
    std::string prompt =
        "Summarize the key knowledge of the following biomedical paper in one short "
        "paragraph, covering its motivation, methods, and findings.\n\n";
    prompt += "Title: " + record.title + "\n";
    prompt += "Abstract: " + record.abstract;
    return prompt;
}

Summary summarize_paper(const PaperRecord& record, const GenContext& ctx) {
    if (trim(record.abstract).empty()) {
        throw InvalidInput("record '" + record.id + "': empty abstract");
    }
    backend::CompletionRequest request;
    request.model_id = ctx.model_id;
    request.temperature = ctx.temperature;
    request.max_tokens = ctx.max_tokens;
    request.messages.push_back({backend::Role::user, summarize_prompt(record), {}});
    const auto result = ctx.llm->complete(request);
    return {record.id, result.text, ctx.model_id, ctx.now ? ctx.now() : std::string{}};
}

std::string pair_generation_prompt(std::string_view summary) {
    std::string prompt =
        "Extract the established background knowledge and the proposed hypotheses from "
        "the following literature summary.\n"
        "Reply in exactly this format:\n\n"
        "Background:\n(1) xxx\n(2) xxx\nHypothesis:\n(1) xxx\n(2) xxx\n\n"
        "Summary: ";
    prompt += summary;
    return prompt;
}

std::pair<std::vector<std::string>, std::vector<std::string>> parse_pair_reply(
    std::string_view reply) {
    const auto background_pos = reply.find("Background:");
    if (background_pos == std::string_view::npos) {
        throw ParseError("pair reply lacks a 'Background:' section", std::string(reply));
    }
    const auto hypothesis_pos = reply.find("Hypothesis:", background_pos);
    if (hypothesis_pos == std::string_view::npos) {
        throw ParseError("pair reply lacks a 'Hypothesis:' section", std::string(reply));
    }
    const auto background_text = reply.substr(background_pos + 11, hypothesis_pos - background_pos - 11);
    const auto hypothesis_text = reply.substr(hypothesis_pos + 11);

    auto background = prompting::extract_numbered(background_text);
    auto hypothesis = prompting::extract_numbered(hypothesis_text);
    if (background.empty()) {
        throw ParseError("no numbered statements in the Background section",
                         std::string(reply));
    }
    if (hypothesis.empty()) {
        throw ParseError("no numbered statements in the Hypothesis section",
                         std::string(reply));
    }
    return {std::move(background), std::move(hypothesis)};
}

BHPair generate_pair(std::string_view summary, std::string_view pair_id,
                     std::string_view source_id, const GenContext& ctx) {
    if (trim(summary).empty()) throw InvalidInput("generate_pair: empty summary");
    backend::CompletionRequest request;
    request.model_id = ctx.model_id;
    request.temperature = ctx.temperature;
    request.max_tokens = ctx.max_tokens;
    request.messages.push_back({backend::Role::user, pair_generation_prompt(summary), {}});
    const auto result = ctx.llm->complete(request);

    auto [background, hypothesis] = parse_pair_reply(result.text);
    BHPair pair;
    pair.id = std::string(pair_id);
    pair.source_id = std::string(source_id);
    pair.background = std::move(background);
    pair.hypothesis = std::move(hypothesis);
    return pair;
}

SftExport export_sft(std::span<const BHPair> pairs, std::string_view template_body) {
    // The instruction is the prompt scaffold without the input slot line.
    std::string instruction(template_body);
    const auto slot = instruction.find("{user_input}");
    if (slot != std::string::npos) {
        std::size_t begin = slot;
        if (begin > 0 && instruction[begin - 1] == '\n') --begin;
        instruction.erase(begin, slot + 12 - begin);
    }

    SftExport result;
    result.records.reserve(pairs.size());
    for (const auto& pair : pairs) {
        if (pair.split != Split::train) {
            throw InvalidInput("export_sft: pair '" + pair.id + "' is in split '" +
                               std::string(to_string(pair.split)) + "', not train");
        }
        result.records.push_back({instruction,
                                  prompting::render_statements(pair.background),
                                  prompting::render_statements(pair.hypothesis)});
    }
    return result;
}

nlohmann::json to_json(const PaperRecord& record) {
    return {{"id", record.id},
            {"title", record.title},
            {"abstract", record.abstract},
            {"date", record.publication_date.to_string()},
            {"keywords", record.keywords}};
}

PaperRecord record_from_json(const nlohmann::json& j) {
    PaperRecord record;
    record.id = j.at("id").get<std::string>();
    record.title = j.value("title", std::string{});
    record.abstract = j.at("abstract").get<std::string>();
    record.publication_date = parse_date(j.at("date").get<std::string>());
    if (j.contains("keywords")) {
        record.keywords = j.at("keywords").get<std::vector<std::string>>();
    }
    return record;
}

nlohmann::json to_json(const BHPair& pair) {
    return {{"id", pair.id},
            {"source_id", pair.source_id},
            {"background", pair.background},
            {"hypothesis", pair.hypothesis},
            {"split", std::string(to_string(pair.split))}};
}

BHPair pair_from_json(const nlohmann::json& j) {
    BHPair pair;
    pair.id = j.at("id").get<std::string>();
    pair.source_id = j.value("source_id", std::string{});
    pair.background = j.at("background").get<std::vector<std::string>>();
    pair.hypothesis = j.at("hypothesis").get<std::vector<std::string>>();
    if (j.contains("split")) {
        pair.split = split_from_string(j.at("split").get<std::string>());
    }
    return pair;
}

nlohmann::json to_json(const DatasetManifest& manifest) {
    nlohmann::json splits = nlohmann::json::object();
    for (const auto& [split, stats] : manifest.splits) {
        nlohmann::json entry = {{"count", stats.count}};
        entry["date_min"] =
            stats.date_min ? nlohmann::json(stats.date_min->to_string()) : nlohmann::json();
        entry["date_max"] =
            stats.date_max ? nlohmann::json(stats.date_max->to_string()) : nlohmann::json();
        splits[std::string(to_string(split))] = std::move(entry);
    }
    return {{"splits", std::move(splits)},
            {"totals",
             {{"seen_dataset", manifest.seen_total}, {"unseen_dataset", manifest.unseen_total}}},
            {"pipeline_steps", manifest.pipeline_steps}};
}

}  // namespace hypogen::corpus
