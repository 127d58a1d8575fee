#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "hypogen/dates.hpp"

namespace hypogen::backend {
class Backend;
}

namespace hypogen::corpus {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// One literature item, the raw unit the dataset is built from.
struct PaperRecord {
    std::string id;
    std::string title;
    std::string abstract;
    Date publication_date;
    std::vector<std::string> keywords;
};

enum class Split { train, valid, seen_test, unseen_test, excluded };

std::string_view to_string(Split split);
Split split_from_string(std::string_view text);

/// Background statements paired with hypothesis statements. Statements are
/// stored without their "(n)" enumeration markers; rendering adds them back.
struct BHPair {
    std::string id;
    std::string source_id;
    std::vector<std::string> background;
    std::vector<std::string> hypothesis;
    Split split = Split::excluded;
};

struct MonthRange {
    YearMonth start;
    YearMonth end;

    bool contains(YearMonth ym) const { return start <= ym && ym <= end; }
};

struct SplitConfig {
    Date train_cutoff;        // exclusive upper bound for the pre-cutoff pool
    MonthRange unseen_window;  // inclusive
    std::size_t valid_count = 200;
    std::size_t seen_test_count = 200;
    std::uint64_t shuffle_seed = 0;

    /// Throws InvalidInput unless train_cutoff lies strictly before the
    /// start of the unseen window.
    void validate() const;
};

struct SplitStats {
    std::size_t count = 0;
    std::optional<Date> date_min;
    std::optional<Date> date_max;
};

struct DatasetManifest {
    std::map<Split, SplitStats> splits;
    std::size_t seen_total = 0;    // train + valid, the pre-cutoff dataset size
    std::size_t unseen_total = 0;  // unseen_test
    std::vector<std::string> pipeline_steps;
};

// ---------------------------------------------------------------------------
// Construction pipeline
// ---------------------------------------------------------------------------

using DateLookup = std::unordered_map<std::string, Date>;

DateLookup date_lookup(std::span<const PaperRecord> records);

/// Assigns a split to each pair from its source record's publication date:
/// before the cutoff -> train pool (valid / seen_test sampled out by seed),
/// inside the unseen window -> unseen_test, anything else -> excluded.
/// Deterministic in (dates, config); the input order of `pairs` is irrelevant
/// because sampling runs over pair ids in sorted order.
/// Throws InvalidInput naming the pair id when a source record is missing.
std::vector<Split> partition_by_date(std::span<const BHPair> pairs,
                                     const DateLookup& dates,
                                     const SplitConfig& config);

/// partition_by_date + writes the assignment back into the pairs.
void assign_splits(std::vector<BHPair>& pairs, const DateLookup& dates,
                   const SplitConfig& config);

struct FilterRules {
    bool require_min_statements = true;       // >= 1 statement on both sides
    bool require_min_tokens = true;           // every statement long enough
    std::size_t min_statement_tokens = 4;     // whitespace tokens
    bool drop_duplicate_backgrounds = true;   // exact background text, keep first
};

struct Rejection {
    std::string pair_id;
    std::string rule;
};

struct FilterOutcome {
    std::vector<BHPair> retained;
    std::vector<Rejection> rejected;
};

/// Deterministic and idempotent; never fails. Rules apply in the order
/// min_statements, min_statement_tokens, duplicate_background and the first
/// violated rule is the one logged.
FilterOutcome filter_low_quality(std::span<const BHPair> pairs,
                                 const FilterRules& rules = {});

DatasetManifest make_manifest(std::span<const BHPair> pairs, const DateLookup& dates,
                              std::vector<std::string> pipeline_steps = {});

// ---------------------------------------------------------------------------
// Backend-assisted steps
// ---------------------------------------------------------------------------

/// How pipeline steps talk to the model, plus the provenance clock.
struct GenContext {
    backend::Backend* llm = nullptr;
    std::string model_id;
    double temperature = 0.7;
    int max_tokens = 1024;
    std::function<std::string()> now;  // ISO-8601 timestamp supplier
};

struct Summary {
    std::string record_id;
    std::string text;
    std::string model_id;
    std::string timestamp;
};

std::string summarize_prompt(const PaperRecord& record);

/// One model call; the reply is kept verbatim. Throws InvalidInput when the
/// abstract is blank; backend failures propagate.
Summary summarize_paper(const PaperRecord& record, const GenContext& ctx);

std::string pair_generation_prompt(std::string_view summary);

/// Splits a "Background: / Hypothesis:" reply into the two numbered statement
/// lists. Throws ParseError (raw text retained) when a section is missing or
/// holds no numbered statements.
std::pair<std::vector<std::string>, std::vector<std::string>> parse_pair_reply(
    std::string_view reply);

/// One model call producing an unsplit pair.
BHPair generate_pair(std::string_view summary, std::string_view pair_id,
                     std::string_view source_id, const GenContext& ctx);

// ---------------------------------------------------------------------------
// SFT export
// ---------------------------------------------------------------------------

struct SftRecord {
    std::string instruction;
    std::string input;
    std::string output;
};

struct SftHyperparams {
    int epochs = 3;
    int batch_size = 8;
    int max_seq_len = 2048;
    double learning_rate = 3e-5;
};

struct SftExport {
    std::vector<SftRecord> records;
    SftHyperparams hyperparams;
};

/// Turns train-split pairs into instruction-tuning records. The instruction is
/// the template body with its input slot stripped; input/output are the
/// numbered renderings. Throws InvalidInput on a pair outside the train split.
SftExport export_sft(std::span<const BHPair> pairs, std::string_view template_body);

// ---------------------------------------------------------------------------
// Serialization (line-delimited records)
// ---------------------------------------------------------------------------

nlohmann::json to_json(const PaperRecord& record);
PaperRecord record_from_json(const nlohmann::json& j);

nlohmann::json to_json(const BHPair& pair);
BHPair pair_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DatasetManifest& manifest);

}  // namespace hypogen::corpus
