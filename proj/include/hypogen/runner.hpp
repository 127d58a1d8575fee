#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "hypogen/agents.hpp"
#include "hypogen/backend.hpp"
#include "hypogen/corpus.hpp"
#include "hypogen/metrics.hpp"
#include "hypogen/prompting.hpp"

namespace hypogen::runner {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct BackendSpec {
    std::string provider = "mock";  // mock | http
    std::string model_id;
    std::filesystem::path script_path;  // mock provider
    backend::HttpConfig http;           // http provider
    double temperature = 0.7;
    int max_tokens = 1024;
};

struct GenerationSpec {
    std::string mode = "zero_shot";  // zero_shot | few_shot | agent
    prompting::ShotSelector selector;
    agents::Variant variant = agents::Variant::multi;
    int max_rounds = 6;
    int max_steps = 8;
    std::string target_split = "unseen_test";
};

/// Word-overlap scoring knobs.
struct EvaluationSpec {
    metrics::BleuOptions bleu;
    metrics::TokenizeOptions tokenize;
    std::string statement_joiner = " ";  // applied before scoring
};

struct RunConfig {
    std::filesystem::path records_path;
    corpus::SplitConfig split;
    corpus::FilterRules filter;
    EvaluationSpec evaluation;
    BackendSpec generator;
    BackendSpec judge_model;
    GenerationSpec generation;
    std::filesystem::path output_dir;
    std::filesystem::path registry_path;
    std::filesystem::path human_scores_path;
    std::size_t workers = 1;
    bool resume = false;
    bool enforce_visibility = true;
    bool deterministic_clock = false;
    nlohmann::json raw;  // config as loaded, for hashing and snapshotting
};

RunConfig load_config(const std::filesystem::path& path);
RunConfig config_from_json(const nlohmann::json& j);

/// FNV-1a hex over the canonical config dump.
std::string config_hash(const RunConfig& config);

/// Run-directory layout used by every subcommand.
struct RunPaths {
    std::filesystem::path root;

    std::filesystem::path config_snapshot() const { return root / "config.json"; }
    std::filesystem::path registry_snapshot() const { return root / "registry_snapshot.jsonl"; }
    std::filesystem::path status() const { return root / "status.json"; }

    std::filesystem::path summaries() const { return root / "dataset" / "summaries.jsonl"; }
    std::filesystem::path pairs_raw() const { return root / "dataset" / "pairs_raw.jsonl"; }
    std::filesystem::path pairs_filtered() const {
        return root / "dataset" / "pairs_filtered.jsonl";
    }
    std::filesystem::path rejections() const { return root / "dataset" / "rejections.jsonl"; }
    std::filesystem::path split_file(corpus::Split split) const {
        return root / "dataset" / "splits" /
               (std::string(corpus::to_string(split)) + ".jsonl");
    }
    std::filesystem::path manifest() const { return root / "dataset" / "manifest.json"; }

    std::filesystem::path sft_records() const { return root / "sft" / "train.jsonl"; }
    std::filesystem::path sft_manifest() const { return root / "sft" / "manifest.json"; }

    std::filesystem::path predictions() const { return root / "generate" / "predictions.jsonl"; }
    std::filesystem::path transcript(const std::string& example_id) const {
        return root / "generate" / "transcripts" / (example_id + ".jsonl");
    }

    std::filesystem::path scores() const { return root / "evaluate" / "scores.jsonl"; }
    std::filesystem::path verdicts() const { return root / "evaluate" / "verdicts.jsonl"; }
    std::filesystem::path report_json() const { return root / "evaluate" / "report.json"; }
    std::filesystem::path report_text() const { return root / "evaluate" / "report.txt"; }

    std::filesystem::path correlation() const {
        return root / "correlate" / "correlation.json";
    }
};

std::unique_ptr<backend::Backend> make_backend(const BackendSpec& spec);

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

/// ingest -> summarize -> generate pairs -> filter -> partition -> manifest.
/// Every step's output is persisted; with config.resume, completed steps are
/// loaded rather than recomputed.
void cmd_build_dataset(const RunConfig& config);

/// Renders the configured prompt (or runs the agent variant) for every pair
/// of the target split and writes predictions + per-example transcripts.
void cmd_generate(const RunConfig& config);

/// BLEU / ROUGE-L against golden hypotheses plus the four-metric judge;
/// aggregates the run report. Adds the correlation block when human scores
/// are configured.
void cmd_evaluate(const RunConfig& config);

void cmd_export_sft(const RunConfig& config);

/// Correlates persisted judge verdicts with a human score file.
void cmd_correlate(const RunConfig& config);

/// Rebuilds the report from persisted per-example artifacts and prints it.
void cmd_report(const RunConfig& config);

/// Report rebuilt from artifacts only (no model calls); cmd_evaluate and
/// cmd_report both go through this.
nlohmann::json build_report(const RunConfig& config, const RunPaths& paths);

std::string render_report_table(const nlohmann::json& report);

}  // namespace hypogen::runner
