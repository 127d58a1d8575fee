#include "hypogen/runner.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include "hypogen/errors.hpp"
#include "hypogen/judge.hpp"
#include "hypogen/jsonl.hpp"
#include "hypogen/metrics.hpp"

namespace hypogen::runner {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string iso_now(bool deterministic) {
    if (deterministic) return "1970-01-01T00:00:00Z";
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Order-preserving map with a worker pool; rethrows the first failure.
template <typename In, typename Fn>
auto parallel_map(std::span<const In> inputs, std::size_t workers, Fn fn) {
    using Out = decltype(fn(inputs[0], std::size_t{0}));
    std::vector<std::optional<Out>> slots(inputs.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < inputs.size(); ++i) slots[i] = fn(inputs[i], i);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        auto worker = [&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= inputs.size()) return;
                try {
                    slots[i] = fn(inputs[i], i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < std::min(workers, inputs.size()); ++w) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }
    std::vector<Out> out;
    out.reserve(inputs.size());
    for (auto& slot : slots) out.push_back(std::move(*slot));
    return out;
}

void write_json_file(const fs::path& path, const json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InvalidInput("cannot write file: " + path.string());
    out << j.dump(2) << '\n';
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open file: " + path.string());
    return json::parse(in);
}

void update_status(const RunPaths& paths, const std::string& completed_step) {
    json status;
    if (fs::exists(paths.status())) status = read_json_file(paths.status());
    status["last_completed_step"] = completed_step;
    status.erase("failed_step");
    status.erase("error");
    write_json_file(paths.status(), status);
}

void record_failure(const RunPaths& paths, const std::string& step, const std::string& error) {
    json status;
    if (fs::exists(paths.status())) status = read_json_file(paths.status());
    status["failed_step"] = step;
    status["error"] = error;
    write_json_file(paths.status(), status);
}

std::vector<corpus::PaperRecord> load_records(const fs::path& path) {
    std::vector<corpus::PaperRecord> records;
    for (const auto& j : jsonl::read_file(path)) {
        records.push_back(corpus::record_from_json(j));
    }
    std::set<std::string> ids;
    for (const auto& record : records) {
        if (!ids.insert(record.id).second) {
            throw InvalidInput("duplicate record id '" + record.id + "' in " + path.string());
        }
    }
    return records;
}

std::vector<corpus::BHPair> load_pairs(const fs::path& path) {
    std::vector<corpus::BHPair> pairs;
    for (const auto& j : jsonl::read_file(path)) {
        pairs.push_back(corpus::pair_from_json(j));
    }
    return pairs;
}

void write_pairs(const fs::path& path, std::span<const corpus::BHPair> pairs) {
    std::vector<json> records;
    records.reserve(pairs.size());
    for (const auto& pair : pairs) records.push_back(corpus::to_json(pair));
    jsonl::write_file(path, records);
}

void persist_transcript(const RunPaths& paths, const std::string& example_id,
                        const agents::Transcript& transcript) {
    std::vector<json> lines;
    lines.reserve(transcript.size());
    for (const auto& entry : transcript) lines.push_back(agents::to_json(entry));
    jsonl::write_file(paths.transcript(example_id), lines);
}

std::string join_statements(std::span<const std::string> statements,
                            const std::string& joiner = " ") {
    std::string text;
    for (const auto& statement : statements) {
        if (!text.empty()) text += joiner;
        text += statement;
    }
    return text;
}

void check_visibility(const RunConfig& config, const BackendSpec& spec) {
    if (!config.enforce_visibility || config.registry_path.empty()) return;
    if (!fs::exists(config.registry_path)) {
        throw InvalidInput("registry not found: " + config.registry_path.string());
    }
    for (const auto& entry : backend::load_registry(config.registry_path)) {
        if (entry.name != spec.model_id) continue;
        const auto verdict =
            backend::validate_visibility(entry, config.split.unseen_window.start);
        if (!verdict.pass) {
            throw InvalidInput("model '" + spec.model_id +
                               "' fails the visibility gate: " + verdict.reason);
        }
        return;
    }
    std::cerr << "warning: model '" << spec.model_id
              << "' not in the registry; visibility not checked\n";
}

void snapshot_run_inputs(const RunConfig& config, const RunPaths& paths) {
    fs::create_directories(paths.root);
    write_json_file(paths.config_snapshot(), config.raw);
    if (!config.registry_path.empty() && fs::exists(config.registry_path)) {
        fs::copy_file(config.registry_path, paths.registry_snapshot(),
                      fs::copy_options::overwrite_existing);
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

namespace {

BackendSpec backend_spec_from_json(const json& j) {
    BackendSpec spec;
    spec.provider = j.value("provider", std::string("mock"));
    if (spec.provider != "mock" && spec.provider != "http") {
        throw InvalidInput("unknown backend provider: '" + spec.provider + "'");
    }
    spec.model_id = j.at("model").get<std::string>();
    if (j.contains("script")) spec.script_path = j.at("script").get<std::string>();
    spec.temperature = j.value("temperature", 0.7);
    spec.max_tokens = j.value("max_tokens", 1024);
    if (j.contains("endpoint")) spec.http.endpoint = j.at("endpoint").get<std::string>();
    if (j.contains("api_key_env")) spec.http.api_key_env = j.at("api_key_env").get<std::string>();
    if (j.contains("requests_per_sec")) {
        spec.http.requests_per_sec = j.at("requests_per_sec").get<double>();
    }
    return spec;
}

}  // namespace

RunConfig config_from_json(const json& j) {
    RunConfig config;
    config.raw = j;
    if (j.contains("records")) config.records_path = j.at("records").get<std::string>();
    config.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("registry")) config.registry_path = j.at("registry").get<std::string>();
    if (j.contains("human_scores")) {
        config.human_scores_path = j.at("human_scores").get<std::string>();
    }

    if (j.contains("split")) {
        const auto& s = j.at("split");
        config.split.train_cutoff = parse_date(s.at("train_cutoff").get<std::string>());
        config.split.unseen_window.start =
            parse_year_month(s.at("unseen_window").at("start").get<std::string>());
        config.split.unseen_window.end =
            parse_year_month(s.at("unseen_window").at("end").get<std::string>());
        config.split.valid_count = s.value("valid_count", 200);
        config.split.seen_test_count = s.value("seen_test_count", 200);
        config.split.shuffle_seed = s.value("shuffle_seed", 0);
        config.split.validate();
    }

    if (j.contains("filter")) {
        const auto& f = j.at("filter");
        config.filter.require_min_statements = f.value("require_min_statements", true);
        config.filter.require_min_tokens = f.value("require_min_tokens", true);
        config.filter.min_statement_tokens = f.value("min_statement_tokens", 4);
        config.filter.drop_duplicate_backgrounds =
            f.value("drop_duplicate_backgrounds", true);
    }

    if (j.contains("evaluation")) {
        const auto& e = j.at("evaluation");
        config.evaluation.bleu.max_n = e.value("max_n", 4);
        config.evaluation.bleu.smooth = e.value("smooth", true);
        config.evaluation.tokenize.lowercase = e.value("lowercase", true);
        config.evaluation.tokenize.punctuation_tokens = e.value("punctuation_tokens", true);
        config.evaluation.statement_joiner = e.value("statement_joiner", std::string(" "));
    }

    if (j.contains("generator")) config.generator = backend_spec_from_json(j.at("generator"));
    if (j.contains("judge")) config.judge_model = backend_spec_from_json(j.at("judge"));

    if (j.contains("generation")) {
        const auto& g = j.at("generation");
        config.generation.mode = g.value("mode", std::string("zero_shot"));
        if (config.generation.mode != "zero_shot" && config.generation.mode != "few_shot" &&
            config.generation.mode != "agent") {
            throw InvalidInput("unknown generation mode: '" + config.generation.mode + "'");
        }
        if (g.contains("shots")) {
            const auto& s = g.at("shots");
            const auto mode = s.value("mode", std::string("random"));
            if (mode == "random") {
                config.generation.selector.mode = prompting::ShotSelector::Mode::random;
            } else if (mode == "similarity") {
                config.generation.selector.mode = prompting::ShotSelector::Mode::similarity;
            } else {
                throw InvalidInput("unknown shot selector mode: '" + mode + "'");
            }
            config.generation.selector.k = s.value("k", 5);
            config.generation.selector.seed = s.value("seed", 0);
        }
        if (g.contains("variant")) {
            config.generation.variant =
                agents::variant_from_string(g.at("variant").get<std::string>());
        }
        config.generation.max_rounds = g.value("max_rounds", 6);
        config.generation.max_steps = g.value("max_steps", 8);
        config.generation.target_split = g.value("split", std::string("unseen_test"));
    }

    config.workers = j.value("workers", 1);
    config.resume = j.value("resume", false);
    config.enforce_visibility = j.value("enforce_visibility", true);
    config.deterministic_clock =
        j.value("deterministic_clock", config.generator.provider == "mock");
    return config;
}

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config: " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw InvalidInput("malformed config JSON: " + path.string());

    auto config = config_from_json(j);
    // Relative paths resolve against the config file's directory.
    const auto base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    auto resolve = [&](fs::path& p) {
        if (!p.empty() && p.is_relative()) p = base / p;
    };
    resolve(config.records_path);
    resolve(config.output_dir);
    resolve(config.registry_path);
    resolve(config.human_scores_path);
    resolve(config.generator.script_path);
    resolve(config.judge_model.script_path);
    return config;
}

std::string config_hash(const RunConfig& config) {
    const std::string dump = config.raw.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::unique_ptr<backend::Backend> make_backend(const BackendSpec& spec) {
    if (spec.provider == "mock") {
        if (!spec.script_path.empty()) {
            return backend::ScriptedBackend::from_file(spec.script_path);
        }
        return std::make_unique<backend::ScriptedBackend>(
            std::map<std::string, std::string>{}, std::string{});
    }
    if (spec.http.endpoint.empty()) {
        throw InvalidInput("http backend requires an endpoint");
    }
    return std::make_unique<backend::HttpBackend>(spec.http);
}

// ---------------------------------------------------------------------------
// build-dataset
// ---------------------------------------------------------------------------

void cmd_build_dataset(const RunConfig& config) {
    const RunPaths paths{config.output_dir};
    snapshot_run_inputs(config, paths);

    std::string step = "ingest";
    try {
        if (config.records_path.empty()) {
            throw InvalidInput("build-dataset requires a records file");
        }
        const auto records = load_records(config.records_path);
        for (const auto& record : records) {
            if (record.abstract.find_first_not_of(" \t\r\n") == std::string::npos) {
                throw InvalidInput("record '" + record.id + "': empty abstract");
            }
        }
        update_status(paths, step);

        auto llm = make_backend(config.generator);
        corpus::GenContext ctx;
        ctx.llm = llm.get();
        ctx.model_id = config.generator.model_id;
        ctx.temperature = config.generator.temperature;
        ctx.max_tokens = config.generator.max_tokens;
        const bool deterministic = config.deterministic_clock;
        ctx.now = [deterministic] { return iso_now(deterministic); };

        step = "summarize";
        std::vector<corpus::Summary> summaries;
        if (config.resume && fs::exists(paths.summaries())) {
            for (const auto& j : jsonl::read_file(paths.summaries())) {
                summaries.push_back({j.at("record_id").get<std::string>(),
                                     j.at("summary").get<std::string>(),
                                     j.value("model", std::string{}),
                                     j.value("timestamp", std::string{})});
            }
        } else {
            summaries = parallel_map(
                std::span<const corpus::PaperRecord>(records), config.workers,
                [&](const corpus::PaperRecord& record, std::size_t) {
                    return corpus::summarize_paper(record, ctx);
                });
            std::vector<json> lines;
            for (const auto& s : summaries) {
                lines.push_back({{"record_id", s.record_id},
                                 {"summary", s.text},
                                 {"model", s.model_id},
                                 {"timestamp", s.timestamp}});
            }
            jsonl::write_file(paths.summaries(), lines);
        }
        update_status(paths, step);

        step = "generate_pairs";
        std::vector<corpus::BHPair> pairs;
        if (config.resume && fs::exists(paths.pairs_raw())) {
            pairs = load_pairs(paths.pairs_raw());
        } else {
            pairs = parallel_map(
                std::span<const corpus::Summary>(summaries), config.workers,
                [&](const corpus::Summary& summary, std::size_t) {
                    return corpus::generate_pair(summary.text, "bhp-" + summary.record_id,
                                                 summary.record_id, ctx);
                });
            write_pairs(paths.pairs_raw(), pairs);
        }
        update_status(paths, step);

        step = "filter";
        auto outcome = corpus::filter_low_quality(pairs, config.filter);
        write_pairs(paths.pairs_filtered(), outcome.retained);
        {
            std::vector<json> lines;
            for (const auto& rejection : outcome.rejected) {
                lines.push_back({{"pair_id", rejection.pair_id}, {"rule", rejection.rule}});
            }
            jsonl::write_file(paths.rejections(), lines);
        }
        update_status(paths, step);

        step = "partition";
        const auto dates = corpus::date_lookup(records);
        corpus::assign_splits(outcome.retained, dates, config.split);
        for (auto split : {corpus::Split::train, corpus::Split::valid,
                           corpus::Split::seen_test, corpus::Split::unseen_test,
                           corpus::Split::excluded}) {
            std::vector<corpus::BHPair> members;
            for (const auto& pair : outcome.retained) {
                if (pair.split == split) members.push_back(pair);
            }
            write_pairs(paths.split_file(split), members);
        }
        update_status(paths, step);

        step = "manifest";
        const auto manifest = corpus::make_manifest(
            outcome.retained, dates,
            {"ingest", "summarize", "generate_pairs", "filter", "partition"});
        write_json_file(paths.manifest(), corpus::to_json(manifest));
        update_status(paths, step);
    } catch (const std::exception& e) {
        record_failure(paths, step, e.what());
        throw;
    }
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

void cmd_generate(const RunConfig& config) {
    const RunPaths paths{config.output_dir};
    snapshot_run_inputs(config, paths);
    check_visibility(config, config.generator);

    const auto split = corpus::split_from_string(config.generation.target_split);
    const auto split_path = paths.split_file(split);
    if (!fs::exists(split_path)) {
        throw InvalidInput("split file missing (run build-dataset first): " +
                           split_path.string());
    }
    const auto pairs = load_pairs(split_path);

    auto llm = make_backend(config.generator);

    std::vector<corpus::BHPair> train_pool;
    if (config.generation.mode == "few_shot") {
        train_pool = load_pairs(paths.split_file(corpus::Split::train));
    }

    std::unique_ptr<agents::SearchTool> tool;
    const auto variant = config.generation.variant;
    const bool needs_tool = config.generation.mode == "agent" &&
                            (variant == agents::Variant::multi_tool ||
                             variant == agents::Variant::single_react ||
                             variant == agents::Variant::single_fncall);
    if (needs_tool) {
        if (config.records_path.empty()) {
            throw InvalidInput("agent tool variants need the records file for the "
                               "search index");
        }
        const auto records = load_records(config.records_path);
        tool = std::make_unique<agents::SearchTool>(records);
    }

    agents::SessionOptions session_options;
    session_options.model_id = config.generator.model_id;
    session_options.temperature = config.generator.temperature;
    session_options.max_tokens = config.generator.max_tokens;
    session_options.max_rounds = config.generation.max_rounds;
    session_options.max_steps = config.generation.max_steps;

    struct Generated {
        json prediction;
        agents::Transcript transcript;
    };

    auto generate_one = [&](const corpus::BHPair& pair, std::size_t) -> Generated {
        Generated out;
        json& prediction = out.prediction;
        prediction["id"] = pair.id;
        prediction["mode"] = config.generation.mode;

        if (config.generation.mode == "agent") {
            prediction["variant"] = std::string(agents::to_string(variant));
            agents::SessionResult session;
            try {
                session = agents::run_session(pair.background, *llm, session_options,
                                              variant, tool.get());
            } catch (const agents::SessionError& e) {
                persist_transcript(paths, pair.id, e.transcript());
                throw;
            }
            prediction["statements"] = session.hypothesis;
            prediction["fallback"] = session.fallback_parse;
            prediction["approved"] = session.approved;
            prediction["rounds_used"] = session.rounds_used;
            prediction["model_calls"] = session.model_calls;
            prediction["tool_calls"] = session.tool_calls;
            out.transcript = std::move(session.transcript);
        } else {
            std::string prompt;
            if (config.generation.mode == "few_shot") {
                const auto shots = prompting::select_shots(
                    train_pool, join_statements(pair.background),
                    config.generation.selector);
                std::vector<std::string> shot_ids;
                for (const auto& shot : shots) shot_ids.push_back(shot.id);
                prediction["shot_ids"] = shot_ids;
                prompt = prompting::render_few_shot(shots, pair.background);
            } else {
                prompt = prompting::render_zero_shot(pair.background);
            }
            backend::CompletionRequest request;
            request.model_id = config.generator.model_id;
            request.temperature = config.generator.temperature;
            request.max_tokens = config.generator.max_tokens;
            request.messages.push_back({backend::Role::user, prompt, {}});
            const auto reply = llm->complete(request);

            const auto parsed = prompting::parse_hypotheses(reply.text);
            prediction["statements"] = parsed.statements;
            prediction["fallback"] = parsed.fallback;
            out.transcript.push_back({"user", {backend::Role::user, prompt, {}}});
            out.transcript.push_back(
                {"agent", {backend::Role::assistant, reply.text, {}}});
        }
        prediction["transcript"] =
            fs::relative(paths.transcript(pair.id), paths.root).string();
        return out;
    };

    const auto generated = parallel_map(std::span<const corpus::BHPair>(pairs),
                                        config.workers, generate_one);

    std::vector<json> predictions;
    predictions.reserve(generated.size());
    for (std::size_t i = 0; i < generated.size(); ++i) {
        persist_transcript(paths, pairs[i].id, generated[i].transcript);
        predictions.push_back(generated[i].prediction);
    }
    jsonl::write_file(paths.predictions(), predictions);
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

void cmd_evaluate(const RunConfig& config) {
    const RunPaths paths{config.output_dir};
    if (!fs::exists(paths.predictions())) {
        throw InvalidInput("predictions missing (run generate first): " +
                           paths.predictions().string());
    }
    const auto predictions = jsonl::read_file(paths.predictions());
    const auto gold_pairs =
        load_pairs(paths.split_file(corpus::split_from_string(config.generation.target_split)));
    std::unordered_map<std::string, const corpus::BHPair*> gold_by_id;
    for (const auto& pair : gold_pairs) gold_by_id.emplace(pair.id, &pair);

    auto judge_llm = make_backend(config.judge_model);
    judge::JudgeOptions judge_options;
    judge_options.model_id = config.judge_model.model_id;
    judge_options.max_tokens = config.judge_model.max_tokens;

    struct Scored {
        json score_line;
        json verdict_line;
    };

    auto evaluate_one = [&](const json& prediction, std::size_t) -> Scored {
        const auto id = prediction.at("id").get<std::string>();
        auto gold_it = gold_by_id.find(id);
        if (gold_it == gold_by_id.end()) {
            throw InvalidInput("prediction '" + id + "' has no golden pair");
        }
        const auto& gold = *gold_it->second;
        const auto statements = prediction.at("statements").get<std::vector<std::string>>();

        // Statements are joined (single spaces by default) before scoring.
        const auto& ev = config.evaluation;
        const auto candidate =
            metrics::tokenize(join_statements(statements, ev.statement_joiner), ev.tokenize);
        const auto reference = metrics::tokenize(
            join_statements(gold.hypothesis, ev.statement_joiner), ev.tokenize);

        Scored out;
        out.score_line["id"] = id;
        if (candidate.empty()) {
            out.score_line["bleu"] = 0.0;
            out.score_line["rouge_l"] = {{"precision", 0.0}, {"recall", 0.0}, {"f1", 0.0}};
            out.score_line["degenerate"] = true;
        } else {
            const auto bleu = metrics::bleu(candidate, {reference}, ev.bleu);
            const auto rouge = metrics::rouge_l(candidate, reference);
            out.score_line["bleu"] = bleu.score;
            out.score_line["rouge_l"] = {{"precision", rouge.precision},
                                         {"recall", rouge.recall},
                                         {"f1", rouge.f1}};
            out.score_line["degenerate"] = bleu.degenerate;
        }

        const auto verdict =
            statements.empty()
                ? judge::JudgeVerdict{.metrics = {}, .avg = 0.0, .partial = true}
                : judge::evaluate(gold.background, statements, *judge_llm, judge_options);
        out.verdict_line = judge::to_json(verdict);
        out.verdict_line["id"] = id;
        return out;
    };

    const auto scored = parallel_map(std::span<const json>(predictions), config.workers,
                                     evaluate_one);

    std::vector<json> score_lines;
    std::vector<json> verdict_lines;
    for (const auto& s : scored) {
        score_lines.push_back(s.score_line);
        verdict_lines.push_back(s.verdict_line);
    }
    jsonl::write_file(paths.scores(), score_lines);
    jsonl::write_file(paths.verdicts(), verdict_lines);

    const auto report = build_report(config, paths);
    write_json_file(paths.report_json(), report);
    std::ofstream table(paths.report_text(), std::ios::trunc);
    table << render_report_table(report);
}

// ---------------------------------------------------------------------------
// report assembly (from persisted artifacts only)
// ---------------------------------------------------------------------------

json build_report(const RunConfig& config, const RunPaths& paths) {
    const auto predictions = jsonl::read_file(paths.predictions());
    const auto score_lines = jsonl::read_file(paths.scores());
    const auto verdict_lines = jsonl::read_file(paths.verdicts());
    const auto gold_pairs =
        load_pairs(paths.split_file(corpus::split_from_string(config.generation.target_split)));
    std::unordered_map<std::string, const corpus::BHPair*> gold_by_id;
    for (const auto& pair : gold_pairs) gold_by_id.emplace(pair.id, &pair);

    // Corpus BLEU re-accumulated from the persisted predictions.
    metrics::BleuStats corpus_stats;
    double bleu_sum = 0.0;
    double rouge_sum = 0.0;
    const auto& ev = config.evaluation;
    for (const auto& prediction : predictions) {
        const auto id = prediction.at("id").get<std::string>();
        const auto statements = prediction.at("statements").get<std::vector<std::string>>();
        const auto candidate =
            metrics::tokenize(join_statements(statements, ev.statement_joiner), ev.tokenize);
        const auto reference = metrics::tokenize(
            join_statements(gold_by_id.at(id)->hypothesis, ev.statement_joiner), ev.tokenize);
        if (!candidate.empty()) {
            corpus_stats += metrics::bleu_stats(candidate, {reference}, ev.bleu.max_n);
        }
    }
    for (const auto& line : score_lines) {
        bleu_sum += line.at("bleu").get<double>();
        rouge_sum += line.at("rouge_l").at("f1").get<double>();
    }

    std::map<judge::Metric, std::pair<double, std::size_t>> metric_sums;
    double avg_sum = 0.0;
    std::size_t avg_count = 0;
    std::map<std::string, double> judge_avgs;
    for (const auto& line : verdict_lines) {
        judge_avgs[line.at("id").get<std::string>()] = line.at("avg").get<double>();
        avg_sum += line.at("avg").get<double>();
        ++avg_count;
        for (const auto& [name, entry] : line.at("metrics").items()) {
            if (entry.contains("score") && !entry.at("score").is_null()) {
                auto& [sum, count] = metric_sums[judge::metric_from_string(name)];
                sum += entry.at("score").get<double>();
                ++count;
            }
        }
    }

    const double n = score_lines.empty() ? 1.0 : static_cast<double>(score_lines.size());
    json row;
    row["model"] = config.generator.model_id;
    row["mode"] = config.generation.mode;
    row["bleu_corpus"] = metrics::bleu_from_stats(corpus_stats, ev.bleu);
    row["bleu_sentence_mean"] = bleu_sum / n;
    row["rouge_l_f1"] = rouge_sum / n;
    for (auto metric : judge::kMetrics) {
        const auto it = metric_sums.find(metric);
        row[std::string(judge::to_string(metric))] =
            it != metric_sums.end() && it->second.second > 0
                ? it->second.first / static_cast<double>(it->second.second)
                : 0.0;
    }
    row["judge_avg"] = avg_count > 0 ? avg_sum / static_cast<double>(avg_count) : 0.0;

    json report;
    report["rows"] = json::array({row});
    report["provenance"] = {{"config_hash", config_hash(config)},
                            {"judge_model", config.judge_model.model_id},
                            {"generated_at", iso_now(config.deterministic_clock)},
                            {"examples", score_lines.size()}};

    if (!config.human_scores_path.empty() && fs::exists(config.human_scores_path)) {
        std::vector<judge::HumanScoreRecord> humans;
        for (const auto& j : jsonl::read_file(config.human_scores_path)) {
            humans.push_back(judge::human_record_from_json(j));
        }
        const auto correlation = judge::correlate_with_human(judge_avgs, humans);
        report["correlation"] = {{"pearson", correlation.pearson},
                                 {"spearman", correlation.spearman},
                                 {"n", correlation.n},
                                 {"dropped", correlation.dropped}};
    }
    return report;
}

std::string render_report_table(const json& report) {
    std::string text;
    char line[256];
    std::snprintf(line, sizeof(line), "%-24s %8s %8s %8s %9s %12s %13s %6s\n", "model",
                  "bleu", "rouge-l", "novelty", "relevance", "significance",
                  "verifiability", "avg");
    text += line;
    text += std::string(95, '-') + "\n";
    for (const auto& row : report.at("rows")) {
        std::snprintf(line, sizeof(line), "%-24s %8.2f %8.4f %8.2f %9.2f %12.2f %13.2f %6.2f\n",
                      row.at("model").get<std::string>().c_str(),
                      row.at("bleu_corpus").get<double>(),
                      row.at("rouge_l_f1").get<double>(),
                      row.at("novelty").get<double>(),
                      row.at("relevance").get<double>(),
                      row.at("significance").get<double>(),
                      row.at("verifiability").get<double>(),
                      row.at("judge_avg").get<double>());
        text += line;
    }
    if (report.contains("correlation")) {
        const auto& c = report.at("correlation");
        std::snprintf(line, sizeof(line),
                      "correlation vs human: pearson %.4f, spearman %.4f (n=%zu, dropped=%zu)\n",
                      c.at("pearson").get<double>(), c.at("spearman").get<double>(),
                      c.at("n").get<std::size_t>(), c.at("dropped").get<std::size_t>());
        text += line;
    }
    return text;
}

// ---------------------------------------------------------------------------
// export-sft / correlate / report
// ---------------------------------------------------------------------------

void cmd_export_sft(const RunConfig& config) {
    const RunPaths paths{config.output_dir};
    const auto train_path = paths.split_file(corpus::Split::train);
    if (!fs::exists(train_path)) {
        throw InvalidInput("train split missing (run build-dataset first): " +
                           train_path.string());
    }
    const auto pairs = load_pairs(train_path);
    const auto exported =
        corpus::export_sft(pairs, prompting::zero_shot_template().body);

    std::vector<json> lines;
    lines.reserve(exported.records.size());
    for (const auto& record : exported.records) {
        lines.push_back({{"instruction", record.instruction},
                         {"input", record.input},
                         {"output", record.output}});
    }
    jsonl::write_file(paths.sft_records(), lines);
    write_json_file(paths.sft_manifest(),
                    {{"epochs", exported.hyperparams.epochs},
                     {"batch_size", exported.hyperparams.batch_size},
                     {"max_seq_len", exported.hyperparams.max_seq_len},
                     {"learning_rate", exported.hyperparams.learning_rate},
                     {"records", exported.records.size()}});
}

void cmd_correlate(const RunConfig& config) {
    const RunPaths paths{config.output_dir};
    if (config.human_scores_path.empty()) {
        throw InvalidInput("correlate requires a human_scores file in the config");
    }
    if (!fs::exists(paths.verdicts())) {
        throw InvalidInput("verdicts missing (run evaluate first): " +
                           paths.verdicts().string());
    }
    std::map<std::string, double> judge_avgs;
    for (const auto& line : jsonl::read_file(paths.verdicts())) {
        judge_avgs[line.at("id").get<std::string>()] = line.at("avg").get<double>();
    }
    std::vector<judge::HumanScoreRecord> humans;
    for (const auto& j : jsonl::read_file(config.human_scores_path)) {
        humans.push_back(judge::human_record_from_json(j));
    }
    const auto correlation = judge::correlate_with_human(judge_avgs, humans);
    write_json_file(paths.correlation(), {{"pearson", correlation.pearson},
                                          {"spearman", correlation.spearman},
                                          {"n", correlation.n},
                                          {"dropped", correlation.dropped}});
}

void cmd_report(const RunConfig& config) {
    const RunPaths paths{config.output_dir};
    const auto report = build_report(config, paths);
    write_json_file(paths.report_json(), report);
    const auto table = render_report_table(report);
    std::ofstream out(paths.report_text(), std::ios::trunc);
    out << table;
    std::cout << table;
}

}  // namespace hypogen::runner
