#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "hypogen/errors.hpp"
#include "hypogen/runner.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitPipelineFailure = 2;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temporally partitioned hypothesis-generation experiments: dataset "
                 "construction, LLM generation, and evaluation"};
    app.require_subcommand(1);

    std::string config_path;

    struct Subcommand {
        const char* name;
        const char* description;
        void (*run)(const hypogen::runner::RunConfig&);
    };
    const Subcommand subcommands[] = {
        {"build-dataset",
         "Ingest records, summarize, generate pairs, filter, and partition by date",
         hypogen::runner::cmd_build_dataset},
        {"generate", "Generate hypotheses for the target split",
         hypogen::runner::cmd_generate},
        {"evaluate", "Score predictions with word-overlap metrics and the LLM judge",
         hypogen::runner::cmd_evaluate},
        {"export-sft", "Export the train split as instruction-tuning records",
         hypogen::runner::cmd_export_sft},
        {"correlate", "Correlate judge verdicts with human scores",
         hypogen::runner::cmd_correlate},
        {"report", "Rebuild and print the run report from persisted artifacts",
         hypogen::runner::cmd_report},
    };

    for (const auto& sub : subcommands) {
        auto* cmd = app.add_subcommand(sub.name, sub.description);
        cmd->add_option("-c,--config", config_path, "Run config (JSON)")->required();
        cmd->callback([&sub, &config_path] {
            sub.run(hypogen::runner::load_config(config_path));
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    } catch (const hypogen::InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "pipeline failure: " << e.what() << '\n';
        return kExitPipelineFailure;
    }
    return 0;
}
