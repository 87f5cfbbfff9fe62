#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mobprof/error.hpp"
#include "mobprof/pipeline.hpp"

namespace {

struct Options {
    std::string config;
    std::string out = "mobprof_out";
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

int run(const std::string& stage, const Options& opt) {
    using namespace mobprof;
    PipelineConfig config = PipelineConfig::load(opt.config);
    if (opt.seed) config.seed = *opt.seed;
    Pipeline::Logger logger;
    if (!opt.quiet) logger = [](std::string_view msg) { std::cerr << "[mobprof] " << msg << '\n'; };
    Pipeline pipeline(std::move(config), opt.out, logger);
    if (stage == "all")
        pipeline.run_all();
    else
        pipeline.run(*parse_stage(stage));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Seasonal mobility profiling from call detail records"};
    app.set_version_flag("--version", MOBPROF_VERSION);
    app.require_subcommand(1, 1);

    Options opt;
    std::string chosen;
    auto add = [&](const std::string& name, const std::string& help) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opt.config, "Pipeline configuration (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "Output directory for stage artifacts")->capture_default_str();
        sub->add_option("--seed", opt.seed, "Override the configured seed");
        sub->add_flag("--quiet", opt.quiet, "Suppress progress messages");
        sub->callback([&chosen, name] { chosen = name; });
    };
    add("synth", "Generate a synthetic world, population, rainfall and calendar");
    add("ingest", "Validate and normalize the CDR table");
    add("homes", "Estimate daily and monthly home arrondissements");
    add("features", "Build HAUV/HLZUV vectors and behavioral indicators");
    add("filter", "Apply mover, traveler and temporal-consistency filters");
    add("cluster", "UPGMA clustering of binarized zone occupancy");
    add("detect", "Daily flow matrices and event alerts");
    add("markov", "Stationary Markov baseline and non-stationarity report");
    add("calendar", "Correlate class profiles with calendars and rainfall");
    add("all", "Run every stage in order");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        return run(chosen, opt);
    } catch (const mobprof::MissingStageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const mobprof::InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const mobprof::InvariantError& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    }
}
