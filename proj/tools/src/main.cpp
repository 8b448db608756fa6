#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tilln/cli/config.hpp"
#include "tilln/cli/dispatch.hpp"
#include "tilln/models.hpp"

namespace {

unsigned default_workers() {
    if (const char* env = std::getenv("TILLN_WORKERS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
        std::cerr << "ignoring TILLN_WORKERS='" << env << "'\n";
    }
    return 1;
}

struct Flags {
    std::string config;
    std::string out;
    std::string model;
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;
};

int run_task(const std::string& task, const Flags& flags) {
    using nlohmann::json;
    json j = json::object();
    if (!flags.config.empty()) {
        std::ifstream in(flags.config);
        if (!in) {
            std::cerr << "cannot read " << flags.config << "\n";
            return tilln::cli::kError;
        }
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            std::cerr << "invalid config: " << e.what() << "\n";
            return tilln::cli::kConfigError;
        }
    }
    if (j.contains("task") && j["task"] != task) {
        std::cerr << "config task '" << j["task"].dump() << "' overridden by verb '" << task << "'\n";
    }
    j["task"] = task;
    if (!flags.model.empty()) j["model"] = flags.model;
    if (flags.seed) j["seed"] = *flags.seed;
    if (!flags.out.empty()) j["output"] = flags.out;

    tilln::cli::ExperimentConfig cfg;
    try {
        cfg = tilln::cli::parse_config(j.dump());
    } catch (const tilln::cli::ConfigError& e) {
        for (const auto& err : e.errors()) std::cerr << "config error: " << err << "\n";
        return tilln::cli::kConfigError;
    }
    const auto bundle = tilln::cli::dispatch(cfg, flags.workers);
    std::cout << bundle.summary.dump(2) << "\n";
    if (!cfg.output.empty()) {
        try {
            tilln::cli::emit(bundle, cfg.output);
        } catch (const std::exception& e) {
            std::cerr << "cannot write bundle: " << e.what() << "\n";
            return tilln::cli::kError;
        }
    }
    return bundle.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Law-of-large-numbers experiments for time-inhomogeneous Markov chains"};
    app.require_subcommand(1);
    Flags flags;
    flags.workers = default_workers();

    int code = 0;
    for (const auto& task : tilln::cli::kTasks) {
        auto* sub = app.add_subcommand(task, "run the " + task + " task");
        sub->add_option("-c,--config", flags.config, "experiment config (JSON)");
        sub->add_option("-o,--out", flags.out, "output directory");
        sub->add_option("-m,--model", flags.model, "built-in model name");
        sub->add_option("-s,--seed", flags.seed, "seed override");
        sub->add_option("-w,--workers", flags.workers, "worker threads (default $TILLN_WORKERS or 1)")
            ->check(CLI::PositiveNumber);
        sub->callback([&code, &flags, task] { code = run_task(task, flags); });
    }
    auto* models = app.add_subcommand("models", "list built-in models");
    models->callback([] {
        for (const auto& name : tilln::builtin_model_names()) {
            const auto m = tilln::builtin_model(name);
            std::cout << name << " states=" << m.family.state_count() << "\n";
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : tilln::cli::kConfigError;
    }
    return code;
}
