// kpo_cli.cpp — command-line driver for the sweep experiments
#include "kpo/error.hpp"
#include "kpo/sweep.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Floquet versus effective-Hamiltonian sweeps for the driven Kerr parametric oscillator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int workers = 0;
    int order = 0;
    bool resume = false;
    bool quiet = false;

    for (const char* name : {"spectrum", "wigner", "ipr-map", "usdist-map", "order-scan", "track"}) {
        auto* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
        sub->add_option("--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (overrides [run] out)");
        sub->add_option("--workers", workers, "worker threads (overrides [run] workers)")->check(CLI::PositiveNumber);
        sub->add_option("--order", order, "effective order (overrides [run] order)")->check(CLI::IsMember({2, 4, 6}));
        sub->add_flag("--resume", resume, "recompute only points that did not finish ok");
        sub->add_flag("--quiet", quiet, "suppress progress lines");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string experiment = app.get_subcommands().front()->get_name();

    try {
        kpo::RunConfig config = kpo::load_config(config_path);
        const auto requested = kpo::parse_experiment(experiment);
        if (config.source.find("experiment") != std::string::npos && config.experiment != requested) {
            std::cerr << "error: configuration is for '" << kpo::to_string(config.experiment) << "', not '"
                      << experiment << "'\n";
            return 2;
        }
        config.experiment = requested;
        if (!out_dir.empty()) config.out_dir = out_dir;
        if (workers > 0) config.workers = workers;
        if (order > 0) config.order = order;

        for (const auto& warning : kpo::soft_warnings(config.model)) std::cerr << "warning: " << warning << '\n';

        kpo::RunOptions options;
        options.resume = resume;
        if (!quiet) options.log = [](const std::string& line) { std::cerr << line << '\n'; };
        const auto manifest = kpo::run_experiment(config, options);

        std::size_t ok = 0;
        for (const auto& p : manifest.points) ok += kpo::terminal_ok(p.status) ? 1 : 0;
        std::cout << experiment << ": " << ok << "/" << manifest.points.size() << " points ok, outputs in "
                  << config.out_dir.string() << " (" << manifest.wall_time << " s)\n";
        for (const auto& note : manifest.notes) std::cout << "note: " << note << '\n';
        return manifest.all_ok() ? 0 : 1;
    } catch (const kpo::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
