#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "copreg/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Normal-copula regression for dependent discrete responses"};
    app.require_subcommand(1);

    std::string config_path, out_path, seed, data_path;
    std::vector<std::string> overrides;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "flat key = value config file");
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--out", out_path, "CSV output path (default stdout)");
        sub->add_option("--set", overrides, "extra key=value overrides")->take_all();
    };

    CLI::App* rect = app.add_subcommand("rectprob", "rectangle-probability engine comparison");
    CLI::App* asym = app.add_subcommand("asymlimit", "limiting estimates and standard errors");
    CLI::App* sim = app.add_subcommand("simstudy", "simulation study / jitter variability");
    CLI::App* fit = app.add_subcommand("fit", "fit a model to longitudinal CSV data");
    for (CLI::App* sub : {rect, asym, sim, fit}) add_common(sub);
    fit->add_option("--data", data_path, "longitudinal CSV file");

    CLI11_PARSE(app, argc, argv);

    copreg::Config cfg;
    try {
        if (!config_path.empty()) cfg = copreg::Config::from_file(config_path);
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) {
                throw copreg::config_error("--set expects key=value, got: " + kv);
            }
            cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (!seed.empty()) cfg.set("seed", seed);
        if (!out_path.empty()) cfg.set("out", out_path);
        if (!data_path.empty()) cfg.set("data", data_path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return copreg::exit_config;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    return copreg::run_command(name, cfg, std::cerr);
}
