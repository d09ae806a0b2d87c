#include "dq/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>

int main(int argc, char** argv) {
    CLI::App app{"deformation quantization of classical fields at desk scale"};
    app.require_subcommand(1);

    std::string config_path, output_dir = ".";
    uint64_t seed = 0;
    bool have_seed = false, quiet = false;

    const std::map<std::string, std::string> help{
        {"lattice-evolve", "integrate the field and track conservation drift"},
        {"wave-operators", "estimate the wave operators and their convergence"},
        {"scatter", "apply the scattering map and check free-energy transport"},
        {"lie-check", "verify closure of the assembled Poincare generators"},
        {"linearize", "solve the homological equation; writes omega.json"},
        {"star-check", "associativity and classical limit of the star product"},
        {"push-star", "defining identity of the pushed-forward star product"},
        {"ham-check", "star-power Hamiltonian identity, formal and numeric"}};
    std::string chosen;
    for (const char* name : dq::kCommands) {
        CLI::App* sub = app.add_subcommand(name, help.at(name));
        sub->add_option("--config", config_path, "JSON experiment config")
            ->required();
        sub->add_option("--output", output_dir, "report directory");
        sub->add_option("--seed", seed, "override the config seed")
            ->each([&](const std::string&) { have_seed = true; });
        sub->add_flag("--quiet", quiet, "suppress progress output");
        sub->callback([&chosen, name] { chosen = name; });
    }

    CLI11_PARSE(app, argc, argv);

    dq::json config;
    try {
        config = dq::load_json_file(config_path);
    } catch (const std::exception& e) {
        std::cerr << "dq: " << e.what() << "\n";
        return 2;
    }
    config["_config_dir"] =
        std::filesystem::path(config_path).parent_path().string();
    std::optional<uint64_t> seed_override;
    if (have_seed) seed_override = seed;
    return dq::run_experiment(chosen, std::move(config), output_dir,
                              seed_override, quiet);
}
