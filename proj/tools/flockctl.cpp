// flockctl: run alignment scenarios from a config file or a built-in preset.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "flock/scenario.hpp"

namespace {

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Alignment dynamics laboratory"};
    app.require_subcommand(0, 1);
    app.fallthrough();

    std::string config, preset_name, out_dir = "out";
    std::optional<std::uint64_t> seed;
    bool quiet = false, list_presets = false, print_config = false;

    app.add_option("--config", config, "scenario file")->check(CLI::ExistingFile);
    app.add_option("--preset", preset_name, "built-in scenario instead of --config");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "override the random seed of the scenario");
    app.add_flag("--quiet", quiet, "suppress progress output");
    app.add_flag("--list-presets", list_presets, "print the preset names and exit");
    app.add_flag("--print-config", print_config, "print the resolved scenario and exit");

    std::vector<CLI::App *> subs;
    for (auto name : {"simulate", "certify", "verify-lemma", "hydro", "sweep", "compare-groups"})
        subs.push_back(app.add_subcommand(name));
    subs[0]->description("integrate the particle model and check the decay bounds");
    subs[1]->description("flocking certificate for the initial configuration");
    subs[2]->description("fuzz the antisymmetric action bound");
    subs[3]->description("1D Eulerian hydrodynamic run");
    subs[4]->description("one run per value of the [sweep] parameter");
    subs[5]->description("two-group alignment contrast between cs and mt weights");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e);
    }

    if (list_presets) {
        for (auto n : flock::preset_names())
            std::cout << n << '\n';
        return flock::kExitOk;
    }

    std::string text;
    try {
        if (!config.empty() && !preset_name.empty())
            throw std::invalid_argument("give either --config or --preset, not both");
        if (!config.empty()) {
            text = read_file(config);
        } else if (!preset_name.empty()) {
            auto p = flock::preset(preset_name);
            if (!p)
                throw std::invalid_argument("unknown preset '" + preset_name + "'");
            text = std::string(*p);
        } else {
            throw std::invalid_argument("a scenario is required (--config or --preset)");
        }
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return flock::kExitParameter;
    }

    flock::Scenario scenario;
    try {
        scenario = flock::parse_scenario(text);
    } catch (const flock::ScenarioError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return flock::kExitConfig;
    } catch (const std::exception &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return flock::kExitConfig;
    }
    if (seed) {
        if (scenario.initial.kind == flock::InitialKind::Random ||
            scenario.initial.kind == flock::InitialKind::TwoGroup)
            scenario.initial.seed = *seed;
        scenario.lemma.seed = *seed;
    }

    if (print_config) {
        std::cout << flock::serialize_scenario(scenario);
        return flock::kExitOk;
    }

    std::optional<flock::Command> command;
    for (auto *s : subs)
        if (s->parsed())
            command = flock::parse_command(s->get_name());
    if (!command) {
        std::cerr << "error: no command given\n" << app.help();
        return flock::kExitParameter;
    }
    return flock::run(scenario, *command, out_dir, quiet);
}
