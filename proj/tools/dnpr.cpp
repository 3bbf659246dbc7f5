// Command-line front end: parses a JSON experiment config, dispatches to the
// library, and writes CSV/JSON outputs with a metadata sidecar.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "dnpr/config.hpp"
#include "dnpr/run.hpp"
#include "dnpr/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitIo = 4;

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw dnpr::IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct CommonOptions {
    std::string config_path;
    std::string out_path;
    std::string format;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

int run_experiment(const std::string& subcommand, const CommonOptions& opt) {
    const std::string text = read_text_file(opt.config_path);
    dnpr::RunConfig cfg = dnpr::parse_config(text);
    if (dnpr::to_string(cfg.kind) != subcommand)
        throw dnpr::ConfigError("config declares experiment '" +
                                dnpr::to_string(cfg.kind) +
                                "' but the subcommand is '" + subcommand + "'");
    if (opt.seed_set) {
        cfg.seed = opt.seed;
        cfg.seed_was_set = true;
    }
    if (!opt.out_path.empty()) cfg.output = opt.out_path;
    if (!opt.format.empty()) cfg.format = opt.format;
    if (cfg.output.empty()) cfg.output = subcommand + (cfg.format == "json" ? ".json" : ".csv");

    const dnpr::ResultEnvelope env = dnpr::run(cfg);
    const auto files = dnpr::emit(env, cfg.output, cfg.format);
    for (const auto& w : env.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& f : files) std::cout << f << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale simulations of sweep-driven 13C polarization near "
                 "the NV-P1 level anti-crossing"};
    app.set_version_flag("--version", dnpr::kVersion);
    app.require_subcommand(1);

    CommonOptions opt;
    std::string figure_name;
    std::string figure_out_dir = ".";

    std::vector<CLI::App*> experiment_cmds;
    for (const auto& [name, kind] : dnpr::experiment_names()) {
        CLI::App* sub = app.add_subcommand(name, "run a '" + name + "' experiment");
        sub->add_option("--config", opt.config_path, "JSON config path")
            ->required();
        sub->add_option("--seed", opt.seed, "master seed override")
            ->each([&](const std::string&) { opt.seed_set = true; });
        sub->add_option("--out", opt.out_path, "output path override");
        sub->add_option("--format", opt.format, "csv or json")
            ->check(CLI::IsMember({"csv", "json"}));
        experiment_cmds.push_back(sub);
    }

    CLI::App* figure =
        app.add_subcommand("figure", "run a bundled study by name");
    figure->add_option("name", figure_name, "study name")->required();
    figure->add_option("--out-dir", figure_out_dir, "output directory");
    figure->add_option("--seed", opt.seed, "master seed override")
        ->each([&](const std::string&) { opt.seed_set = true; });

    CLI::App* validate =
        app.add_subcommand("validate", "parse and validate a config, run nothing");
    validate->add_option("--config", opt.config_path, "JSON config path")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (figure->parsed()) {
            const auto files = dnpr::figure_command(
                figure_name, figure_out_dir, opt.seed_set ? opt.seed : 424242);
            for (const auto& f : files) std::cout << f << "\n";
            return kExitOk;
        }
        if (validate->parsed()) {
            const dnpr::RunConfig cfg =
                dnpr::parse_config(read_text_file(opt.config_path));
            std::cout << "ok " << dnpr::to_string(cfg.kind) << " "
                      << dnpr::hash_hex(dnpr::fnv1a(cfg.canonical_text())) << "\n";
            return kExitOk;
        }
        for (const auto& [name, kind] : dnpr::experiment_names())
            if (app.get_subcommand(name)->parsed()) return run_experiment(name, opt);
        std::cerr << "error: no subcommand\n";
        return kExitConfig;
    } catch (const dnpr::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const dnpr::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
