#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "msf/errors.hpp"
#include "msf/harness.hpp"
#include "msf/selftest.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitRuntime = 4;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Predictive safety filter for a unicycle fleet under network attacks"};
    app.require_subcommand(1);

    std::string config_path;
    bool no_filter = false;
    std::optional<std::string> attack;
    std::optional<std::size_t> agents;
    std::optional<double> duration;
    std::string out_dir = "out";
    std::string format = "csv";
    auto* run = app.add_subcommand("run", "Run one closed-loop scenario");
    run->add_option("--config", config_path, "key = value scenario file");
    run->add_flag("--no-filter", no_filter, "Disable the safety filter");
    run->add_option("--attack", attack, "Attack kind")->check(CLI::IsMember({"none", "fdi", "covert"}));
    run->add_option("--agents", agents, "Fleet size")->check(CLI::PositiveNumber);
    run->add_option("--duration", duration, "Scenario duration [s]")->check(CLI::PositiveNumber);
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--format", format, "Log format")->check(CLI::IsMember({"csv", "json"}));

    std::string log_path;
    std::string metrics_config;
    auto* metrics = app.add_subcommand("metrics", "Summarize an exported log");
    metrics->add_option("log", log_path, "log.csv or log.json")->required();
    metrics->add_option("--config", metrics_config, "Scenario file for CSV logs (reference, attack window)");

    auto* selftest = app.add_subcommand("selftest", "Run the built-in invariant suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    try {
        if (run->parsed()) {
            msf::ScenarioConfig cfg;
            if (!config_path.empty()) cfg = msf::load_config_file(config_path);
            if (no_filter) cfg.filter_enabled = false;
            if (attack) cfg.attack.kind = msf::parse_attack_kind(*attack);
            if (agents) {
                cfg.fleet_size = *agents;
                if (cfg.initial.states.size() != *agents) cfg.initial.states.clear();
            }
            if (duration) cfg.duration = *duration;
            cfg.reference.fleet_size = cfg.fleet_size;
            cfg.validate();

            const msf::SimLog log = msf::run_scenario(cfg);
            const msf::MetricsSummary summary = msf::summarize(log);
            const auto path = msf::export_log(log, summary, out_dir,
                                              format == "json" ? msf::ExportFormat::Json : msf::ExportFormat::Csv);
            std::cout << msf::to_json(summary).dump(2) << '\n';
            std::cerr << "wrote " << path.string() << '\n';
            return 0;
        }
        if (metrics->parsed()) {
            std::optional<msf::ScenarioConfig> cfg;
            if (!metrics_config.empty()) cfg = msf::load_config_file(metrics_config);
            const msf::SimLog log = msf::load_log(log_path, cfg);
            std::cout << msf::to_json(msf::summarize(log)).dump(2) << '\n';
            return 0;
        }
        if (selftest->parsed()) {
            return msf::run_selftest(std::cout) == 0 ? 0 : 1;
        }
    } catch (const msf::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const msf::InvalidArgument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const msf::InitialInfeasibility& e) {
        std::cerr << "initial infeasibility: " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const msf::RuntimeAbort& e) {
        std::cerr << "runtime abort at step " << e.step() << ": " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
