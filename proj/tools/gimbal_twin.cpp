// Command-line front end for the testbed twin.
//
//   gimbal-twin maneuver      --config <file> [--seed N] [--duration S] [--out DIR]
//   gimbal-twin sweep         --config <file> [--seed N] [--out DIR] [--axis A]
//                             [--mount M] [--step D]
//   gimbal-twin rotor-failure --config <file> [--seed N] [--duration S] [--out DIR]
//                             [--rotor I]
//   gimbal-twin report        --config <file> [--out DIR]
//
// Exit codes: 0 success, 1 configuration error, 2 simulation fault,
// 3 alignment error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "gtwin/config.hpp"
#include "gtwin/errors.hpp"
#include "gtwin/scenario.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> duration;
    std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_duration = true) {
    cmd->add_option("--config", args.config_path, "scenario configuration file")->required();
    cmd->add_option("--seed", [&args](const CLI::results_t& res) {
        args.seed = static_cast<std::uint64_t>(std::stoull(res[0]));
        return true;
    }, "override the configured random seed");
    if (with_duration)
        cmd->add_option("--duration", [&args](const CLI::results_t& res) {
            args.duration = std::stod(res[0]);
            return true;
        }, "override the run duration in seconds");
    cmd->add_option("--out", [&args](const CLI::results_t& res) {
        args.out_dir = res[0];
        return true;
    }, "override the output directory");
}

gtwin::ScenarioConfig load(const CommonArgs& args) {
    gtwin::ScenarioConfig cfg = gtwin::load_config(args.config_path);
    gtwin::apply_overrides(cfg, args.seed, args.duration, args.out_dir);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"digital twin of a gimbal-mounted quadrotor with a backscatter sensor tag"};
    app.require_subcommand(1);

    CommonArgs maneuver_args;
    CLI::App* maneuver = app.add_subcommand("maneuver", "fly the configured script");
    add_common(maneuver, maneuver_args);

    CommonArgs sweep_args;
    std::string sweep_axis, sweep_mount;
    double sweep_step = 0;
    CLI::App* sweep = app.add_subcommand("sweep", "measure read rate versus orientation");
    add_common(sweep, sweep_args, /*with_duration=*/false);
    sweep->add_option("--axis", sweep_axis, "sweep a single axis (roll, pitch, yaw)");
    sweep->add_option("--mount", sweep_mount, "sweep a single mount (parallel, perpendicular)");
    sweep->add_option("--step", sweep_step, "override the sweep step in degrees");

    CommonArgs failure_args;
    int failure_rotor = -2;  // -2 = not given on the command line
    CLI::App* failure = app.add_subcommand("rotor-failure", "fly the script with a rotor failure");
    add_common(failure, failure_args);
    failure->add_option("--rotor", failure_rotor, "rotor index to fail (0..3)");

    CommonArgs report_args;
    CLI::App* report = app.add_subcommand("report", "recompute metrics and plot data for a run");
    add_common(report, report_args, /*with_duration=*/false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (maneuver->parsed()) {
            gtwin::ScenarioConfig cfg = load(maneuver_args);
            gtwin::run_flight_scenario(cfg, "maneuver", gtwin::FailureEvent{});
        } else if (sweep->parsed()) {
            gtwin::ScenarioConfig cfg = load(sweep_args);
            if (!sweep_axis.empty())
                cfg.scenario.sweep.axes = {gtwin::detail::parse_axis(sweep_axis)};
            if (!sweep_mount.empty())
                cfg.scenario.sweep.mounts = {gtwin::detail::parse_mount(sweep_mount)};
            if (sweep_step > 0) {
                if (std::abs(360.0 / sweep_step - std::round(360.0 / sweep_step)) > 1e-9)
                    throw gtwin::ConfigError("--step must divide 360");
                cfg.scenario.sweep.step_deg = sweep_step;
            }
            gtwin::run_sweep_scenario(cfg);
        } else if (failure->parsed()) {
            gtwin::ScenarioConfig cfg = load(failure_args);
            if (failure_rotor != -2) {
                if (failure_rotor > 3)
                    throw gtwin::ConfigError("--rotor must be 0..3 (or negative for none)");
                cfg.scenario.failure.rotor = failure_rotor;
            }
            gtwin::run_flight_scenario(cfg, "rotor_failure", cfg.scenario.failure);
        } else if (report->parsed()) {
            gtwin::ScenarioConfig cfg = load(report_args);
            gtwin::run_report(cfg);
        }
    } catch (const gtwin::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const gtwin::AlignmentError& e) {
        std::cerr << "alignment error: " << e.what() << "\n";
        return 3;
    } catch (const gtwin::SimulationFault& e) {
        std::cerr << "simulation fault: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected failure: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
