#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fleet/grad_check.hpp"
#include "fleet/scenario_io.hpp"
#include "fleet/simulator.hpp"
#include "fleet/svg_plot.hpp"
#include "fleet/trajectory_csv.hpp"

namespace fleet {

/// Process exit codes of the fleetsim tool.
enum ExitCode : int {
    kExitOk = 0,          ///< converged, valid scenario, gradient check within tolerance, plot written
    kExitFailure = 1,     ///< invalid scenario or input file, gradient check above tolerance
    kExitTimeout = 2,     ///< run ended at t_max without converging
    kExitViolation = 3,   ///< run stopped on a safety monitor event
    kExitUsage = 64,      ///< bad command line
};

namespace cli_detail {

inline std::string run_summary(const RunOutcome& o) {
    nlohmann::ordered_json j;
    j["status"] = to_string(o.status);
    j["t_end"] = o.t_end;
    j["t_converged"] = o.t_converged ? nlohmann::ordered_json(*o.t_converged) : nlohmann::ordered_json(nullptr);
    nlohmann::ordered_json v = nlohmann::ordered_json::array();
    for (const auto& e : o.violations)
        v.push_back({{"kind", to_string(e.kind)}, {"t", e.t}, {"agent", e.agent}, {"other", e.other},
                     {"value", e.value}});
    j["violations"] = std::move(v);
    double min_pair = std::numeric_limits<double>::infinity(), max_center = 0.0;
    for (const auto& r : o.trajectory) {
        min_pair = std::min(min_pair, r.min_pairwise_distance);
        max_center = std::max(max_center, r.max_center_distance);
    }
    j["min_pairwise_distance"] = std::isfinite(min_pair) ? nlohmann::ordered_json(min_pair) : nullptr;
    j["max_center_distance"] = max_center;
    j["diagnostics"] = {{"zero_gradient", o.diagnostics.zero_gradient},
                        {"omega_degenerate", o.diagnostics.omega_degenerate},
                        {"matching_degenerate", o.diagnostics.matching_degenerate},
                        {"destination_overlap", o.diagnostics.destination_overlap}};
    return j.dump(2) + "\n";
}

inline int status_code(RunStatus s) {
    switch (s) {
        case RunStatus::Converged: return kExitOk;
        case RunStatus::Timeout: return kExitTimeout;
        case RunStatus::SafetyViolation: return kExitViolation;
    }
    return kExitFailure;
}

}  // namespace cli_detail

/// Entry point of the command-line tool; returns the process exit code.
inline int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-vehicle barrier-function simulator", "fleetsim"};
    app.require_subcommand(1);
    app.footer("Exit codes: 0 ok/converged, 1 invalid input, 2 timeout, 3 safety violation, 64 usage.");

    std::string scenario_path, csv_path, out_dir, plot_out, plot_scenario, mode_name;
    std::size_t stride = 10, samples = 1000;
    double tol = 1e-5;
    std::vector<double> times;
    std::uint64_t gc_seed = 0;
    bool gc_seed_set = false;

    auto* run_cmd = app.add_subcommand("run", "Simulate a scenario");
    run_cmd->add_option("scenario", scenario_path, "scenario file")->required();
    run_cmd->add_option("--out", out_dir, "directory for trajectory.csv, summary.json and plots");
    run_cmd->add_option("--stride", stride, "record every N-th step in the CSV")->check(CLI::PositiveNumber);

    auto* validate_cmd = app.add_subcommand("validate", "Parse and validate a scenario");
    validate_cmd->add_option("scenario", scenario_path, "scenario file")->required();

    auto* gc_cmd = app.add_subcommand("grad-check", "Compare the barrier gradient with finite differences");
    gc_cmd->add_option("scenario", scenario_path, "scenario file")->required();
    gc_cmd->add_option("--samples", samples, "number of random configurations")->check(CLI::PositiveNumber);
    gc_cmd->add_option("--tol", tol, "maximum relative error")->check(CLI::PositiveNumber);
    gc_cmd->add_option("--seed", gc_seed, "configuration seed (default: scenario seed)");

    auto* plot_cmd = app.add_subcommand("plot", "Render a trajectory CSV as SVG");
    plot_cmd->add_option("csv", csv_path, "trajectory.csv from `run --out`")->required();
    plot_cmd->add_option("--mode", mode_name, "trajectories | distance_to_dest | inter_agent_distances")
        ->required()
        ->check(CLI::IsMember({"trajectories", "distance_to_dest", "inter_agent_distances"}));
    plot_cmd->add_option("--times", times, "snapshot times for trajectories mode");
    plot_cmd->add_option("--scenario", plot_scenario, "scenario file (disc, destinations, agent kinds)");
    plot_cmd->add_option("-o,--out", plot_out, "output file (default: stdout)");

    try {
        app.parse(argc, argv);
        gc_seed_set = gc_cmd->count("--seed") > 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*validate_cmd) {
            load_scenario(scenario_path);
            out << "ok: " << scenario_path << "\n";
            return kExitOk;
        }
        if (*run_cmd) {
            const Scenario sc = load_scenario(scenario_path);
            const RunOutcome o = run(sc);
            const std::string summary = cli_detail::run_summary(o);
            out << summary;
            if (!out_dir.empty()) {
                const std::filesystem::path dir(out_dir);
                std::filesystem::create_directories(dir);
                write_file_atomic(dir / "trajectory.csv", emit_trajectory(o, stride));
                write_file_atomic(dir / "summary.json", summary);
                const auto rows = trajectory_rows(o, stride);
                const auto ctx = plot_context(sc);
                write_file_atomic(dir / "trajectories.svg", plot_svg(rows, ctx, PlotMode::Trajectories));
                write_file_atomic(dir / "distance_to_dest.svg", plot_svg(rows, ctx, PlotMode::DistanceToDest));
                write_file_atomic(dir / "inter_agent_distances.svg",
                                  plot_svg(rows, ctx, PlotMode::InterAgentDistances));
            }
            return cli_detail::status_code(o.status);
        }
        if (*gc_cmd) {
            const Scenario sc = load_scenario(scenario_path);
            const auto rep = gradient_check(sc.world, sc.barrier(), samples, gc_seed_set ? gc_seed : sc.seed);
            out << "samples: " << rep.samples << "\nblend-zone neighbors: " << rep.blend_zone_neighbors
                << "\nmax relative error: " << rep.max_relative_error << "\ntolerance: " << tol << "\n";
            return rep.max_relative_error <= tol ? kExitOk : kExitFailure;
        }
        if (*plot_cmd) {
            const PlotMode mode = *parse_plot_mode(mode_name);
            if (mode == PlotMode::DistanceToDest && plot_scenario.empty()) {
                err << "plot: --mode distance_to_dest needs --scenario for the destinations\n";
                return kExitUsage;
            }
            PlotContext ctx;
            if (!plot_scenario.empty()) ctx = plot_context(load_scenario(plot_scenario));
            const auto rows = parse_trajectory_csv(read_text_file(csv_path));
            const std::string svg = plot_svg(rows, ctx, mode, times);
            if (plot_out.empty()) out << svg;
            else write_file_atomic(plot_out, svg);
            return kExitOk;
        }
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return kExitFailure;
    } catch (const ValidationError& e) {
        err << "invalid scenario: " << e.what() << "\n";
        return kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace fleet
