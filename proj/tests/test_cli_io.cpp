#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "fleet/cli.hpp"
#include "fleet/scenario_io.hpp"
#include "fleet/svg_plot.hpp"
#include "fleet/trajectory_csv.hpp"
#include "scenario_gen.hpp"

using namespace fleet;
namespace fs = std::filesystem;

namespace {

const std::string kScenarios = FLEET_SCENARIO_DIR;

const char* kMinimal = R"({
  // two vehicles, published radii
  "world": {"center": [0, 0], "R0": 12, "R_s": 1.8, "R_z": 1.6, "R_c": 1.6875},
  "vehicle": {"B": 0.25, "r_a": 0.75},
  "gains": {"k": 1, "lambda": 2.3},
  "sim": {"t_max": 10},
  "agents": [
    {"id": 1, "kind": "leader", "start": {"x": 0, "y": 0, "theta": 0, "gamma": 0}, "dest": {"x": 3, "y": 0}},
    {"id": 2, "kind": "follower", "start": {"x": 0, "y": 4, "theta": 0, "gamma": 0}, "dest": {"x": 3, "y": 4}}
  ]
})";

struct CliResult {
    int code;
    std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
    args.insert(args.begin(), "fleetsim");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path temp_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("fleet_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
    const auto pos = s.find(from);
    if (pos != std::string::npos) s.replace(pos, from.size(), to);
    return s;
}

}  // namespace

TEST(ParseScenario, PublishedParameters) {
    const Scenario sc = parse_scenario(kMinimal);
    EXPECT_DOUBLE_EQ(sc.world.body_radius, 0.75);
    EXPECT_DOUBLE_EQ(sc.vehicle.wheelbase, 0.25);
    EXPECT_DOUBLE_EQ(sc.world.outer_radius, 12.0);
    EXPECT_DOUBLE_EQ(sc.world.sensing_radius, 1.8);
    EXPECT_DOUBLE_EQ(sc.world.avoidance_radius, 1.6);
    EXPECT_DOUBLE_EQ(sc.world.safety_radius, 1.6875);
    EXPECT_DOUBLE_EQ(sc.gains.lambda, 2.3);
    ASSERT_EQ(sc.agents.size(), 2u);
    EXPECT_EQ(sc.agents[0].kind, AgentKind::Leader);
}

TEST(ParseScenario, Defaults) {
    const Scenario sc = parse_scenario(kMinimal);
    EXPECT_DOUBLE_EQ(sc.dt, 0.01);
    EXPECT_DOUBLE_EQ(sc.convergence_radius, 0.1);
    EXPECT_DOUBLE_EQ(sc.delta, 1.0);
    EXPECT_EQ(sc.seed, 0u);
    EXPECT_DOUBLE_EQ(sc.world.min_separation, 1.5);
}

TEST(ParseScenario, SharedStartIsRejected) {
    const std::string doc = replace(kMinimal, R"("x": 0, "y": 4)", R"("x": 0, "y": 0)");
    try {
        parse_scenario(doc);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.invariant(), "initial states overlap");
        EXPECT_NE(std::string(e.what()).find("agents 1,2"), std::string::npos);
    }
}

TEST(ParseScenario, MissingKeyNamesPath) {
    const std::string doc = replace(kMinimal, R"("R_z": 1.6, )", "");
    try {
        parse_scenario(doc);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.where(), "world.R_z");
    }
}

TEST(ParseScenario, WrongTypeNamesPath) {
    const std::string doc = replace(kMinimal, R"("kind": "follower")", R"("kind": 3)");
    try {
        parse_scenario(doc);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.where(), "agents[1].kind");
    }
}

TEST(ParseScenario, SyntaxErrorHasLineAndColumn) {
    try {
        parse_scenario("{\n  \"world\": {,\n}");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.where().rfind("line 2", 0), 0u) << e.where();
    }
}

TEST(ParseScenario, RejectsUnknownMisbehavior) {
    const std::string doc = replace(
        kMinimal, "\n  ]",
        R"(,
    {"id": 3, "kind": "misbehaving", "misbehavior": {"type": "teleport"}}
  ])");
    EXPECT_THROW(parse_scenario(doc), ParseError);
}

TEST(ParseScenario, SerializeIsFixedPoint) {
    for (const char* f : {"canonical_12.json", "two_followers.json", "forced_collision.json"}) {
        const Scenario a = load_scenario(kScenarios + "/" + f);
        const std::string text = serialize_scenario(a);
        const Scenario b = parse_scenario(text);
        EXPECT_EQ(serialize_scenario(b), text) << f;
        ASSERT_EQ(a.agents.size(), b.agents.size());
        for (std::size_t i = 0; i < a.agents.size(); ++i) {
            EXPECT_EQ(a.agents[i].initial_state, b.agents[i].initial_state);
            EXPECT_EQ(a.agents[i].misbehavior, b.agents[i].misbehavior);
        }
    }
}

TEST(TrajectoryCsv, RowCountAndOrder) {
    Scenario sc = parse_scenario(kMinimal);
    sc.t_max = 0.02;
    const RunOutcome o = run(sc);
    ASSERT_EQ(o.trajectory.size(), 3u);
    const auto rows = trajectory_rows(o, 1);
    EXPECT_EQ(rows.size(), 6u);
    for (std::size_t i = 1; i < rows.size(); ++i)
        EXPECT_TRUE(rows[i - 1].t < rows[i].t || (rows[i - 1].t == rows[i].t && rows[i - 1].agent_id < rows[i].agent_id));
    const std::string csv = emit_trajectory(o, 1);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,agent_id,x,y,theta,gamma,u,omega,V,min_dij,di0");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
}

TEST(TrajectoryCsv, LargeStrideKeepsFirstRecord) {
    Scenario sc = parse_scenario(kMinimal);
    sc.t_max = 0.5;
    const RunOutcome o = run(sc);
    const auto rows = trajectory_rows(o, 1000);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].t, 0.0);
    EXPECT_EQ(rows[1].t, 0.0);
}

TEST(TrajectoryCsv, StrideTimesAreMultiples) {
    Scenario sc = parse_scenario(kMinimal);
    sc.t_max = 1.0;
    const auto rows = trajectory_rows(run(sc), 10);
    for (const auto& r : rows) EXPECT_NEAR(std::remainder(r.t, 0.1), 0.0, 1e-9);
}

TEST(TrajectoryCsv, RoundTripIsExact) {
    const Scenario sc = load_scenario(kScenarios + "/canonical_12.json");
    const RunOutcome o = run(sc);
    const auto rows = trajectory_rows(o, 7);
    const auto back = parse_trajectory_csv(write_trajectory_csv(rows));
    ASSERT_EQ(rows.size(), back.size());
    auto same = [](double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; };
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& a = rows[i];
        const auto& b = back[i];
        EXPECT_EQ(a.agent_id, b.agent_id);
        for (auto [x, y] : {std::pair{a.t, b.t}, {a.x, b.x}, {a.y, b.y}, {a.theta, b.theta}, {a.gamma, b.gamma},
                            {a.u, b.u}, {a.omega, b.omega}, {a.V, b.V}, {a.min_dij, b.min_dij}, {a.di0, b.di0}})
            EXPECT_TRUE(same(x, y)) << x << " vs " << y;
    }
}

TEST(TrajectoryCsv, RejectsMalformed) {
    EXPECT_THROW(parse_trajectory_csv("a,b\n"), ParseError);
    EXPECT_THROW(parse_trajectory_csv(std::string(kTrajectoryHeader) + "\n0,1,2\n"), ParseError);
    EXPECT_THROW(parse_trajectory_csv(std::string(kTrajectoryHeader) + "\n0,1,x,0,0,0,0,0,0,0,0\n"), ParseError);
}

TEST(SvgPlot, TrajectoriesWithoutTimesHasNoMarkers) {
    const Scenario sc = load_scenario(kScenarios + "/two_followers.json");
    const RunOutcome o = run(sc);
    const std::string svg = plot_svg(o, sc, PlotMode::Trajectories);
    EXPECT_NE(svg.find("<svg"), std::string::npos);
    EXPECT_NE(svg.find("version=\"1.1\""), std::string::npos);
    EXPECT_EQ(svg.find("snapshot"), std::string::npos);
    EXPECT_NE(svg.find("agent-4"), std::string::npos);
    const std::string with = plot_svg(o, sc, PlotMode::Trajectories, {0.0, 5.0});
    EXPECT_NE(with.find("data-t=\"5.000\""), std::string::npos);
}

TEST(SvgPlot, Deterministic) {
    const Scenario sc = load_scenario(kScenarios + "/two_followers.json");
    for (PlotMode m : {PlotMode::Trajectories, PlotMode::DistanceToDest, PlotMode::InterAgentDistances})
        EXPECT_EQ(plot_svg(run(sc), sc, m, {1.0}), plot_svg(run(sc), sc, m, {1.0}));
}

TEST(SvgPlot, DistanceSeriesEndBelowConvergenceRadius) {
    const Scenario sc = load_scenario(kScenarios + "/canonical_12.json");
    const RunOutcome o = run(sc);
    ASSERT_EQ(o.status, RunStatus::Converged);
    const auto rows = trajectory_rows(o, 1);
    const auto ctx = plot_context(sc);
    for (const auto& [id, dest] : ctx.destinations) {
        double last = -1.0;
        for (const auto& r : rows)
            if (r.agent_id == id) last = distance({r.x, r.y}, dest);
        EXPECT_LE(last, sc.convergence_radius) << "agent " << id;
    }
    const std::string svg = plot_svg(rows, ctx, PlotMode::DistanceToDest);
    EXPECT_NE(svg.find("distance to destination"), std::string::npos);
    EXPECT_NE(svg.find("time [s]"), std::string::npos);
}

TEST(SvgPlot, InterAgentDistancesStayAboveSeparation) {
    const Scenario sc = load_scenario(kScenarios + "/canonical_12.json");
    const auto rows = trajectory_rows(run(sc), 1);
    for (const auto& r : rows) EXPECT_GE(r.min_dij, sc.world.min_separation);
    EXPECT_NE(plot_svg(rows, plot_context(sc), PlotMode::InterAgentDistances).find("stroke-dasharray"),
              std::string::npos);
}

TEST(WriteFileAtomic, ReplacesContent) {
    const fs::path dir = temp_dir("atomic");
    write_file_atomic(dir / "a.txt", "one");
    write_file_atomic(dir / "a.txt", "two");
    EXPECT_EQ(read_text_file((dir / "a.txt").string()), "two");
    EXPECT_FALSE(fs::exists(dir / "a.txt.tmp"));
}

TEST(Cli, ValidateGoodScenario) {
    EXPECT_EQ(cli({"validate", kScenarios + "/canonical_12.json"}).code, kExitOk);
}

TEST(Cli, ValidateBadScenario) {
    const fs::path dir = temp_dir("bad");
    write_file_atomic(dir / "bad.json", replace(kMinimal, R"("x": 0, "y": 4)", R"("x": 0, "y": 0)"));
    const auto r = cli({"validate", (dir / "bad.json").string()});
    EXPECT_EQ(r.code, kExitFailure);
    EXPECT_NE(r.err.find("initial states overlap"), std::string::npos);
    EXPECT_EQ(cli({"validate", (dir / "missing.json").string()}).code, kExitFailure);
}

TEST(Cli, RunConverged) {
    const fs::path dir = temp_dir("run");
    const auto r = cli({"run", kScenarios + "/canonical_12.json", "--out", (dir / "out").string(), "--stride", "5"});
    EXPECT_EQ(r.code, kExitOk);
    EXPECT_NE(r.out.find("\"converged\""), std::string::npos);
    for (const char* f : {"trajectory.csv", "summary.json", "trajectories.svg", "distance_to_dest.svg",
                          "inter_agent_distances.svg"})
        EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
}

TEST(Cli, RunTimeout) {
    const fs::path dir = temp_dir("timeout");
    write_file_atomic(dir / "short.json", replace(kMinimal, R"("t_max": 10)", R"("t_max": 0.5)"));
    EXPECT_EQ(cli({"run", (dir / "short.json").string()}).code, kExitTimeout);
}

TEST(Cli, RunForcedCollision) {
    const auto r = cli({"run", kScenarios + "/forced_collision.json"});
    EXPECT_EQ(r.code, kExitViolation);
    EXPECT_NE(r.out.find("collision"), std::string::npos);
}

TEST(Cli, GradCheckPasses) {
    const auto r = cli({"grad-check", kScenarios + "/canonical_12.json", "--samples", "1000", "--tol", "1e-5"});
    EXPECT_EQ(r.code, kExitOk) << r.out;
}

TEST(Cli, GradCheckFailsBelowAchievableTolerance) {
    EXPECT_EQ(cli({"grad-check", kScenarios + "/canonical_12.json", "--samples", "200", "--tol", "1e-14"}).code,
              kExitFailure);
}

TEST(Cli, PlotFromCsv) {
    const fs::path dir = temp_dir("plot");
    ASSERT_EQ(cli({"run", kScenarios + "/two_followers.json", "--out", dir.string()}).code, kExitOk);
    const std::string csv = (dir / "trajectory.csv").string();
    const auto a = cli({"plot", csv, "--mode", "trajectories", "--times", "0", "4", "8", "--scenario",
                        kScenarios + "/two_followers.json"});
    EXPECT_EQ(a.code, kExitOk);
    EXPECT_NE(a.out.find("snapshot"), std::string::npos);
    EXPECT_EQ(cli({"plot", csv, "--mode", "inter_agent_distances", "-o", (dir / "d.svg").string()}).code, kExitOk);
    EXPECT_TRUE(fs::exists(dir / "d.svg"));
    EXPECT_EQ(cli({"plot", csv, "--mode", "distance_to_dest", "--scenario", kScenarios + "/two_followers.json"}).code,
              kExitOk);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(cli({}).code, kExitUsage);
    EXPECT_EQ(cli({"fly"}).code, kExitUsage);
    EXPECT_EQ(cli({"run"}).code, kExitUsage);
    EXPECT_EQ(cli({"run", "x.json", "--stride", "0"}).code, kExitUsage);
    EXPECT_EQ(cli({"plot", "t.csv", "--mode", "pie"}).code, kExitUsage);
    EXPECT_EQ(cli({"plot", "t.csv", "--mode", "distance_to_dest"}).code, kExitUsage);
    EXPECT_EQ(cli({"grad-check", "x.json", "--samples", "abc"}).code, kExitUsage);
}

TEST(Cli, HelpExitsZero) {
    for (const char* sub : {"run", "validate", "grad-check", "plot"}) {
        const auto r = cli({sub, "--help"});
        EXPECT_EQ(r.code, kExitOk) << sub;
        EXPECT_NE(r.out.find("Usage"), std::string::npos) << sub;
    }
    EXPECT_EQ(cli({"--help"}).code, kExitOk);
}

TEST(Cli, BinaryExitCodes) {
    const std::string bin = FLEETSIM_PATH;
    auto status = [&](const std::string& args) {
        const int raw = std::system((bin + " " + args + " > /dev/null 2>&1").c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    };
    EXPECT_EQ(status("validate " + kScenarios + "/two_followers.json"), 0);
    EXPECT_EQ(status("run " + kScenarios + "/forced_collision.json"), 3);
    EXPECT_EQ(status("bogus"), 64);
}
