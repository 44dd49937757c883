#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fleet/errors.hpp"
#include "fleet/simulator.hpp"

namespace fleet {

namespace scenario_detail {

using nlohmann::json;

inline std::string line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ParseError(path_.empty() ? "document" : path_, "expected an object");
    }

    bool has(const char* key) const { return j_.contains(key); }

    std::string at(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    const json& raw(const char* key) const {
        if (!j_.contains(key)) throw ParseError(at(key), "missing required key");
        return j_.at(key);
    }

    Reader section(const char* key) const { return Reader(raw(key), at(key)); }

    double number(const char* key) const {
        const json& v = raw(key);
        if (!v.is_number()) throw ParseError(at(key), "expected a number");
        return v.get<double>();
    }

    double number(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

    std::uint64_t integer(const char* key, std::uint64_t fallback) const {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
            throw ParseError(at(key), "expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    std::string string(const char* key) const {
        const json& v = raw(key);
        if (!v.is_string()) throw ParseError(at(key), "expected a string");
        return v.get<std::string>();
    }

    Vec2 vec2(const char* key) const {
        const json& v = raw(key);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw ParseError(at(key), "expected [x, y]");
        return {v[0].get<double>(), v[1].get<double>()};
    }

private:
    const json& j_;
    std::string path_;
};

inline MisbehaviorSpec read_misbehavior(const Reader& r) {
    const std::string type = r.string("type");
    if (type == "waypoint_oscillator")
        return WaypointOscillator{r.vec2("a"), r.vec2("b"), r.number("speed")};
    if (type == "circular_orbit")
        return CircularOrbit{r.vec2("center"), r.number("radius"), r.number("angular_speed"),
                             r.number("phase", 0.0)};
    if (type == "random_walk") {
        RandomWalk w;
        w.start = r.vec2("start");
        w.seed = r.integer("seed", 0);
        w.speed = r.number("speed");
        w.heading_diffusion = r.number("heading_diffusion");
        w.initial_heading = r.number("initial_heading", 0.0);
        return w;
    }
    throw ParseError(r.at("type"),
                     "unknown misbehavior '" + type +
                         "' (waypoint_oscillator, circular_orbit, random_walk)");
}

inline json write_misbehavior(const MisbehaviorSpec& spec) {
    return std::visit(
        [](const auto& s) -> json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, WaypointOscillator>) {
                return {{"type", "waypoint_oscillator"}, {"a", {s.a.x, s.a.y}},
                        {"b", {s.b.x, s.b.y}}, {"speed", s.speed}};
            } else if constexpr (std::is_same_v<T, CircularOrbit>) {
                return {{"type", "circular_orbit"}, {"center", {s.center.x, s.center.y}},
                        {"radius", s.radius}, {"angular_speed", s.angular_speed},
                        {"phase", s.phase}};
            } else {
                return {{"type", "random_walk"}, {"start", {s.start.x, s.start.y}},
                        {"seed", s.seed}, {"speed", s.speed},
                        {"heading_diffusion", s.heading_diffusion},
                        {"initial_heading", s.initial_heading}};
            }
        },
        spec);
}

inline ControllerGains read_gains(const Reader& r) { return {r.number("k"), r.number("lambda")}; }

}  // namespace scenario_detail

/// Parses and validates a scenario document (JSON; // and /* */ comments
/// allowed). Optional keys: world.d_s (2 r_a), sim.dt (0.01), sim.seed (0),
/// sim.convergence_radius (0.1), sim.delta (1), sim.steering,
/// sim.conflict_heading.
///
/// Throws ParseError for malformed text or missing/mistyped keys and
/// ValidationError for well-formed documents that break an invariant.
inline Scenario parse_scenario(const std::string& text) {
    using namespace scenario_detail;
    json doc;
    try {
        doc = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ParseError(line_col(text, e.byte == 0 ? 0 : e.byte - 1), e.what());
    }

    const Reader root(doc, "");
    Scenario sc;

    const Reader vehicle = root.section("vehicle");
    sc.vehicle.wheelbase = vehicle.number("B");
    sc.vehicle.body_radius = vehicle.number("r_a");

    const Reader world = root.section("world");
    sc.world.center = world.has("center") ? world.vec2("center") : Vec2{};
    sc.world.outer_radius = world.number("R0");
    sc.world.body_radius = sc.vehicle.body_radius;
    sc.world.min_separation = world.number("d_s", 2.0 * sc.vehicle.body_radius);
    sc.world.sensing_radius = world.number("R_s");
    sc.world.avoidance_radius = world.number("R_z");
    sc.world.safety_radius = world.number("R_c");

    sc.gains = read_gains(root.section("gains"));

    const Reader sim = root.section("sim");
    sc.dt = sim.number("dt", 0.01);
    sc.t_max = sim.number("t_max");
    sc.seed = sim.integer("seed", 0);
    sc.convergence_radius = sim.number("convergence_radius", 0.1);
    sc.delta = sim.number("delta", 1.0);
    if (sim.has("steering")) {
        const std::string s = sim.string("steering");
        if (s == "step_inversion") sc.steering = SteeringLaw::StepInversion;
        else if (s == "closed_form") sc.steering = SteeringLaw::ClosedForm;
        else throw ParseError(sim.at("steering"), "expected step_inversion or closed_form");
    }
    if (sim.has("conflict_heading")) {
        const std::string s = sim.string("conflict_heading");
        if (s == "motion") sc.conflict_heading = ConflictHeading::Motion;
        else if (s == "desired") sc.conflict_heading = ConflictHeading::Desired;
        else throw ParseError(sim.at("conflict_heading"), "expected motion or desired");
    }

    const json& agents = root.raw("agents");
    if (!agents.is_array()) throw ParseError("agents", "expected an array");
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const Reader a(agents[i], "agents[" + std::to_string(i) + "]");
        AgentDescriptor d;
        const json& idv = a.raw("id");
        if (!idv.is_number_integer()) throw ParseError(a.at("id"), "expected an integer");
        d.id = idv.get<int>();
        const auto kind = parse_agent_kind(a.string("kind"));
        if (!kind) throw ParseError(a.at("kind"), "expected leader, follower or misbehaving");
        d.kind = *kind;
        if (d.kind == AgentKind::Misbehaving) {
            if (a.has("start"))
                throw ParseError(a.at("start"), "misbehaving agents start on their trajectory");
            if (a.has("dest")) throw ParseError(a.at("dest"), "misbehaving agents have no destination");
            d.misbehavior = read_misbehavior(a.section("misbehavior"));
        } else {
            if (a.has("misbehavior"))
                throw ParseError(a.at("misbehavior"), "only misbehaving agents take a trajectory");
            const Reader st = a.section("start");
            d.initial_state = {st.number("x"), st.number("y"), wrap_angle(st.number("theta", 0.0)),
                               wrap_angle(st.number("gamma", 0.0))};
            const Reader ds = a.section("dest");
            d.destination = Vec2{ds.number("x"), ds.number("y")};
        }
        if (a.has("gains")) d.gains = read_gains(a.section("gains"));
        sc.agents.push_back(std::move(d));
    }

    // random walks live inside the disc and stay clear of every destination
    for (auto& d : sc.agents) {
        if (!d.misbehavior) continue;
        if (auto* rw = std::get_if<RandomWalk>(&*d.misbehavior)) {
            rw->region_center = sc.world.center;
            rw->region_radius = sc.world.effective_radius() - 0.01;
            rw->keep_out_radius = sc.world.sensing_radius;
            rw->keep_out.clear();
            for (const auto& o : sc.agents)
                if (o.destination) rw->keep_out.push_back(*o.destination);
        }
    }

    sc.validate();
    return sc;
}

/// Canonical text form of a scenario; parse_scenario(serialize_scenario(s))
/// reproduces s.
inline std::string serialize_scenario(const Scenario& sc) {
    using namespace scenario_detail;
    json doc;
    doc["world"] = {{"center", {sc.world.center.x, sc.world.center.y}},
                    {"R0", sc.world.outer_radius},
                    {"d_s", sc.world.min_separation},
                    {"R_s", sc.world.sensing_radius},
                    {"R_z", sc.world.avoidance_radius},
                    {"R_c", sc.world.safety_radius}};
    doc["vehicle"] = {{"B", sc.vehicle.wheelbase}, {"r_a", sc.vehicle.body_radius}};
    doc["gains"] = {{"k", sc.gains.k}, {"lambda", sc.gains.lambda}};
    doc["sim"] = {{"dt", sc.dt},
                  {"t_max", sc.t_max},
                  {"seed", sc.seed},
                  {"convergence_radius", sc.convergence_radius},
                  {"delta", sc.delta},
                  {"steering", sc.steering == SteeringLaw::StepInversion ? "step_inversion" : "closed_form"},
                  {"conflict_heading", sc.conflict_heading == ConflictHeading::Motion ? "motion" : "desired"}};
    json agents = json::array();
    for (const auto& a : sc.agents) {
        json j = {{"id", a.id}, {"kind", to_string(a.kind)}};
        if (a.misbehavior) {
            j["misbehavior"] = write_misbehavior(*a.misbehavior);
        } else {
            j["start"] = {{"x", a.initial_state.x}, {"y", a.initial_state.y},
                          {"theta", a.initial_state.theta}, {"gamma", a.initial_state.gamma}};
            if (a.destination) j["dest"] = {{"x", a.destination->x}, {"y", a.destination->y}};
        }
        if (a.gains) j["gains"] = {{"k", a.gains->k}, {"lambda", a.gains->lambda}};
        agents.push_back(std::move(j));
    }
    doc["agents"] = std::move(agents);
    return doc.dump(2) + "\n";
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Scenario load_scenario(const std::string& path) { return parse_scenario(read_text_file(path)); }

}  // namespace fleet
