#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fleet/barrier.hpp"
#include "fleet/controllers.hpp"
#include "fleet/core_model.hpp"
#include "fleet/errors.hpp"
#include "fleet/misbehavior.hpp"
#include "fleet/snapshot.hpp"

namespace fleet {

struct AgentDescriptor {
    int id{0};
    AgentKind kind{AgentKind::Follower};
    AgentState initial_state{};                ///< ignored for misbehaving agents
    std::optional<Vec2> destination{};         ///< absent for misbehaving agents
    std::optional<MisbehaviorSpec> misbehavior{};
    std::optional<ControllerGains> gains{};    ///< per-agent override
};

struct Scenario {
    WorldConfig world{};
    VehicleParams vehicle{};
    ControllerGains gains{};
    std::vector<AgentDescriptor> agents;
    double dt{0.01};
    double t_max{25.0};
    std::uint64_t seed{0};
    double convergence_radius{0.1};
    double delta{1.0};
    SteeringLaw steering{SteeringLaw::StepInversion};
    ConflictHeading conflict_heading{ConflictHeading::Motion};

    BarrierParams barrier() const { return BarrierParams(delta, world); }

    const ControllerGains& gains_for(const AgentDescriptor& a) const {
        return a.gains ? *a.gains : gains;
    }

    /// Start position: the scripted position at t = 0 for misbehaving agents.
    Vec2 start_position(const AgentDescriptor& a) const {
        if (a.kind == AgentKind::Misbehaving && a.misbehavior)
            return misbehaving_position(*a.misbehavior, 0.0).position;
        return a.initial_state.position();
    }

    void validate() const;
};

namespace detail {

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = squared_norm(ab);
    if (len2 == 0.0) return distance(p, a);
    const double s = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    return distance(p, a + ab * s);
}

inline std::string pair_str(int a, int b) { return std::to_string(a) + "," + std::to_string(b); }

}  // namespace detail

inline void Scenario::validate() const {
    vehicle.validate();
    world.validate();
    if (world.body_radius != vehicle.body_radius)
        throw ValidationError("world.r_a", "world body radius must match vehicle.r_a");
    gains.validate();
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("sim.dt", "dt must be > 0");
    if (!(t_max > dt) || !std::isfinite(t_max))
        throw ValidationError("sim.t_max", "t_max must exceed dt");
    if (!(convergence_radius > 0.0))
        throw ValidationError("sim.convergence_radius", "must be > 0");
    (void)barrier();  // checks delta and the sigma knots

    if (agents.empty()) throw ValidationError("agents", "at least one agent required");
    std::set<int> ids;
    int leaders = 0;
    const double reff = world.effective_radius();
    for (const auto& a : agents) {
        const std::string who = "agent " + std::to_string(a.id);
        if (!ids.insert(a.id).second) throw ValidationError("agents.id", "duplicate id " + std::to_string(a.id));
        if (a.gains) a.gains->validate();
        if (a.kind == AgentKind::Leader) ++leaders;
        if (a.kind == AgentKind::Misbehaving) {
            if (!a.misbehavior) throw ValidationError("agents.misbehavior", who + " needs a trajectory");
            if (a.destination) throw ValidationError("agents.dest", who + " is misbehaving and has no destination");
            if (const auto* w = std::get_if<WaypointOscillator>(&*a.misbehavior)) {
                if (!(w->speed > 0.0)) throw ValidationError("agents.misbehavior", who + " oscillator speed must be > 0");
                if (!(distance(w->a, world.center) < reff && distance(w->b, world.center) < reff))
                    throw ValidationError("misbehavior inside disc", who + " oscillator leaves the connectivity disc");
            } else if (const auto* o = std::get_if<CircularOrbit>(&*a.misbehavior)) {
                if (!(o->radius > 0.0)) throw ValidationError("agents.misbehavior", who + " orbit radius must be > 0");
                if (!(distance(o->center, world.center) + o->radius < reff))
                    throw ValidationError("misbehavior inside disc", who + " orbit leaves the connectivity disc");
            } else if (const auto* r = std::get_if<RandomWalk>(&*a.misbehavior)) {
                if (!(r->speed > 0.0) || !(r->heading_diffusion >= 0.0))
                    throw ValidationError("agents.misbehavior", who + " random walk needs speed > 0, diffusion >= 0");
                if (!(r->region_radius > 0.0 && r->region_radius < reff))
                    throw ValidationError("misbehavior inside disc", who + " random walk region exceeds the disc");
            }
        } else {
            if (a.misbehavior) throw ValidationError("agents.misbehavior", who + " is controllable");
            if (!a.destination) throw ValidationError("agents.dest", who + " needs a destination");
            if (!a.initial_state.finite()) throw ValidationError("agents.start", who + " start must be finite");
            if (std::abs(a.initial_state.gamma) >= std::numbers::pi / 2.0 - kSteerGuard)
                throw ValidationError("agents.start.gamma", who + " steering angle at singularity");
            if (!(distance(*a.destination, world.center) < reff))
                throw ValidationError("destination inside disc", who + " destination not strictly inside R0 - r_a");
        }
    }
    if (leaders != 1) throw ValidationError("agents.kind", "exactly one leader required, found " + std::to_string(leaders));
    int expect = 1;
    for (int id : ids)
        if (id != expect++) throw ValidationError("agents.id", "ids must be contiguous from 1");

    const double ds = world.min_separation;
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const Vec2 pi = start_position(agents[i]);
        if (!(connectivity_constraint(pi, world) > 0.0))
            throw ValidationError("initial states inside disc", "agent " + std::to_string(agents[i].id) + " starts outside R0 - r_a");
        for (std::size_t j = i + 1; j < agents.size(); ++j) {
            if (!(distance(pi, start_position(agents[j])) > ds))
                throw ValidationError("initial states overlap", "agents " + detail::pair_str(agents[i].id, agents[j].id));
            if (agents[i].destination && agents[j].destination &&
                !(distance(*agents[i].destination, *agents[j].destination) > ds))
                throw ValidationError("destinations overlap", "agents " + detail::pair_str(agents[i].id, agents[j].id));
        }
    }

    // scripted paths must keep clear of every destination
    for (const auto& m : agents) {
        if (m.kind != AgentKind::Misbehaving) continue;
        for (const auto& a : agents) {
            if (!a.destination) continue;
            const Vec2 d = *a.destination;
            double clearance = std::numeric_limits<double>::infinity();
            if (const auto* w = std::get_if<WaypointOscillator>(&*m.misbehavior))
                clearance = detail::point_segment_distance(d, w->a, w->b);
            else if (const auto* o = std::get_if<CircularOrbit>(&*m.misbehavior))
                clearance = std::abs(distance(d, o->center) - o->radius);
            else if (const auto* r = std::get_if<RandomWalk>(&*m.misbehavior))
                clearance = distance(r->start, d) > r->keep_out_radius ? ds + 1.0 : 0.0;
            if (!(clearance > ds))
                throw ValidationError("misbehavior avoids destinations",
                                      "agent " + std::to_string(m.id) + " passes within d_s of the destination of agent " +
                                          std::to_string(a.id));
        }
    }
}

enum class ViolationKind { Collision, ConnectivityLoss, SteeringSingularity };

inline const char* to_string(ViolationKind k) {
    switch (k) {
        case ViolationKind::Collision: return "collision";
        case ViolationKind::ConnectivityLoss: return "connectivity_loss";
        case ViolationKind::SteeringSingularity: return "steering_singularity";
    }
    return "?";
}

struct Violation {
    ViolationKind kind{ViolationKind::Collision};
    double t{0.0};
    int agent{0};
    int other{0};  ///< second agent for collisions, 0 otherwise
    double value{0.0};  ///< offending distance
};

/// Collision between any two agents closer than d_s, and connectivity loss
/// of controllable agents beyond R0 - r_a. Both boundaries are inclusive.
inline std::vector<Violation> monitor_step(const WorldSnapshot& snap, const WorldConfig& world) {
    std::vector<Violation> out;
    constexpr double tol = 1e-9;
    const auto& ag = snap.agents;
    for (std::size_t i = 0; i < ag.size(); ++i) {
        if (ag[i].controllable()) {
            const double d0 = distance(ag[i].position(), world.center);
            if (d0 > world.effective_radius() + tol)
                out.push_back({ViolationKind::ConnectivityLoss, snap.t, ag[i].id, 0, d0});
        }
        for (std::size_t j = i + 1; j < ag.size(); ++j) {
            const double d = distance(ag[i].position(), ag[j].position());
            if (d < world.min_separation - tol)
                out.push_back({ViolationKind::Collision, snap.t, ag[i].id, ag[j].id, d});
        }
    }
    return out;
}

/// True iff every controllable agent is within `radius` of its destination.
inline bool convergence_check(const WorldSnapshot& snap, double radius) {
    return std::all_of(snap.agents.begin(), snap.agents.end(), [&](const AgentView& a) {
        return !a.controllable() || !a.destination ||
               distance(a.position(), *a.destination) <= radius;
    });
}

struct AgentSample {
    int id{0};
    AgentState state{};
    ControlCommand command{};
    double V{std::numeric_limits<double>::quiet_NaN()};
    double phi{0.0};
    double min_dij{std::numeric_limits<double>::infinity()};
    double di0{0.0};
};

struct StepRecord {
    double t{0.0};
    std::vector<AgentSample> agents;
    double min_pairwise_distance{std::numeric_limits<double>::infinity()};
    double max_center_distance{0.0};
};

enum class RunStatus { Converged, Timeout, SafetyViolation };

inline const char* to_string(RunStatus s) {
    switch (s) {
        case RunStatus::Converged: return "converged";
        case RunStatus::Timeout: return "timeout";
        case RunStatus::SafetyViolation: return "safety_violation";
    }
    return "?";
}

struct RunDiagnostics {
    long zero_gradient{0};
    long omega_degenerate{0};
    long matching_degenerate{0};
    long destination_overlap{0};  ///< barrier evaluations with a neighbor on the destination
};

struct RunOutcome {
    RunStatus status{RunStatus::Timeout};
    std::optional<double> t_converged{};
    double t_end{0.0};
    double dt{0.01};
    std::vector<Violation> violations;
    std::vector<StepRecord> trajectory;
    std::vector<int> agent_ids;
    std::vector<AgentKind> kinds;
    RunDiagnostics diagnostics{};

    /// Position of each agent in the last record, in agent order.
    std::vector<Vec2> final_positions() const {
        std::vector<Vec2> out;
        if (trajectory.empty()) return out;
        for (const auto& s : trajectory.back().agents) out.push_back(s.state.position());
        return out;
    }

    /// Distance-to-destination series of agent `index`.
    std::vector<double> distance_to_destination(std::size_t index, const Vec2& dest) const {
        std::vector<double> out;
        out.reserve(trajectory.size());
        for (const auto& r : trajectory) out.push_back(distance(r.agents.at(index).state.position(), dest));
        return out;
    }

    /// Longest stretch, in seconds, during which agent `index` moved less
    /// than `min_displacement` per `window` seconds while outside `radius`
    /// of `dest`.
    double longest_stall(std::size_t index, const Vec2& dest, double radius,
                         double window = 1.0, double min_displacement = 0.05) const {
        const auto w = static_cast<std::size_t>(std::llround(window / dt));
        if (w == 0 || trajectory.size() <= w) return 0.0;
        double best = 0.0, run = 0.0;
        for (std::size_t n = w; n < trajectory.size(); ++n) {
            const Vec2 p = trajectory[n].agents[index].state.position();
            const Vec2 q = trajectory[n - w].agents[index].state.position();
            const bool stalled = distance(p, q) < min_displacement && distance(p, dest) > radius;
            run = stalled ? run + dt : 0.0;
            best = std::max(best, run);
        }
        return best;
    }
};

/// Closed-loop fixed-step simulation.
///
/// Each step: broadcast snapshot at t, run the monitors on it, compute every
/// controllable agent's command against that snapshot, record, then
/// integrate. The run ends on a monitor violation, on convergence, or when
/// t reaches t_max.
inline RunOutcome run(const Scenario& sc) {
    sc.validate();
    const BarrierParams barrier = sc.barrier();
    const std::size_t n = sc.agents.size();

    RunOutcome out;
    out.dt = sc.dt;
    std::vector<AgentState> states(n);
    std::vector<HeadingFilter> filters(n, HeadingFilter(sc.dt));
    std::vector<double> last_speed(n, 0.0);
    std::vector<std::optional<MisbehaviorTrack>> tracks(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = sc.agents[i];
        out.agent_ids.push_back(a.id);
        out.kinds.push_back(a.kind);
        states[i] = a.initial_state;
        if (a.kind == AgentKind::Misbehaving) {
            MisbehaviorSpec spec = *a.misbehavior;
            if (auto* rw = std::get_if<RandomWalk>(&spec); rw && rw->seed == 0)
                rw->seed = sc.seed * 1000003u + static_cast<std::uint64_t>(a.id);
            tracks[i].emplace(std::move(spec));
        }
    }

    const auto max_steps = static_cast<long>(std::llround(sc.t_max / sc.dt));
    WorldSnapshot snap;
    snap.agents.resize(n);

    for (long step = 0;; ++step) {
        const double t = static_cast<double>(step) * sc.dt;
        snap.t = t;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& a = sc.agents[i];
            AgentView& v = snap.agents[i];
            v.id = a.id;
            v.kind = a.kind;
            v.destination = a.destination;
            if (tracks[i]) {
                const MisbehaviorSample m = tracks[i]->sample(t);
                v.state = {m.position.x, m.position.y, m.heading, 0.0};
                v.speed = norm(m.velocity);
                v.heading = m.heading;
            } else {
                v.state = states[i];
                v.speed = last_speed[i];
                v.heading = states[i].theta;
            }
        }

        StepRecord rec;
        rec.t = t;
        rec.agents.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            AgentSample& s = rec.agents[i];
            s.id = snap.agents[i].id;
            s.state = snap.agents[i].state;
            s.di0 = distance(s.state.position(), sc.world.center);
            if (!tracks[i]) rec.max_center_distance = std::max(rec.max_center_distance, s.di0);
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                s.min_dij = std::min(s.min_dij, distance(s.state.position(), snap.agents[j].position()));
            }
            rec.min_pairwise_distance = std::min(rec.min_pairwise_distance, s.min_dij);
            if (tracks[i]) {
                s.command = {snap.agents[i].speed, 0.0};
                s.phi = snap.agents[i].heading;
            }
        }

        auto violations = monitor_step(snap, sc.world);
        const bool converged = violations.empty() && convergence_check(snap, sc.convergence_radius);

        if (violations.empty()) {
            for (std::size_t i = 0; i < n; ++i) {
                if (tracks[i]) continue;
                const ControlContext ctx{sc.world, sc.vehicle, barrier, sc.gains_for(sc.agents[i]),
                                         sc.steering, sc.conflict_heading};
                try {
                    const ControlOutput c = control_agent(snap, i, ctx, filters[i]);
                    rec.agents[i].command = c.command;
                    rec.agents[i].V = c.barrier.value;
                    rec.agents[i].phi = c.phi;
                    out.diagnostics.zero_gradient += c.zero_gradient;
                    out.diagnostics.omega_degenerate += c.omega_degenerate;
                    out.diagnostics.matching_degenerate += c.speed.matching_degenerate;
                    out.diagnostics.destination_overlap += c.barrier.reference_fallbacks;
                } catch (const ConstraintViolated&) {
                    // inside d_s or outside the disc by less than the monitor tolerance
                    const auto& me = snap.agents[i];
                    for (const auto& o : snap.agents)
                        if (o.id != me.id && distance(o.position(), me.position()) <= sc.world.min_separation)
                            violations.push_back({ViolationKind::Collision, t, me.id, o.id,
                                                  distance(o.position(), me.position())});
                    if (violations.empty())
                        violations.push_back({ViolationKind::ConnectivityLoss, t, me.id, 0,
                                              distance(me.position(), sc.world.center)});
                    break;
                }
            }
        }
        out.trajectory.push_back(std::move(rec));
        out.t_end = t;

        if (!violations.empty()) {
            out.status = RunStatus::SafetyViolation;
            out.violations = std::move(violations);
            break;
        }
        if (converged) {
            out.status = RunStatus::Converged;
            out.t_converged = t;
            break;
        }
        if (step >= max_steps) {
            out.status = RunStatus::Timeout;
            break;
        }

        bool singular = false;
        for (std::size_t i = 0; i < n && !singular; ++i) {
            if (tracks[i]) continue;
            const ControlCommand& cmd = out.trajectory.back().agents[i].command;
            try {
                states[i] = bicycle_step(states[i], cmd, sc.vehicle, sc.dt);
            } catch (const SteeringSingularity&) {
                out.violations.push_back({ViolationKind::SteeringSingularity, t, sc.agents[i].id, 0, states[i].gamma});
                singular = true;
            }
            last_speed[i] = cmd.u;
        }
        if (singular) {
            out.status = RunStatus::SafetyViolation;
            break;
        }
    }
    return out;
}

}  // namespace fleet
