#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "fleet/barrier.hpp"
#include "fleet/core_model.hpp"
#include "fleet/errors.hpp"
#include "fleet/geometry.hpp"
#include "fleet/snapshot.hpp"

namespace fleet {

struct ControllerGains {
    double k{1.0};       ///< speed gain
    double lambda{2.3};  ///< heading gain

    void validate() const {
        if (!(k > 0.0) || !std::isfinite(k)) throw ValidationError("gains.k", "k must be > 0");
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw ValidationError("gains.lambda", "lambda must be > 0");
    }

    /// Upper clamp for commanded speed.
    double max_speed() const { return 2.0 * k; }

    friend bool operator==(const ControllerGains&, const ControllerGains&) = default;
};

/// How the front-wheel rate is derived from the unicycle heading law
/// w~ = -lambda (theta - phi) + phi_dot.
enum class SteeringLaw {
    /// omega = (atan(B w~ / u) - gamma) / dt: puts gamma where the bicycle
    /// turns at exactly w~ after one step.
    StepInversion,
    /// The closed-form rational expression in phi_dot, phi_ddot and u_dot.
    ClosedForm,
};

/// Largest front-wheel angle the step-inversion law will target.
inline constexpr double kMaxSteerTarget = std::numbers::pi / 2.0 - 0.1;

/// Backward-difference memory for phi, phi_dot, phi_ddot and u_dot.
///
/// phi is unwrapped internally so a crossing of +-pi does not register as a
/// 2 pi jump. First derivatives exist from the second sample on, the second
/// derivative from the third; they read as zero before that.
class HeadingFilter {
public:
    explicit HeadingFilter(double dt = 0.01) : dt_(dt) {
        if (!(dt > 0.0)) throw Error("HeadingFilter: dt must be > 0");
    }

    void push(double phi, double u) {
        const double unwrapped = samples_ == 0 ? phi : hist_[0] + angle_diff(phi, hist_[0]);
        hist_[2] = hist_[1];
        hist_[1] = hist_[0];
        hist_[0] = unwrapped;
        const double u_last = u_prev_;
        u_prev_ = u;
        ++samples_;
        phi_ = wrap_angle(unwrapped);
        phi_dot_ = samples_ >= 2 ? (hist_[0] - hist_[1]) / dt_ : 0.0;
        phi_ddot_ = samples_ >= 3 ? (hist_[0] - 2.0 * hist_[1] + hist_[2]) / (dt_ * dt_) : 0.0;
        u_dot_ = samples_ >= 2 ? (u - u_last) / dt_ : 0.0;
    }

    /// Seeds the filter with explicit values, bypassing the difference memory.
    static HeadingFilter with_values(double dt, double phi, double phi_dot, double phi_ddot,
                                     double u, double u_dot) {
        HeadingFilter f(dt);
        f.samples_ = 3;
        f.hist_[0] = f.hist_[1] = f.hist_[2] = phi;
        f.phi_ = wrap_angle(phi);
        f.phi_dot_ = phi_dot;
        f.phi_ddot_ = phi_ddot;
        f.u_prev_ = u;
        f.u_dot_ = u_dot;
        return f;
    }

    bool empty() const { return samples_ == 0; }
    int samples() const { return samples_; }
    double dt() const { return dt_; }
    double phi() const { return phi_; }
    double phi_dot() const { return phi_dot_; }
    double phi_ddot() const { return phi_ddot_; }
    double u_prev() const { return u_prev_; }
    double u_dot() const { return u_dot_; }

private:
    double dt_;
    int samples_{0};
    double hist_[3]{};
    double phi_{0.0};
    double phi_dot_{0.0};
    double phi_ddot_{0.0};
    double u_prev_{0.0};
    double u_dot_{0.0};
};

/// Orientation of -grad V. Empty when the gradient vanishes; the caller
/// then keeps its previous heading.
inline std::optional<double> desired_heading(const Vec2& grad) {
    if (norm(grad) < 1e-12) return std::nullopt;
    return std::atan2(-grad.y, -grad.x);
}

/// u = k tanh(|r - r_d|)
inline double leader_speed(const Vec2& r, const Vec2& dest, const ControllerGains& gains) {
    return gains.k * std::tanh(distance(r, dest));
}

struct OmegaResult {
    double omega{0.0};
    bool degenerate{false};
};

/// Closed-form front-wheel rate:
///
///   omega = [(B l phi' - l u tan(gamma) + B phi'') u + (phi' - l e) u']
///           / [u^2 + B (phi' - l e)^2],   e = wrap(theta - phi)
///
/// A denominator below 1e-9 is reported as degenerate with omega = 0.
inline OmegaResult bicycle_omega(const AgentState& s, const HeadingFilter& f, double u,
                                 const ControllerGains& gains, const VehicleParams& params) {
    const double B = params.wheelbase;
    const double l = gains.lambda;
    const double w = f.phi_dot() - l * angle_diff(s.theta, f.phi());
    const double den = u * u + B * w * w;
    if (den < 1e-9) return {0.0, true};
    const double num = (B * l * f.phi_dot() - l * u * std::tan(s.gamma) + B * f.phi_ddot()) * u +
                       w * f.u_dot();
    return {num / den, false};
}

/// Step-inversion front-wheel rate: steers gamma to atan(B w~ / u) in one
/// step, with the target clamped to +-kMaxSteerTarget.
inline OmegaResult step_inversion_omega(const AgentState& s, const HeadingFilter& f, double u,
                                        const ControllerGains& gains,
                                        const VehicleParams& params) {
    const double w = f.phi_dot() - gains.lambda * angle_diff(s.theta, f.phi());
    double target = std::atan2(params.wheelbase * w, u);
    const bool saturated = std::abs(target) > kMaxSteerTarget;
    target = std::clamp(target, -kMaxSteerTarget, kMaxSteerTarget);
    return {(target - s.gamma) / f.dt(), saturated};
}

/// A sensed agent as seen by the speed law.
struct NeighborMotion {
    int id{0};
    Vec2 position{};
    double speed{0.0};
    double heading{0.0};
};

/// Neighbors inside the safety region that the agent's motion along
/// `heading` points toward, i.e. J = (r_self - r_i) . eta(heading) < 0.
inline std::vector<int> conflict_set(const Vec2& self, std::span<const NeighborMotion> neighbors,
                                     double heading, const WorldConfig& world) {
    std::vector<int> out;
    const Vec2 eta = unit_from_angle(heading);
    for (const auto& nb : neighbors) {
        const Vec2 r = self - nb.position;
        if (norm(r) > world.safety_radius) continue;
        if (dot(r, eta) < 0.0) out.push_back(nb.id);
    }
    return out;
}

struct SpeedResult {
    double u{0.0};
    double u_goal{0.0};  ///< goal-seeking speed k tanh(|r - r_d|)
    std::vector<int> conflicts;
    int matching_degenerate{0};
};

/// Speed law with conflict resolution.
///
/// Without conflicts the agent drives at u_goal. For each conflicting
/// neighbor i the candidate speed blends u_goal with the matching speed
/// u_i (r.eta_i)/(r.eta_j) by distance across [d_s, R_c]; the smallest
/// candidate wins. The result is clamped to [0, 2k].
inline SpeedResult follower_speed(const Vec2& self, const Vec2& dest,
                                  std::span<const NeighborMotion> neighbors, double heading,
                                  const ControllerGains& gains, const WorldConfig& world) {
    SpeedResult res;
    res.u_goal = leader_speed(self, dest, gains);
    res.conflicts = conflict_set(self, neighbors, heading, world);
    const double ds = world.min_separation;
    const double rc = world.safety_radius;
    const Vec2 eta_j = unit_from_angle(heading);

    double u = res.u_goal;
    for (const auto& nb : neighbors) {
        if (std::find(res.conflicts.begin(), res.conflicts.end(), nb.id) == res.conflicts.end())
            continue;
        const Vec2 r = self - nb.position;
        const double d = std::clamp(norm(r), ds, rc);
        const double den = dot(r, eta_j);
        double u_match = 0.0;
        if (std::abs(den) < 1e-9) {
            ++res.matching_degenerate;
        } else {
            u_match = nb.speed * dot(r, unit_from_angle(nb.heading)) / den;
        }
        const double candidate = res.u_goal * (d - ds) / (rc - ds) + u_match * (rc - d) / (rc - ds);
        u = std::min(u, candidate);
    }
    res.u = std::clamp(u, 0.0, gains.max_speed());
    return res;
}

/// Everything a controller produced for one agent in one step.
struct ControlOutput {
    ControlCommand command{};
    double phi{0.0};
    BarrierEvaluation barrier{};
    SpeedResult speed{};
    bool zero_gradient{false};
    bool omega_degenerate{false};
};

/// Which direction the conflict test and the matching ratio use for the
/// agent itself.
enum class ConflictHeading {
    Desired,  ///< phi, the orientation of -grad V
    Motion,   ///< theta, the frame heading the vehicle is moving along
};

struct ControlContext {
    const WorldConfig& world;
    const VehicleParams& vehicle;
    const BarrierParams& barrier;
    ControllerGains gains{};
    SteeringLaw steering{SteeringLaw::StepInversion};
    ConflictHeading conflict_heading{ConflictHeading::Motion};
};

/// Shared pipeline: barrier over `avoid`, heading from its gradient, speed
/// from the conflict law over `avoid`, then the steering rate. Updates the
/// filter with this step's phi and u.
inline ControlOutput distributed_control(const AgentState& self, const Vec2& dest,
                                         std::span<const NeighborMotion> avoid,
                                         const ControlContext& ctx, HeadingFilter& filter) {
    ControlOutput out;
    std::vector<BarrierNeighbor> bn;
    bn.reserve(avoid.size());
    for (const auto& nb : avoid) bn.push_back({nb.id, nb.position});
    out.barrier = evaluate_barrier(self.position(), dest, bn, ctx.world, ctx.barrier);

    const auto phi = desired_heading(out.barrier.gradient);
    out.zero_gradient = !phi.has_value();
    out.phi = phi ? *phi : (filter.empty() ? self.theta : filter.phi());

    const double heading =
        ctx.conflict_heading == ConflictHeading::Motion ? self.theta : out.phi;
    out.speed = follower_speed(self.position(), dest, avoid, heading, ctx.gains, ctx.world);
    if (out.zero_gradient) out.speed.u = 0.0;

    filter.push(out.phi, out.speed.u);
    const OmegaResult om = ctx.steering == SteeringLaw::StepInversion
                               ? step_inversion_omega(self, filter, out.speed.u, ctx.gains, ctx.vehicle)
                               : bicycle_omega(self, filter, out.speed.u, ctx.gains, ctx.vehicle);
    out.omega_degenerate = om.degenerate;
    out.command = {out.speed.u, om.omega};
    return out;
}

/// Leader without misbehaving agents around: connectivity term only.
inline ControlOutput leader_control(const AgentState& self, const Vec2& dest,
                                    const ControlContext& ctx, HeadingFilter& filter) {
    return distributed_control(self, dest, {}, ctx, filter);
}

/// Leader that treats sensed misbehaving agents as obstacles.
inline ControlOutput leader_control_with_misbehaving(const AgentState& self, const Vec2& dest,
                                                     std::span<const NeighborMotion> misbehaving,
                                                     const ControlContext& ctx,
                                                     HeadingFilter& filter) {
    return distributed_control(self, dest, misbehaving, ctx, filter);
}

/// Follower: avoids every sensed agent.
inline ControlOutput follower_control(const AgentState& self, const Vec2& dest,
                                      std::span<const NeighborMotion> sensed,
                                      const ControlContext& ctx, HeadingFilter& filter) {
    return distributed_control(self, dest, sensed, ctx, filter);
}

/// Agents of `snapshot` that agent `index` must avoid: everything within R_s
/// for followers, only misbehaving agents within R_s for the leader.
inline std::vector<NeighborMotion> sensed_neighbors(const WorldSnapshot& snapshot,
                                                    std::size_t index, const WorldConfig& world) {
    const AgentView& self = snapshot.agents.at(index);
    std::vector<NeighborMotion> out;
    for (std::size_t k = 0; k < snapshot.agents.size(); ++k) {
        if (k == index) continue;
        const AgentView& other = snapshot.agents[k];
        if (self.kind == AgentKind::Leader && other.kind != AgentKind::Misbehaving) continue;
        if (distance(self.position(), other.position()) > world.sensing_radius) continue;
        out.push_back({other.id, other.position(), other.speed, other.heading});
    }
    return out;
}

/// Computes the command for controllable agent `index` of the snapshot.
inline ControlOutput control_agent(const WorldSnapshot& snapshot, std::size_t index,
                                   const ControlContext& ctx, HeadingFilter& filter) {
    const AgentView& self = snapshot.agents.at(index);
    if (!self.controllable() || !self.destination)
        throw Error("control_agent: agent " + std::to_string(self.id) + " is not controllable");
    const auto nbs = sensed_neighbors(snapshot, index, ctx.world);
    if (self.kind == AgentKind::Leader)
        return leader_control_with_misbehaving(self.state, *self.destination, nbs, ctx, filter);
    return follower_control(self.state, *self.destination, nbs, ctx, filter);
}

}  // namespace fleet
