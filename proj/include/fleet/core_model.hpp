#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "fleet/errors.hpp"
#include "fleet/geometry.hpp"

namespace fleet {

/// Guard band around |gamma| = pi/2 where tan(gamma) blows up.
inline constexpr double kSteerGuard = 0.01;

/// Configuration of one bicycle-model vehicle. (x, y) is the rear-wheel
/// contact point, theta the frame heading and gamma the front-wheel angle
/// relative to the frame. Angles are kept in (-pi, pi].
struct AgentState {
    double x{0.0};
    double y{0.0};
    double theta{0.0};
    double gamma{0.0};

    Vec2 position() const { return {x, y}; }

    bool finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(theta) &&
               std::isfinite(gamma);
    }

    friend bool operator==(const AgentState&, const AgentState&) = default;
};

/// Rear-wheel speed u and front-wheel steering rate omega.
struct ControlCommand {
    double u{0.0};
    double omega{0.0};

    friend bool operator==(const ControlCommand&, const ControlCommand&) = default;
};

struct VehicleParams {
    double wheelbase{0.25};    ///< front-to-rear wheel distance B
    double body_radius{0.75};  ///< r_a

    void validate() const {
        if (!(wheelbase > 0.0) || !std::isfinite(wheelbase))
            throw ValidationError("vehicle.B", "wheelbase must be > 0");
        if (!(body_radius > 0.0) || !std::isfinite(body_radius))
            throw ValidationError("vehicle.r_a", "body radius must be > 0");
    }
};

/// Shared workspace geometry and the per-agent interaction radii.
///
/// The connectivity disc is centered at `center` with radius `outer_radius`
/// (R0); agent reference points must stay within `effective_radius()` =
/// R0 - r_a. `sensing_radius`, `avoidance_radius` and `safety_radius` are
/// R_s, R_z and R_c. Only d_s < R_z < R_s is required; R_c may sit on either
/// side of R_z.
struct WorldConfig {
    Vec2 center{};
    double outer_radius{12.0};
    double body_radius{0.75};
    double min_separation{1.5};
    double sensing_radius{1.8};
    double avoidance_radius{1.6};
    double safety_radius{1.6875};

    double effective_radius() const { return outer_radius - body_radius; }

    void validate() const {
        if (!is_finite(center)) throw ValidationError("world.center", "must be finite");
        if (!(body_radius > 0.0)) throw ValidationError("vehicle.r_a", "body radius must be > 0");
        if (!(effective_radius() > 0.0))
            throw ValidationError("world.R0", "R0 - r_a must be > 0");
        if (!(min_separation > 0.0))
            throw ValidationError("world.d_s", "minimum separation must be > 0");
        if (!(min_separation < avoidance_radius))
            throw ValidationError("world.R_z", "requires d_s < R_z");
        if (!(avoidance_radius < sensing_radius))
            throw ValidationError("world.R_s", "requires R_z < R_s");
        if (!(safety_radius > min_separation) || !std::isfinite(safety_radius))
            throw ValidationError("world.R_c", "requires R_c > d_s");
    }
};

enum class AgentKind { Leader, Follower, Misbehaving };

inline const char* to_string(AgentKind kind) {
    switch (kind) {
        case AgentKind::Leader: return "leader";
        case AgentKind::Follower: return "follower";
        case AgentKind::Misbehaving: return "misbehaving";
    }
    return "?";
}

inline std::optional<AgentKind> parse_agent_kind(const std::string& s) {
    if (s == "leader") return AgentKind::Leader;
    if (s == "follower") return AgentKind::Follower;
    if (s == "misbehaving") return AgentKind::Misbehaving;
    return std::nullopt;
}

/// Advances the kinematic bicycle model one Euler step.
///
/// Position and steering angle take a plain forward-Euler step. The heading
/// is advanced with the updated steering angle gamma(t + dt), so a steering
/// command acts on the frame within the same step. Throws SteeringSingularity
/// if |gamma| is within kSteerGuard of pi/2 before or after the step.
inline AgentState bicycle_step(const AgentState& s, const ControlCommand& cmd,
                               const VehicleParams& params, double dt) {
    constexpr double limit = std::numbers::pi / 2.0 - kSteerGuard;
    if (!(dt > 0.0)) throw Error("bicycle_step: dt must be > 0");
    if (std::abs(s.gamma) >= limit)
        throw SteeringSingularity("bicycle_step: |gamma| at singularity before step");

    AgentState next;
    next.x = s.x + cmd.u * std::cos(s.theta) * dt;
    next.y = s.y + cmd.u * std::sin(s.theta) * dt;
    next.gamma = wrap_angle(s.gamma + cmd.omega * dt);
    if (std::abs(next.gamma) >= limit)
        throw SteeringSingularity("bicycle_step: |gamma| at singularity after step");
    next.theta = wrap_angle(s.theta + cmd.u / params.wheelbase * std::tan(next.gamma) * dt);
    return next;
}

}  // namespace fleet
