#pragma once

#include <optional>
#include <vector>

#include "fleet/core_model.hpp"
#include "fleet/geometry.hpp"

namespace fleet {

/// What every agent broadcasts at the start of a step.
///
/// `speed` is the rear-wheel speed the agent commanded last step (the
/// trajectory speed for misbehaving agents) and `heading` the direction it
/// is moving in.
struct AgentView {
    int id{0};
    AgentKind kind{AgentKind::Follower};
    AgentState state{};
    std::optional<Vec2> destination{};
    double speed{0.0};
    double heading{0.0};

    Vec2 position() const { return state.position(); }
    bool controllable() const { return kind != AgentKind::Misbehaving; }
};

struct WorldSnapshot {
    double t{0.0};
    std::vector<AgentView> agents;
};

}  // namespace fleet
