#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "fleet/barrier.hpp"

namespace fleet {

/// One agent configuration for the barrier gradient check.
struct GradientSample {
    Vec2 position{};
    Vec2 destination{};
    std::vector<BarrierNeighbor> neighbors;
};

/// Random feasible configurations inside the disc, with 0 to 3 neighbors
/// per sample. Every other neighbor is placed in the sigma blend zone
/// (R_z, R_s); the rest land in (d_s, R_z]. Configurations keep a margin
/// from the constraint boundaries, from the center of the disc (where the
/// connectivity barrier has a cone tip) and from the destination.
inline std::vector<GradientSample> random_gradient_configurations(const WorldConfig& world, std::size_t count,
                                                                  std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto uniform = [&](double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    };
    const double reach = world.effective_radius() - 0.5;
    auto in_disc = [&] {
        const double r = reach * std::sqrt(uniform(0.0, 1.0));
        const double a = uniform(-std::numbers::pi, std::numbers::pi);
        return world.center + Vec2{std::cos(a), std::sin(a)} * r;
    };
    const double ds = world.min_separation;

    std::vector<GradientSample> out;
    out.reserve(count);
    std::size_t blend_next = 0;
    while (out.size() < count) {
        GradientSample s;
        s.position = in_disc();
        s.destination = in_disc();
        if (distance(s.position, world.center) < 0.05 || distance(s.position, s.destination) < 0.2) continue;
        const int n = static_cast<int>(rng() % 4);
        bool ok = true;
        for (int k = 0; k < n && ok; ++k) {
            const bool blend = (blend_next++ % 2) == 0;
            const double d = blend ? uniform(world.avoidance_radius + 1e-3, world.sensing_radius - 1e-3)
                                   : uniform(ds + 0.05, world.avoidance_radius);
            const double a = uniform(-std::numbers::pi, std::numbers::pi);
            const Vec2 p = s.position + Vec2{std::cos(a), std::sin(a)} * d;
            if (std::abs(distance(p, s.destination) - ds) < 0.05) ok = false;
            s.neighbors.push_back({k + 2, p});
        }
        if (ok) out.push_back(std::move(s));
    }
    return out;
}

/// Central finite-difference gradient of the normalized barrier V.
inline Vec2 finite_difference_gradient(const GradientSample& s, const WorldConfig& world,
                                       const BarrierParams& params, double h = 1e-6) {
    auto V = [&](Vec2 p) { return evaluate_barrier(p, s.destination, s.neighbors, world, params).value; };
    return {(V(s.position + Vec2{h, 0.0}) - V(s.position - Vec2{h, 0.0})) / (2.0 * h),
            (V(s.position + Vec2{0.0, h}) - V(s.position - Vec2{0.0, h})) / (2.0 * h)};
}

struct GradientCheckReport {
    std::size_t samples{0};
    std::size_t blend_zone_neighbors{0};
    double max_relative_error{0.0};
    std::size_t worst_sample{0};
};

/// Compares the analytic gradient against central differences;
/// relative error is |g - g_fd| / |g_fd|.
inline GradientCheckReport gradient_check(const WorldConfig& world, const BarrierParams& params,
                                          std::size_t count, std::uint64_t seed, double h = 1e-6) {
    GradientCheckReport rep;
    const auto samples = random_gradient_configurations(world, count, seed);
    rep.samples = samples.size();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        for (const auto& nb : s.neighbors) {
            const double d = distance(nb.position, s.position);
            rep.blend_zone_neighbors += d > world.avoidance_radius && d < world.sensing_radius;
        }
        const Vec2 g = evaluate_barrier(s.position, s.destination, s.neighbors, world, params).gradient;
        const Vec2 fd = finite_difference_gradient(s, world, params, h);
        const double den = norm(fd);
        const double err = den > 0.0 ? norm(g - fd) / den : norm(g);
        if (err > rep.max_relative_error) {
            rep.max_relative_error = err;
            rep.worst_sample = i;
        }
    }
    return rep;
}

}  // namespace fleet
