#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fleet/core_model.hpp"
#include "fleet/errors.hpp"
#include "fleet/geometry.hpp"

namespace fleet {

/// C1 cubic that fades a neighbor's collision term from 1 at R_z to 0 at R_s.
///
/// Coefficients follow the monomial form A d^3 + B d^2 + C d + D with the
/// constant term D = +R_s^2 (3 R_z - R_s) / (R_z - R_s)^3, which is the sign
/// that satisfies sigma(R_z) = 1 and sigma(R_s) = 0. Evaluation goes through
/// the algebraically identical Hermite form (1 - s)^2 (1 + 2 s) to avoid the
/// cancellation of the monomial form near the knots.
class SigmaBlend {
public:
    static constexpr double kKnotTolerance = 1e-9;

    SigmaBlend() : SigmaBlend(1.6, 1.8) {}

    SigmaBlend(double avoidance_radius, double sensing_radius)
        : rz_(avoidance_radius), rs_(sensing_radius) {
        if (!(rz_ < rs_)) throw ValidationError("sigma", "requires R_z < R_s");
        const double k = std::pow(rz_ - rs_, 3);
        a_ = -2.0 / k;
        b_ = 3.0 * (rz_ + rs_) / k;
        c_ = -6.0 * rz_ * rs_ / k;
        d_ = rs_ * rs_ * (3.0 * rz_ - rs_) / k;
        verify_knots();
    }

    double a() const { return a_; }
    double b() const { return b_; }
    double c() const { return c_; }
    double d() const { return d_; }
    double avoidance_radius() const { return rz_; }
    double sensing_radius() const { return rs_; }

    /// The raw monomial cubic, without the piecewise clamp.
    double cubic(double dist) const { return ((a_ * dist + b_) * dist + c_) * dist + d_; }
    double cubic_derivative(double dist) const { return (3.0 * a_ * dist + 2.0 * b_) * dist + c_; }

    double value(double dist) const {
        if (dist <= rz_) return 1.0;
        if (dist >= rs_) return 0.0;
        const double s = (dist - rz_) / (rs_ - rz_);
        return (1.0 - s) * (1.0 - s) * (1.0 + 2.0 * s);
    }

    double derivative(double dist) const {
        if (dist <= rz_ || dist >= rs_) return 0.0;
        const double s = (dist - rz_) / (rs_ - rz_);
        return -6.0 * s * (1.0 - s) / (rs_ - rz_);
    }

private:
    void verify_knots() const {
        const double checks[] = {cubic(rz_) - 1.0, cubic(rs_), cubic_derivative(rz_),
                                 cubic_derivative(rs_)};
        // derivative residuals scale with 1/(R_s - R_z); normalize them
        const double scale[] = {1.0, 1.0, rs_ - rz_, rs_ - rz_};
        for (int i = 0; i < 4; ++i) {
            if (!(std::abs(checks[i] * scale[i]) <= kKnotTolerance))
                throw ValidationError("sigma", "cubic coefficients fail knot condition " +
                                                   std::to_string(i));
        }
    }

    double rz_, rs_;
    double a_{}, b_{}, c_{}, d_{};
};

struct BarrierParams {
    double delta{1.0};  ///< combination exponent, >= 1
    SigmaBlend sigma{};

    BarrierParams() = default;
    BarrierParams(double delta_, const WorldConfig& world)
        : delta(delta_), sigma(world.avoidance_radius, world.sensing_radius) {
        if (!(delta >= 1.0) || !std::isfinite(delta))
            throw ValidationError("sim.delta", "delta must be >= 1 and finite");
    }
};

/// c_i0 = R - |r_i - r_0|; negative outside the disc.
inline double connectivity_constraint(const Vec2& r, const WorldConfig& world) {
    return world.effective_radius() - distance(r, world.center);
}

/// c_ij = |r_i - r_j|^2 - d_s^2.
inline double collision_constraint(const Vec2& ri, const Vec2& rj, const WorldConfig& world) {
    return squared_norm(ri - rj) - world.min_separation * world.min_separation;
}

inline double log_barrier(double c) {
    if (!(c > 0.0)) throw ConstraintViolated("log_barrier: constraint value " + std::to_string(c));
    return -std::log(c);
}

namespace detail {

// Gradient of b_i0 = -ln(R - |r - r0|). The cone tip at r0 has no gradient;
// the symmetric subgradient 0 is used there.
inline Vec2 connectivity_barrier_gradient(const Vec2& r, const WorldConfig& world) {
    const Vec2 off = r - world.center;
    const double d = norm(off);
    if (d < 1e-12) return {};
    const double c = world.effective_radius() - d;
    if (!(c > 0.0)) throw ConstraintViolated("connectivity barrier gradient outside disc");
    return off * (1.0 / (d * c));
}

}  // namespace detail

/// r_i0 = b(r) - b(r_d) - grad b(r_d) . (r - r_d). Zero at the destination.
inline double recentered_connectivity(const Vec2& r, const Vec2& dest, const WorldConfig& world) {
    const double b = log_barrier(connectivity_constraint(r, world));
    const double bd = log_barrier(connectivity_constraint(dest, world));
    return b - bd - dot(detail::connectivity_barrier_gradient(dest, world), r - dest);
}

/// q_ij = b_ij(r_i, r_j) - b_ij(r_d, r_j). No gradient recentering term.
inline double recentered_collision(const Vec2& ri, const Vec2& rj, const Vec2& dest,
                                   const WorldConfig& world) {
    return log_barrier(collision_constraint(ri, rj, world)) -
           log_barrier(collision_constraint(dest, rj, world));
}

inline double sigma_blend(double dist, const WorldConfig& world) {
    return SigmaBlend(world.avoidance_radius, world.sensing_radius).value(dist);
}

/// v = (sum V_n^delta)^(1/delta), returned normalized as v / (1 + v).
inline double combine_and_normalize(std::span<const double> components, double delta) {
    double acc = 0.0;
    for (double c : components) acc += delta == 1.0 ? c : std::pow(c, delta);
    const double v = delta == 1.0 ? acc : std::pow(acc, 1.0 / delta);
    if (std::isinf(v)) return 1.0;
    return v / (1.0 + v);
}

/// A neighbor that contributes a collision term to an agent's barrier.
struct BarrierNeighbor {
    int id{0};
    Vec2 position{};
};

struct BarrierComponent {
    int constraint_id{0};  ///< 0 for connectivity, otherwise the neighbor id
    double value{0.0};     ///< V_i0 or V_ij
};

struct BarrierEvaluation {
    double value{0.0};  ///< normalized V in [0, 1)
    Vec2 gradient{};    ///< dV/dx, dV/dy
    double raw{0.0};    ///< un-normalized v
    int reference_fallbacks{0};  ///< neighbors sitting within d_s of the destination
    std::vector<BarrierComponent> components;
};

/// Value and analytic gradient of the normalized barrier V for an agent at
/// `position` heading for `destination`, given the neighbors it must avoid.
///
/// Neighbors at or beyond R_s contribute nothing and are skipped. If a
/// neighbor sits within d_s of the destination the destination-side barrier
/// b_ij(r_d, r_j) does not exist; the reference then falls back to the
/// barrier value at the sensing boundary, which keeps the term repulsive.
inline BarrierEvaluation evaluate_barrier(const Vec2& position, const Vec2& destination,
                                          std::span<const BarrierNeighbor> neighbors,
                                          const WorldConfig& world, const BarrierParams& params) {
    BarrierEvaluation out;
    const double delta = params.delta;
    const double ds2 = world.min_separation * world.min_separation;

    // terms: value V_n and gradient dV_n/dr
    struct Term {
        double value;
        Vec2 grad;
    };
    std::vector<Term> terms;
    terms.reserve(neighbors.size() + 1);

    {
        const double r0 = recentered_connectivity(position, destination, world);
        const Vec2 dr0 = detail::connectivity_barrier_gradient(position, world) -
                         detail::connectivity_barrier_gradient(destination, world);
        terms.push_back({r0 * r0, dr0 * (2.0 * r0)});
        out.components.push_back({0, r0 * r0});
    }

    for (const auto& nb : neighbors) {
        const Vec2 off = position - nb.position;
        const double dist = norm(off);
        if (dist >= params.sigma.sensing_radius()) continue;
        const double c = squared_norm(off) - ds2;
        const double b = log_barrier(c);
        const double c_dest = collision_constraint(destination, nb.position, world);
        double c_ref = c_dest;
        if (!(c_dest > 0.0)) {
            c_ref = params.sigma.sensing_radius() * params.sigma.sensing_radius() - ds2;
            ++out.reference_fallbacks;
        }
        const double q = b + std::log(c_ref);
        const double sigma = params.sigma.value(dist);
        const double dsigma = params.sigma.derivative(dist);
        // grad b = -2 (r_i - r_j) / c; grad sigma = sigma'(d) (r_i - r_j) / d
        Vec2 grad = off * (sigma * 2.0 * q * (-2.0 / c));
        if (dsigma != 0.0) grad += off * (dsigma * q * q / dist);
        terms.push_back({sigma * q * q, grad});
        out.components.push_back({nb.id, sigma * q * q});
    }

    double acc = 0.0;
    for (const auto& t : terms) acc += delta == 1.0 ? t.value : std::pow(t.value, delta);
    const double v = delta == 1.0 ? acc : std::pow(acc, 1.0 / delta);
    out.raw = v;
    if (!(v > 0.0)) return out;

    // dv = v^(1-delta) sum V_n^(delta-1) dV_n
    Vec2 dv{};
    for (const auto& t : terms) {
        const double w = delta == 1.0 ? 1.0 : std::pow(t.value, delta - 1.0);
        dv += t.grad * w;
    }
    if (delta != 1.0) dv *= std::pow(v, 1.0 - delta);

    out.value = std::isinf(v) ? 1.0 : v / (1.0 + v);
    out.gradient = dv * (1.0 / ((1.0 + v) * (1.0 + v)));
    return out;
}

}  // namespace fleet
