#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <random>
#include <type_traits>
#include <variant>
#include <vector>

#include "fleet/errors.hpp"
#include "fleet/geometry.hpp"

namespace fleet {

/// Constant-speed shuttle between two points, starting at `a`.
struct WaypointOscillator {
    Vec2 a{};
    Vec2 b{};
    double speed{1.0};

    friend bool operator==(const WaypointOscillator&, const WaypointOscillator&) = default;
};

/// center + radius (cos, sin)(angular_speed t + phase)
struct CircularOrbit {
    Vec2 center{};
    double radius{1.0};
    double angular_speed{1.0};
    double phase{0.0};

    friend bool operator==(const CircularOrbit&, const CircularOrbit&) = default;
};

/// Seeded constant-speed walk whose heading diffuses (Brownian, rate
/// `heading_diffusion` rad/sqrt(s)). The walk reflects off the boundary of
/// the region disc and off keep-out discs.
struct RandomWalk {
    Vec2 start{};
    std::uint64_t seed{0};
    double speed{1.0};
    double heading_diffusion{1.0};
    double initial_heading{0.0};

    // filled in from the scenario
    Vec2 region_center{};
    double region_radius{0.0};
    std::vector<Vec2> keep_out{};
    double keep_out_radius{0.0};

    friend bool operator==(const RandomWalk&, const RandomWalk&) = default;
};

using MisbehaviorSpec = std::variant<WaypointOscillator, CircularOrbit, RandomWalk>;

struct MisbehaviorSample {
    Vec2 position{};
    Vec2 velocity{};
    double heading{0.0};
};

inline MisbehaviorSample sample_oscillator(const WaypointOscillator& w, double t) {
    const Vec2 seg = w.b - w.a;
    const double len = norm(seg);
    if (len == 0.0 || w.speed == 0.0) return {w.a, {}, 0.0};
    const Vec2 dir = seg * (1.0 / len);
    const double tau = std::fmod(t * w.speed, 2.0 * len);
    MisbehaviorSample s;
    if (tau < len) {
        s.position = w.a + dir * tau;
        s.velocity = dir * w.speed;
    } else {
        s.position = w.b - dir * (tau - len);
        s.velocity = dir * -w.speed;
    }
    s.heading = wrap_angle(std::atan2(s.velocity.y, s.velocity.x));
    return s;
}

inline MisbehaviorSample sample_orbit(const CircularOrbit& o, double t) {
    const double a = o.angular_speed * t + o.phase;
    MisbehaviorSample s;
    s.position = o.center + Vec2{std::cos(a), std::sin(a)} * o.radius;
    s.velocity = Vec2{-std::sin(a), std::cos(a)} * (o.radius * o.angular_speed);
    s.heading = wrap_angle(std::atan2(s.velocity.y, s.velocity.x));
    return s;
}

/// Lazily integrated random walk on a fixed internal grid; queries between
/// grid points interpolate linearly. Reproducible across platforms: the
/// normal deviates come from the raw mt19937_64 stream via Box-Muller.
class RandomWalkTrack {
public:
    static constexpr double kStep = 0.01;

    explicit RandomWalkTrack(RandomWalk spec) : spec_(std::move(spec)), rng_(spec_.seed) {
        if (!(spec_.region_radius > 0.0))
            throw ValidationError("misbehavior.random_walk", "region radius must be > 0");
        points_.push_back(spec_.start);
        headings_.push_back(spec_.initial_heading);
    }

    MisbehaviorSample sample(double t) {
        if (t < 0.0) t = 0.0;
        const auto idx = static_cast<std::size_t>(std::floor(t / kStep));
        extend_to(idx + 1);
        const double frac = t / kStep - static_cast<double>(idx);
        const Vec2 p0 = points_[idx];
        const Vec2 p1 = points_[idx + 1];
        MisbehaviorSample s;
        s.position = p0 + (p1 - p0) * frac;
        s.heading = headings_[idx + 1];
        s.velocity = unit_from_angle(s.heading) * spec_.speed;
        return s;
    }

private:
    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // mirrors `heading` about the disc normal through `pos`
    static double reflect(double heading, const Vec2& pos, const Vec2& center) {
        Vec2 n = pos - center;
        const double len = norm(n);
        if (len == 0.0) return wrap_angle(heading + std::numbers::pi);
        n *= 1.0 / len;
        Vec2 v = unit_from_angle(heading);
        v -= n * (2.0 * dot(v, n));
        return wrap_angle(std::atan2(v.y, v.x));
    }

    bool blocked(const Vec2& p) const {
        if (distance(p, spec_.region_center) > spec_.region_radius) return true;
        for (const auto& k : spec_.keep_out)
            if (distance(p, k) < spec_.keep_out_radius) return true;
        return false;
    }

    void extend_to(std::size_t n) {
        while (points_.size() <= n) {
            const Vec2 p = points_.back();
            double h = headings_.back() + spec_.heading_diffusion * std::sqrt(kStep) * normal();
            Vec2 next = p + unit_from_angle(h) * (spec_.speed * kStep);
            if (blocked(next)) {
                if (distance(next, spec_.region_center) > spec_.region_radius) {
                    h = reflect(h, next, spec_.region_center);
                } else {
                    for (const auto& k : spec_.keep_out)
                        if (distance(next, k) < spec_.keep_out_radius) {
                            h = reflect(h, next, k);
                            break;
                        }
                }
                next = p + unit_from_angle(h) * (spec_.speed * kStep);
                if (blocked(next)) next = p;  // wedged; wait for the heading to diffuse
            }
            points_.push_back(next);
            headings_.push_back(wrap_angle(h));
        }
    }

    RandomWalk spec_;
    std::mt19937_64 rng_;
    std::vector<Vec2> points_;
    std::vector<double> headings_;
};

/// Position, velocity and heading of a scripted agent at time t >= 0.
inline MisbehaviorSample misbehaving_position(const MisbehaviorSpec& spec, double t) {
    return std::visit(
        [t](const auto& s) -> MisbehaviorSample {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, WaypointOscillator>) {
                return sample_oscillator(s, t);
            } else if constexpr (std::is_same_v<T, CircularOrbit>) {
                return sample_orbit(s, t);
            } else {
                RandomWalkTrack track(s);
                return track.sample(t);
            }
        },
        spec);
}

/// Stateful sampler used by the simulator; caches random-walk integration.
class MisbehaviorTrack {
public:
    explicit MisbehaviorTrack(MisbehaviorSpec spec) : spec_(std::move(spec)) {
        if (const auto* rw = std::get_if<RandomWalk>(&spec_))
            walk_ = std::make_unique<RandomWalkTrack>(*rw);
    }

    MisbehaviorSample sample(double t) {
        if (walk_) return walk_->sample(t);
        return misbehaving_position(spec_, t);
    }

    const MisbehaviorSpec& spec() const { return spec_; }

private:
    MisbehaviorSpec spec_;
    std::unique_ptr<RandomWalkTrack> walk_;
};

}  // namespace fleet
