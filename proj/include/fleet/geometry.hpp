#pragma once

#include <cmath>
#include <numbers>

namespace fleet {

struct Vec2 {
    double x{0.0};
    double y{0.0};

    constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

    friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
    friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
    friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
    friend constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }

inline double norm(const Vec2& v) { return std::hypot(v.x, v.y); }

constexpr double squared_norm(const Vec2& v) { return dot(v, v); }

/// Euclidean distance between two points.
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }

inline Vec2 unit_from_angle(double angle) { return {std::cos(angle), std::sin(angle)}; }

inline bool is_finite(const Vec2& v) { return std::isfinite(v.x) && std::isfinite(v.y); }

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double angle) {
    constexpr double pi = std::numbers::pi;
    double a = std::remainder(angle, 2.0 * pi);
    if (a <= -pi) a += 2.0 * pi;
    return a;
}

/// Shortest signed difference a - b, wrapped into (-pi, pi].
inline double angle_diff(double a, double b) { return wrap_angle(a - b); }

}  // namespace fleet
