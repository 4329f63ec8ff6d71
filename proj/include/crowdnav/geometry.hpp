#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace crowdnav {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    bool operator==(const Vec2&) const = default;

    double norm() const { return std::hypot(x, y); }
    double norm2() const { return x * x + y * y; }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

// Unit vector of v; the zero vector maps to zero (callers that need a
// fallback direction handle it themselves).
inline Vec2 unit_or_zero(Vec2 v) {
    const double n = v.norm();
    return n > 0.0 ? v / n : Vec2{0.0, 0.0};
}

inline constexpr double kPi = 3.14159265358979323846;
inline double deg_to_rad(double d) { return d * kPi / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / kPi; }

// Angle of v in degrees, normalized to [0, 360).
inline double heading_deg(Vec2 v) {
    double d = rad_to_deg(std::atan2(v.y, v.x));
    if (d < 0.0) d += 360.0;
    if (d >= 360.0) d = 0.0;
    return d;
}

inline Vec2 dir_from_deg(double deg) {
    const double r = deg_to_rad(deg);
    return {std::cos(r), std::sin(r)};
}

// Rotate p about center by deg (counterclockwise).
inline Vec2 rotate_about(Vec2 p, Vec2 center, double deg) {
    const double r = deg_to_rad(deg);
    const double c = std::cos(r), s = std::sin(r);
    const Vec2 q = p - center;
    return {center.x + c * q.x - s * q.y, center.y + s * q.x + c * q.y};
}

struct Segment {
    Vec2 a;
    Vec2 b;
    double length() const { return distance(a, b); }
};

// Axis-aligned bounding rectangle.
struct Rect {
    Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    Vec2 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};

    bool valid() const { return lo.x <= hi.x && lo.y <= hi.y; }
    Vec2 center() const { return {(lo.x + hi.x) * 0.5, (lo.y + hi.y) * 0.5}; }

    void expand(Vec2 p) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
    }
    void pad(double m) {
        lo.x -= m; lo.y -= m;
        hi.x += m; hi.y += m;
    }
    bool contains(Vec2 p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
    }
};

// Closest point on segment s to p.
inline Vec2 closest_point_on_segment(Vec2 p, const Segment& s) {
    const Vec2 d = s.b - s.a;
    const double len2 = d.norm2();
    if (len2 == 0.0) return s.a;
    double t = dot(p - s.a, d) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return s.a + d * t;
}

inline double point_segment_distance(Vec2 p, const Segment& s) {
    return distance(p, closest_point_on_segment(p, s));
}

}  // namespace crowdnav
