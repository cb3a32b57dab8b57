#pragma once

#include <algorithm>
#include <cmath>

namespace normnet {

inline constexpr double kPi = 3.14159265358979323846;

struct Vec3 {
  float x = 0.0f, y = 0.0f, z = 0.0f;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(float s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }
inline Vec3 operator*(Vec3 v, float s) { return s * v; }
inline Vec3 operator-(Vec3 v) { return {-v.x, -v.y, -v.z}; }

inline double dot(Vec3 a, Vec3 b) {
  return double(a.x) * b.x + double(a.y) * b.y + double(a.z) * b.z;
}

inline Vec3 cross(Vec3 a, Vec3 b) {
  return {float(double(a.y) * b.z - double(a.z) * b.y),
          float(double(a.z) * b.x - double(a.x) * b.z),
          float(double(a.x) * b.y - double(a.y) * b.x)};
}

inline double norm(Vec3 v) { return std::sqrt(dot(v, v)); }

inline Vec3 normalized(Vec3 v) {
  const double n = norm(v);
  return {float(v.x / n), float(v.y / n), float(v.z / n)};
}

inline bool is_unit(Vec3 v, double tol = 1e-6) { return std::abs(norm(v) - 1.0) <= tol; }

// Angle between unit vectors, in degrees. The dot is clamped so rounding
// noise near +/-1 cannot produce NaN.
inline double angle_deg(Vec3 a, Vec3 b) {
  const double d = std::clamp(dot(a, b), -1.0, 1.0);
  return std::acos(d) * 180.0 / kPi;
}

struct Vec2 {
  double x = 0.0, y = 0.0;
};

inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }

}  // namespace normnet
