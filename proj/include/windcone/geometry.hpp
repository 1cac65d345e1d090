#pragma once

#include <array>
#include <cmath>
#include <limits>

namespace windcone {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator-() const { return {-x, -y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  bool operator==(const Vec2&) const = default;
};

inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double norm2(Vec2 v) { return v.x * v.x + v.y * v.y; }
inline Vec2 perp(Vec2 v) { return {-v.y, v.x}; }
inline Vec2 unit(Vec2 v) { double n = norm(v); return n > 0 ? v / n : Vec2{}; }
inline Vec2 dir_of(double angle) { return {std::cos(angle), std::sin(angle)}; }

// Symmetric 2x2 matrix [xx xy; xy yy].
struct SymMat2 {
  double xx = 1.0;
  double xy = 0.0;
  double yy = 1.0;

  static SymMat2 identity() { return {1.0, 0.0, 1.0}; }

  Vec2 apply(Vec2 v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }
  double quad(Vec2 v) const { return v.x * v.x * xx + 2.0 * v.x * v.y * xy + v.y * v.y * yy; }
  double bilinear(Vec2 u, Vec2 v) const {
    return u.x * v.x * xx + (u.x * v.y + u.y * v.x) * xy + u.y * v.y * yy;
  }
  double det() const { return xx * yy - xy * xy; }
  double trace() const { return xx + yy; }

  SymMat2 inverse() const {
    double d = det();
    return {yy / d, -xy / d, xx / d};
  }

  // Eigenvalues, descending.
  std::array<double, 2> eigenvalues() const {
    double mean = 0.5 * (xx + yy);
    double disc = std::sqrt(std::max(0.0, 0.25 * (xx - yy) * (xx - yy) + xy * xy));
    return {mean + disc, mean - disc};
  }

  // Symmetric square root of a positive-definite matrix.
  SymMat2 sqrt_pd() const {
    double s = std::sqrt(std::max(det(), 0.0));
    double t = std::sqrt(trace() + 2.0 * s);
    return {(xx + s) / t, xy / t, (yy + s) / t};
  }

  bool operator==(const SymMat2&) const = default;
};

inline SymMat2 outer_sym(Vec2 v) { return {v.x * v.x, v.x * v.y, v.y * v.y}; }

// Solves [a b; b c] u = rhs for symmetric positive/indefinite nonsingular systems.
inline Vec2 solve_sym(const SymMat2& m, Vec2 rhs) {
  double d = m.det();
  return {(m.yy * rhs.x - m.xy * rhs.y) / d, (m.xx * rhs.y - m.xy * rhs.x) / d};
}

}  // namespace windcone
