#pragma once

#include <vector>

#include "windcone/reachability.hpp"
#include "windcone/wind.hpp"

namespace windcone {

enum class MetricTag { F, Fl };

struct PathSample {
  double t = 0.0;  // parameter
  Vec2 x{};
  Vec2 v{};
};

struct GeodesicPath {
  std::vector<PathSample> samples;
  MetricTag metric = MetricTag::F;
  double length_F = 0.0;
  double length_Fl = kInf;
  bool truncated = false;       // left the domain or grazed the cone boundary
  double energy_drift = 0.0;    // relative drift of L along the path

  Vec2 endpoint() const { return samples.empty() ? Vec2{} : samples.back().x; }
  double param_length() const {
    return samples.empty() ? 0.0 : samples.back().t - samples.front().t;
  }
};

// Integrates the Euler-Lagrange system of L = F^2 (or F_l^2) with the
// right-hand side assembled from finite-difference derivatives of L.
// dt <= 0 selects length/1000. Negative `length` integrates backward.
GeodesicPath geodesic_ivp(const WindStructure& ws, Vec2 p, Vec2 v, double length,
                          double dt = 0.0, MetricTag metric = MetricTag::F);

// Two-point connection by a 64-direction shooting fan with Newton refinement
// on the endpoint map; all distinct solutions, sorted by F-length.
std::vector<GeodesicPath> connect(const WindStructure& ws, Vec2 x, Vec2 y,
                                  MetricTag metric = MetricTag::F);

// Eq.-level test of unit extremizing geodesics: endpoint in the c-ball but
// not the wind ball of the path's start, at the path's parameter length.
bool is_unit_extremizing(const WindStructure& ws, const GeodesicPath& path,
                         const ReachabilityFamily& reach);

// Max residual of the Euler-Lagrange equations along a (smooth) polyline,
// normalized by the local acceleration scale.
double el_residual(const WindStructure& ws, const std::vector<PathSample>& samples,
                   MetricTag metric = MetricTag::F);

// Wind lengths of an admissible polyline (trapezoid quadrature of F, F_l).
std::pair<double, double> wind_lengths(const WindStructure& ws,
                                       const std::vector<PathSample>& samples);

}  // namespace windcone
