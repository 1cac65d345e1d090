#pragma once

#include <cstdint>
#include <vector>

#include "windcone/rng.hpp"
#include "windcone/wind.hpp"

namespace windcone {

enum class Direction { forward, backward };

struct PropagateOptions {
  double dt = 0.0;              // <= 0 selects 0.5 * cell / max_support
  bool store_history = true;    // per-step closed/open bitmasks
  double open_margin_cells = 0.25;
  double band_cells = 4.5;      // cells recomputed per step: |u| below this
  double clamp_cells = 6.0;
  double warm_cells = 4.0;      // frozen-coefficient seeding radius
  int max_steps = 200000;
};

// Time-indexed family of exact-time reachable sets: per-step occupancy masks
// with a per-cell sub-cell boundary distance estimate, plus earliest-arrival
// grids for the closed (c-ball) and open (wind ball) memberships.
class ReachabilityFamily {
 public:
  int nx = 0, ny = 0;
  double dt = 0.0;
  int steps = 0;
  Vec2 center{};
  int center_cell = -1;
  Direction direction = Direction::forward;
  double open_margin = 0.0;   // physical units
  double cell = 0.0;

  std::vector<float> u;                  // final signed boundary distance
  std::vector<float> arrival_closed;     // +inf when never reached
  std::vector<float> arrival_open;
  std::vector<std::int32_t> first_closed_step;  // -1 when never
  std::vector<std::int32_t> first_open_step;
  std::vector<std::uint8_t> collapse_flag;      // F = F_l ring cells
  bool history_stored = false;
  int last_growth_step = 0;   // last step the closed mask gained a cell

  bool closed_at(int step, int cell_idx) const;
  bool open_at(int step, int cell_idx) const;
  std::vector<std::uint8_t> closed_mask(int step) const;  // 1 per cell
  std::vector<std::uint8_t> open_mask(int step) const;
  double earliest_arrival(int cell_idx) const;  // closed-membership time
  bool front_advancing_at_cutoff() const;

  int words_per_step() const { return (nx * ny + 63) / 64; }
  std::vector<std::uint64_t> closed_hist;
  std::vector<std::uint64_t> open_hist;
};

// Exact-time reachable-set propagation of the differential inclusion
// xdot in B̄_x (negated body for the backward direction).
ReachabilityFamily propagate(const WindStructure& ws, Vec2 x0, double horizon,
                             Direction direction = Direction::forward,
                             const PropagateOptions& options = {});

struct SeparationResult {
  double value = kInf;        // earliest open-ball entry time
  bool lower_bound_only = false;  // +inf reported as ">= horizon"
  double horizon = 0.0;
  bool front_advancing = false;

  bool finite() const { return std::isfinite(value); }
};

SeparationResult separation(const WindStructure& ws, Vec2 x, Vec2 y, double horizon,
                            const PropagateOptions& options = {});
SeparationResult separation_from(const ReachabilityFamily& fam, const WindStructure& ws,
                                 Vec2 y);

// Stationary earliest-arrival field max_{v in B̄_x} <grad T, v> = 1 by upwind
// fast sweeping; requires a mild-everywhere scenario.
std::vector<double> hjb_arrival(const WindStructure& ws, Vec2 x0,
                                double sweep_tolerance = 1e-8);

struct WindCurveSamples {
  std::vector<Vec2> endpoints;
  int discarded_out_of_domain = 0;
  // One polyline per retained curve when requested, with per-node parameters.
  std::vector<std::vector<Vec2>> paths;
  std::vector<std::vector<double>> path_times;
};

// Monte-Carlo wind curves with piecewise-constant random controls drawn
// uniformly from the polygonized velocity body; independent oracle for the
// Def. 4.4 sets.
WindCurveSamples sample_wind_curves(const WindStructure& ws, Vec2 x0, double r,
                                    int count, std::uint64_t seed = 1,
                                    Direction direction = Direction::forward,
                                    bool keep_paths = false);

double default_dt(const WindStructure& ws);

}  // namespace windcone
