#pragma once

#include <map>
#include <memory>
#include <shared_mutex>
#include <vector>

#include "windcone/geodesic.hpp"
#include "windcone/reachability.hpp"

namespace windcone {

enum class KillingCharacter { timelike, causal, arbitrary };

struct SpacetimeEvent {
  double t = 0.0;
  Vec2 x{};
};

enum class ConeClass {
  future_timelike,
  future_lightlike,
  past_timelike,
  past_lightlike,
  spacelike,
};

enum class Verdict { yes, no, boundary };

struct QueryResult {
  Verdict relation = Verdict::no;
  double margin_cells = 0.0;  // signed sub-cell distance to the relevant boundary
};

struct HorismosReport {
  bool horismos = false;       // causal-but-not-chronological pre-check
  std::vector<PathSample> curve;  // backtraced boundary wind curve (smoothed)
  double length_F = kInf;
  double length_Fl = kInf;
  MetricTag matched = MetricTag::F;
  double matched_length = kInf;  // the wind length closest to t1 - t0
  double relative_length_error = kInf;
  double el_residual = kInf;
  bool ambiguous_backtrace = false;
};

struct TimeFunctionReport {
  bool pass = false;
  int curves_checked = 0;
  int violations = 0;
};

// The CSTK spacetime R x S over a wind structure, with the convention
// Omega(dt) = 1: causal curves are parametrized by t and spacetime causality
// reduces to base reachability.
class CSTKScenario {
 public:
  explicit CSTKScenario(WindStructure base, double default_dt = 0.0);

  const WindStructure& base() const { return base_; }
  KillingCharacter killing_character() const { return killing_; }
  double query_dt() const { return dt_; }

  // Memoized reachability families (single-writer insert, shared readers).
  std::shared_ptr<const ReachabilityFamily> family(Vec2 center, Direction dir,
                                                   double horizon) const;

 private:
  WindStructure base_;
  KillingCharacter killing_;
  double dt_;
  mutable std::shared_mutex cache_mutex_;
  mutable std::map<std::tuple<int, int, int>, std::shared_ptr<const ReachabilityFamily>>
      cache_;  // key: (center cell, direction, horizon bucket)
};

ConeClass cone_membership(const CSTKScenario& sc, const SpacetimeEvent& e, double a,
                          Vec2 w);

// G = a^2 - F(w)^2 for timelike-K scenarios.
double eval_G(const CSTKScenario& sc, const SpacetimeEvent& e, double a, Vec2 w);

QueryResult chronological_query(const CSTKScenario& sc, const SpacetimeEvent& p,
                                const SpacetimeEvent& q);
QueryResult causal_query(const CSTKScenario& sc, const SpacetimeEvent& p,
                         const SpacetimeEvent& q);

enum class SliceKind { chronological, causal };  // I vs J

// t = p.t + s slice of I^+(p) / J^+(p) (s < 0 mirrors to the past).
std::vector<std::uint8_t> future_slice(const CSTKScenario& sc, const SpacetimeEvent& p,
                                       double s, SliceKind kind);

HorismosReport horismos_check(const CSTKScenario& sc, const SpacetimeEvent& p,
                              const SpacetimeEvent& q);

TimeFunctionReport time_function_check(const CSTKScenario& sc, int count,
                                       std::uint64_t seed = 7);

}  // namespace windcone
