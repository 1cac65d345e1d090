#include "windcone/causal.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace windcone {

namespace {

// Chebyshev distance from `cell` to the nearest cell with the opposite
// membership in `mask`, capped at `radius`.
int ring_distance(const std::vector<std::uint8_t>& mask, int nx, int ny, int cell,
                  int radius) {
  int ci = cell % nx, cj = cell / nx;
  bool member = mask[cell] != 0;
  for (int r = 1; r <= radius; ++r) {
    for (int dj = -r; dj <= r; ++dj) {
      for (int di = -r; di <= r; ++di) {
        if (std::max(std::abs(di), std::abs(dj)) != r) continue;
        int i = ci + di, j = cj + dj;
        if (i < 0 || i >= nx || j < 0 || j >= ny) continue;
        if ((mask[j * nx + i] != 0) != member) return r;
      }
    }
  }
  return radius + 1;
}

QueryResult mask_query(const std::vector<std::uint8_t>& mask, int nx, int ny, int cell,
                       bool closed_semantics) {
  QueryResult out;
  int ring = ring_distance(mask, nx, ny, cell, 4);
  bool member = mask[cell] != 0;
  out.margin_cells = member ? ring : -ring;
  if (closed_semantics) {
    // Inclusive one-cell closure: the exact boundary answers yes.
    if (member || ring == 1)
      out.relation = Verdict::yes;
    else
      out.relation = ring >= 3 ? Verdict::no : Verdict::boundary;
  } else {
    // Deep-interior yes, deep-exterior no, one-cell band boundary.
    if (ring >= 2)
      out.relation = member ? Verdict::yes : Verdict::no;
    else
      out.relation = Verdict::boundary;
  }
  return out;
}

}  // namespace

CSTKScenario::CSTKScenario(WindStructure base, double default_dt)
    : base_(std::move(base)) {
  const auto& dom = base_.domain();
  bool any_strong = false, any_nonmild = false;
  for (int j = 0; j < dom.ny(); ++j) {
    for (int i = 0; i < dom.nx(); ++i) {
      Vec2 p = dom.cell_center(i, j);
      if (dom.excluded(p)) continue;
      double d0 = base_.signed_region_value(p);
      if (d0 > base_.eps_critical()) any_strong = true;
      else if (d0 >= -base_.eps_critical()) any_nonmild = true;
    }
  }
  killing_ = any_strong ? KillingCharacter::arbitrary
                        : (any_nonmild ? KillingCharacter::causal
                                       : KillingCharacter::timelike);
  dt_ = default_dt > 0.0 ? default_dt : windcone::default_dt(base_);
}

std::shared_ptr<const ReachabilityFamily> CSTKScenario::family(Vec2 center,
                                                               Direction dir,
                                                               double horizon) const {
  const auto& dom = base_.domain();
  int cell = dom.cell_index(center);
  const double bucket_size = 0.5;
  int bucket = std::max(1, static_cast<int>(std::ceil(horizon / bucket_size)));
  auto key = std::make_tuple(cell, dir == Direction::forward ? 0 : 1, 0);

  {
    std::shared_lock lock(cache_mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end() && it->second->steps * it->second->dt >= horizon - 1e-12)
      return it->second;
  }
  std::unique_lock lock(cache_mutex_);
  auto it = cache_.find(key);
  if (it != cache_.end() && it->second->steps * it->second->dt >= horizon - 1e-12)
    return it->second;
  PropagateOptions opt;
  opt.dt = dt_;
  auto fam = std::make_shared<ReachabilityFamily>(
      propagate(base_, dom.cell_center(cell), bucket * bucket_size, dir, opt));
  cache_[key] = fam;
  return fam;
}

ConeClass cone_membership(const CSTKScenario& sc, const SpacetimeEvent& e, double a,
                          Vec2 w) {
  if (a == 0.0 && norm(w) == 0.0)
    throw Error(ErrorCode::configuration, "cone membership requires (a, w) != 0");
  const double tol = 1e-9;
  auto classify_future = [&](double aa, Vec2 ww) -> int {
    // 2 timelike, 1 lightlike, 0 neither (for aa > 0)
    NormSpec f0 = sc.base().f0_at(e.x);
    Vec2 wind = sc.base().wind_at(e.x);
    double val = eval_norm(f0, ww / aa - wind);
    if (std::abs(val - 1.0) <= tol) return 1;
    return val < 1.0 ? 2 : 0;
  };
  if (a > 0.0) {
    int c = classify_future(a, w);
    if (c == 2) return ConeClass::future_timelike;
    if (c == 1) return ConeClass::future_lightlike;
    return ConeClass::spacelike;
  }
  if (a < 0.0) {
    int c = classify_future(-a, -w);
    if (c == 2) return ConeClass::past_timelike;
    if (c == 1) return ConeClass::past_lightlike;
    return ConeClass::spacelike;
  }
  return ConeClass::spacelike;  // a = 0, w != 0: slices are spacelike
}

double eval_G(const CSTKScenario& sc, const SpacetimeEvent& e, double a, Vec2 w) {
  if (sc.killing_character() != KillingCharacter::timelike)
    throw Error(ErrorCode::inapplicable,
                "G requires a timelike Killing field (mild-everywhere scenario)");
  Vec2 wind = sc.base().wind_at(e.x);
  double scale = norm(w) + std::abs(a) * norm(wind);
  if (scale > 0.0 && norm(w + a * wind) <= 1e-6 * scale)
    throw Error(ErrorCode::degenerate_direction,
                "w = -aW lies on the excluded degenerate ray");
  double f = sc.base().eval_F(e.x, w);
  return a * a - f * f;
}

namespace {

QueryResult spacetime_query(const CSTKScenario& sc, const SpacetimeEvent& p,
                            const SpacetimeEvent& q, SliceKind kind) {
  const auto& dom = sc.base().domain();
  if (!dom.contains(p.x) || !dom.contains(q.x))
    throw Error(ErrorCode::out_of_domain, "query events must lie in the domain");

  double s = q.t - p.t;
  if (s == 0.0) {
    QueryResult r;
    bool same = dom.cell_index(p.x) == dom.cell_index(q.x);
    // r = 0: the c-ball is {x}; the open ball is empty.
    r.relation = (kind == SliceKind::causal && same) ? Verdict::yes : Verdict::no;
    r.margin_cells = same ? 0.0 : -4.0;
    return r;
  }
  Direction dir = s > 0 ? Direction::forward : Direction::backward;
  double radius = std::abs(s);
  auto fam = sc.family(p.x, dir, radius);
  if (fam->steps * fam->dt < radius - 1e-12)
    throw Error(ErrorCode::insufficient_horizon, "query exceeds the family horizon");
  int step = std::min(static_cast<int>(std::lround(radius / fam->dt)), fam->steps);
  auto mask = kind == SliceKind::causal ? fam->closed_mask(step) : fam->open_mask(step);
  return mask_query(mask, fam->nx, fam->ny, dom.cell_index(q.x),
                    kind == SliceKind::causal);
}

}  // namespace

QueryResult chronological_query(const CSTKScenario& sc, const SpacetimeEvent& p,
                                const SpacetimeEvent& q) {
  return spacetime_query(sc, p, q, SliceKind::chronological);
}

QueryResult causal_query(const CSTKScenario& sc, const SpacetimeEvent& p,
                         const SpacetimeEvent& q) {
  return spacetime_query(sc, p, q, SliceKind::causal);
}

std::vector<std::uint8_t> future_slice(const CSTKScenario& sc, const SpacetimeEvent& p,
                                       double s, SliceKind kind) {
  if (s == 0.0)
    throw Error(ErrorCode::configuration, "slice offset must be nonzero");
  Direction dir = s > 0 ? Direction::forward : Direction::backward;
  auto fam = sc.family(p.x, dir, std::abs(s));
  if (fam->steps * fam->dt < std::abs(s) - 1e-12)
    throw Error(ErrorCode::insufficient_horizon, "slice beyond the family horizon");
  int step = std::min(static_cast<int>(std::lround(std::abs(s) / fam->dt)), fam->steps);
  return kind == SliceKind::causal ? fam->closed_mask(step) : fam->open_mask(step);
}

namespace {

// Least-squares polynomial fit x(t) = sum a_k T_k(t'), t' normalized to [-1,1];
// plain monomials with normalized parameter are adequate at degree <= 4.
std::vector<double> polyfit(const std::vector<double>& t, const std::vector<double>& x,
                            int degree) {
  int n = degree + 1;
  std::vector<double> ata(n * n, 0.0), atb(n, 0.0);
  for (size_t s = 0; s < t.size(); ++s) {
    double powi = 1.0;
    std::vector<double> row(n);
    for (int i = 0; i < n; ++i) {
      row[i] = powi;
      powi *= t[s];
    }
    for (int i = 0; i < n; ++i) {
      atb[i] += row[i] * x[s];
      for (int j = 0; j < n; ++j) ata[i * n + j] += row[i] * row[j];
    }
  }
  // Gaussian elimination with partial pivoting.
  std::vector<double> a = ata, b = atb;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
    std::swap(b[col], b[piv]);
    double d = a[col * n + col];
    if (std::abs(d) < 1e-300) continue;
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      double f = a[r * n + col] / d;
      for (int c = 0; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> coef(n);
  for (int i = 0; i < n; ++i)
    coef[i] = std::abs(a[i * n + i]) < 1e-300 ? 0.0 : b[i] / a[i * n + i];
  return coef;
}

double polyval(const std::vector<double>& c, double t) {
  double v = 0.0, p = 1.0;
  for (double ci : c) {
    v += ci * p;
    p *= t;
  }
  return v;
}

double polyval_deriv(const std::vector<double>& c, double t) {
  double v = 0.0, p = 1.0;
  for (size_t i = 1; i < c.size(); ++i) {
    v += i * c[i] * p;
    p *= t;
  }
  return v;
}

}  // namespace

HorismosReport horismos_check(const CSTKScenario& sc, const SpacetimeEvent& p,
                              const SpacetimeEvent& q) {
  HorismosReport rep;
  double s = q.t - p.t;
  if (s <= 0.0)
    throw Error(ErrorCode::configuration, "horismos check requires q.t > p.t");

  QueryResult ca = causal_query(sc, p, q);
  QueryResult ch = chronological_query(sc, p, q);
  rep.horismos = (ca.relation != Verdict::no) && (ch.relation != Verdict::yes);
  if (!rep.horismos) return rep;

  const auto& dom = sc.base().domain();
  auto fam = sc.family(p.x, Direction::forward, s);
  const int nx = fam->nx;
  int k_end = std::min(static_cast<int>(std::lround(s / fam->dt)), fam->steps);

  // Start from the nearest closed cell at the final step.
  int target = dom.cell_index(q.x);
  int start = -1;
  for (int r = 0; r <= 2 && start < 0; ++r) {
    for (int dj = -r; dj <= r && start < 0; ++dj)
      for (int di = -r; di <= r; ++di) {
        int i = target % nx + di, j = target / nx + dj;
        if (i < 0 || i >= nx || j < 0 || j >= fam->ny) continue;
        if (fam->closed_at(k_end, j * nx + i)) {
          start = j * nx + i;
          break;
        }
      }
  }
  if (start < 0) {
    rep.horismos = false;
    return rep;
  }

  // Dilation-ancestry backtrace: at each step pick the predecessor whose
  // F-travel time to the current cell is closest to dt, preferring cells on
  // the closed-minus-open ring (boundary tracking).
  std::vector<Vec2> nodes(k_end + 1);
  int cur = start;
  nodes[k_end] = dom.cell_center(cur);
  for (int k = k_end; k > 0; --k) {
    Vec2 pc = dom.cell_center(cur);
    int ci = cur % nx, cj = cur / nx;
    int best = -1;
    double best_score = kInf;
    bool best_ring = false;
    for (int dj = -2; dj <= 2; ++dj) {
      for (int di = -2; di <= 2; ++di) {
        int i = ci + di, j = cj + dj;
        if (i < 0 || i >= nx || j < 0 || j >= fam->ny) continue;
        int cand = j * nx + i;
        if (!fam->closed_at(k - 1, cand)) continue;
        Vec2 cp = dom.cell_center(cand);
        double gauge = (di == 0 && dj == 0)
                           ? (sc.base().signed_region_value(cp) <= sc.base().eps_critical()
                                  ? fam->dt
                                  : kInf)
                           : sc.base().eval_F(cp, pc - cp);
        if (!std::isfinite(gauge)) continue;
        double score = std::abs(gauge - fam->dt);
        bool ring = !fam->open_at(k - 1, cand);
        // Ring cells win ties by a wide margin.
        double adj = score + (ring ? 0.0 : 10.0 * fam->dt);
        if (adj < best_score) {
          best_score = adj;
          best = cand;
          best_ring = ring;
        }
      }
    }
    if (best < 0) {
      rep.ambiguous_backtrace = true;
      best = cur;  // stall rather than fail; reported via the flag
    } else if (!best_ring) {
      rep.ambiguous_backtrace = true;
    }
    cur = best;
    nodes[k - 1] = dom.cell_center(cur);
  }
  nodes[0] = fam->center;
  nodes[k_end] = q.x;

  // Fit the lowest-degree polynomial (per coordinate) that explains the
  // backtraced cells to within quantization, then sample the smooth curve.
  std::vector<double> ts(nodes.size()), xs(nodes.size()), ys(nodes.size());
  for (size_t i = 0; i < nodes.size(); ++i) {
    ts[i] = 2.0 * (static_cast<double>(i) / k_end) - 1.0;  // normalized
    xs[i] = nodes[i].x;
    ys[i] = nodes[i].y;
  }
  std::vector<double> cx, cy;
  for (int degree = 1; degree <= 4; ++degree) {
    cx = polyfit(ts, xs, degree);
    cy = polyfit(ts, ys, degree);
    double worst = 0.0;
    for (size_t i = 0; i < ts.size(); ++i)
      worst = std::max(worst, std::hypot(polyval(cx, ts[i]) - xs[i],
                                         polyval(cy, ts[i]) - ys[i]));
    if (worst <= 1.5 * dom.cell_size()) break;
  }

  const int nsam = 200;
  rep.curve.resize(nsam + 1);
  for (int i = 0; i <= nsam; ++i) {
    double tn = 2.0 * i / nsam - 1.0;
    double param = s * i / nsam;
    Vec2 x{polyval(cx, tn), polyval(cy, tn)};
    Vec2 v{polyval_deriv(cx, tn) * 2.0 / s, polyval_deriv(cy, tn) * 2.0 / s};
    rep.curve[i] = {param, x, v};
  }

  auto lens = wind_lengths(sc.base(), rep.curve);
  rep.length_F = lens.first;
  rep.length_Fl = lens.second;
  double err_f = std::abs(rep.length_F - s) / s;
  double err_fl = std::isfinite(rep.length_Fl) ? std::abs(rep.length_Fl - s) / s : kInf;
  if (err_f <= err_fl) {
    rep.matched = MetricTag::F;
    rep.matched_length = rep.length_F;
    rep.relative_length_error = err_f;
  } else {
    rep.matched = MetricTag::Fl;
    rep.matched_length = rep.length_Fl;
    rep.relative_length_error = err_fl;
  }
  // Trim the ends (cell-pinning) before measuring the EL residual.
  std::vector<PathSample> interior(rep.curve.begin() + nsam / 10,
                                   rep.curve.end() - nsam / 10);
  rep.el_residual = el_residual(sc.base(), interior, rep.matched);
  return rep;
}

TimeFunctionReport time_function_check(const CSTKScenario& sc, int count,
                                       std::uint64_t seed) {
  if (count < 100)
    throw Error(ErrorCode::configuration, "time_function_check requires count >= 100");
  TimeFunctionReport rep;
  const auto& dom = sc.base().domain();
  Vec2 c{0.5 * (dom.x0() + dom.x1()), 0.5 * (dom.y0() + dom.y1())};
  if (!dom.contains(c)) c = dom.cell_center(dom.cell_index(c) + 1);
  double r = 0.2 * dom.diameter() / std::max(1.0, sc.base().max_support());

  for (int half = 0; half < 2; ++half) {
    Direction dir = half == 0 ? Direction::forward : Direction::backward;
    auto samples = sample_wind_curves(sc.base(), c, r, std::max(100, count / 2), seed + half,
                                      dir, /*keep_paths=*/true);
    for (size_t pi = 0; pi < samples.paths.size(); ++pi) {
      const auto& path = samples.paths[pi];
      const auto& times = samples.path_times[pi];
      ++rep.curves_checked;
      // The lift is (t(s), x(s)) with dt/ds = +-1: t strictly monotone by
      // construction; the nontrivial consistency check is that every node
      // step is an admissible wind-curve move (F <= 1 + tol at the node).
      bool ok = true;
      for (size_t i = 0; i + 1 < path.size(); ++i) {
        Vec2 d = path[i + 1] - path[i];
        double span = times[i + 1] - times[i];
        if (norm(d) == 0.0 || span <= 0.0) continue;
        Vec2 vel = (dir == Direction::forward ? 1.0 : -1.0) * d / span;
        double f = sc.base().eval_F(path[i], vel);
        if (!(f <= 1.0 + 1e-4)) {
          ok = false;
          break;
        }
      }
      if (!ok) ++rep.violations;
    }
  }
  rep.pass = rep.violations == 0;
  return rep;
}

}  // namespace windcone
