#include "windcone/geodesic.hpp"

#include <algorithm>
#include <cmath>

namespace windcone {

namespace {

struct Lagrangian {
  const WindStructure& ws;
  MetricTag metric;

  double operator()(Vec2 x, Vec2 v) const {
    double f = metric == MetricTag::F ? ws.eval_F(x, v) : ws.eval_Fl(x, v);
    if (!std::isfinite(f)) return kInf;
    return f * f;
  }
};

}  // namespace

// The EL right-hand side needs dL/dx, the velocity Hessian and the mixed
// second derivatives; all by Richardson-extrapolated central differences of L.
namespace {

struct ElTerms {
  Vec2 grad_x;
  SymMat2 H;      // d2L/dv2
  double B[2][2];  // B[i][j] = d2L / dv_i dx_j
  bool finite = true;
};

ElTerms el_terms(const Lagrangian& L, Vec2 x, Vec2 v, double hv, double hx) {
  ElTerms t;
  auto finite = [&](double a) { return std::isfinite(a); };

  auto grad_x_at = [&](double h) {
    return Vec2{(L({x.x + h, x.y}, v) - L({x.x - h, x.y}, v)) / (2 * h),
                (L({x.x, x.y + h}, v) - L({x.x, x.y - h}, v)) / (2 * h)};
  };
  auto hess_at = [&](double h) {
    double c = L(x, v);
    double xx = (L(x, {v.x + h, v.y}) - 2 * c + L(x, {v.x - h, v.y})) / (h * h);
    double yy = (L(x, {v.x, v.y + h}) - 2 * c + L(x, {v.x, v.y - h})) / (h * h);
    double xy = (L(x, {v.x + h, v.y + h}) - L(x, {v.x + h, v.y - h}) -
                 L(x, {v.x - h, v.y + h}) + L(x, {v.x - h, v.y - h})) / (4 * h * h);
    return SymMat2{xx, xy, yy};
  };
  auto mixed_at = [&](int i, int j, double hvv, double hxx) {
    Vec2 vp = v, vm = v;
    (i == 0 ? vp.x : vp.y) += hvv;
    (i == 0 ? vm.x : vm.y) -= hvv;
    Vec2 xp = x, xm = x;
    (j == 0 ? xp.x : xp.y) += hxx;
    (j == 0 ? xm.x : xm.y) -= hxx;
    return (L(xp, vp) - L(xm, vp) - L(xp, vm) + L(xm, vm)) / (4 * hvv * hxx);
  };

  Vec2 g1 = grad_x_at(hx), g2 = grad_x_at(0.5 * hx);
  t.grad_x = {(4 * g2.x - g1.x) / 3, (4 * g2.y - g1.y) / 3};
  SymMat2 h1 = hess_at(hv), h2 = hess_at(0.5 * hv);
  t.H = {(4 * h2.xx - h1.xx) / 3, (4 * h2.xy - h1.xy) / 3, (4 * h2.yy - h1.yy) / 3};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double m1 = mixed_at(i, j, hv, hx), m2 = mixed_at(i, j, 0.5 * hv, 0.5 * hx);
      t.B[i][j] = (4 * m2 - m1) / 3;
    }
  t.finite = finite(t.grad_x.x) && finite(t.grad_x.y) && finite(t.H.xx) &&
             finite(t.H.xy) && finite(t.H.yy) && finite(t.B[0][0]) &&
             finite(t.B[0][1]) && finite(t.B[1][0]) && finite(t.B[1][1]);
  return t;
}

struct State {
  Vec2 x, v;
};

// vdot solves H vdot = grad_x L - B v.
bool el_rhs(const Lagrangian& L, const State& s, double hv, double hx, State* ds) {
  ElTerms t = el_terms(L, s.x, s.v, hv, hx);
  if (!t.finite) return false;
  Vec2 rhs{t.grad_x.x - t.B[0][0] * s.v.x - t.B[0][1] * s.v.y,
           t.grad_x.y - t.B[1][0] * s.v.x - t.B[1][1] * s.v.y};
  if (std::abs(t.H.det()) < 1e-12 * (1.0 + t.H.trace() * t.H.trace())) return false;
  ds->x = s.v;
  ds->v = solve_sym(t.H, rhs);
  return true;
}

bool rk4_step(const Lagrangian& L, const State& s, double h, double hv, double hx,
              State* out) {
  State k1, k2, k3, k4;
  if (!el_rhs(L, s, hv, hx, &k1)) return false;
  State s2{s.x + 0.5 * h * k1.x, s.v + 0.5 * h * k1.v};
  if (!el_rhs(L, s2, hv, hx, &k2)) return false;
  State s3{s.x + 0.5 * h * k2.x, s.v + 0.5 * h * k2.v};
  if (!el_rhs(L, s3, hv, hx, &k3)) return false;
  State s4{s.x + h * k3.x, s.v + h * k3.v};
  if (!el_rhs(L, s4, hv, hx, &k4)) return false;
  out->x = s.x + (h / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
  out->v = s.v + (h / 6.0) * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
  return true;
}

bool admissible_interior(const WindStructure& ws, Vec2 x, Vec2 v, MetricTag metric,
                         double margin) {
  if (!ws.domain().contains(x)) return false;
  double d0 = ws.signed_region_value(x);
  if (d0 <= ws.eps_critical()) {
    double f = metric == MetricTag::F ? ws.eval_F(x, v) : ws.eval_Fl(x, v);
    return std::isfinite(f);
  }
  ZermeloRoots r = ws.roots_at(x, v);
  if (!r.admissible) return false;
  return (r.hi - r.lo) > margin * std::max(r.hi, 1e-300);
}

}  // namespace

GeodesicPath geodesic_ivp(const WindStructure& ws, Vec2 p, Vec2 v, double length,
                          double dt, MetricTag metric) {
  if (!ws.domain().contains(p))
    throw Error(ErrorCode::out_of_domain, "geodesic start outside domain");
  Admissibility adm = ws.admissible(p, v);
  if (adm == Admissibility::lightlike_boundary)
    throw Error(ErrorCode::degenerate_direction,
                "initial velocity on the lightlike cone boundary");
  if (adm == Admissibility::inadmissible)
    throw Error(ErrorCode::out_of_domain, "initial velocity outside the cone domain");

  const double total = std::abs(length);
  const double dir = length >= 0 ? 1.0 : -1.0;
  double h = dt > 0.0 ? dt : total / 1000.0;
  const double h0 = h;
  const double hv_rel = 1e-3;
  const double hx = 1e-3 * ws.domain().cell_size() * 8.0;

  Lagrangian L{ws, metric};
  GeodesicPath path;
  path.metric = metric;

  State s{p, v};
  double t = 0.0;
  const double L0 = L(s.x, s.v);
  path.samples.push_back({0.0, s.x, s.v});

  const double tol = 1e-9 * std::max(1.0, L0);
  int guard = 0;
  while (t < total - 1e-12 && guard++ < 400000) {
    double step = std::min(h, total - t);
    double hv = hv_rel * std::max(norm(s.v), 1e-9);
    State full, half1, half2;
    bool ok = rk4_step(L, s, dir * step, hv, hx, &full) &&
              rk4_step(L, s, dir * step * 0.5, hv, hx, &half1) &&
              rk4_step(L, half1, dir * step * 0.5, hv, hx, &half2);
    if (!ok) {
      path.truncated = true;  // left the domain of smooth admissibility
      break;
    }
    double err = norm(full.x - half2.x) + norm(full.v - half2.v);
    if (err > tol && step > 1e-6 * h0) {
      h = 0.5 * step;
      if (h < 1e-6 * h0)
        throw Error(ErrorCode::stiffness, "integration step collapsed");
      continue;
    }
    s = half2;
    t += step;
    if (err < 0.1 * tol) h = std::min(2.0 * step, total / 50.0);

    if (!ws.domain().contains(s.x) ||
        !admissible_interior(ws, s.x, s.v, metric, 1e-6)) {
      path.truncated = true;
      break;
    }
    path.samples.push_back({dir * t, s.x, s.v});
  }

  // Energy drift and wind lengths over the recorded samples.
  double drift = 0.0;
  for (const auto& smp : path.samples) {
    double Li = L(smp.x, smp.v);
    if (std::isfinite(Li) && std::isfinite(L0) && L0 > 0)
      drift = std::max(drift, std::abs(Li - L0) / L0);
  }
  path.energy_drift = drift;
  auto lens = wind_lengths(ws, path.samples);
  path.length_F = lens.first;
  path.length_Fl = lens.second;
  return path;
}

std::pair<double, double> wind_lengths(const WindStructure& ws,
                                       const std::vector<PathSample>& samples) {
  double lf = 0.0, lfl = 0.0;
  bool fl_finite = true;
  for (size_t i = 0; i + 1 < samples.size(); ++i) {
    double dt = std::abs(samples[i + 1].t - samples[i].t);
    double f0 = ws.eval_F(samples[i].x, samples[i].v);
    double f1 = ws.eval_F(samples[i + 1].x, samples[i + 1].v);
    lf += 0.5 * (f0 + f1) * dt;
    double g0 = ws.eval_Fl(samples[i].x, samples[i].v);
    double g1 = ws.eval_Fl(samples[i + 1].x, samples[i + 1].v);
    if (!std::isfinite(g0) || !std::isfinite(g1))
      fl_finite = false;
    else
      lfl += 0.5 * (g0 + g1) * dt;
  }
  return {lf, fl_finite ? lfl : kInf};
}

double el_residual(const WindStructure& ws, const std::vector<PathSample>& samples,
                   MetricTag metric) {
  if (samples.size() < 5) return 0.0;
  Lagrangian L{ws, metric};
  const double hx = 1e-3 * ws.domain().cell_size() * 8.0;

  auto grad_v = [&](Vec2 x, Vec2 v) {
    double hv = 1e-4 * std::max(norm(v), 1e-9);
    return Vec2{(L(x, {v.x + hv, v.y}) - L(x, {v.x - hv, v.y})) / (2 * hv),
                (L(x, {v.x, v.y + hv}) - L(x, {v.x, v.y - hv})) / (2 * hv)};
  };
  auto grad_x = [&](Vec2 x, Vec2 v) {
    return Vec2{(L({x.x + hx, x.y}, v) - L({x.x - hx, x.y}, v)) / (2 * hx),
                (L({x.x, x.y + hx}, v) - L({x.x, x.y - hx}, v)) / (2 * hx)};
  };

  double t_span = std::abs(samples.back().t - samples.front().t);
  double lbar = 0.0;
  int count = 0;
  for (const auto& s : samples) {
    double Li = L(s.x, s.v);
    if (std::isfinite(Li)) {
      lbar += Li;
      ++count;
    }
  }
  lbar = count ? lbar / count : 1.0;
  double scale = std::max(2.0 * lbar / std::max(t_span, 1e-12), 1e-12);

  double worst = 0.0;
  for (size_t i = 1; i + 1 < samples.size(); ++i) {
    const auto& a = samples[i - 1];
    const auto& b = samples[i];
    const auto& c = samples[i + 1];
    double dt = c.t - a.t;
    if (std::abs(dt) < 1e-12) continue;
    Vec2 dm = grad_v(a.x, a.v), dp = grad_v(c.x, c.v);
    Vec2 momentum_rate{(dp.x - dm.x) / dt, (dp.y - dm.y) / dt};
    Vec2 force = grad_x(b.x, b.v);
    Vec2 res = momentum_rate - force;
    if (std::isfinite(res.x) && std::isfinite(res.y))
      worst = std::max(worst, norm(res) / scale);
  }
  return worst;
}

std::vector<GeodesicPath> connect(const WindStructure& ws, Vec2 x, Vec2 y,
                                  MetricTag metric) {
  const auto& dom = ws.domain();
  if (!dom.contains(x) || !dom.contains(y))
    throw Error(ErrorCode::out_of_domain, "connect endpoints must lie in the domain");
  if (norm(y - x) == 0.0)
    throw Error(ErrorCode::configuration, "connect requires distinct endpoints");

  // Unit-F fan directions at x.
  NormSpec sheet = NormSpec::zermelo_sheet(
      ws.f0_at(x), ws.wind_at(x),
      metric == MetricTag::F ? NormSpec::Sheet::lower : NormSpec::Sheet::upper);
  std::vector<Vec2> fan;
  try {
    fan = indicatrix_sample(sheet, 64);
  } catch (const Error&) {
    return {};
  }

  const double diam = dom.diameter();
  double vmin = kInf;
  for (Vec2 u : fan) vmin = std::min(vmin, norm(u));
  const double target_tol = 1e-5 * diam;
  double t_max = 2.5 * diam / std::max(vmin, 1e-9);
  double straight = metric == MetricTag::F ? ws.eval_F(x, y - x) : ws.eval_Fl(x, y - x);
  if (std::isfinite(straight)) t_max = std::min(t_max, 3.0 * straight + 0.5);

  struct Candidate {
    double angle;
    double t_best;
    double miss;
  };
  std::vector<Candidate> candidates;

  for (Vec2 u : fan) {
    GeodesicPath probe = geodesic_ivp(ws, x, u, t_max, t_max / 400.0, metric);
    double miss = kInf, t_best = 0.0;
    for (const auto& s : probe.samples) {
      double d = norm(s.x - y);
      if (d < miss) {
        miss = d;
        t_best = s.t;
      }
    }
    if (miss < 0.05 * diam && t_best > 1e-9)
      candidates.push_back({std::atan2(u.y, u.x), t_best, miss});
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) { return a.miss < b.miss; });

  const double dedup_angle = 2.0 * M_PI / 180.0;
  std::vector<double> used_angles;
  std::vector<GeodesicPath> out;

  for (const auto& cand : candidates) {
    bool dup = false;
    for (double a : used_angles)
      if (std::abs(std::remainder(cand.angle - a, 2.0 * M_PI)) < dedup_angle) dup = true;
    if (dup) continue;
    if (out.size() >= 6) break;

    // Newton on (angle, T) -> endpoint - y.
    double ang = cand.angle, T = cand.t_best;
    auto shoot = [&](double a, double t_len) -> Vec2 {
      Vec2 u = dir_of(a);
      double f = metric == MetricTag::F ? ws.eval_F(x, u) : ws.eval_Fl(x, u);
      if (!std::isfinite(f) || f <= 0.0) return {kInf, kInf};
      GeodesicPath g = geodesic_ivp(ws, x, u / f, t_len, t_len / 600.0, metric);
      return g.endpoint();
    };
    bool converged = false;
    for (int it = 0; it < 12; ++it) {
      Vec2 e = shoot(ang, T);
      if (!std::isfinite(e.x)) break;
      Vec2 r = e - y;
      if (norm(r) <= target_tol) {
        converged = true;
        break;
      }
      double da = 1e-6, dT = 1e-6 * std::max(T, 1.0);
      Vec2 ea = shoot(ang + da, T), eT = shoot(ang, T + dT);
      if (!std::isfinite(ea.x) || !std::isfinite(eT.x)) break;
      Vec2 ja{(ea.x - e.x) / da, (ea.y - e.y) / da};
      Vec2 jt{(eT.x - e.x) / dT, (eT.y - e.y) / dT};
      double det = ja.x * jt.y - ja.y * jt.x;
      if (std::abs(det) < 1e-14) break;
      double step_a = (-r.x * jt.y + r.y * jt.x) / det;
      double step_t = (-ja.x * r.y + ja.y * r.x) / det * -1.0;
      // Clamp Newton steps to keep the shot inside the fan's neighborhood.
      step_a = std::clamp(step_a, -0.3, 0.3);
      step_t = std::clamp(step_t, -0.5 * T, 0.5 * T);
      ang += step_a;
      T += step_t;
      if (T <= 1e-9 || T > 2.0 * t_max) break;
    }
    if (!converged) continue;

    Vec2 u = dir_of(ang);
    double f = metric == MetricTag::F ? ws.eval_F(x, u) : ws.eval_Fl(x, u);
    GeodesicPath final_path = geodesic_ivp(ws, x, u / f, T, T / 1000.0, metric);
    if (norm(final_path.endpoint() - y) > target_tol) continue;
    if (final_path.truncated) continue;
    used_angles.push_back(ang);
    out.push_back(std::move(final_path));
  }

  std::sort(out.begin(), out.end(), [](const GeodesicPath& a, const GeodesicPath& b) {
    return a.length_F < b.length_F;
  });
  return out;
}

bool is_unit_extremizing(const WindStructure& ws, const GeodesicPath& path,
                         const ReachabilityFamily& reach) {
  if (path.samples.empty())
    throw Error(ErrorCode::configuration, "empty path");
  double r = path.param_length();
  if (reach.steps * reach.dt < r - 1e-9)
    throw Error(ErrorCode::insufficient_horizon,
                "reachability family horizon shorter than the path parameter");
  int step = std::min(static_cast<int>(std::lround(r / reach.dt)), reach.steps);
  const auto& dom = ws.domain();
  int cell = dom.cell_index(path.endpoint());
  int ci = cell % reach.nx, cj = cell / reach.nx;

  auto any_closed = [&](int rad) {
    for (int dj = -rad; dj <= rad; ++dj)
      for (int di = -rad; di <= rad; ++di) {
        int i = ci + di, j = cj + dj;
        if (i < 0 || i >= reach.nx || j < 0 || j >= reach.ny) continue;
        if (reach.closed_at(step, j * reach.nx + i)) return true;
      }
    return false;
  };
  auto all_open = [&](int rad) {
    for (int dj = -rad; dj <= rad; ++dj)
      for (int di = -rad; di <= rad; ++di) {
        int i = ci + di, j = cj + dj;
        if (i < 0 || i >= reach.nx || j < 0 || j >= reach.ny) continue;
        if (!reach.open_at(step, j * reach.nx + i)) return false;
      }
    return true;
  };
  bool in_closed = any_closed(1);
  bool deep_in_open = all_open(1);
  return in_closed && !deep_in_open;
}

}  // namespace windcone
