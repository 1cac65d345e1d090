#include "windcone/reachability.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace windcone {

namespace {

// Signed distance to a convex ccw polygon (positive inside).
double polygon_sdist(Vec2 p, const std::vector<Vec2>& poly) {
  const int n = static_cast<int>(poly.size());
  bool inside = true;
  double dist = kInf;
  for (int i = 0; i < n; ++i) {
    Vec2 a = poly[i], b = poly[(i + 1) % n];
    Vec2 e = b - a;
    if (cross(e, p - a) < 0.0) inside = false;
    double t = std::clamp(dot(p - a, e) / std::max(norm2(e), 1e-300), 0.0, 1.0);
    dist = std::min(dist, norm(p - (a + t * e)));
  }
  return inside ? dist : -dist;
}

struct GridReader {
  const float* u = nullptr;
  int nx = 0, ny = 0;
  double outside = 0.0;

  double at(int i, int j) const {
    if (i < 0 || i >= nx || j < 0 || j >= ny) return outside;
    return u[j * nx + i];
  }
  // Bilinear sample at center-grid coordinates (cell centers at integers).
  double bilinear(double gs, double gt) const {
    int i = static_cast<int>(std::floor(gs));
    int j = static_cast<int>(std::floor(gt));
    double fx = gs - i, fy = gt - j;
    double u00 = at(i, j), u10 = at(i + 1, j), u01 = at(i, j + 1), u11 = at(i + 1, j + 1);
    return u00 + (u10 - u00) * fx + (u01 - u00) * fy +
           (u11 - u10 - u01 + u00) * fx * fy;
  }
};

// Exact maximum of the bilinear-interpolated field along a segment given in
// center-grid coordinates: the field is quadratic in the parameter on each
// grid-patch piece, so each piece contributes its endpoints plus at most one
// interior vertex.
double segment_max(const GridReader& g, Vec2 g0, Vec2 g1) {
  double ds = g1.x - g0.x, dt = g1.y - g0.y;
  double taus[8];
  int ntau = 0;
  taus[ntau++] = 0.0;
  auto add_crossings = [&](double s0, double d) {
    if (std::abs(d) < 1e-15) return;
    double lo = std::min(s0, s0 + d), hi = std::max(s0, s0 + d);
    for (int m = static_cast<int>(std::ceil(lo)); m <= static_cast<int>(std::floor(hi)); ++m) {
      double tau = (m - s0) / d;
      if (tau > 1e-12 && tau < 1.0 - 1e-12 && ntau < 7) taus[ntau++] = tau;
    }
  };
  add_crossings(g0.x, ds);
  add_crossings(g0.y, dt);
  taus[ntau++] = 1.0;
  std::sort(taus, taus + ntau);

  double best = -kInf;
  for (int k = 0; k + 1 < ntau; ++k) {
    double ta = taus[k], tb = taus[k + 1];
    if (tb - ta < 1e-15) continue;
    double tm = 0.5 * (ta + tb);
    int i = static_cast<int>(std::floor(g0.x + ds * tm));
    int j = static_cast<int>(std::floor(g0.y + dt * tm));
    double u00 = g.at(i, j), u10 = g.at(i + 1, j), u01 = g.at(i, j + 1),
           u11 = g.at(i + 1, j + 1);
    double c1 = u10 - u00, c2 = u01 - u00, c3 = u11 - u10 - u01 + u00;
    double fx0 = g0.x - i, fy0 = g0.y - j;
    // u(tau) = k0 + k1 tau + k2 tau^2 on this piece
    double k2 = c3 * ds * dt;
    double k1 = c1 * ds + c2 * dt + c3 * (fx0 * dt + fy0 * ds);
    double k0 = u00 + c1 * fx0 + c2 * fy0 + c3 * fx0 * fy0;
    double va = k0 + k1 * ta + k2 * ta * ta;
    double vb = k0 + k1 * tb + k2 * tb * tb;
    best = std::max({best, va, vb});
    if (k2 < 0.0) {
      double tv = -k1 / (2.0 * k2);
      if (tv > ta && tv < tb) best = std::max(best, k0 + k1 * tv + k2 * tv * tv);
    }
  }
  return best;
}

struct BodyGeometry {
  // Per-cell wind and (riemannian path) per-cell h and ball transform.
  std::vector<Vec2> wind;
  std::vector<SymMat2> h;        // empty when F0 is a constant non-Riemannian norm
  std::vector<SymMat2> tf;       // h^{-1/2}
  std::vector<float> d0;         // F0_p(-W) - 1
  std::vector<std::uint8_t> excluded;
  bool riemannian = true;
  bool h_constant = true;
  // Shared indicatrix polygon: unit F0 ball boundary for constant norms
  // (transformed unit circle or sampled indicatrix) + edge normals.
  std::vector<Vec2> sigma;
  std::vector<Vec2> unit_dirs;     // shared unit circle table (h-field path)
  std::vector<Vec2> sigma_normal;  // outward normals, dot(q - sigma[k], n[k]) <= 0 inside
};

BodyGeometry build_geometry(const WindStructure& ws) {
  const auto& d = ws.domain();
  const int n = d.cell_count();
  BodyGeometry g;
  g.wind.resize(n);
  g.d0.resize(n);
  g.excluded.resize(n);

  NormSpec f0_probe = ws.f0_at(d.cell_center(0));
  g.riemannian = ws.f0_is_field() || f0_probe.kind() == NormSpec::Kind::riemannian;
  g.h_constant = !ws.f0_is_field();

  if (g.riemannian) {
    g.unit_dirs.resize(64);
    for (int k = 0; k < 64; ++k) g.unit_dirs[k] = dir_of(2.0 * M_PI * k / 64);
    if (g.h_constant) {
      g.h.assign(1, f0_probe.h());
      g.tf.assign(1, f0_probe.h().inverse().sqrt_pd());
      g.sigma.resize(64);
      for (int k = 0; k < 64; ++k) g.sigma[k] = g.tf[0].apply(g.unit_dirs[k]);
    } else {
      g.h.resize(n);
      g.tf.resize(n);
    }
  } else {
    g.sigma = indicatrix_sample(f0_probe, 64);
  }
  if (!g.sigma.empty()) {
    const int m = static_cast<int>(g.sigma.size());
    g.sigma_normal.resize(m);
    for (int k = 0; k < m; ++k) {
      Vec2 e = g.sigma[(k + 1) % m] - g.sigma[k];
      g.sigma_normal[k] = unit(Vec2{e.y, -e.x});
    }
  }

  for (int idx = 0; idx < n; ++idx) {
    Vec2 p = d.cell_center(idx);
    g.excluded[idx] = d.excluded(p) ? 1 : 0;
    g.wind[idx] = ws.wind_at(p);
    if (g.riemannian && !g.h_constant) {
      SymMat2 h = ws.f0_at(p).h();
      g.h[idx] = h;
      g.tf[idx] = h.inverse().sqrt_pd();
    }
    NormSpec f0 = ws.f0_at(p);
    g.d0[idx] = static_cast<float>(eval_norm(f0, -g.wind[idx]) - 1.0);
  }
  return g;
}

}  // namespace

bool ReachabilityFamily::closed_at(int step, int cell_idx) const {
  if (!history_stored) throw Error(ErrorCode::internal, "history not stored");
  return (closed_hist[static_cast<size_t>(step) * words_per_step() + cell_idx / 64] >>
          (cell_idx % 64)) & 1u;
}

bool ReachabilityFamily::open_at(int step, int cell_idx) const {
  if (!history_stored) throw Error(ErrorCode::internal, "history not stored");
  return (open_hist[static_cast<size_t>(step) * words_per_step() + cell_idx / 64] >>
          (cell_idx % 64)) & 1u;
}

std::vector<std::uint8_t> ReachabilityFamily::closed_mask(int step) const {
  std::vector<std::uint8_t> m(nx * ny);
  for (int c = 0; c < nx * ny; ++c) m[c] = closed_at(step, c) ? 1 : 0;
  return m;
}

std::vector<std::uint8_t> ReachabilityFamily::open_mask(int step) const {
  std::vector<std::uint8_t> m(nx * ny);
  for (int c = 0; c < nx * ny; ++c) m[c] = open_at(step, c) ? 1 : 0;
  return m;
}

double ReachabilityFamily::earliest_arrival(int cell_idx) const {
  return arrival_closed[cell_idx];
}

bool ReachabilityFamily::front_advancing_at_cutoff() const {
  int window = std::max(5, steps / 50);
  return last_growth_step >= steps - window;
}

double default_dt(const WindStructure& ws) {
  return 0.5 * ws.domain().cell_size() / ws.max_support();
}

ReachabilityFamily propagate(const WindStructure& ws, Vec2 x0, double horizon,
                             Direction direction, const PropagateOptions& options) {
  const auto& dom = ws.domain();
  if (!dom.contains(x0))
    throw Error(ErrorCode::out_of_domain, "propagation center outside domain");
  if (horizon <= 0.0)
    throw Error(ErrorCode::configuration, "propagation horizon must be positive");
  // Snap the center to its cell center: family membership is cell-indexed and
  // the center cell must not straddle the set boundary.
  x0 = dom.cell_center(dom.cell_index(x0));

  const double smax = ws.max_support();
  const double cell = dom.cell_size();
  double dt = options.dt > 0.0 ? options.dt : 0.5 * cell / smax;
  if (dt > cell / smax + 1e-15)
    throw Error(ErrorCode::configuration,
                "dt violates the CFL bound cell / max_speed");
  const int steps = static_cast<int>(std::ceil(horizon / dt - 1e-9));
  if (steps > options.max_steps)
    throw Error(ErrorCode::configuration, "horizon / dt exceeds the step limit");

  const int nx = dom.nx(), ny = dom.ny(), ncell = nx * ny;
  const double dx = dom.cell_dx(), dy = dom.cell_dy();
  const double theta = options.open_margin_cells * cell;
  const double clamp_val = options.clamp_cells * cell;
  const double sgn = direction == Direction::forward ? 1.0 : -1.0;

  BodyGeometry geom = build_geometry(ws);

  ReachabilityFamily fam;
  fam.nx = nx;
  fam.ny = ny;
  fam.dt = dt;
  fam.steps = steps;
  fam.center = x0;
  fam.center_cell = dom.cell_index(x0);
  fam.direction = direction;
  fam.open_margin = theta;
  fam.cell = cell;
  fam.u.assign(ncell, static_cast<float>(-clamp_val));
  fam.arrival_closed.assign(ncell, std::numeric_limits<float>::infinity());
  fam.arrival_open.assign(ncell, std::numeric_limits<float>::infinity());
  fam.first_closed_step.assign(ncell, -1);
  fam.first_open_step.assign(ncell, -1);
  fam.collapse_flag.assign(ncell, 0);
  fam.history_stored = options.store_history;
  const int words = fam.words_per_step();
  if (options.store_history) {
    fam.closed_hist.assign(static_cast<size_t>(steps + 1) * words, 0);
    fam.open_hist.assign(static_cast<size_t>(steps + 1) * words, 0);
  }

  // Frozen-coefficient warm start: the reachable set for the first few steps
  // is seeded as x0 + t * body(x0), exact for constant coefficients and
  // O(t^2 |grad W|) otherwise. Constant scenarios warm much further, which
  // removes most of the high-curvature startup error.
  auto body_at_x0 = ws.body_polygon(x0, 64);
  double rho0 = kInf, reach0 = 0.0;
  Vec2 w0 = ws.wind_at(x0);
  for (Vec2 v : body_at_x0) {
    rho0 = std::min(rho0, norm(v - w0));
    reach0 = std::max(reach0, norm(v));
  }
  rho0 = std::max(rho0, 1e-9);
  reach0 = std::max(reach0, 1e-9);
  bool wind_constant = true;
  for (int idx = 0; idx < ncell && wind_constant; ++idx) {
    if (geom.excluded[idx]) continue;
    if (norm(geom.wind[idx] - geom.wind[0]) > 1e-12) wind_constant = false;
  }
  double warm_cells = options.warm_cells;
  if (wind_constant && geom.h_constant) warm_cells = std::max(warm_cells, 20.0);
  double t_warm = warm_cells * cell / rho0;
  for (const auto& e : dom.exclusions())
    t_warm = std::min(t_warm, 0.9 * e.distance(x0) / reach0);
  int k0 = std::max(1, static_cast<int>(std::floor(t_warm / dt)));
  k0 = std::min({k0, steps, 8192});
  const double t0 = k0 * dt;

  auto warm_polygon = [&](double t) {
    std::vector<Vec2> poly(body_at_x0.size());
    for (size_t k = 0; k < poly.size(); ++k)
      poly[k] = x0 + sgn * t * body_at_x0[k];
    if (sgn < 0) std::reverse(poly.begin(), poly.end());  // keep ccw orientation
    return poly;
  };

  auto warm_poly_k0 = warm_polygon(t0);
  std::vector<float> u_cur(ncell), u_next(ncell);
  for (int idx = 0; idx < ncell; ++idx) {
    if (geom.excluded[idx]) {
      u_cur[idx] = static_cast<float>(-clamp_val);
      continue;
    }
    double s = polygon_sdist(dom.cell_center(idx), warm_poly_k0);
    u_cur[idx] = static_cast<float>(std::clamp(s, -clamp_val, clamp_val));
  }

  // Warm-phase arrivals from the frozen gauge (the F travel time from x0).
  auto frozen_gauge = [&](Vec2 p) {
    Vec2 disp = sgn > 0 ? p - x0 : x0 - p;
    if (norm(disp) == 0.0) return 0.0;
    return ws.eval_F(x0, disp);
  };
  for (int idx = 0; idx < ncell; ++idx) {
    if (geom.excluded[idx] || u_cur[idx] < 0.0f) continue;
    double gauge = frozen_gauge(dom.cell_center(idx));
    if (!(gauge <= t0 + dt)) gauge = t0;  // inadmissible direction artifacts
    fam.arrival_closed[idx] = static_cast<float>(gauge);
    fam.first_closed_step[idx] = std::max(0, static_cast<int>(std::ceil(gauge / dt - 1e-9)));
    if (u_cur[idx] >= theta) {
      // First time the sub-cell distance reaches the open margin: scan then
      // bisect on the frozen polygon family.
      Vec2 p = dom.cell_center(idx);
      double lo = gauge, hi = t0;
      for (int k = fam.first_closed_step[idx]; k <= k0; ++k) {
        double t = k * dt;
        if (polygon_sdist(p, warm_polygon(t)) >= theta) { hi = t; break; }
        lo = t;
      }
      for (int it = 0; it < 30; ++it) {
        double mid = 0.5 * (lo + hi);
        if (polygon_sdist(p, warm_polygon(mid)) >= theta)
          hi = mid;
        else
          lo = mid;
      }
      fam.arrival_open[idx] = static_cast<float>(hi);
      fam.first_open_step[idx] = std::max(0, static_cast<int>(std::ceil(hi / dt - 1e-9)));
    }
  }
  // Exact-time convention: the center belongs to the c-ball at r = 0.
  fam.arrival_closed[fam.center_cell] = 0.0f;
  fam.first_closed_step[fam.center_cell] = 0;
  fam.last_growth_step = k0;

  auto write_history = [&](int step, const float* u) {
    if (!options.store_history) return;
    std::uint64_t* crow = fam.closed_hist.data() + static_cast<size_t>(step) * words;
    std::uint64_t* orow = fam.open_hist.data() + static_cast<size_t>(step) * words;
    for (int idx = 0; idx < ncell; ++idx) {
      if (u[idx] >= 0.0f) crow[idx / 64] |= 1ull << (idx % 64);
      if (u[idx] >= static_cast<float>(theta)) orow[idx / 64] |= 1ull << (idx % 64);
    }
  };
  if (options.store_history) {
    // Steps before the warm radius use the frozen polygon directly.
    fam.closed_hist[static_cast<size_t>(0) * words + fam.center_cell / 64] |=
        1ull << (fam.center_cell % 64);
    for (int k = 1; k < k0; ++k) {
      auto poly = warm_polygon(k * dt);
      double reach = k * dt * reach0 + cell;
      Vec2 lo{x0.x - reach, x0.y - reach}, hi{x0.x + reach, x0.y + reach};
      int i0 = std::max(0, static_cast<int>((lo.x - dom.x0()) / dx) - 1);
      int i1 = std::min(nx - 1, static_cast<int>((hi.x - dom.x0()) / dx) + 1);
      int j0 = std::max(0, static_cast<int>((lo.y - dom.y0()) / dy) - 1);
      int j1 = std::min(ny - 1, static_cast<int>((hi.y - dom.y0()) / dy) + 1);
      std::uint64_t* crow = fam.closed_hist.data() + static_cast<size_t>(k) * words;
      std::uint64_t* orow = fam.open_hist.data() + static_cast<size_t>(k) * words;
      for (int j = j0; j <= j1; ++j) {
        for (int i = i0; i <= i1; ++i) {
          int idx = j * nx + i;
          if (geom.excluded[idx]) continue;
          double s = polygon_sdist(dom.cell_center(i, j), poly);
          if (s >= 0.0) crow[idx / 64] |= 1ull << (idx % 64);
          if (s >= theta) orow[idx / 64] |= 1ull << (idx % 64);
        }
      }
    }
    write_history(k0, u_cur.data());
  }

  GridReader reader{u_cur.data(), nx, ny, -clamp_val};

  // Main stepping loop. The active set is the set of cells within a fixed
  // Chebyshev distance of the zero contour: value-based bands deadlock
  // (cells just outside never learn the front approached).
  const int dil = static_cast<int>(std::ceil(options.band_cells)) + 1;
  std::vector<std::uint8_t> boundary(ncell), row_dil(ncell);
  std::vector<int> active;
  active.reserve(ncell / 8);
  for (int k = k0 + 1; k <= steps; ++k) {
    // Boundary cells: sign change against the right/top neighbour.
    std::fill(boundary.begin(), boundary.end(), 0);
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        int idx = j * nx + i;
        bool in = u_cur[idx] >= 0.0f;
        if (i + 1 < nx && (u_cur[idx + 1] >= 0.0f) != in) boundary[idx] = boundary[idx + 1] = 1;
        if (j + 1 < ny && (u_cur[idx + nx] >= 0.0f) != in) boundary[idx] = boundary[idx + nx] = 1;
      }
    }
    // Chebyshev dilation by `dil` cells, separable passes.
    for (int j = 0; j < ny; ++j) {
      const std::uint8_t* src = boundary.data() + j * nx;
      std::uint8_t* dst = row_dil.data() + j * nx;
      for (int i = 0; i < nx; ++i) {
        std::uint8_t v = 0;
        for (int o = std::max(0, i - dil); o <= std::min(nx - 1, i + dil); ++o)
          v |= src[o];
        dst[i] = v;
      }
    }
    active.clear();
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) {
        std::uint8_t v = 0;
        for (int o = std::max(0, j - dil); o <= std::min(ny - 1, j + dil); ++o)
          v |= row_dil[o * nx + i];
        int idx = j * nx + i;
        if (v && !geom.excluded[idx]) active.push_back(idx);
      }
    }
    std::sort(active.begin(), active.end());
    std::memcpy(u_next.data(), u_cur.data(), sizeof(float) * ncell);
    reader.u = u_cur.data();

    for (int idx : active) {
      const int i = idx % nx, j = idx / nx;
      const Vec2 pos = dom.cell_center(i, j);
      const Vec2 w = geom.wind[idx];
      double best = -kInf;

      // Body-center sample (w = W control).
      Vec2 coff = -sgn * dt * w;
      best = std::max(best, reader.bilinear((pos.x + coff.x - dom.x0()) / dx - 0.5,
                                            (pos.y + coff.y - dom.y0()) / dy - 0.5));
      // Wait sample where 0 lies in the closed body (mild/critical).
      if (geom.d0[idx] <= static_cast<float>(ws.eps_critical()))
        best = std::max(best, static_cast<double>(u_cur[idx]));

      // Grid centers covered by the reflected body: direct reads.
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0) continue;
          Vec2 o{di * dx, dj * dy};
          Vec2 q = (-sgn / dt) * o - w;  // must satisfy F0(q) <= 1
          bool inside;
          if (geom.riemannian) {
            const SymMat2& h = geom.h_constant ? geom.h[0] : geom.h[idx];
            inside = h.quad(q) <= 1.0;
          } else {
            inside = true;
            for (size_t e = 0; e < geom.sigma.size(); ++e) {
              if (dot(q - geom.sigma[e], geom.sigma_normal[e]) > 0.0) {
                inside = false;
                break;
              }
            }
          }
          if (inside) best = std::max(best, reader.at(i + di, j + dj));
        }
      }

      // Polygon chords: vertex values first, then exact per-piece quadratic
      // maxima only for chords whose Lipschitz bound can beat the current best.
      const bool shared_sigma = !geom.sigma.empty();
      const int m = shared_sigma ? static_cast<int>(geom.sigma.size()) : 64;
      Vec2 gverts[96];
      double vvals[96];
      for (int kv = 0; kv < m; ++kv) {
        Vec2 s = shared_sigma ? geom.sigma[kv] : geom.tf[idx].apply(geom.unit_dirs[kv]);
        Vec2 vert = pos - sgn * dt * (w + s);
        gverts[kv] = {(vert.x - dom.x0()) / dx - 0.5, (vert.y - dom.y0()) / dy - 0.5};
        vvals[kv] = reader.bilinear(gverts[kv].x, gverts[kv].y);
        best = std::max(best, vvals[kv]);
      }
      for (int kv = 0; kv < m; ++kv) {
        int kn = (kv + 1) % m;
        Vec2 a = gverts[kv], b = gverts[kn];
        double len = std::abs(b.x - a.x) * dx + std::abs(b.y - a.y) * dy;
        if (std::max(vvals[kv], vvals[kn]) + 2.0 * len <= best) continue;
        best = std::max(best, segment_max(reader, a, b));
      }

      u_next[idx] = static_cast<float>(std::clamp(best, -clamp_val, clamp_val));
    }

    // Crossing bookkeeping (first entries only).
    const float theta_f = static_cast<float>(theta);
    bool grew = false;
    for (int idx : active) {
      float up = u_cur[idx], un = u_next[idx];
      if (fam.first_closed_step[idx] < 0 && un >= 0.0f) {
        double frac = (un > up) ? (0.0 - up) / (un - up) : 1.0;
        fam.arrival_closed[idx] = static_cast<float>((k - 1 + std::clamp(frac, 0.0, 1.0)) * dt);
        fam.first_closed_step[idx] = k;
        grew = true;
      }
      if (fam.first_open_step[idx] < 0 && un >= theta_f) {
        double frac = (un > up) ? (theta - up) / (un - up) : 1.0;
        fam.arrival_open[idx] = static_cast<float>((k - 1 + std::clamp(frac, 0.0, 1.0)) * dt);
        fam.first_open_step[idx] = k;
      }
    }
    if (grew) fam.last_growth_step = k;
    std::swap(u_cur, u_next);
    write_history(k, u_cur.data());
  }

  fam.u = u_cur;

  // Flag closed-minus-open ring cells whose direction from the center is
  // within tolerance of the lightlike cone boundary (F = F_l collapse).
  for (int idx = 0; idx < ncell; ++idx) {
    if (geom.excluded[idx]) continue;
    if (!(u_cur[idx] >= 0.0f && u_cur[idx] < theta)) continue;
    if (geom.d0[idx] <= static_cast<float>(ws.eps_critical())) continue;
    Vec2 p = dom.cell_center(idx);
    Vec2 dirv = sgn > 0 ? p - x0 : x0 - p;
    if (norm(dirv) == 0.0) continue;
    ZermeloRoots r = ws.roots_at(p, dirv);
    if (r.admissible && (r.boundary || (r.hi - r.lo) <= 1e-3 * std::max(r.hi, 1e-30)))
      fam.collapse_flag[idx] = 1;
  }
  return fam;
}

SeparationResult separation_from(const ReachabilityFamily& fam, const WindStructure& ws,
                                 Vec2 y) {
  if (!ws.domain().contains(y))
    throw Error(ErrorCode::out_of_domain, "separation target outside domain");
  SeparationResult out;
  out.horizon = fam.steps * fam.dt;
  out.front_advancing = fam.front_advancing_at_cutoff();
  const auto& dom = ws.domain();
  int cell = dom.cell_index(y);
  if (fam.first_open_step[cell] >= 0) {
    // Open-ball entry gates the verdict; the value itself is the unbiased
    // zero-crossing time (in the continuum both balls share their boundary,
    // so d_F is the u = 0 crossing; the open threshold only adds lag).
    double value = std::min<double>(fam.arrival_closed[cell], fam.arrival_open[cell]);
    // Bilinear refinement at the exact target when the stencil is finite.
    double gs = (y.x - dom.x0()) / dom.cell_dx() - 0.5;
    double gt = (y.y - dom.y0()) / dom.cell_dy() - 0.5;
    int i = static_cast<int>(std::floor(gs)), j = static_cast<int>(std::floor(gt));
    if (i >= 0 && i + 1 < fam.nx && j >= 0 && j + 1 < fam.ny) {
      double a00 = fam.arrival_closed[j * fam.nx + i];
      double a10 = fam.arrival_closed[j * fam.nx + i + 1];
      double a01 = fam.arrival_closed[(j + 1) * fam.nx + i];
      double a11 = fam.arrival_closed[(j + 1) * fam.nx + i + 1];
      if (std::isfinite(a00) && std::isfinite(a10) && std::isfinite(a01) &&
          std::isfinite(a11)) {
        double fx = gs - i, fy = gt - j;
        value = a00 + (a10 - a00) * fx + (a01 - a00) * fy +
                (a11 - a10 - a01 + a00) * fx * fy;
      }
    }
    out.value = value;
    return out;
  }
  out.value = kInf;
  out.lower_bound_only = out.front_advancing;
  return out;
}

SeparationResult separation(const WindStructure& ws, Vec2 x, Vec2 y, double horizon,
                            const PropagateOptions& options) {
  PropagateOptions opt = options;
  opt.store_history = false;
  ReachabilityFamily fam = propagate(ws, x, horizon, Direction::forward, opt);
  return separation_from(fam, ws, y);
}

std::vector<double> hjb_arrival(const WindStructure& ws, Vec2 x0, double sweep_tolerance) {
  const auto& dom = ws.domain();
  if (!dom.contains(x0))
    throw Error(ErrorCode::out_of_domain, "hjb source outside domain");
  const int nx = dom.nx(), ny = dom.ny(), ncell = nx * ny;

  BodyGeometry geom = build_geometry(ws);
  for (int idx = 0; idx < ncell; ++idx) {
    if (!geom.excluded[idx] && geom.d0[idx] >= -static_cast<float>(ws.eps_critical()))
      throw Error(ErrorCode::inapplicable,
                  "hjb_arrival requires a mild-everywhere scenario");
  }

  // Travel time for displacement d with the body frozen at cell `idx`:
  // the positive root of h(d - tW, d - tW) = t^2 (closed form, mild case),
  // general Minkowski bases fall back to the root solver.
  auto gauge = [&](int idx, Vec2 d) {
    Vec2 w = geom.wind[idx];
    if (geom.riemannian) {
      const SymMat2& h = geom.h_constant ? geom.h[0] : geom.h[idx];
      double hww = h.quad(w), hdw = h.bilinear(d, w), hdd = h.quad(d);
      double disc = hdw * hdw + (1.0 - hww) * hdd;
      return (std::sqrt(std::max(disc, 0.0)) - hdw) / (1.0 - hww);
    }
    return ws.eval_F(dom.cell_center(idx), d);
  };

  std::vector<double> T(ncell, kInf);
  const int ci = dom.cell_index(x0) % nx, cj = dom.cell_index(x0) / nx;
  for (int j = std::max(0, cj - 2); j <= std::min(ny - 1, cj + 2); ++j)
    for (int i = std::max(0, ci - 2); i <= std::min(nx - 1, ci + 2); ++i) {
      int idx = j * nx + i;
      if (geom.excluded[idx]) continue;
      T[idx] = gauge(idx, dom.cell_center(i, j) - x0);
    }

  const int di8[8] = {1, 1, 0, -1, -1, -1, 0, 1};
  const int dj8[8] = {0, 1, 1, 1, 0, -1, -1, -1};
  const double dx = dom.cell_dx(), dy = dom.cell_dy();

  auto update_cell = [&](int i, int j) {
    int idx = j * nx + i;
    if (geom.excluded[idx]) return 0.0;
    Vec2 pc = dom.cell_center(i, j);
    double best = T[idx];
    for (int s = 0; s < 8; ++s) {
      int ia = i + di8[s], ja = j + dj8[s];
      int ib = i + di8[(s + 1) % 8], jb = j + dj8[(s + 1) % 8];
      if (ia < 0 || ia >= nx || ja < 0 || ja >= ny) continue;
      if (ib < 0 || ib >= nx || jb < 0 || jb >= ny) continue;
      double Ta = T[ja * nx + ia], Tb = T[jb * nx + ib];
      if (!std::isfinite(Ta) && !std::isfinite(Tb)) continue;
      Vec2 pa{pc.x + di8[s] * dx, pc.y + dj8[s] * dy};
      Vec2 pb{pc.x + di8[(s + 1) % 8] * dx, pc.y + dj8[(s + 1) % 8] * dy};
      auto value = [&](double t) {
        double Ty = (1.0 - t) * Ta + t * Tb;
        if (!std::isfinite(Ty)) return kInf;
        Vec2 py = pa + t * (pb - pa);
        return Ty + gauge(idx, pc - py);
      };
      // Convex along the segment: golden-section minimization.
      double a = 0.0, b = 1.0;
      const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
      double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
      double f1 = value(x1), f2 = value(x2);
      for (int it = 0; it < 40; ++it) {
        if (f1 <= f2) {
          b = x2; x2 = x1; f2 = f1;
          x1 = b - invphi * (b - a);
          f1 = value(x1);
        } else {
          a = x1; x1 = x2; f1 = f2;
          x2 = a + invphi * (b - a);
          f2 = value(x2);
        }
      }
      best = std::min({best, value(0.0), value(1.0), f1, f2});
    }
    double change = T[idx] - best;
    T[idx] = best;
    return std::isfinite(change) ? change : (std::isfinite(best) ? kInf : 0.0);
  };

  for (int round = 0; round < 500; ++round) {
    double max_change = 0.0;
    for (int sweep = 0; sweep < 4; ++sweep) {
      bool xup = sweep == 0 || sweep == 2, yup = sweep == 0 || sweep == 1;
      for (int jj = 0; jj < ny; ++jj) {
        int j = yup ? jj : ny - 1 - jj;
        for (int ii = 0; ii < nx; ++ii) {
          int i = xup ? ii : nx - 1 - ii;
          max_change = std::max(max_change, update_cell(i, j));
        }
      }
    }
    if (max_change < sweep_tolerance) return T;
  }
  throw Error(ErrorCode::numerical_failure, "fast sweeping did not converge");
}

WindCurveSamples sample_wind_curves(const WindStructure& ws, Vec2 x0, double r,
                                    int count, std::uint64_t seed, Direction direction,
                                    bool keep_paths) {
  if (count < 100)
    throw Error(ErrorCode::configuration, "sample_wind_curves requires count >= 100");
  const auto& dom = ws.domain();
  Rng rng(seed);
  WindCurveSamples out;
  out.endpoints.reserve(count);

  const double sgn = direction == Direction::forward ? 1.0 : -1.0;
  const double smax = ws.max_support();
  const double sub = std::min(0.2 * dom.cell_size() / smax, r / 8.0);

  for (int c = 0; c < count; ++c) {
    // Ballistic curves keep one control for the whole duration (they drive
    // hull coverage); the rest switch controls a few times.
    int segments = rng.uniform01() < 0.5 ? 1 : 2 + rng.uniform_int(0, 6);
    double seg_len = r / segments;
    Vec2 x = x0;
    double t = 0.0;
    bool ok = true;
    std::vector<Vec2> path;
    std::vector<double> times;
    if (keep_paths) {
      path.push_back(x);
      times.push_back(0.0);
    }

    for (int s = 0; s < segments && ok; ++s) {
      // Control = fixed offset in the F0 unit ball, carried along the curve
      // (v(t) = W(x) + offset stays exactly admissible under constant F0).
      auto poly = ws.body_polygon(x, 64);
      Vec2 w = ws.wind_at(x);
      // Uniform sample over the polygonized ball via a fan triangulation.
      const int m = static_cast<int>(poly.size());
      std::vector<double> areas(m);
      double total = 0.0;
      for (int k = 0; k < m; ++k) {
        Vec2 a = poly[k] - w, b = poly[(k + 1) % m] - w;
        areas[k] = 0.5 * std::abs(cross(a, b));
        total += areas[k];
      }
      double pick = rng.uniform01() * total;
      int tri = 0;
      while (tri < m - 1 && pick > areas[tri]) pick -= areas[tri++];
      Vec2 a = poly[tri] - w, b = poly[(tri + 1) % m] - w;
      double ua = rng.uniform01(), ub = rng.uniform01();
      if (ua + ub > 1.0) { ua = 1.0 - ua; ub = 1.0 - ub; }
      Vec2 ball_offset = ua * a + ub * b;

      double remaining = seg_len;
      while (remaining > 1e-15 && ok) {
        double tau = std::min(sub, remaining);
        Vec2 v1 = sgn * (ws.wind_at(x) + ball_offset);
        Vec2 mid = x + 0.5 * tau * v1;
        if (!dom.contains(mid)) { ok = false; break; }
        Vec2 v2 = sgn * (ws.wind_at(mid) + ball_offset);
        Vec2 xn = x + tau * v2;
        if (!dom.contains(xn)) { ok = false; break; }
        x = xn;
        t += tau;
        remaining -= tau;
        if (keep_paths) {
          path.push_back(x);
          times.push_back(t);
        }
      }
    }
    if (!ok) {
      ++out.discarded_out_of_domain;
      continue;
    }
    out.endpoints.push_back(x);
    if (keep_paths) {
      out.paths.push_back(std::move(path));
      out.path_times.push_back(std::move(times));
    }
  }
  return out;
}

}  // namespace windcone
