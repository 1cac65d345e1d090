#include "windcone/wind.hpp"

#include <algorithm>
#include <cmath>

namespace windcone {

double Exclusion::distance(Vec2 p) const {
  if (kind == Kind::disk) {
    return std::max(0.0, norm(p - disk.center) - disk.radius);
  }
  double dx = std::max({rect.x0 - p.x, 0.0, p.x - rect.x1});
  double dy = std::max({rect.y0 - p.y, 0.0, p.y - rect.y1});
  return std::hypot(dx, dy);
}

BaseDomain::BaseDomain(double x0, double x1, double y0, double y1, int nx, int ny,
                       std::vector<Exclusion> exclusions)
    : x0_(x0), x1_(x1), y0_(y0), y1_(y1), nx_(nx), ny_(ny),
      exclusions_(std::move(exclusions)) {
  if (!(x1 > x0) || !(y1 > y0))
    throw Error(ErrorCode::configuration, "domain box must have positive extent");
  if (nx < 16 || ny < 16)
    throw Error(ErrorCode::configuration, "grid resolution must be at least 16x16");
  dx_ = (x1_ - x0_) / nx_;
  dy_ = (y1_ - y0_) / ny_;
  for (const auto& e : exclusions_) {
    bool inside;
    if (e.kind == Exclusion::Kind::disk) {
      const auto& d = e.disk;
      inside = d.center.x - d.radius > x0 && d.center.x + d.radius < x1 &&
               d.center.y - d.radius > y0 && d.center.y + d.radius < y1;
    } else {
      const auto& r = e.rect;
      inside = r.x0 > x0 && r.x1 < x1 && r.y0 > y0 && r.y1 < y1;
    }
    if (!inside)
      throw Error(ErrorCode::configuration,
                  "excluded regions must lie strictly inside the domain box");
  }
}

WindStructure::WindStructure(BaseDomain domain, NormSpec f0,
                             std::function<Vec2(Vec2)> wind, double eps_critical)
    : domain_(std::move(domain)), f0_(std::move(f0)), wind_(std::move(wind)),
      eps_critical_(eps_critical) {
  if (!f0_.is_minkowski())
    throw Error(ErrorCode::configuration, "F0 field must be a Minkowski norm");
}

WindStructure::WindStructure(BaseDomain domain, std::function<SymMat2(Vec2)> h_field,
                             std::function<Vec2(Vec2)> wind, double eps_critical)
    : domain_(std::move(domain)), h_field_(std::move(h_field)),
      wind_(std::move(wind)), eps_critical_(eps_critical) {}

double WindStructure::signed_region_value(Vec2 p) const {
  return eval_norm(f0_at(p), -wind_at(p)) - 1.0;
}

RegionClass WindStructure::classify_point(Vec2 p) const {
  if (!domain_.contains(p))
    throw Error(ErrorCode::out_of_domain, "point outside domain or excluded");
  double d0 = signed_region_value(p);
  if (d0 < -eps_critical_) return RegionClass::mild;
  if (d0 <= eps_critical_) return RegionClass::critical;
  return RegionClass::strong;
}

ZermeloRoots WindStructure::roots_at(Vec2 p, Vec2 v) const {
  return zermelo_roots(f0_at(p), wind_at(p), v);
}

double WindStructure::eval_F(Vec2 p, Vec2 v) const {
  double d0 = signed_region_value(p);
  if (norm(v) == 0.0) {
    if (d0 < -eps_critical_) return 0.0;
    if (d0 <= eps_critical_) return 1.0;
    return kInf;
  }
  return roots_at(p, v).lo;
}

double WindStructure::eval_Fl(Vec2 p, Vec2 v) const {
  double d0 = signed_region_value(p);
  if (d0 <= eps_critical_) {
    // F_l lives on the strong region only; the critical zero-vector carries
    // the convention F(0) = F_l(0) = 1.
    if (norm(v) == 0.0 && d0 >= -eps_critical_) return 1.0;
    return kInf;
  }
  if (norm(v) == 0.0) return kInf;
  return roots_at(p, v).hi;
}

Admissibility WindStructure::admissible(Vec2 p, Vec2 v) const {
  if (norm(v) == 0.0)
    throw Error(ErrorCode::configuration, "admissible requires v != 0");
  double d0 = signed_region_value(p);
  if (d0 < -eps_critical_) return Admissibility::interior;  // A_p is the whole plane
  ZermeloRoots r = roots_at(p, v);
  if (!r.admissible) return Admissibility::inadmissible;
  if (d0 <= eps_critical_) return Admissibility::interior;  // open half-plane
  return r.boundary ? Admissibility::lightlike_boundary : Admissibility::interior;
}

double WindStructure::velocity_body_support(Vec2 p, Vec2 q) const {
  if (norm(q) == 0.0)
    throw Error(ErrorCode::configuration, "support function requires q != 0");
  NormSpec f0 = f0_at(p);
  double base;
  if (f0.kind() == NormSpec::Kind::riemannian) {
    base = std::sqrt(std::max(0.0, f0.h().inverse().quad(q)));
  } else {
    // Sampled maximum over the indicatrix, golden-ratio refined around the
    // best arc.
    auto pts = indicatrix_sample(f0, 256);
    int best = 0;
    double best_val = -kInf;
    for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
      double val = dot(q, pts[i]);
      if (val > best_val) { best_val = val; best = i; }
    }
    auto value_at = [&](double angle) {
      Vec2 u = dir_of(angle);
      double f = eval_norm(f0, u);
      return dot(q, u / f);
    };
    int n = static_cast<int>(pts.size());
    double a = std::atan2(pts[(best + n - 1) % n].y, pts[(best + n - 1) % n].x);
    double b = std::atan2(pts[(best + 1) % n].y, pts[(best + 1) % n].x);
    while (b < a) b += 2.0 * M_PI;
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
    double f1 = value_at(x1), f2 = value_at(x2);
    for (int k = 0; k < 60; ++k) {
      if (f1 >= f2) {
        b = x2; x2 = x1; f2 = f1;
        x1 = b - invphi * (b - a);
        f1 = value_at(x1);
      } else {
        a = x1; x1 = x2; f1 = f2;
        x2 = a + invphi * (b - a);
        f2 = value_at(x2);
      }
    }
    base = std::max(best_val, std::max(f1, f2));
  }
  return dot(q, wind_at(p)) + base;
}

std::vector<Vec2> WindStructure::body_polygon(Vec2 p, int vertices) const {
  NormSpec f0 = f0_at(p);
  Vec2 w = wind_at(p);
  std::vector<Vec2> poly;
  poly.reserve(vertices);
  if (f0.kind() == NormSpec::Kind::riemannian) {
    SymMat2 t = f0.h().inverse().sqrt_pd();  // maps the unit circle to {F0 = 1}
    for (int i = 0; i < vertices; ++i)
      poly.push_back(w + t.apply(dir_of(2.0 * M_PI * i / vertices)));
  } else {
    for (Vec2 v : indicatrix_sample(f0, vertices)) poly.push_back(w + v);
  }
  return poly;
}

double WindStructure::max_support(int grid_samples, int directions) const {
  double s = 0.0;
  const auto& d = domain_;
  for (int j = 0; j < grid_samples; ++j) {
    for (int i = 0; i < grid_samples; ++i) {
      Vec2 p{d.x0() + (i + 0.5) * (d.x1() - d.x0()) / grid_samples,
             d.y0() + (j + 0.5) * (d.y1() - d.y0()) / grid_samples};
      if (d.excluded(p)) continue;
      for (int k = 0; k < directions; ++k)
        s = std::max(s, velocity_body_support(p, dir_of(2.0 * M_PI * k / directions)));
    }
  }
  return s;
}

}  // namespace windcone
