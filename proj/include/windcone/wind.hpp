#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "windcone/norm.hpp"

namespace windcone {

struct DiskRegion {
  Vec2 center;
  double radius = 0.0;
};

struct RectRegion {
  double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
};

struct Exclusion {
  enum class Kind { disk, rect };
  Kind kind = Kind::disk;
  DiskRegion disk;
  RectRegion rect;

  bool contains(Vec2 p) const {
    if (kind == Kind::disk) return norm(p - disk.center) <= disk.radius;
    return p.x >= rect.x0 && p.x <= rect.x1 && p.y >= rect.y0 && p.y <= rect.y1;
  }
  // Euclidean distance to the excluded set (0 inside).
  double distance(Vec2 p) const;
};

// Planar box with a cell-center grid and optional excluded regions.
class BaseDomain {
 public:
  BaseDomain(double x0, double x1, double y0, double y1, int nx, int ny,
             std::vector<Exclusion> exclusions = {});

  double x0() const { return x0_; }
  double x1() const { return x1_; }
  double y0() const { return y0_; }
  double y1() const { return y1_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double cell_dx() const { return dx_; }
  double cell_dy() const { return dy_; }
  double cell_size() const { return std::max(dx_, dy_); }
  double diameter() const { return std::hypot(x1_ - x0_, y1_ - y0_); }
  const std::vector<Exclusion>& exclusions() const { return exclusions_; }

  bool in_box(Vec2 p) const {
    return p.x >= x0_ && p.x <= x1_ && p.y >= y0_ && p.y <= y1_;
  }
  bool excluded(Vec2 p) const {
    for (const auto& e : exclusions_)
      if (e.contains(p)) return true;
    return false;
  }
  bool contains(Vec2 p) const { return in_box(p) && !excluded(p); }

  int cell_count() const { return nx_ * ny_; }
  Vec2 cell_center(int i, int j) const {
    return {x0_ + (i + 0.5) * dx_, y0_ + (j + 0.5) * dy_};
  }
  Vec2 cell_center(int idx) const { return cell_center(idx % nx_, idx / nx_); }
  int cell_index(Vec2 p) const {  // clamped to the grid
    int i = static_cast<int>(std::floor((p.x - x0_) / dx_));
    int j = static_cast<int>(std::floor((p.y - y0_) / dy_));
    i = std::clamp(i, 0, nx_ - 1);
    j = std::clamp(j, 0, ny_ - 1);
    return j * nx_ + i;
  }

 private:
  double x0_, x1_, y0_, y1_;
  int nx_, ny_;
  double dx_, dy_;
  std::vector<Exclusion> exclusions_;
};

enum class RegionClass { mild, critical, strong };

enum class Admissibility { interior, lightlike_boundary, inadmissible };

// Field of velocity bodies over a planar domain: a base norm field F0 plus a
// wind field W. The unit body at p is W(p) + {F0_p <= 1}; the associated
// metrics F / F_l are the lower / upper Zermelo sheet roots.
class WindStructure {
 public:
  // Constant base norm (any Minkowski kind).
  WindStructure(BaseDomain domain, NormSpec f0, std::function<Vec2(Vec2)> wind,
                double eps_critical = 1e-6);
  // Positionally varying Riemannian base norm.
  WindStructure(BaseDomain domain, std::function<SymMat2(Vec2)> h_field,
                std::function<Vec2(Vec2)> wind, double eps_critical = 1e-6);

  const BaseDomain& domain() const { return domain_; }
  double eps_critical() const { return eps_critical_; }
  bool f0_is_field() const { return static_cast<bool>(h_field_); }

  Vec2 wind_at(Vec2 p) const { return wind_(p); }
  NormSpec f0_at(Vec2 p) const {
    return h_field_ ? NormSpec::riemannian(h_field_(p)) : f0_;
  }
  // d0 = F0_p(-W(p)) - 1: negative mild, ~0 critical, positive strong.
  double signed_region_value(Vec2 p) const;

  RegionClass classify_point(Vec2 p) const;   // throws out_of_domain off-domain
  double eval_F(Vec2 p, Vec2 v) const;
  double eval_Fl(Vec2 p, Vec2 v) const;
  Admissibility admissible(Vec2 p, Vec2 v) const;
  ZermeloRoots roots_at(Vec2 p, Vec2 v) const;

  // Support function of the closed velocity body: max_{v in B̄_p} <q, v>.
  double velocity_body_support(Vec2 p, Vec2 q) const;

  // Boundary of B̄_p as a polygon (W + indicatrix of F0_p), counterclockwise.
  std::vector<Vec2> body_polygon(Vec2 p, int vertices = 64) const;

  // Max of the support function over unit covectors (front-speed bound).
  double max_support(int grid_samples = 16, int directions = 32) const;

 private:
  BaseDomain domain_;
  NormSpec f0_ = NormSpec::riemannian(SymMat2::identity());
  std::function<SymMat2(Vec2)> h_field_;
  std::function<Vec2(Vec2)> wind_;
  double eps_critical_;
};

}  // namespace windcone
