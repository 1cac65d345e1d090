#include "windcone/norm.hpp"

#include <algorithm>
#include <cmath>

namespace windcone {

namespace {

// Tighter than the documented 1e-12 so finite-difference stencils of L = F^2
// stay quiet; still bracketed bisection.
constexpr int kMaxRootIterations = 200;
constexpr double kRootRelTol = 1e-15;

double dual_norm_riemannian(const SymMat2& h, Vec2 q) {
  return std::sqrt(std::max(0.0, h.inverse().quad(q)));
}

}  // namespace

NormSpec NormSpec::riemannian(SymMat2 h) {
  auto eig = h.eigenvalues();
  if (eig[1] <= 0.0)
    throw Error(ErrorCode::configuration, "Riemannian metric must be positive definite");
  NormSpec s;
  s.kind_ = Kind::riemannian;
  s.h_ = h;
  return s;
}

NormSpec NormSpec::randers(SymMat2 h, Vec2 omega) {
  auto eig = h.eigenvalues();
  if (eig[1] <= 0.0)
    throw Error(ErrorCode::configuration, "Randers metric part must be positive definite");
  if (dual_norm_riemannian(h, omega) >= 1.0)
    throw Error(ErrorCode::configuration, "Randers one-form must have h-dual norm < 1");
  NormSpec s;
  s.kind_ = Kind::randers;
  s.h_ = h;
  s.covector_ = omega;
  return s;
}

NormSpec NormSpec::kropina(NormSpec base, Vec2 beta) {
  if (!base.is_minkowski())
    throw Error(ErrorCode::configuration, "Kropina base must be a Minkowski norm");
  if (norm(beta) == 0.0)
    throw Error(ErrorCode::configuration, "Kropina one-form must be nonzero");
  NormSpec s;
  s.kind_ = Kind::kropina;
  s.covector_ = beta;
  s.base_ = std::make_shared<NormSpec>(std::move(base));
  return s;
}

NormSpec NormSpec::zermelo_sheet(NormSpec base, Vec2 wind, Sheet sheet) {
  if (!base.is_minkowski())
    throw Error(ErrorCode::configuration, "ZermeloSheet base must be a Minkowski norm");
  NormSpec s;
  s.kind_ = Kind::zermelo_sheet;
  s.wind_ = wind;
  s.sheet_ = sheet;
  s.base_ = std::make_shared<NormSpec>(std::move(base));
  return s;
}

bool ConicDomain::contains(Vec2 v) const {
  switch (kind) {
    case Kind::full:
      return true;
    case Kind::half_plane:
      return dot(beta, v) > 0.0;
    case Kind::cone: {
      double n = norm(v);
      if (n == 0.0) return false;
      return dot(axis, v) >= n * std::cos(half_angle);
    }
  }
  return false;
}

// Lower-branch bisection: Phi(lo) > 0, Phi(hi) <= 0.
static double bisect_down(const NormSpec& base, Vec2 wind, Vec2 v, double lo, double hi) {
  auto phi = [&](double t) { return eval_norm(base, v - t * wind) - t; };
  for (int it = 0; it < kMaxRootIterations; ++it) {
    double mid = 0.5 * (lo + hi);
    if (hi - lo <= kRootRelTol * std::max(1e-300, std::abs(mid))) return mid;
    if (phi(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  double mid = 0.5 * (lo + hi);
  throw Error(ErrorCode::numerical_failure, "Zermelo root bisection did not converge",
              phi(mid));
}

// Upper-branch bisection: Phi(lo) <= 0, Phi(hi) > 0.
static double bisect_up(const NormSpec& base, Vec2 wind, Vec2 v, double lo, double hi) {
  auto phi = [&](double t) { return eval_norm(base, v - t * wind) - t; };
  for (int it = 0; it < kMaxRootIterations; ++it) {
    double mid = 0.5 * (lo + hi);
    if (hi - lo <= kRootRelTol * std::max(1e-300, std::abs(mid))) return mid;
    if (phi(mid) > 0.0)
      hi = mid;
    else
      lo = mid;
  }
  double mid = 0.5 * (lo + hi);
  throw Error(ErrorCode::numerical_failure, "Zermelo root bisection did not converge",
              phi(mid));
}

ZermeloRoots zermelo_roots(const NormSpec& base, Vec2 wind, Vec2 v) {
  ZermeloRoots out;
  if (norm(v) == 0.0) return out;

  auto phi = [&](double t) { return eval_norm(base, v - t * wind) - t; };
  double f0v = eval_norm(base, v);
  if (wind.x == 0.0 && wind.y == 0.0) {
    // Phi(t) = F0(v) - t: the root is exact.
    out.lo = f0v;
    out.admissible = true;
    return out;
  }
  double d0 = eval_norm(base, -wind) - 1.0;  // mild < 0, critical = 0, strong > 0

  if (d0 < -1e-9) {
    // Mild: Phi is convex with Phi(0) > 0 and Phi -> -inf; unique root.
    double hi = f0v / (-d0) * 2.0 + 1.0;
    while (phi(hi) > 0.0) hi *= 2.0;
    out.lo = bisect_down(base, wind, v, 0.0, hi);
    out.admissible = true;
    return out;
  }
  if (d0 <= 1e-9) {
    // Critical: Phi decreases to the limit dF0(-W)[v]; a root exists iff the
    // limit is negative (the Kropina half-plane).
    double hi = std::max(1.0, 2.0 * f0v);
    bool found = false;
    for (int k = 0; k < 80; ++k) {
      if (phi(hi) <= 0.0) { found = true; break; }
      hi *= 2.0;
      if (hi > 1e18) break;
    }
    if (!found) return out;  // inadmissible (beta(v) <= 0)
    out.lo = bisect_down(base, wind, v, 0.0, hi);
    out.admissible = true;
    return out;
  }

  // Strong: Phi convex, Phi(0) > 0, Phi(+inf) = +inf. Locate the minimizer by
  // golden-section after bracketing, then bisect each branch.
  double a = 0.0, m = f0v, b = 2.0 * f0v;
  double fm = phi(m), fb = phi(b);
  // Grow until the middle point is a strict bracket of the minimum.
  for (int k = 0; k < 200 && fb < fm; ++k) {
    a = m; m = b; fm = fb;
    b *= 2.0;
    fb = phi(b);
    if (b > 1e18) break;
  }
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
  double f1 = phi(x1), f2 = phi(x2);
  for (int k = 0; k < 160 && (b - a) > 1e-14 * std::max(1.0, b); ++k) {
    if (f1 <= f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = phi(x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = phi(x2);
    }
  }
  double tstar = 0.5 * (a + b);
  double fstar = phi(tstar);
  const double tol = 1e-10 * (1.0 + tstar);
  if (fstar > tol) return out;  // no real roots: outside the cone
  if (fstar >= -tol) {
    out.lo = out.hi = tstar;
    out.admissible = true;
    out.boundary = true;
    return out;
  }
  out.lo = bisect_down(base, wind, v, 0.0, tstar);
  double hi = std::max(2.0 * tstar, 1.0);
  while (phi(hi) <= 0.0) hi *= 2.0;
  out.hi = bisect_up(base, wind, v, tstar, hi);
  out.admissible = true;
  out.boundary = (out.hi - out.lo) <= 1e-8 * out.hi;
  return out;
}

double eval_norm(const NormSpec& spec, Vec2 v) {
  switch (spec.kind()) {
    case NormSpec::Kind::riemannian:
      return std::sqrt(std::max(0.0, spec.h().quad(v)));
    case NormSpec::Kind::randers:
      return std::sqrt(std::max(0.0, spec.h().quad(v))) + dot(spec.covector(), v);
    case NormSpec::Kind::kropina: {
      double b = dot(spec.covector(), v);
      if (b <= 0.0) return kInf;
      double f0 = eval_norm(spec.base(), v);
      return f0 * f0 / b;
    }
    case NormSpec::Kind::zermelo_sheet: {
      if (norm(v) == 0.0) return kInf;
      ZermeloRoots r = zermelo_roots(spec.base(), spec.wind(), v);
      return spec.sheet() == NormSpec::Sheet::lower ? r.lo : r.hi;
    }
  }
  return kInf;
}

ConicDomain conic_domain(const NormSpec& spec) {
  ConicDomain d;
  switch (spec.kind()) {
    case NormSpec::Kind::riemannian:
    case NormSpec::Kind::randers:
      d.kind = ConicDomain::Kind::full;
      return d;
    case NormSpec::Kind::kropina:
      d.kind = ConicDomain::Kind::half_plane;
      d.beta = spec.covector();
      return d;
    case NormSpec::Kind::zermelo_sheet: {
      double d0 = eval_norm(spec.base(), -spec.wind()) - 1.0;
      if (d0 < -1e-9) {
        d.kind = ConicDomain::Kind::full;
        return d;
      }
      if (d0 <= 1e-9) {
        // Critical: half-plane beta(v) > 0 with beta = -dF0(-W), computed by
        // differencing along the two axes.
        Vec2 w = spec.wind();
        double t = 1e-7 * (1.0 + norm(w));
        double fx = (eval_norm(spec.base(), Vec2{t, 0} - w) -
                     eval_norm(spec.base(), -w)) / t;
        double fy = (eval_norm(spec.base(), Vec2{0, t} - w) -
                     eval_norm(spec.base(), -w)) / t;
        d.kind = ConicDomain::Kind::half_plane;
        d.beta = {-fx, -fy};
        return d;
      }
      // Strong: scan admissible angles, refine the two boundary rays.
      const int n = 1024;
      int first = -1;
      std::vector<bool> adm(n);
      for (int i = 0; i < n; ++i) {
        Vec2 u = dir_of(2.0 * M_PI * i / n);
        adm[i] = zermelo_roots(spec.base(), spec.wind(), u).admissible;
        if (adm[i] && first < 0) first = i;
      }
      if (first < 0)
        throw Error(ErrorCode::empty_indicatrix, "no admissible directions");
      // Walk to the arc containing `first`.
      int lo = first, hi = first;
      while (adm[(lo - 1 + n) % n] && (first - lo) < n) --lo;
      while (adm[(hi + 1) % n] && (hi - first) < n) ++hi;
      auto refine = [&](double in_angle, double out_angle) {
        for (int k = 0; k < 60; ++k) {
          double mid = 0.5 * (in_angle + out_angle);
          if (zermelo_roots(spec.base(), spec.wind(), dir_of(mid)).admissible)
            in_angle = mid;
          else
            out_angle = mid;
        }
        return in_angle;
      };
      double step = 2.0 * M_PI / n;
      double a0 = refine(lo * step, (lo - 1) * step);
      double a1 = refine(hi * step, (hi + 1) * step);
      d.kind = ConicDomain::Kind::cone;
      d.axis = dir_of(0.5 * (a0 + a1));
      d.half_angle = 0.5 * (a1 - a0);
      return d;
    }
  }
  return d;
}

static double eval_L(const NormSpec& spec, Vec2 v) {
  double f = eval_norm(spec, v);
  if (!std::isfinite(f)) return kInf;
  return f * f;
}

static SymMat2 hessian_L(const NormSpec& spec, Vec2 v, double h) {
  auto L = [&](Vec2 u) { return eval_L(spec, u); };
  double c = L(v);
  double xx = (L({v.x + h, v.y}) - 2.0 * c + L({v.x - h, v.y})) / (h * h);
  double yy = (L({v.x, v.y + h}) - 2.0 * c + L({v.x, v.y - h})) / (h * h);
  double xy = (L({v.x + h, v.y + h}) - L({v.x + h, v.y - h}) -
               L({v.x - h, v.y + h}) + L({v.x - h, v.y - h})) / (4.0 * h * h);
  return {xx, xy, yy};
}

FundamentalTensor fundamental_tensor(const NormSpec& spec, Vec2 v, double step) {
  double f = eval_norm(spec, v);
  if (!std::isfinite(f))
    throw Error(ErrorCode::out_of_domain, "vector outside the norm's conic domain");
  double h = step > 0.0 ? step : 1e-4 * norm(v);
  if (h <= 0.0)
    throw Error(ErrorCode::configuration, "fundamental_tensor requires v != 0");

  // Probe a ring of radius 2*step: stencil points must stay inside the domain.
  for (int k = 0; k < 8; ++k) {
    Vec2 p = v + 2.0 * h * dir_of(2.0 * M_PI * k / 8.0);
    if (!std::isfinite(eval_norm(spec, p)))
      throw Error(ErrorCode::boundary_proximity,
                  "vector within 2*step of the domain boundary");
  }

  SymMat2 dh = hessian_L(spec, v, h);
  SymMat2 dh2 = hessian_L(spec, v, 0.5 * h);
  // Richardson: (4 D(h/2) - D(h)) / 3, then g = Hess/2.
  SymMat2 g{(4.0 * dh2.xx - dh.xx) / 6.0, (4.0 * dh2.xy - dh.xy) / 6.0,
            (4.0 * dh2.yy - dh.yy) / 6.0};
  return {v, g};
}

Signature classify_signature(const FundamentalTensor& t) {
  auto eig = t.g.eigenvalues();
  double tol = 1e-9 * std::max(std::abs(eig[0]), std::abs(eig[1]));
  if (tol == 0.0) return Signature::degenerate;
  if (std::abs(eig[0]) <= tol || std::abs(eig[1]) <= tol) return Signature::degenerate;
  if (eig[0] > 0.0 && eig[1] > 0.0) return Signature::positive_definite;
  if (eig[0] > 0.0 && eig[1] < 0.0) return Signature::lorentzian;
  return Signature::degenerate;  // negative definite cannot occur for g_v with F(v) > 0
}

std::vector<Vec2> indicatrix_sample(const NormSpec& spec, int count) {
  if (count < 3)
    throw Error(ErrorCode::configuration, "indicatrix_sample requires count >= 3");
  const int scan = std::max(512, 8 * count);
  std::vector<bool> adm(scan);
  int admissible_count = 0;
  for (int i = 0; i < scan; ++i) {
    double f = eval_norm(spec, dir_of(2.0 * M_PI * i / scan));
    adm[i] = std::isfinite(f) && f > 0.0;
    admissible_count += adm[i];
  }
  if (admissible_count < 3)
    throw Error(ErrorCode::empty_indicatrix, "fewer than 3 admissible directions");

  std::vector<Vec2> out;
  out.reserve(count);
  auto sample_at = [&](double angle) {
    Vec2 u = dir_of(angle);
    double f = eval_norm(spec, u);
    if (std::isfinite(f) && f > 0.0) out.push_back(u / f);
  };

  if (admissible_count == scan) {
    for (int i = 0; i < count; ++i) sample_at(2.0 * M_PI * i / count);
    return out;
  }

  // Partial domain: locate the admissible arc (wraparound-aware), refine its
  // endpoints, and place samples slightly inset from the boundary rays.
  int start = 0;
  while (start < scan && adm[start]) ++start;  // an inadmissible index exists
  int first = -1;
  for (int k = 0; k < scan; ++k) {
    int i = (start + k) % scan;
    if (adm[i]) { first = i; break; }
  }
  int last = first;
  while (adm[(last + 1) % scan]) last = (last + 1) % scan;

  double step = 2.0 * M_PI / scan;
  auto refine = [&](double in_angle, double out_angle) {
    for (int k = 0; k < 60; ++k) {
      double mid = 0.5 * (in_angle + out_angle);
      double f = eval_norm(spec, dir_of(mid));
      if (std::isfinite(f) && f > 0.0)
        in_angle = mid;
      else
        out_angle = mid;
    }
    return in_angle;
  };
  double a0 = refine(first * step, (first - 1) * step);
  double span = last >= first ? (last - first) * step
                              : (last + scan - first) * step;
  double a1 = refine(first * step + span, first * step + span + step);
  double width = a1 - a0;
  for (int i = 0; i < count; ++i) sample_at(a0 + (i + 0.5) * width / count);
  if (static_cast<int>(out.size()) < 3)
    throw Error(ErrorCode::empty_indicatrix, "fewer than 3 admissible directions");
  return out;
}

ConvexityReport strong_convexity_check(const NormSpec& spec, int count) {
  if (count < 16)
    throw Error(ErrorCode::configuration, "strong_convexity_check requires count >= 16");
  ConvexityReport rep;
  auto samples = indicatrix_sample(spec, count);
  for (Vec2 v : samples) {
    FundamentalTensor t = fundamental_tensor(spec, v);
    // The indicatrix tangent at v is g_v-orthogonal to v.
    Vec2 tangent = unit(perp(t.g.apply(v)));
    double q = t.g.quad(tangent);
    rep.min_tangential_eigenvalue = std::min(rep.min_tangential_eigenvalue, q);
    ++rep.samples_checked;
  }
  rep.ok = rep.samples_checked > 0 && rep.min_tangential_eigenvalue > 0.0;
  return rep;
}

}  // namespace windcone
