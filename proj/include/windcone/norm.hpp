#pragma once

#include <memory>
#include <vector>

#include "windcone/error.hpp"
#include "windcone/geometry.hpp"

namespace windcone {

// Pointwise positively-1-homogeneous norm description with its conic domain.
//
// Kinds:
//   Riemannian(h)            F(v) = sqrt(h(v,v)), h positive definite.
//   Randers(h, omega)        F(v) = sqrt(h(v,v)) + omega(v), |omega|_h* < 1.
//   Kropina(F0, beta)        F(v) = F0(v)^2 / beta(v) on the half-plane beta(v) > 0.
//   ZermeloSheet(F0, W, s)   F(v) = requested positive root of F0(v - t W) = t;
//                            s = lower picks the smallest root (conic sheet),
//                            s = upper the largest (Lorentz sheet).
class NormSpec {
 public:
  enum class Kind { riemannian, randers, kropina, zermelo_sheet };
  enum class Sheet { lower, upper };

  static NormSpec riemannian(SymMat2 h);
  static NormSpec randers(SymMat2 h, Vec2 omega);
  static NormSpec kropina(NormSpec base, Vec2 beta);
  static NormSpec zermelo_sheet(NormSpec base, Vec2 wind, Sheet sheet);

  Kind kind() const { return kind_; }
  Sheet sheet() const { return sheet_; }
  const SymMat2& h() const { return h_; }
  Vec2 covector() const { return covector_; }  // omega (Randers) or beta (Kropina)
  Vec2 wind() const { return wind_; }
  const NormSpec& base() const { return *base_; }

  // True when the base norm is a classical Minkowski norm (domain the whole
  // plane): Riemannian or Randers.
  bool is_minkowski() const {
    return kind_ == Kind::riemannian || kind_ == Kind::randers;
  }

 private:
  NormSpec() = default;
  Kind kind_ = Kind::riemannian;
  Sheet sheet_ = Sheet::lower;
  SymMat2 h_ = SymMat2::identity();
  Vec2 covector_{};
  Vec2 wind_{};
  std::shared_ptr<const NormSpec> base_;
};

struct FundamentalTensor {
  Vec2 v;        // base vector (point implicit)
  SymMat2 g;     // symmetric by construction
};

enum class Signature { positive_definite, lorentzian, degenerate };

// Conic domain of a norm: conic, i.e. closed under positive scaling.
struct ConicDomain {
  enum class Kind { full, half_plane, cone };
  Kind kind = Kind::full;
  Vec2 beta{};          // half_plane: open side beta(v) > 0
  Vec2 axis{};          // cone: unit axis direction
  double half_angle = 0.0;

  bool contains(Vec2 v) const;
};

// Root pair of Phi(t) = F0(v - t W) - t. Non-admissible directions carry
// lo = hi = +inf; single-root (mild/critical) directions carry hi = +inf.
struct ZermeloRoots {
  double lo = kInf;
  double hi = kInf;
  bool admissible = false;
  bool boundary = false;  // double root within tolerance (lightlike direction)
};

ZermeloRoots zermelo_roots(const NormSpec& base, Vec2 wind, Vec2 v);

// F(v); +inf when v is outside the conic domain. v = 0 returns 0 for
// full-domain norms and +inf otherwise (callers owning a zero-vector
// convention handle it before calling).
double eval_norm(const NormSpec& spec, Vec2 v);

ConicDomain conic_domain(const NormSpec& spec);

// Central second differences of L = F^2 with Richardson extrapolation;
// step <= 0 selects the default 1e-4*|v|.
FundamentalTensor fundamental_tensor(const NormSpec& spec, Vec2 v, double step = 0.0);

Signature classify_signature(const FundamentalTensor& g);

// Vectors v_i with F(v_i) = 1, parameter-ordered along the indicatrix
// component(s) inside the conic domain.
std::vector<Vec2> indicatrix_sample(const NormSpec& spec, int count);

struct ConvexityReport {
  bool ok = false;
  double min_tangential_eigenvalue = kInf;
  int samples_checked = 0;
};

// Restricts g_v to the tangent line of the indicatrix at each sample and
// checks positivity.
ConvexityReport strong_convexity_check(const NormSpec& spec, int count);

}  // namespace windcone
