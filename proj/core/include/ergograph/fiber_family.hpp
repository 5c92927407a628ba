#pragma once

// The fiber maps f_t of the skew product: the abstract family interface, the plateau/rotation
// construction with its analytic derivatives, and simple reference families used as oracles.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ergograph/geometry.hpp"
#include "ergograph/plane_map.hpp"

namespace ergograph {

/// Closed arc [lo, hi] of S^1 written with lo <= hi (lo may be negative to straddle 0).
struct Arc {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool contains(CircleAngle t) const { return CircleAngle::reduce(t.value() - lo) <= length(); }
  bool operator==(const Arc&) const = default;
};

struct FamilyConfig {
  int m = 2;
  int k = 8;
  double lambda = 0.5;
  double lambda_prime = 0.9;
  double delta = 0.1;
  double beta = 0.0;
  std::vector<int> n;     // n_1 .. n_m, with n_1 = 0
  std::vector<double> t;  // t_1 .. t_2m
  std::vector<Arc> arcs;  // I_1 .. I_2m
  PlanePoint x0{1.0, 0.0};
  PlanePoint z{0.0, 0.0};
  DiskDomain domain{{0.0, 0.0}, 3.0};

  /// m = 2, k = 8, lambda = 0.5, lambda' = 0.9, beta = golden-ratio conjugate, n_2 = 2.
  static FamilyConfig defaults();
  /// Derives k, delta, t and arcs from m, lambda', beta, n (arcs centred on t_i).
  static FamilyConfig derived(int m, double lambda, double lambda_prime, double beta, std::vector<int> n);

  bool operator==(const FamilyConfig&) const = default;
};

struct ConfigIssue {
  std::string pointer;  // JSON pointer of the offending field
  std::string message;
};

class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

/// Every violated constraint, empty when the configuration is valid.
std::vector<ConfigIssue> validate(const FamilyConfig& cfg);

nlohmann::json to_json(const FamilyConfig& cfg);
/// Strict parse: unknown or missing keys and wrong types raise ConfigError.
FamilyConfig family_config_from_json(const nlohmann::json& j);

/// A continuous family t -> f_t of planar diffeomorphisms of a disk X into itself.
class FiberFamily {
 public:
  virtual ~FiberFamily() = default;

  virtual const DiskDomain& domain() const = 0;
  /// Degree of the base map.
  virtual int k() const = 0;
  /// Angles whose fiber maps are the IFS generators.
  virtual std::vector<double> generator_angles() const = 0;

  virtual PlanePoint eval(CircleAngle t, PlanePoint x) const = 0;
  virtual Mat2 jacobian(CircleAngle t, PlanePoint x) const = 0;
  /// Upper bound for Lip(f_t) on the ball B(c, r).
  virtual double lipschitz_on_ball(CircleAngle t, PlanePoint c, double r) const = 0;
  /// Upper bound for Lip(f_t^{-1}) on f_t(X).
  virtual double inverse_lipschitz(CircleAngle t) const = 0;
  /// Box containing f_t(b). Default: via the circumscribed ball.
  virtual Box image_box(CircleAngle t, const Box& b) const;
  /// Partial derivative in t. Default: central difference.
  virtual PlanePoint dt(CircleAngle t, PlanePoint x) const;
  /// Bound for sup ||d f_t / dt|| over t in [a, b] (as real numbers, b - a <= 1) and x in X.
  /// Default: sampled estimate with a safety factor.
  virtual double t_modulus(double a, double b) const;
  /// Solves f_t(x) = y. Throws std::domain_error when y is not in f_t(X).
  virtual PlanePoint inverse(CircleAngle t, PlanePoint y) const;
};

using FiberFamilyPtr = std::shared_ptr<const FiberFamily>;

/// f_t viewed as a plane map (for IFS-level algorithms and enclosures).
class FiberSlice final : public PlaneMap {
 public:
  FiberSlice(const FiberFamily& family, CircleAngle t) : family_(&family), t_(t) {}
  FiberSlice(FiberFamilyPtr family, CircleAngle t) : owner_(std::move(family)), family_(owner_.get()), t_(t) {}

  CircleAngle t() const { return t_; }
  PlanePoint apply(PlanePoint x) const override { return family_->eval(t_, x); }
  Mat2 jacobian(PlanePoint x) const override { return family_->jacobian(t_, x); }
  double lipschitz_on_ball(PlanePoint c, double r) const override { return family_->lipschitz_on_ball(t_, c, r); }
  double inverse_lipschitz() const override { return family_->inverse_lipschitz(t_); }
  Box image_box(const Box& b) const override { return family_->image_box(t_, b); }
  PlanePoint inverse(PlanePoint y) const override { return family_->inverse(t_, y); }

 private:
  FiberFamilyPtr owner_;
  const FiberFamily* family_;
  CircleAngle t_;
};

/// The generators f_{t_1}, ..., f_{t_2m} as plane maps sharing ownership of the family.
std::vector<PlaneMapPtr> generator_maps(const FiberFamilyPtr& family);

/// The plateau construction: h_tau = R_{2 pi tau, z} o g_{eta(tau)}, f_t = h_{theta(t)}, where in
/// coordinates (u, v) = x - x0, g_c(x0 + (u, v)) = x0 + ((1 - c) s(u), lambda v) with the weak
/// contraction s(u) = u/3 + (2/3) atan(u).
class PlateauFamily final : public FiberFamily {
 public:
  /// Throws ConfigError when the configuration violates any constraint.
  explicit PlateauFamily(FamilyConfig cfg);
  /// Skips validation; for planted counterexamples only.
  static PlateauFamily unchecked(FamilyConfig cfg);

  const FamilyConfig& config() const { return cfg_; }

  static double s(double u);
  static double s_prime(double u);
  /// s(u) - u, accurate near 0.
  static double s_minus_identity(double u);
  /// Inverse of s (s is a strictly increasing bijection of R).
  static double s_inverse(double w);

  /// Bump in [0, delta]: zero at 0, 1/2, 1; delta on the two plateaus; quintic ramps.
  double eta(double tau) const;
  double eta_prime(double tau) const;
  /// Plateau map: t_i on I_i; quintic ramps between consecutive plateaus; rises to 1 on the wrap gap.
  double theta(CircleAngle t) const;
  double theta_prime(CircleAngle t) const;

  PlanePoint g_eval(double c, PlanePoint x) const;
  /// Throws std::domain_error for x outside X.
  PlanePoint h_eval(double tau, PlanePoint x) const;
  Mat2 h_jacobian(double tau, PlanePoint x) const;
  /// Unique fixed point of h_tau: fixed-point iteration from z with Newton acceleration; stops
  /// when successive iterates are within 1e-13. Throws InconclusiveError after 1e6 iterations.
  PlanePoint fixed_point(double tau) const;

  const DiskDomain& domain() const override { return cfg_.domain; }
  int k() const override { return cfg_.k; }
  std::vector<double> generator_angles() const override { return cfg_.t; }
  PlanePoint eval(CircleAngle t, PlanePoint x) const override;
  Mat2 jacobian(CircleAngle t, PlanePoint x) const override;
  double lipschitz_on_ball(CircleAngle t, PlanePoint c, double r) const override;
  double inverse_lipschitz(CircleAngle t) const override;
  Box image_box(CircleAngle t, const Box& b) const override;
  PlanePoint dt(CircleAngle t, PlanePoint x) const override;
  double t_modulus(double a, double b) const override;
  PlanePoint inverse(CircleAngle t, PlanePoint y) const override;

 private:
  struct Unchecked {};
  PlateauFamily(FamilyConfig cfg, Unchecked);

  // Index of the arc containing t, or of the gap following arc i (returned as -1 - i).
  int locate(CircleAngle t) const;
  PlanePoint h_unchecked(double tau, PlanePoint x) const;
  double h_tau_modulus() const;

  FamilyConfig cfg_;
};

/// Same map for every t.
class ConstantFamily final : public FiberFamily {
 public:
  ConstantFamily(PlaneMapPtr map, DiskDomain domain, int k, int generators = 1);

  const DiskDomain& domain() const override { return domain_; }
  int k() const override { return k_; }
  std::vector<double> generator_angles() const override;
  PlanePoint eval(CircleAngle, PlanePoint x) const override { return map_->apply(x); }
  Mat2 jacobian(CircleAngle, PlanePoint x) const override { return map_->jacobian(x); }
  double lipschitz_on_ball(CircleAngle, PlanePoint c, double r) const override { return map_->lipschitz_on_ball(c, r); }
  double inverse_lipschitz(CircleAngle) const override { return map_->inverse_lipschitz(); }
  Box image_box(CircleAngle, const Box& b) const override { return map_->image_box(b); }
  PlanePoint dt(CircleAngle, PlanePoint) const override { return {0.0, 0.0}; }
  double t_modulus(double, double) const override { return 0.0; }
  PlanePoint inverse(CircleAngle, PlanePoint y) const override { return map_->inverse(y); }

 private:
  PlaneMapPtr map_;
  DiskDomain domain_;
  int k_;
  int generators_;
};

/// Piecewise-constant in t: map i on [breaks[i], breaks[i+1]) (breaks start at 0). Discontinuous
/// in t by design; used as a planted counterexample.
class PiecewiseFamily final : public FiberFamily {
 public:
  PiecewiseFamily(std::vector<double> breaks, std::vector<PlaneMapPtr> maps, DiskDomain domain, int k);

  const DiskDomain& domain() const override { return domain_; }
  int k() const override { return k_; }
  std::vector<double> generator_angles() const override { return breaks_; }
  PlanePoint eval(CircleAngle t, PlanePoint x) const override { return piece(t).apply(x); }
  Mat2 jacobian(CircleAngle t, PlanePoint x) const override { return piece(t).jacobian(x); }
  double lipschitz_on_ball(CircleAngle t, PlanePoint c, double r) const override {
    return piece(t).lipschitz_on_ball(c, r);
  }
  double inverse_lipschitz(CircleAngle t) const override { return piece(t).inverse_lipschitz(); }
  Box image_box(CircleAngle t, const Box& b) const override { return piece(t).image_box(b); }
  PlanePoint inverse(CircleAngle t, PlanePoint y) const override { return piece(t).inverse(y); }

 private:
  const PlaneMap& piece(CircleAngle t) const;

  std::vector<double> breaks_;
  std::vector<PlaneMapPtr> maps_;
  DiskDomain domain_;
  int k_;
};

// Free-function spellings of the family operations.
inline PlanePoint fiber_eval(const FiberFamily& f, CircleAngle t, PlanePoint x) { return f.eval(t, x); }
inline Mat2 fiber_jacobian(const FiberFamily& f, CircleAngle t, PlanePoint x) { return f.jacobian(t, x); }
inline PlanePoint fiber_inverse(const FiberFamily& f, CircleAngle t, PlanePoint y) { return f.inverse(t, y); }

/// Random pairs x != y in X and random t: max d(f_t x, f_t y)/d(x, y) must stay <= 1 + 1e-12, and
/// on the eta = delta plateaus the sampled sup ||Df_t|| must stay <= max(lambda', lambda) + 1e-9.
DiagnosticReport contraction_report(const PlateauFamily& family, std::uint64_t samples, std::uint64_t seed);

/// Analytic Jacobian against central differences (step 1e-6) at random (t, x) with x at least 1e-3
/// inside X; error of each entry relative to ||Df||. PASS iff the max is below rel_tol.
DiagnosticReport jacobian_consistency(const FiberFamily& family, std::uint64_t samples, std::uint64_t seed,
                                      double rel_tol = 1e-6);

/// Eigenvalues of Df_{t_1}(x0) against {1, lambda} and of Dg_delta(x0) against {lambda', lambda}
/// (g_delta read off a plateau with eta = delta, rotation removed). PASS iff all within tol.
DiagnosticReport weak_point_report(const PlateauFamily& family, double tol = 1e-9);

/// Uniform point in the closed disk.
class Rng;
PlanePoint uniform_in_disk(const DiskDomain& d, Rng& rng);

}  // namespace ergograph
