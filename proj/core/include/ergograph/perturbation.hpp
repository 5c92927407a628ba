#pragma once

// C1-small fiber perturbations f~_t = f_t + eps V(t, x), their C1 distance to the base family, the
// modified dominated splitting check, and a diagnostic suite re-run on the perturbed family.

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ergograph/fiber_family.hpp"
#include "ergograph/geometry.hpp"

namespace ergograph {

struct PerturbationSpec {
  double eps = 0.0;
  std::uint64_t seed = 0;
  int modes = 4;  // trigonometric terms per component
};

/// Smooth vector field on S^1 x R^2 with closed-form derivatives and global bounds.
class VectorField {
 public:
  virtual ~VectorField() = default;
  virtual PlanePoint value(CircleAngle t, PlanePoint x) const = 0;
  virtual Mat2 dx(CircleAngle t, PlanePoint x) const = 0;
  virtual PlanePoint dt(CircleAngle t, PlanePoint x) const = 0;
  /// Per-component bounds: sup |V_c|, sup |grad_x V_c|, sup |d V_c / dt|.
  virtual PlanePoint sup_value() const = 0;
  virtual PlanePoint sup_grad() const = 0;
  virtual PlanePoint sup_dt() const = 0;
};

/// V_c(t, x) = sum_j a_cj cos(2 pi n_cj t + w_cj . x + phi_cj) / sum_j |a_cj|, with integer
/// n_cj in [-2, 2] and |w_cj| <= 1, so |V_c| <= 1 and |grad V_c| <= 1.
class TrigField final : public VectorField {
 public:
  TrigField(std::uint64_t seed, int modes);

  PlanePoint value(CircleAngle t, PlanePoint x) const override;
  Mat2 dx(CircleAngle t, PlanePoint x) const override;
  PlanePoint dt(CircleAngle t, PlanePoint x) const override;
  PlanePoint sup_value() const override { return {1.0, 1.0}; }
  PlanePoint sup_grad() const override { return grad_bound_; }
  PlanePoint sup_dt() const override { return dt_bound_; }

 private:
  struct Term {
    double a, n, w1, w2, phi;
  };
  std::vector<Term> terms_[2];
  PlanePoint grad_bound_{}, dt_bound_{};
};

class ConstantField final : public VectorField {
 public:
  explicit ConstantField(PlanePoint v) : v_(v) {}
  PlanePoint value(CircleAngle, PlanePoint) const override { return v_; }
  Mat2 dx(CircleAngle, PlanePoint) const override { return {}; }
  PlanePoint dt(CircleAngle, PlanePoint) const override { return {}; }
  PlanePoint sup_value() const override { return {std::abs(v_.x1), std::abs(v_.x2)}; }
  PlanePoint sup_grad() const override { return {}; }
  PlanePoint sup_dt() const override { return {}; }

 private:
  PlanePoint v_;
};

/// base + eps V. eps = 0 forwards every call to the base unchanged.
class PerturbedFamily final : public FiberFamily {
 public:
  PerturbedFamily(FiberFamilyPtr base, std::shared_ptr<const VectorField> field, double eps);

  const FiberFamily& base() const { return *base_; }
  double eps() const { return eps_; }

  const DiskDomain& domain() const override { return base_->domain(); }
  int k() const override { return base_->k(); }
  std::vector<double> generator_angles() const override { return base_->generator_angles(); }
  PlanePoint eval(CircleAngle t, PlanePoint x) const override;
  Mat2 jacobian(CircleAngle t, PlanePoint x) const override;
  double lipschitz_on_ball(CircleAngle t, PlanePoint c, double r) const override;
  double inverse_lipschitz(CircleAngle t) const override;
  Box image_box(CircleAngle t, const Box& b) const override;
  PlanePoint dt(CircleAngle t, PlanePoint x) const override;
  double t_modulus(double a, double b) const override;
  PlanePoint inverse(CircleAngle t, PlanePoint y) const override;

 private:
  FiberFamilyPtr base_;
  std::shared_ptr<const VectorField> field_;
  double eps_;
  double lip_field_;  // bound for ||D_x V||
};

/// Raised by the validity gate; names the violated bound.
class PerturbationRejected : public std::invalid_argument {
 public:
  PerturbationRejected(std::string bound, double value, double limit);
  const std::string& bound() const { return bound_; }
  double value() const { return value_; }
  double limit() const { return limit_; }

 private:
  std::string bound_;
  double value_, limit_;
};

/// Sampled validity: f~_t(X) inside X and det Df~_t of the base's sign with |det| >= |det Df_t| / 2.
/// Samples are split between the boundary circle and the interior. Throws PerturbationRejected.
void check_perturbation(const FiberFamily& base, const FiberFamily& perturbed, int samples, std::uint64_t seed);

/// Trigonometric perturbation of `base`, gated by check_perturbation.
std::shared_ptr<const PerturbedFamily> perturb_family(FiberFamilyPtr base, const PerturbationSpec& spec,
                                                      int gate_samples = 20000);
std::shared_ptr<const PerturbedFamily> perturb_family(const FamilyConfig& base, const PerturbationSpec& spec,
                                                      int gate_samples = 20000);
/// base + eps (1, 0), gated.
std::shared_ptr<const PerturbedFamily> constant_shift(FiberFamilyPtr base, double eps, int gate_samples = 20000);

struct C1Distance {
  double value = 0.0;             // sup |f - f~|
  double jacobian = 0.0;          // sup ||Df - Df~||
  double inverse_value = 0.0;     // sup |f^-1 - f~^-1| on sampled common image points
  double inverse_jacobian = 0.0;  // sup ||Df^-1 - Df~^-1||
  double total = 0.0;             // max of the four
  std::uint64_t samples = 0;
  std::uint64_t inverse_samples = 0;
};

/// Monte-Carlo lower bound for the C1 distance of maps and inverses over S^1 x X.
C1Distance c1_distance(const FiberFamily& a, const FiberFamily& b, int samples, std::uint64_t seed);

/// L = max(1/k + sup ||d f_t^{+-1} / dt||, sup ||d f_t^{+-1} / dx||) by sampling; t-derivatives by
/// central differences (inverse via the implicit function identity). PASS iff L < k.
DiagnosticReport dominated_splitting_check(const FiberFamily& family, int samples, std::uint64_t seed);

struct SuiteBudget {
  int sync_pairs = 100;
  std::int64_t sync_steps = 5000;
  double sync_tol = 1e-8;
  int lyapunov_starts = 50;
  std::uint64_t lyapunov_n = 100000;
  int bony_samples = 200;
  std::size_t bony_depth = 200;
  int usc_points = 20;
  int usc_trials = 10;
  int invariance_samples = 100;
  double invariance_tol = 1e-6;
  int srb_starts = 50;
  std::uint64_t srb_n = 100000;
  int gate_samples = 20000;
};

struct RobustnessReport {
  DiagnosticReport overall;  // worst stage verdict
  std::vector<std::pair<std::string, DiagnosticReport>> stages;
  nlohmann::json to_json() const;
};

/// Builds the perturbed family (validity gate may throw PerturbationRejected) and re-runs sync,
/// lyapunov, bony, usc, invariance and srb on it. Thresholds scale with diam X as in the baseline
/// diagnostics: bony diam_tol = 10 h and usc eps = diam X / 100, with h = diam X / 1024.
RobustnessReport robustness_suite(const FamilyConfig& base, const PerturbationSpec& spec, const SuiteBudget& budget = {});
RobustnessReport robustness_suite(FiberFamilyPtr base, const PerturbationSpec& spec, const SuiteBudget& budget = {});

}  // namespace ergograph
