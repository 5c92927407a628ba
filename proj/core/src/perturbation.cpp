#include "ergograph/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ergograph/ergodics.hpp"
#include "ergograph/invariant_graph.hpp"
#include "ergograph/io.hpp"
#include "ergograph/parallel.hpp"
#include "ergograph/plane_map.hpp"
#include "ergograph/rng.hpp"

namespace ergograph {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Uniform t and x; every fourth x sits on the boundary circle, where images reach farthest.
SkewState sample_state(const DiskDomain& d, Rng& rng, std::size_t i) {
  const CircleAngle t(rng.uniform());
  if (i % 4 == 0) {
    const double a = rng.uniform(0.0, kTwoPi);
    return {t, d.center + PlanePoint{std::cos(a), std::sin(a)} * d.radius};
  }
  return {t, uniform_in_disk(d, rng)};
}

std::string fmt_bound(const std::string& bound, double value, double limit) {
  return "perturbation rejected: " + bound + " = " + std::to_string(value) + " violates " + std::to_string(limit);
}

}  // namespace

// ---------------------------------------------------------------------------
// Fields

TrigField::TrigField(std::uint64_t seed, int modes) {
  if (modes < 1) throw std::invalid_argument("TrigField: modes must be positive");
  Rng rng(seed);
  double grad[2] = {0, 0}, dt[2] = {0, 0};
  for (int c = 0; c < 2; ++c) {
    double mass = 0.0;
    for (int j = 0; j < modes; ++j) {
      Term term{};
      term.a = rng.uniform(-1.0, 1.0);
      term.n = static_cast<double>(rng.below(5)) - 2.0;
      const double ang = rng.uniform(0.0, kTwoPi), r = std::sqrt(rng.uniform());
      term.w1 = r * std::cos(ang);
      term.w2 = r * std::sin(ang);
      term.phi = rng.uniform(0.0, kTwoPi);
      mass += std::abs(term.a);
      terms_[c].push_back(term);
    }
    for (auto& term : terms_[c]) {
      term.a /= mass;
      grad[c] += std::abs(term.a) * std::hypot(term.w1, term.w2);
      dt[c] += std::abs(term.a) * kTwoPi * std::abs(term.n);
    }
  }
  grad_bound_ = {grad[0], grad[1]};
  dt_bound_ = {dt[0], dt[1]};
}

PlanePoint TrigField::value(CircleAngle t, PlanePoint x) const {
  double v[2] = {0, 0};
  for (int c = 0; c < 2; ++c) {
    for (const auto& m : terms_[c]) v[c] += m.a * std::cos(kTwoPi * m.n * t.value() + m.w1 * x.x1 + m.w2 * x.x2 + m.phi);
  }
  return {v[0], v[1]};
}

Mat2 TrigField::dx(CircleAngle t, PlanePoint x) const {
  double g[2][2] = {{0, 0}, {0, 0}};
  for (int c = 0; c < 2; ++c) {
    for (const auto& m : terms_[c]) {
      const double s = -m.a * std::sin(kTwoPi * m.n * t.value() + m.w1 * x.x1 + m.w2 * x.x2 + m.phi);
      g[c][0] += s * m.w1;
      g[c][1] += s * m.w2;
    }
  }
  return {g[0][0], g[0][1], g[1][0], g[1][1]};
}

PlanePoint TrigField::dt(CircleAngle t, PlanePoint x) const {
  double v[2] = {0, 0};
  for (int c = 0; c < 2; ++c) {
    for (const auto& m : terms_[c]) {
      v[c] -= m.a * kTwoPi * m.n * std::sin(kTwoPi * m.n * t.value() + m.w1 * x.x1 + m.w2 * x.x2 + m.phi);
    }
  }
  return {v[0], v[1]};
}

// ---------------------------------------------------------------------------
// PerturbedFamily

PerturbedFamily::PerturbedFamily(FiberFamilyPtr base, std::shared_ptr<const VectorField> field, double eps)
    : base_(std::move(base)), field_(std::move(field)), eps_(eps) {
  if (!base_ || !field_) throw std::invalid_argument("PerturbedFamily: null base or field");
  if (!(eps_ >= 0.0) || !std::isfinite(eps_)) throw std::invalid_argument("PerturbedFamily: eps must be finite and >= 0");
  // Rows of D_x V are bounded by the component gradient bounds; Frobenius bounds the operator norm.
  lip_field_ = norm(field_->sup_grad());
}

PlanePoint PerturbedFamily::eval(CircleAngle t, PlanePoint x) const {
  if (eps_ == 0.0) return base_->eval(t, x);
  return base_->eval(t, x) + field_->value(t, x) * eps_;
}

Mat2 PerturbedFamily::jacobian(CircleAngle t, PlanePoint x) const {
  if (eps_ == 0.0) return base_->jacobian(t, x);
  return base_->jacobian(t, x) + field_->dx(t, x) * eps_;
}

double PerturbedFamily::lipschitz_on_ball(CircleAngle t, PlanePoint c, double r) const {
  return base_->lipschitz_on_ball(t, c, r) + eps_ * lip_field_;
}

double PerturbedFamily::inverse_lipschitz(CircleAngle t) const {
  const double li = base_->inverse_lipschitz(t);
  if (eps_ == 0.0) return li;
  const double lower = 1.0 / li - eps_ * lip_field_;  // lower bound for the smallest singular value
  return lower > 0.0 ? 1.0 / lower : std::numeric_limits<double>::infinity();
}

Box PerturbedFamily::image_box(CircleAngle t, const Box& b) const {
  const Box inner = base_->image_box(t, b);
  if (eps_ == 0.0) return inner;
  const PlanePoint pad = field_->sup_value() * eps_;
  return {inner.lo - pad, inner.hi + pad};
}

PlanePoint PerturbedFamily::dt(CircleAngle t, PlanePoint x) const {
  if (eps_ == 0.0) return base_->dt(t, x);
  return base_->dt(t, x) + field_->dt(t, x) * eps_;
}

double PerturbedFamily::t_modulus(double a, double b) const {
  return base_->t_modulus(a, b) + eps_ * norm(field_->sup_dt());
}

PlanePoint PerturbedFamily::inverse(CircleAngle t, PlanePoint y) const {
  if (eps_ == 0.0) return base_->inverse(t, y);
  PlanePoint start = y;
  try {
    start = base_->inverse(t, y);
  } catch (const std::domain_error&) {
  }
  return newton_inverse([&](PlanePoint x) { return eval(t, x); }, [&](PlanePoint x) { return jacobian(t, x); }, y,
                        start, domain());
}

// ---------------------------------------------------------------------------
// Validity gate

PerturbationRejected::PerturbationRejected(std::string bound, double value, double limit)
    : std::invalid_argument(fmt_bound(bound, value, limit)), bound_(std::move(bound)), value_(value), limit_(limit) {}

void check_perturbation(const FiberFamily& base, const FiberFamily& perturbed, int samples, std::uint64_t seed) {
  const auto& d = base.domain();
  std::vector<double> radius(static_cast<std::size_t>(samples)), ratio(radius.size());
  parallel_for(radius.size(), [&](std::size_t i) {
    Rng rng(mix_seed(seed, i));
    const auto st = sample_state(d, rng, i);
    radius[i] = distance(perturbed.eval(st.t, st.x), d.center);
    const double db = base.jacobian(st.t, st.x).det();
    const double dp = perturbed.jacobian(st.t, st.x).det();
    ratio[i] = db == 0.0 ? 0.0 : dp / db;  // >= 1/2 keeps the sign and stays away from 0
  });
  const double worst_radius = radius.empty() ? 0.0 : *std::max_element(radius.begin(), radius.end());
  if (worst_radius > d.radius) throw PerturbationRejected("max |f~(x) - center|", worst_radius, d.radius);
  const double worst_ratio = ratio.empty() ? 1.0 : *std::min_element(ratio.begin(), ratio.end());
  if (!(worst_ratio >= 0.5)) throw PerturbationRejected("min det Df~ / det Df", worst_ratio, 0.5);
}

std::shared_ptr<const PerturbedFamily> perturb_family(FiberFamilyPtr base, const PerturbationSpec& spec,
                                                      int gate_samples) {
  if (!(spec.eps >= 0.0) || !std::isfinite(spec.eps)) throw std::invalid_argument("perturb_family: eps must be >= 0");
  if (spec.modes < 1) throw std::invalid_argument("perturb_family: modes must be positive");
  auto out = std::make_shared<const PerturbedFamily>(base, std::make_shared<TrigField>(spec.seed, spec.modes), spec.eps);
  check_perturbation(*base, *out, gate_samples, mix_seed(spec.seed, 0x6a7eULL));
  return out;
}

std::shared_ptr<const PerturbedFamily> perturb_family(const FamilyConfig& base, const PerturbationSpec& spec,
                                                      int gate_samples) {
  return perturb_family(std::make_shared<PlateauFamily>(base), spec, gate_samples);
}

std::shared_ptr<const PerturbedFamily> constant_shift(FiberFamilyPtr base, double eps, int gate_samples) {
  auto out = std::make_shared<const PerturbedFamily>(base, std::make_shared<ConstantField>(PlanePoint{1.0, 0.0}), eps);
  check_perturbation(*base, *out, gate_samples, 0x5417ULL);
  return out;
}

// ---------------------------------------------------------------------------
// C1 distance

C1Distance c1_distance(const FiberFamily& a, const FiberFamily& b, int samples, std::uint64_t seed) {
  struct Row {
    double v = 0, j = 0, iv = 0, ij = 0;
    bool inv = false;
  };
  std::vector<Row> rows(static_cast<std::size_t>(samples));
  const auto& d = a.domain();
  parallel_for(rows.size(), [&](std::size_t i) {
    Rng rng(mix_seed(seed, i));
    const auto st = sample_state(d, rng, i);
    Row& r = rows[i];
    r.v = distance(a.eval(st.t, st.x), b.eval(st.t, st.x));
    r.j = (a.jacobian(st.t, st.x) - b.jacobian(st.t, st.x)).norm();
    // y = f_a(x) lies in the image of a; both inverses are solved so identical families give 0
    try {
      const PlanePoint y = a.eval(st.t, st.x);
      const PlanePoint xa = a.inverse(st.t, y), xb = b.inverse(st.t, y);
      r.iv = distance(xa, xb);
      r.ij = (a.jacobian(st.t, xa).inverse() - b.jacobian(st.t, xb).inverse()).norm();
      r.inv = true;
    } catch (const std::domain_error&) {
    }
  });
  C1Distance out;
  out.samples = rows.size();
  for (const auto& r : rows) {
    out.value = std::max(out.value, r.v);
    out.jacobian = std::max(out.jacobian, r.j);
    if (!r.inv) continue;
    ++out.inverse_samples;
    out.inverse_value = std::max(out.inverse_value, r.iv);
    out.inverse_jacobian = std::max(out.inverse_jacobian, r.ij);
  }
  out.total = std::max({out.value, out.jacobian, out.inverse_value, out.inverse_jacobian});
  return out;
}

// ---------------------------------------------------------------------------
// Dominated splitting

DiagnosticReport dominated_splitting_check(const FiberFamily& family, int samples, std::uint64_t seed) {
  constexpr double step = 1e-6;
  struct Row {
    double dt = 0, dt_inv = 0, dx = 0, dx_inv = 0;
  };
  std::vector<Row> rows(static_cast<std::size_t>(samples));
  const auto& d = family.domain();
  parallel_for(rows.size(), [&](std::size_t i) {
    Rng rng(mix_seed(seed, i));
    const auto st = sample_state(d, rng, i);
    const PlanePoint ft = (family.eval(CircleAngle(st.t.value() + step), st.x) -
                           family.eval(CircleAngle(st.t.value() - step), st.x)) *
                          (0.5 / step);
    const Mat2 j = family.jacobian(st.t, st.x);
    const Mat2 ji = j.inverse();
    // differentiating f_t(f_t^-1(y)) = y in t: d f_t^-1 / dt = -(Df_t)^-1 d f_t / dt at x = f_t^-1(y)
    rows[i] = {norm(ft), norm(ji * ft), j.norm(), ji.norm()};
  });
  double sup_dt = 0, sup_dt_inv = 0, sup_dx = 0, sup_dx_inv = 0;
  for (const auto& r : rows) {
    sup_dt = std::max(sup_dt, r.dt);
    sup_dt_inv = std::max(sup_dt_inv, r.dt_inv);
    sup_dx = std::max(sup_dx, r.dx);
    sup_dx_inv = std::max(sup_dx_inv, r.dx_inv);
  }
  const double k = family.k();
  const double t_term = 1.0 / k + std::max(sup_dt, sup_dt_inv);
  const double x_term = std::max(sup_dx, sup_dx_inv);
  const double l = std::max(t_term, x_term);
  DiagnosticReport rep;
  rep.seed = seed;
  rep.samples = rows.size();
  rep.stats["sup_dt"] = sup_dt;
  rep.stats["sup_dt_inverse"] = sup_dt_inv;
  rep.stats["sup_dx"] = sup_dx;
  rep.stats["sup_dx_inverse"] = sup_dx_inv;
  rep.stats["t_term"] = t_term;
  rep.stats["x_term"] = x_term;
  rep.stats["L"] = l;
  rep.stats["k"] = k;
  rep.stats["margin"] = k - l;
  rep.verdict = l < k ? Verdict::Pass : Verdict::Fail;
  if (t_term >= k) rep.note = "t-derivative term exceeds k";
  return rep;
}

// ---------------------------------------------------------------------------
// Suite

nlohmann::json RobustnessReport::to_json() const {
  nlohmann::json j{{"verdict", to_string(overall.verdict)}, {"seed", overall.seed}};
  for (const auto& [k, v] : overall.stats) j[k] = v;
  nlohmann::json st = nlohmann::json::object();
  for (const auto& [name, rep] : stages) st[name] = ergograph::to_json(rep);
  j["stages"] = st;
  return j;
}

RobustnessReport robustness_suite(FiberFamilyPtr base, const PerturbationSpec& spec, const SuiteBudget& budget) {
  const auto fam = perturb_family(base, spec, budget.gate_samples);
  const auto& f = *fam;
  const double diam = f.domain().diameter();
  const double h = diam / 1024;
  const auto seed = [&](std::uint64_t stage) { return mix_seed(spec.seed, stage); };

  std::vector<Observable> obs{Observable::coordinate(0), Observable::coordinate(1)};
  if (const auto* plateau = dynamic_cast<const PlateauFamily*>(base.get())) {
    obs = default_observables(plateau->config());
  } else {
    obs.push_back(Observable::gaussian(f.domain().center, 0.5));
  }

  RobustnessReport out;
  out.stages.emplace_back("sync", sync_test(f, budget.sync_pairs, budget.sync_steps, budget.sync_tol, seed(1)).report);
  out.stages.emplace_back("lyapunov", lyapunov_batch(f, budget.lyapunov_starts, budget.lyapunov_n, seed(2)).report);
  out.stages.emplace_back("bony", bony_scan(f, budget.bony_samples, budget.bony_depth, 10 * h, seed(3)).report);
  out.stages.emplace_back("usc", usc_batch(f, budget.usc_points, diam / 100, budget.usc_trials, seed(4)));
  out.stages.emplace_back("invariance",
                          invariance_residual(f, budget.invariance_samples, budget.invariance_tol, seed(5)));
  out.stages.emplace_back("srb", srb_independence(f, obs, budget.srb_starts, budget.srb_n, seed(6)));

  bool fail = false, inconclusive = false;
  for (const auto& [name, rep] : out.stages) {
    fail = fail || rep.verdict == Verdict::Fail;
    inconclusive = inconclusive || rep.verdict == Verdict::Inconclusive;
    out.overall.samples += rep.samples;
  }
  out.overall.verdict = fail ? Verdict::Fail : inconclusive ? Verdict::Inconclusive : Verdict::Pass;
  out.overall.seed = spec.seed;
  out.overall.stats["eps"] = spec.eps;
  out.overall.stats["modes"] = spec.modes;
  return out;
}

RobustnessReport robustness_suite(const FamilyConfig& base, const PerturbationSpec& spec, const SuiteBudget& budget) {
  return robustness_suite(std::make_shared<PlateauFamily>(base), spec, budget);
}

}  // namespace ergograph
