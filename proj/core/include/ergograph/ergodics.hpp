#pragma once

// Ergodic statistics along skew-product orbits: Lyapunov exponents, Birkhoff averages, SRB
// start-independence, graph-measure sampling, correlation decay, contraction on average.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ergograph/attractor.hpp"
#include "ergograph/fiber_family.hpp"
#include "ergograph/geometry.hpp"
#include "ergograph/skew_product.hpp"

namespace ergograph {

/// Built-in bounded test functions on S^1 x X.
class Observable {
 public:
  enum class Kind { Constant, Coordinate, Gaussian, Trig, BaseCos };

  static Observable constant(double c);
  /// x1 (axis 0) or x2 (axis 1).
  static Observable coordinate(int axis);
  /// exp(-|x - center|^2 / (2 width^2)).
  static Observable gaussian(PlanePoint center, double width);
  /// cos(2 pi (a t + b x1 + c x2)).
  static Observable trig(int a, double b, double c);
  /// cos(2 pi freq t); depends on the base only.
  static Observable base_cos(int freq);

  double operator()(CircleAngle t, PlanePoint x) const;
  /// sup |obs| over S^1 x X.
  double sup_norm(const DiskDomain& domain) const;
  std::string name() const;
  Kind kind() const { return kind_; }

  nlohmann::json to_json() const;
  static Observable from_json(const nlohmann::json& j);

 private:
  Kind kind_ = Kind::Constant;
  double c_ = 0.0;
  int axis_ = 0;
  PlanePoint center_{};
  double width_ = 1.0;
  int a_ = 0;
  double b_ = 0.0;
  double cc_ = 0.0;
};

/// x1, x2 and a Gaussian bump at x0 of width 1/2.
std::vector<Observable> default_observables(const FamilyConfig& cfg);

/// (1/n) sum log |Df v_i| with v renormalized every step; v_0 = (1, 1)/sqrt 2. The base runs as a
/// BaseOrbit seeded by `seed`.
double lyapunov_top(const FiberFamily& family, SkewState start, std::uint64_t n, std::uint64_t seed);
/// Both exponents by Gram-Schmidt on a frame, largest first.
std::array<double, 2> lyapunov_spectrum(const FiberFamily& family, SkewState start, std::uint64_t n,
                                        std::uint64_t seed);

struct LyapunovBatch {
  DiagnosticReport report;  // PASS iff the bootstrap CI upper bound is negative
  std::vector<double> estimates;
  double mean = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

/// lyapunov_top from `starts` random (t, x); percentile bootstrap (95%) of the mean.
LyapunovBatch lyapunov_batch(const FiberFamily& family, int starts, std::uint64_t n, std::uint64_t seed,
                             int bootstrap = 2000);

/// Empirical prefactors for ||Df^k(t, x)|| <= C e^{rate k}: log C_i = max_{0 <= k <= n} (log ||Df^k|| - rate k)
/// along the orbit of start i. Starts and base orbits are those of lyapunov_batch with the same seed.
std::vector<double> lyapunov_prefactors(const FiberFamily& family, int starts, std::uint64_t n, double rate,
                                        std::uint64_t seed);

struct BirkhoffResult {
  double mean = 0.0;
  double se = 0.0;  // batch-means standard error (100 batches)
};

BirkhoffResult birkhoff(const FiberFamily& family, const Observable& obs, SkewState start, std::uint64_t n,
                        std::uint64_t seed);
inline double birkhoff_average(const FiberFamily& family, const Observable& obs, SkewState start, std::uint64_t n,
                               std::uint64_t seed) {
  return birkhoff(family, obs, start, n, seed).mean;
}

/// For every observable: Birkhoff averages from `starts` random (t, x) with independent base orbits.
/// spread = standard deviation of the averages, se = root mean square of their batch-means SEs.
/// PASS iff spread <= 3 se for every observable (stats `spread_i`, `se_i`, `mean_i`).
/// `per_start`, when given, receives runs[start][observable].
DiagnosticReport srb_independence(const FiberFamily& family, const std::vector<Observable>& observables, int starts,
                                  std::uint64_t n, std::uint64_t seed,
                                  std::vector<std::vector<BirkhoffResult>>* per_start = nullptr);

/// x-parts of certified pullbacks over solenoid samples, unit weights.
EmpiricalMeasure graph_measure_sample(const FiberFamily& family, int samples, double tol, std::uint64_t seed);

struct CorrelationDecay {
  std::vector<double> c;   // C_0 .. C_nmax
  std::vector<double> se;  // block-bootstrap standard errors (block length 100)
};

/// C_n = |<obs1 (obs2 o F^n)> - <obs1><obs2>| along one orbit of length orbit_len.
CorrelationDecay correlation_decay(const FiberFamily& family, const Observable& obs1, const Observable& obs2,
                                   int n_max, std::uint64_t orbit_len, std::uint64_t seed, int bootstrap = 200);

/// Lipschitz estimates C_i per map (max of sampled pair ratios and sampled ||Df_i||, including at
/// the map's attracting point) and sum p_i log C_i. PASS iff the sum is below -margin.
DiagnosticReport avg_contraction_check(const Ifs& ifs, int samples, std::uint64_t seed,
                                       std::vector<double> weights = {}, double margin = 1e-3);

}  // namespace ergograph
