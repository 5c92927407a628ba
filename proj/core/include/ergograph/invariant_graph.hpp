#pragma once

// Pullback invariant graph gamma of the solenoidal skew product, fiber sets, and the probes built
// on them: upper semicontinuity, bone statistics, synchronization and invariance residuals.

#include <cstdint>
#include <string>
#include <vector>

#include "ergograph/fiber_family.hpp"
#include "ergograph/geometry.hpp"
#include "ergograph/plane_map.hpp"
#include "ergograph/skew_product.hpp"

namespace ergograph {

/// X(s, n, x) = f_{t_-1} o f_{t_-2} o ... o f_{t_-n}(x): the fiber point over t_0 reached from x placed
/// n steps back. Needs s.depth() >= n. With this indexing f_{t_0}(gamma(s)) = gamma(xi(s)).
PlanePoint pullback_point(const FiberFamily& family, const SolenoidPoint& s, std::size_t n, PlanePoint x);
/// Ball-and-box enclosure of X(s, n, X); its bound() certifies |gamma(s) - point|.
Enclosure pullback_enclosure(const FiberFamily& family, const SolenoidPoint& s, std::size_t n);

struct GraphSample {
  SolenoidPoint s;
  PlanePoint gamma;
  std::size_t depth_used = 0;
  double tail_bound = 0.0;  // certified |gamma - true limit|
};

/// Doubles the depth from 16 until the certified tail is below tol / 2 and consecutive estimates
/// agree within tol / 2. Throws InconclusiveError (carrying the best bound) when s is too short.
GraphSample pullback_gamma(const FiberFamily& family, const SolenoidPoint& s, double tol);
/// Fixed depth, no certification requirement.
GraphSample pullback_at_depth(const FiberFamily& family, const SolenoidPoint& s, std::size_t depth);

/// 16 hex digits of FNV-1a over the digit bytes.
std::string digits_digest(const SolenoidPoint& s);

struct FiberSet {
  GridSet set;
  std::vector<PlanePoint> boundary;  // image of the boundary polygon of X
  double diameter = 0.0;             // of the boundary polygon
};

/// X(s, depth, X) tracked as the image of a boundary polygon of X and filled on `grid`.
FiberSet fiber_set(const FiberFamily& family, const SolenoidPoint& s, std::size_t depth, const GridGeometry& grid,
                   int boundary_samples = 256);

/// Distance from p to the closed region bounded by `polygon` (0 inside).
double distance_to_polygon_region(PlanePoint p, const std::vector<PlanePoint>& polygon);

struct UscOptions {
  std::size_t depth = 200;
  int boundary_samples = 128;
  double delta_start = 0x1.0p-4;
  double delta_min = 0x1.0p-30;
};

/// Largest delta in {delta_start / 2^j} such that every sampled s' with d_S(s, s') < delta has
/// its fiber set inside the eps-neighbourhood of the fiber set of s. FAIL when delta_min is reached.
DiagnosticReport usc_probe(const FiberFamily& family, const SolenoidPoint& s, double eps, int trials,
                           std::uint64_t seed, const UscOptions& options = {});

/// usc_probe at `points` random base points (backward words of length options.depth + 64).
/// PASS iff every probe passes; stats `min_delta`, `max_excursion`, `failures`.
DiagnosticReport usc_batch(const FiberFamily& family, int points, double eps, int trials, std::uint64_t seed,
                           const UscOptions& options = {});

struct BonyScan {
  DiagnosticReport report;
  std::vector<double> diameters;
};

/// Fiber-set diameters over random solenoid points; bone_fraction = share above diam_tol.
/// PASS iff bone_fraction <= max_bone_fraction.
BonyScan bony_scan(const FiberFamily& family, int samples, std::size_t depth, double diam_tol, std::uint64_t seed,
                   double max_bone_fraction = 0.01, int boundary_samples = 256);

struct BoneTrendPoint {
  int resolution = 0;  // grid cells across diam X
  double diam_tol = 0.0;
  double bone_fraction = 0.0;
};
/// Share of fiber diameters above cells * h with h = diam_x / resolution, for each resolution.
std::vector<BoneTrendPoint> bone_fraction_trend(const std::vector<double>& diameters, double diam_x,
                                                const std::vector<int>& resolutions, double cells = 10.0);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};
/// `bins` equal-width bins over [0, max(values)].
std::vector<HistogramBin> histogram(const std::vector<double>& values, int bins);

struct SyncResult {
  DiagnosticReport report;
  std::vector<std::int64_t> steps;  // first step with |x_n - y_n| < tol, -1 if never
};

/// Random t and x != y driven by the same base orbit. PASS iff at least 99% of pairs meet.
SyncResult sync_test(const FiberFamily& family, int pairs, std::int64_t max_steps, double tol, std::uint64_t seed);

/// max |f_{t0}(gamma(s)) - gamma(xi(s))| over random s, both sides from independent pullbacks
/// with tails below tol / 4. fixed_depth > 0 replaces the certified pullback by a fixed depth.
/// PASS iff the max residual is below tol.
DiagnosticReport invariance_residual(const FiberFamily& family, int samples, double tol, std::uint64_t seed,
                                     std::size_t fixed_depth = 0);

/// Pullback points over random backward branches of the base point t.
std::vector<PlanePoint> base_fiber_points(const FiberFamily& family, CircleAngle t, int branches, std::size_t depth,
                                          std::uint64_t seed);
GridSet base_fiber_cloud(const FiberFamily& family, CircleAngle t, int branches, std::size_t depth,
                         std::uint64_t seed, const GridGeometry& grid);

/// Backward-word length used by the samplers. Certified pullbacks at tol 1e-9 typically stop at
/// depth 64-128; the slack covers words that linger near the weak fixed point.
inline constexpr std::size_t kDeepSolenoid = 1024;

}  // namespace ergograph
