#pragma once

// IFS-level computations: Hutchinson iteration on grids, coding map, weak hyperbolicity scans,
// covering certificates, chaos game, transfer operator, cusp regions.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ergograph/fiber_family.hpp"
#include "ergograph/geometry.hpp"
#include "ergograph/plane_map.hpp"

namespace ergograph {

struct Ifs {
  std::vector<PlaneMapPtr> maps;
  DiskDomain domain;
};

/// The 2m generators f_{t_i} of a fiber family on its domain.
Ifs generator_ifs(const FiberFamilyPtr& family);

/// Outer approximation of f(K): every occupied cell center c is mapped and the cells within
/// L h sqrt(2)/2 + h of f(c) are marked, L = f.lipschitz_on_ball(c, h sqrt(2)/2).
GridSet grid_image(const PlaneMap& f, const GridSet& k, double extra_radius = 0.0);

/// Union of the generator images.
GridSet hutchinson_step(const Ifs& ifs, const GridSet& k);
/// Union of f_t(K) over t in S^1: every generator plus `samples` angles spread over the gaps
/// between plateaus, each dilated by t_modulus over its share of the gap.
GridSet hutchinson_step_circle(const FiberFamily& family, const GridSet& k, int samples = 1024);

enum class HutchinsonMode { Generators, Circle };

struct AttractorRun {
  GridSet set;
  std::vector<double> log;  // Hausdorff distance between successive iterates
};

using SetOperator = std::function<GridSet(const GridSet&)>;

/// Iterates until two successive sets are within `tol` (Hausdorff). Throws InconclusiveError
/// after max_iters steps.
AttractorRun attractor_iterate(const SetOperator& op, const GridSet& seed, double tol, int max_iters);

struct CodingPoint {
  PlanePoint point;
  double radius = 0.0;  // certified: f_w(X) lies in B(point, radius)
};

/// f_{w_0} o ... o f_{w_{n-1}}(X) by ball-and-box enclosures (0-based generator indices). Throws
/// InconclusiveError when the certified radius is not below tol.
CodingPoint coding_point(const Ifs& ifs, std::span<const int> word, double tol);

struct WeakHyperbolicityScan {
  DiagnosticReport report;
  std::vector<double> max_profile;     // max cloud diameter over words after j maps, j = 0..depth
  std::vector<double> median_profile;
};

/// Images of a boundary cloud of X under random compositions. Forward composition of i.i.d.
/// words has the same law as the coding-map composition, so one pass yields the whole profile.
/// PASS iff the max diameter at `depth` is below rel_threshold * diam(X).
WeakHyperbolicityScan weak_hyperbolicity_scan(const Ifs& ifs, int words, int depth, std::uint64_t seed,
                                              double rel_threshold = 1e-3, int boundary_samples = 256);

/// Superellipse |q1/a|^p + |q2/b|^p <= 1 in coordinates rotated by `angle` about `center`;
/// exponent 2 is the ellipse, +inf the rectangle.
struct EllipseSpec {
  PlanePoint center;
  double a = 1.0;
  double b = 1.0;
  double angle = 0.0;
  double exponent = 2.0;

  /// Gauge: <= 1 exactly on the region.
  double gauge(PlanePoint p) const;
  bool contains(PlanePoint p) const { return gauge(p) <= 1.0; }
  /// Lower bound on the distance to the boundary inside; minus an upper bound on the distance to
  /// the region outside.
  double depth(PlanePoint p) const;
  /// Lower bound on the distance to the region (0 inside).
  double outside_distance_lower(PlanePoint p) const;
  Box bounding_box() const;
  /// Point on the boundary at parameter s in [0, 1).
  PlanePoint boundary_point(double s) const;
};

/// Rasterizes Cl(B) outward and the generator images of B inward (a cell counts only when its
/// preimage lies at depth >= Lip(f^{-1}) h sqrt(2)/2), then reports
/// margin = inclusion_margin(Cl(B), union). PASS iff margin >= margin_req.
DiagnosticReport covering_verify(const Ifs& ifs, const EllipseSpec& region, double margin_req, int resolution = 512);

struct CoveringSearchResult {
  std::optional<EllipseSpec> best;
  double proxy_margin = 0.0;
  DiagnosticReport report;  // covering_verify of the best candidate with margin_req 0
};

/// Random search then coordinate descent over centre, axes, angle and exponent, maximizing a
/// sampled margin proxy; `budget` proxy evaluations.
CoveringSearchResult covering_search(const Ifs& ifs, int budget, std::uint64_t seed, int resolution = 512);

/// Uniform i.i.d. generator choices; points after burn_in with unit weights.
EmpiricalMeasure chaos_game(const Ifs& ifs, std::size_t n, std::size_t burn_in, std::uint64_t seed, PlanePoint start);

/// Pushforward mixture (1/|maps|) sum f_i_* mu; systematic resampling down to `cap` atoms.
EmpiricalMeasure transfer_step(const Ifs& ifs, const EmpiricalMeasure& mu, std::uint64_t seed,
                               std::size_t cap = std::size_t{1} << 16);

struct CuspRegions {
  std::vector<GridSet> regions;   // W_1 .. W_depth
  std::vector<double> diameters;  // of the tracked boundary polygons
};

/// x0 + [0.05, 0.35] x [-0.15, 0.15].
Box default_cusp_rectangle(const FamilyConfig& cfg);
/// W_{j+1} = f(W_j) tracked as a boundary polygon and filled on the grid.
CuspRegions cusp_regions(const PlaneMap& f, const GridGeometry& grid, const Box& w1, int depth,
                         int boundary_samples = 4096);

/// Cells whose centers lie inside the closed polygon, plus the cells of its vertices.
GridSet fill_polygon(const GridGeometry& grid, std::span<const PlanePoint> polygon);

}  // namespace ergograph
