#pragma once

// Planar, circle and solenoid primitives shared by every other module.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ergograph {

struct PlanePoint {
  double x1 = 0.0;
  double x2 = 0.0;

  constexpr PlanePoint operator+(PlanePoint o) const { return {x1 + o.x1, x2 + o.x2}; }
  constexpr PlanePoint operator-(PlanePoint o) const { return {x1 - o.x1, x2 - o.x2}; }
  constexpr PlanePoint operator*(double s) const { return {x1 * s, x2 * s}; }
  constexpr bool operator==(const PlanePoint&) const = default;
};

inline double norm(PlanePoint p) { return std::hypot(p.x1, p.x2); }
inline double distance(PlanePoint a, PlanePoint b) { return norm(a - b); }
inline bool is_finite(PlanePoint p) { return std::isfinite(p.x1) && std::isfinite(p.x2); }

/// 2x2 real matrix, row major.
struct Mat2 {
  double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static constexpr Mat2 diag(double d1, double d2) { return {d1, 0.0, 0.0, d2}; }
  static Mat2 rotation(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c, -s, s, c};
  }

  constexpr PlanePoint operator*(PlanePoint p) const {
    return {a11 * p.x1 + a12 * p.x2, a21 * p.x1 + a22 * p.x2};
  }
  constexpr Mat2 operator*(const Mat2& o) const {
    return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
            a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
  }
  constexpr Mat2 operator+(const Mat2& o) const {
    return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22};
  }
  constexpr Mat2 operator-(const Mat2& o) const {
    return {a11 - o.a11, a12 - o.a12, a21 - o.a21, a22 - o.a22};
  }
  constexpr Mat2 operator*(double s) const { return {a11 * s, a12 * s, a21 * s, a22 * s}; }
  constexpr bool operator==(const Mat2&) const = default;

  constexpr double det() const { return a11 * a22 - a12 * a21; }
  constexpr double trace() const { return a11 + a22; }
  Mat2 inverse() const;
  /// Singular values, largest first.
  std::array<double, 2> singular_values() const;
  /// Spectral (operator 2-) norm.
  double norm() const { return singular_values()[0]; }
  /// Moduli of the eigenvalues, largest first (complex pairs share a modulus).
  std::array<double, 2> eigenvalue_moduli() const;
  /// Real eigenvalues sorted descending; throws std::domain_error for a complex pair.
  std::array<double, 2> real_eigenvalues() const;
};

struct DiskDomain {
  PlanePoint center{};
  double radius = 1.0;

  /// Closed-disk membership with an optional slack.
  bool contains(PlanePoint p, double slack = 0.0) const {
    return distance(p, center) <= radius + slack;
  }
  double diameter() const { return 2.0 * radius; }
  bool operator==(const DiskDomain&) const = default;
};

/// Point of S^1 = R/Z; the stored representative is always in [0, 1).
class CircleAngle {
 public:
  constexpr CircleAngle() = default;
  explicit CircleAngle(double t) : t_(reduce(t)) {}

  double value() const { return t_; }
  static double reduce(double t) {
    double r = t - std::floor(t);
    return r >= 1.0 ? 0.0 : r;
  }

 private:
  double t_ = 0.0;
};

/// Arc-length distance on S^1, in [0, 1/2].
double circle_dist(CircleAngle a, CircleAngle b);

/// Truncated backward orbit (t_0; d_{-1}, ..., d_{-N}) of t -> k t mod 1.
/// Coordinates satisfy t_{-j-1} = (t_{-j} + d_{-j-1}) / k, so k t_{-j-1} = t_{-j} mod 1.
class SolenoidPoint {
 public:
  SolenoidPoint(CircleAngle t0, std::vector<std::uint8_t> digits, int k);

  CircleAngle t0() const { return CircleAngle(coords_.front()); }
  int k() const { return k_; }
  std::size_t depth() const { return digits_.size(); }
  const std::vector<std::uint8_t>& digits() const { return digits_; }
  /// t_{-j} for j = 0..depth().
  double coordinate(std::size_t j) const { return coords_.at(j); }
  std::span<const double> coordinates() const { return coords_; }

  bool operator==(const SolenoidPoint& o) const {
    return k_ == o.k_ && digits_ == o.digits_ && coords_.front() == o.coords_.front();
  }

 private:
  std::vector<std::uint8_t> digits_;
  std::vector<double> coords_;
  int k_;
};

/// d_S = sum_{i=0}^{N} d(t_{-i}, t'_{-i}) / 2^i over the common truncation depth.
double solenoid_metric(const SolenoidPoint& a, const SolenoidPoint& b);

/// Counter-clockwise hull without collinear points.
std::vector<PlanePoint> convex_hull(std::vector<PlanePoint> pts);
/// Largest pairwise distance (rotating calipers on the hull).
double point_cloud_diameter(std::span<const PlanePoint> points);

/// Uniform cell lattice over an axis-aligned box.
struct GridGeometry {
  PlanePoint lo{};
  double h = 1.0;
  int nx = 0;
  int ny = 0;

  /// Square lattice covering the disk's bounding box with `divisions` cells per side.
  static GridGeometry for_domain(const DiskDomain& domain, int divisions = 1024);
  /// Square lattice of cell size h covering [lo, hi].
  static GridGeometry covering(PlanePoint lo, PlanePoint hi, double h);

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(ix);
  }
  PlanePoint cell_center(int ix, int iy) const {
    return {lo.x1 + (ix + 0.5) * h, lo.x2 + (iy + 0.5) * h};
  }
  PlanePoint cell_center(std::size_t idx) const {
    return cell_center(static_cast<int>(idx % nx), static_cast<int>(idx / nx));
  }
  /// Cell containing p, or false when p lies outside the lattice.
  bool locate(PlanePoint p, int& ix, int& iy) const;
  bool operator==(const GridGeometry&) const = default;
};

/// Occupancy-grid representation of a compact planar set.
class GridSet {
 public:
  GridSet() = default;
  explicit GridSet(GridGeometry geometry)
      : geom_(geometry), cells_(geometry.size(), 0) {}
  GridSet(GridGeometry geometry, std::vector<std::uint8_t> cells);

  static GridSet full_disk(const GridGeometry& geometry, const DiskDomain& domain);
  static GridSet single_cell(const GridGeometry& geometry, PlanePoint p);
  static GridSet from_points(const GridGeometry& geometry, std::span<const PlanePoint> points);

  const GridGeometry& geometry() const { return geom_; }
  const std::vector<std::uint8_t>& cells() const { return cells_; }
  bool test(int ix, int iy) const { return cells_[geom_.index(ix, iy)] != 0; }
  bool test(std::size_t idx) const { return cells_[idx] != 0; }
  void set(int ix, int iy) { cells_[geom_.index(ix, iy)] = 1; }
  void set(std::size_t idx) { cells_[idx] = 1; }
  /// Marks the cell containing p; points outside the lattice are ignored.
  void mark(PlanePoint p);
  /// Marks every cell whose center lies within `radius` of p.
  void stamp(PlanePoint p, double radius);

  std::size_t count() const;
  bool empty() const { return count() == 0; }
  std::vector<std::size_t> occupied() const;
  /// Largest distance between occupied cell centers.
  double diameter() const;

  GridSet& operator|=(const GridSet& o);
  bool operator==(const GridSet& o) const { return geom_ == o.geom_ && cells_ == o.cells_; }

 private:
  GridGeometry geom_{};
  std::vector<std::uint8_t> cells_;
};

GridSet set_union(const GridSet& a, const GridSet& b);
/// Cells whose center lies within r of an occupied cell center.
GridSet dilate(const GridSet& a, double r);
/// Exact Euclidean distance (in plane units) from every cell center to the nearest occupied cell
/// center of `a`; +inf everywhere when `a` is empty.
std::vector<double> distance_field(const GridSet& a);

/// Symmetric Hausdorff distance between the occupied cell-center clouds.
double hausdorff_distance(const GridSet& a, const GridSet& b);

/// Largest eps such that the eps-dilation of every occupied cell of A lies in B; negative when
/// A is not contained in B. Cells outside the lattice count as outside B.
double inclusion_margin(const GridSet& a, const GridSet& b);

/// Weighted planar point cloud of total mass 1.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure() = default;
  EmpiricalMeasure(std::vector<PlanePoint> points, std::vector<double> weights);

  static EmpiricalMeasure uniform(std::vector<PlanePoint> points);
  static EmpiricalMeasure dirac(PlanePoint p) { return uniform({p}); }

  const std::vector<PlanePoint>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return points_.size(); }
  double total_mass() const;
  bool normalized(double tol = 1e-12) const;

 private:
  std::vector<PlanePoint> points_;
  std::vector<double> weights_;
};

struct W1Estimate {
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool exact = false;
};

/// Support size up to which wasserstein1 solves the transport problem exactly.
inline constexpr std::size_t kExactW1Support = 512;

/// W1 (Kantorovich-Rubinstein) distance. Exact transport for supports up to kExactW1Support;
/// above that a binned network-flow estimate bracketed by a sliced lower bound and a
/// quantization-corrected upper bound.
W1Estimate wasserstein1_bounds(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);
inline double wasserstein1(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  return wasserstein1_bounds(mu, nu).value;
}

enum class Verdict { Pass, Fail, Inconclusive };
std::string to_string(Verdict v);
/// FAIL dominates INCONCLUSIVE, which dominates PASS.
Verdict worst(Verdict a, Verdict b);

struct DiagnosticReport {
  Verdict verdict = Verdict::Inconclusive;
  std::map<std::string, double> stats;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  std::string note;

  bool passed() const { return verdict == Verdict::Pass; }
  double stat(const std::string& key) const { return stats.at(key); }
};

/// Thrown when an iteration or sample budget is exhausted before a decision threshold.
class InconclusiveError : public std::runtime_error {
 public:
  InconclusiveError(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_(achieved) {}
  double achieved() const { return achieved_; }

 private:
  double achieved_;
};

}  // namespace ergograph
