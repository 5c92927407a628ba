#pragma once

// Planar maps with the derivative and enclosure data the certificates need.

#include <functional>
#include <memory>
#include <vector>

#include "ergograph/geometry.hpp"

namespace ergograph {

/// Closed axis-aligned box.
struct Box {
  PlanePoint lo{};
  PlanePoint hi{};

  static Box around(PlanePoint c, double r) { return {{c.x1 - r, c.x2 - r}, {c.x1 + r, c.x2 + r}}; }
  static Box of_disk(const DiskDomain& d) { return around(d.center, d.radius); }

  PlanePoint center() const { return {(lo.x1 + hi.x1) / 2, (lo.x2 + hi.x2) / 2}; }
  double half_diagonal() const { return std::hypot(hi.x1 - lo.x1, hi.x2 - lo.x2) / 2; }
  double diagonal() const { return 2 * half_diagonal(); }
  bool contains(PlanePoint p) const { return p.x1 >= lo.x1 && p.x1 <= hi.x1 && p.x2 >= lo.x2 && p.x2 <= hi.x2; }
  /// Largest distance from p to a point of the box.
  double farthest_from(PlanePoint p) const {
    return std::hypot(std::max(std::abs(p.x1 - lo.x1), std::abs(p.x1 - hi.x1)),
                      std::max(std::abs(p.x2 - lo.x2), std::abs(p.x2 - hi.x2)));
  }
  Box intersect(const Box& o) const {
    return {{std::max(lo.x1, o.lo.x1), std::max(lo.x2, o.lo.x2)}, {std::min(hi.x1, o.hi.x1), std::min(hi.x2, o.hi.x2)}};
  }
};

/// Smallest axis-aligned box containing the image of `b` under p -> a p + c.
Box affine_image_box(const Mat2& a, PlanePoint c, const Box& b);

class PlaneMap {
 public:
  virtual ~PlaneMap() = default;

  virtual PlanePoint apply(PlanePoint x) const = 0;
  virtual Mat2 jacobian(PlanePoint x) const = 0;
  /// Upper bound for the Lipschitz constant on the closed ball B(c, r).
  virtual double lipschitz_on_ball(PlanePoint c, double r) const = 0;
  /// Upper bound for the Lipschitz constant of the inverse on the image of the working domain.
  virtual double inverse_lipschitz() const = 0;
  /// Box containing the image of b. Default: via the circumscribed ball.
  virtual Box image_box(const Box& b) const;
  /// Newton inverse; throws std::domain_error when y is not reached.
  virtual PlanePoint inverse(PlanePoint y) const;
};

using PlaneMapPtr = std::shared_ptr<const PlaneMap>;

class AffineMap final : public PlaneMap {
 public:
  AffineMap(Mat2 a, PlanePoint b) : a_(a), b_(b) {}
  /// x -> s x + c.
  static AffineMap scaling(double s, PlanePoint c) { return {Mat2::diag(s, s), c}; }

  PlanePoint apply(PlanePoint x) const override { return a_ * x + b_; }
  Mat2 jacobian(PlanePoint) const override { return a_; }
  double lipschitz_on_ball(PlanePoint, double) const override { return a_.norm(); }
  double inverse_lipschitz() const override { return a_.inverse().norm(); }
  Box image_box(const Box& b) const override { return affine_image_box(a_, b_, b); }
  PlanePoint inverse(PlanePoint y) const override { return a_.inverse() * (y - b_); }

 private:
  Mat2 a_;
  PlanePoint b_;
};

/// Newton solve of f(x) = y from `start` with backtracking. Iterates must stay within `region`
/// (with slack); throws std::domain_error otherwise or when the residual stalls above `tol`.
PlanePoint newton_inverse(const std::function<PlanePoint(PlanePoint)>& f,
                          const std::function<Mat2(PlanePoint)>& jac, PlanePoint y, PlanePoint start,
                          const DiskDomain& region, double tol = 1e-12);

/// Ball-and-box enclosure of a compact set pushed through a sequence of maps. Every step keeps
/// both a ball around the image of a tracked point and a box; each tightens the other.
struct Enclosure {
  PlanePoint point{};   // image of the tracked point
  double radius = 0.0;  // the set lies in B(point, radius)
  Box box{};            // and in box

  static Enclosure of_disk(const DiskDomain& d) { return {d.center, d.radius, Box::of_disk(d)}; }
  /// Certified bound for |point - q| for every q in the enclosed set.
  double bound() const { return std::min(radius, box.farthest_from(point)); }
};

Enclosure push_forward(const PlaneMap& f, const Enclosure& e);

}  // namespace ergograph
