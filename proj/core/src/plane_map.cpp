#include "ergograph/plane_map.hpp"

#include <functional>

namespace ergograph {

Box affine_image_box(const Mat2& a, PlanePoint c, const Box& b) {
  const PlanePoint mid = a * b.center() + c;
  const double hx = (b.hi.x1 - b.lo.x1) / 2, hy = (b.hi.x2 - b.lo.x2) / 2;
  const double rx = std::abs(a.a11) * hx + std::abs(a.a12) * hy;
  const double ry = std::abs(a.a21) * hx + std::abs(a.a22) * hy;
  // One ulp-scale pad keeps the enclosure valid under rounding.
  const double pad = 4 * std::numeric_limits<double>::epsilon() * (std::abs(mid.x1) + std::abs(mid.x2) + rx + ry);
  return {{mid.x1 - rx - pad, mid.x2 - ry - pad}, {mid.x1 + rx + pad, mid.x2 + ry + pad}};
}

Box PlaneMap::image_box(const Box& b) const {
  const PlanePoint c = b.center();
  const double r = b.half_diagonal();
  return Box::around(apply(c), lipschitz_on_ball(c, r) * r);
}

PlanePoint PlaneMap::inverse(PlanePoint y) const {
  DiskDomain unbounded{{0.0, 0.0}, std::numeric_limits<double>::infinity()};
  return newton_inverse([this](PlanePoint x) { return apply(x); }, [this](PlanePoint x) { return jacobian(x); }, y,
                        y, unbounded);
}

PlanePoint newton_inverse(const std::function<PlanePoint(PlanePoint)>& f,
                          const std::function<Mat2(PlanePoint)>& jac, PlanePoint y, PlanePoint start,
                          const DiskDomain& region, double tol) {
  if (!is_finite(y)) throw std::domain_error("inverse: non-finite target");
  const double slack = 1e-6 * std::max(1.0, std::isfinite(region.radius) ? region.radius : 1.0);
  PlanePoint x = start;
  double res = norm(f(x) - y);
  for (int it = 0; it < 200; ++it) {
    if (res < tol) break;
    PlanePoint step;
    try {
      step = jac(x).inverse() * (f(x) - y);
    } catch (const std::domain_error&) {
      throw std::domain_error("inverse: singular Jacobian during Newton iteration");
    }
    double lambda = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 40; ++ls) {
      const PlanePoint cand = x - step * lambda;
      if (region.contains(cand, slack)) {
        const double r = norm(f(cand) - y);
        if (r < res) {
          x = cand;
          res = r;
          improved = true;
          break;
        }
      }
      lambda *= 0.5;
    }
    if (!improved) break;
  }
  if (!(res < tol)) throw std::domain_error("inverse: Newton iteration left the domain or stalled");
  if (!region.contains(x, slack)) throw std::domain_error("inverse: preimage outside the domain");
  return x;
}

Enclosure push_forward(const PlaneMap& f, const Enclosure& e) {
  Enclosure out;
  out.point = f.apply(e.point);
  const double r = e.bound();
  out.radius = f.lipschitz_on_ball(e.point, r) * r;
  out.box = f.image_box(e.box);
  out.radius = std::min(out.radius, out.box.farthest_from(out.point));
  out.box = out.box.intersect(Box::around(out.point, out.radius));
  return out;
}

}  // namespace ergograph
