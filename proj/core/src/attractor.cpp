#include "ergograph/attractor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <numbers>
#include <stdexcept>

#include "ergograph/parallel.hpp"
#include "ergograph/rng.hpp"

namespace ergograph {

namespace {

constexpr double kHalfDiag = std::numbers::sqrt2 / 2;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Nearest point of the disk.
PlanePoint clamp_to(const DiskDomain& d, PlanePoint p) {
  const double r = distance(p, d.center);
  if (r <= d.radius) return p;
  return d.center + (p - d.center) * (d.radius / r);
}

// Per-chunk bitmaps merged in chunk order.
GridSet merge(const GridGeometry& g, std::vector<GridSet>& parts) {
  GridSet out(g);
  for (auto& p : parts) {
    if (p.geometry() == g) out |= p;
  }
  return out;
}

// Stamps f(c) for every occupied cell c of k into a fresh set.
GridSet stamp_images(const GridSet& k, const DiskDomain& domain,
                     const std::function<void(PlanePoint, GridSet&)>& stamp_cell) {
  const auto cells = k.occupied();
  const auto& g = k.geometry();
  std::vector<GridSet> parts(static_cast<std::size_t>(chunk_count(cells.size())));
  parallel_chunks(cells.size(), [&](std::size_t b, std::size_t e, int chunk) {
    GridSet local(g);
    for (std::size_t i = b; i < e; ++i) stamp_cell(clamp_to(domain, g.cell_center(cells[i])), local);
    parts[static_cast<std::size_t>(chunk)] = std::move(local);
  });
  return merge(g, parts);
}

}  // namespace

Ifs generator_ifs(const FiberFamilyPtr& family) { return {generator_maps(family), family->domain()}; }

GridSet grid_image(const PlaneMap& f, const GridSet& k, double extra_radius) {
  const double h = k.geometry().h;
  const auto cells = k.occupied();
  const auto& g = k.geometry();
  std::vector<GridSet> parts(static_cast<std::size_t>(chunk_count(cells.size())));
  parallel_chunks(cells.size(), [&](std::size_t b, std::size_t e, int chunk) {
    GridSet local(g);
    for (std::size_t i = b; i < e; ++i) {
      const PlanePoint c = g.cell_center(cells[i]);
      const double lip = f.lipschitz_on_ball(c, h * kHalfDiag);
      local.stamp(f.apply(c), lip * h * kHalfDiag + h + extra_radius);
    }
    parts[static_cast<std::size_t>(chunk)] = std::move(local);
  });
  return merge(g, parts);
}

GridSet hutchinson_step(const Ifs& ifs, const GridSet& k) {
  const double h = k.geometry().h;
  // Cells straddling the boundary of X are evaluated at their nearest point of X; the cell then
  // lies within h sqrt(2) of it.
  return stamp_images(k, ifs.domain, [&](PlanePoint c, GridSet& out) {
    const double reach = ifs.domain.contains(c, 0.0) ? h * kHalfDiag : h * std::numbers::sqrt2;
    for (const auto& f : ifs.maps) {
      const double lip = f->lipschitz_on_ball(c, reach);
      out.stamp(f->apply(c), lip * reach + h);
    }
  });
}

GridSet hutchinson_step_circle(const FiberFamily& family, const GridSet& k, int samples) {
  if (samples < 1) throw std::invalid_argument("hutchinson_step_circle: samples must be positive");
  const double h = k.geometry().h;
  struct Slice {
    CircleAngle t;
    double dilation;
  };
  // Sample j stands for [j/N, (j+1)/N]; plateau interiors have zero t-modulus.
  std::vector<Slice> slices;
  for (double t : family.generator_angles()) slices.push_back({CircleAngle(t), 0.0});
  const double step = 1.0 / samples;
  for (int j = 0; j < samples; ++j) {
    const double lo = j * step, hi = (j + 1) * step;
    slices.push_back({CircleAngle(lo + step / 2), family.t_modulus(lo, hi) * step / 2});
  }
  const DiskDomain& domain = family.domain();
  return stamp_images(k, domain, [&](PlanePoint c, GridSet& out) {
    const double reach = domain.contains(c, 0.0) ? h * kHalfDiag : h * std::numbers::sqrt2;
    for (const auto& s : slices) {
      const double lip = family.lipschitz_on_ball(s.t, c, reach);
      out.stamp(family.eval(s.t, c), lip * reach + h + s.dilation);
    }
  });
}

AttractorRun attractor_iterate(const SetOperator& op, const GridSet& seed, double tol, int max_iters) {
  if (seed.empty()) throw std::invalid_argument("attractor_iterate: empty seed set");
  AttractorRun run{seed, {}};
  for (int it = 0; it < max_iters; ++it) {
    GridSet next = op(run.set);
    const double d = hausdorff_distance(run.set, next);
    run.log.push_back(d);
    run.set = std::move(next);
    if (d < tol) return run;
  }
  throw InconclusiveError("attractor_iterate: no convergence within max_iters",
                          run.log.empty() ? kInf : run.log.back());
}

CodingPoint coding_point(const Ifs& ifs, std::span<const int> word, double tol) {
  if (word.empty()) throw std::invalid_argument("coding_point: empty word");
  Enclosure e = Enclosure::of_disk(ifs.domain);
  for (std::size_t i = word.size(); i-- > 0;) {
    const int w = word[i];
    if (w < 0 || static_cast<std::size_t>(w) >= ifs.maps.size()) throw std::invalid_argument("coding_point: bad symbol");
    e = push_forward(*ifs.maps[static_cast<std::size_t>(w)], e);
  }
  const double r = e.bound();
  if (!(r < tol)) throw InconclusiveError("coding_point: word too short for the requested tolerance", r);
  return {e.point, r};
}

WeakHyperbolicityScan weak_hyperbolicity_scan(const Ifs& ifs, int words, int depth, std::uint64_t seed,
                                              double rel_threshold, int boundary_samples) {
  if (words < 1 || depth < 0 || boundary_samples < 3) throw std::invalid_argument("weak_hyperbolicity_scan: bad sizes");
  const auto nw = static_cast<std::size_t>(words), nd = static_cast<std::size_t>(depth) + 1;
  std::vector<double> diam(nw * nd);
  std::vector<PlanePoint> circle(static_cast<std::size_t>(boundary_samples));
  for (int i = 0; i < boundary_samples; ++i) {
    const double a = 2 * std::numbers::pi * i / boundary_samples;
    circle[static_cast<std::size_t>(i)] = ifs.domain.center + PlanePoint{std::cos(a), std::sin(a)} * ifs.domain.radius;
  }
  parallel_for(nw, [&](std::size_t w) {
    Rng rng(mix_seed(seed, w));
    auto cloud = circle;
    diam[w * nd] = point_cloud_diameter(cloud);
    for (std::size_t j = 1; j < nd; ++j) {
      const auto& f = *ifs.maps[rng.below(ifs.maps.size())];
      for (auto& p : cloud) p = f.apply(p);
      diam[w * nd + j] = point_cloud_diameter(cloud);
    }
  });
  WeakHyperbolicityScan out;
  out.max_profile.resize(nd);
  out.median_profile.resize(nd);
  std::vector<double> column(nw);
  for (std::size_t j = 0; j < nd; ++j) {
    for (std::size_t w = 0; w < nw; ++w) column[w] = diam[w * nd + j];
    std::sort(column.begin(), column.end());
    out.max_profile[j] = column.back();
    out.median_profile[j] = nw % 2 ? column[nw / 2] : 0.5 * (column[nw / 2 - 1] + column[nw / 2]);
  }
  const double threshold = rel_threshold * ifs.domain.diameter();
  auto& r = out.report;
  r.samples = nw;
  r.seed = seed;
  r.stats["max_diameter"] = out.max_profile.back();
  r.stats["median_diameter"] = out.median_profile.back();
  r.stats["threshold"] = threshold;
  r.stats["depth"] = depth;
  r.verdict = out.max_profile.back() < threshold ? Verdict::Pass : Verdict::Fail;
  return out;
}

double EllipseSpec::gauge(PlanePoint p) const {
  const PlanePoint q = Mat2::rotation(-angle) * (p - center);
  const double x = std::abs(q.x1) / a, y = std::abs(q.x2) / b;
  const double m = std::max(x, y);
  if (std::isinf(exponent) || m == 0.0) return m;
  return m * std::pow(std::pow(x / m, exponent) + std::pow(y / m, exponent), 1.0 / exponent);
}

double EllipseSpec::depth(PlanePoint p) const {
  // The gauge g of a convex body containing B(center, r_in) and inside B(center, r_out) obeys
  // dist(p, boundary) >= (1 - g) r_in inside and dist(p, region) <= (g - 1) r_out outside.
  const double g = gauge(p);
  return g <= 1.0 ? (1.0 - g) * std::min(a, b) : -(g - 1.0) * std::hypot(a, b);
}

double EllipseSpec::outside_distance_lower(PlanePoint p) const {
  // subadditivity of the gauge: g(p) <= 1 + dist(p, region) / r_in
  return std::max(0.0, (gauge(p) - 1.0) * std::min(a, b));
}

Box EllipseSpec::bounding_box() const {
  const double c = std::abs(std::cos(angle)), s = std::abs(std::sin(angle));
  const double ex = a * c + b * s, ey = a * s + b * c;
  return {{center.x1 - ex, center.x2 - ey}, {center.x1 + ex, center.x2 + ey}};
}

PlanePoint EllipseSpec::boundary_point(double s) const {
  const double phi = 2 * std::numbers::pi * s;
  const PlanePoint dir{std::cos(phi), std::sin(phi)};
  const EllipseSpec local{{0.0, 0.0}, a, b, 0.0, exponent};
  const PlanePoint q = dir * (1.0 / local.gauge(dir));
  return center + Mat2::rotation(angle) * q;
}

namespace {

bool region_inside(const EllipseSpec& b, const DiskDomain& d) {
  for (int i = 0; i < 256; ++i) {
    if (!d.contains(b.boundary_point(i / 256.0))) return false;
  }
  return true;
}

}  // namespace

DiagnosticReport covering_verify(const Ifs& ifs, const EllipseSpec& region, double margin_req, int resolution) {
  if (!(region.a > 0 && region.b > 0 && region.exponent >= 1.0)) throw std::invalid_argument("covering_verify: bad region");
  if (!region_inside(region, ifs.domain)) throw std::invalid_argument("covering_verify: region must lie in X");
  const Box bb = region.bounding_box();
  const double extent = std::max(bb.hi.x1 - bb.lo.x1, bb.hi.x2 - bb.lo.x2);
  const double h = extent / resolution;
  const double pad = 0.25 * extent + 4 * h;
  const auto g = GridGeometry::covering({bb.lo.x1 - pad, bb.lo.x2 - pad}, {bb.hi.x1 + pad, bb.hi.x2 + pad}, h);

  std::vector<double> inv_lip(ifs.maps.size());
  for (std::size_t i = 0; i < ifs.maps.size(); ++i) inv_lip[i] = ifs.maps[i]->inverse_lipschitz();

  std::vector<std::uint8_t> in_region(g.size(), 0), in_union(g.size(), 0);
  parallel_for(static_cast<std::size_t>(g.ny), [&](std::size_t row) {
    const int iy = static_cast<int>(row);
    for (int ix = 0; ix < g.nx; ++ix) {
      const PlanePoint c = g.cell_center(ix, iy);
      const std::size_t idx = g.index(ix, iy);
      if (region.outside_distance_lower(c) <= h * kHalfDiag) in_region[idx] = 1;
      for (std::size_t i = 0; i < ifs.maps.size(); ++i) {
        PlanePoint y;
        try {
          y = ifs.maps[i]->inverse(c);
        } catch (const std::domain_error&) {
          continue;
        }
        if (region.depth(y) >= inv_lip[i] * h * kHalfDiag) {
          in_union[idx] = 1;
          break;
        }
      }
    }
  });
  const GridSet a(g, std::move(in_region)), u(g, std::move(in_union));
  DiagnosticReport r;
  const double margin = inclusion_margin(a, u);
  r.stats["margin"] = margin;
  r.stats["margin_req"] = margin_req;
  r.stats["h"] = h;
  r.stats["cells_region"] = static_cast<double>(a.count());
  r.stats["cells_union"] = static_cast<double>(u.count());
  r.samples = g.size();
  r.verdict = margin >= margin_req ? Verdict::Pass : Verdict::Fail;
  return r;
}

namespace {

// Sampled covering margin: over boundary and interior points p of B, the best generator's
// preimage depth scaled by 1/Lip(f^{-1}); the minimum over p.
double proxy_margin(const Ifs& ifs, const std::vector<double>& inv_lip, const EllipseSpec& b) {
  double worst = kInf;
  auto probe = [&](PlanePoint p) {
    double best = -kInf;
    for (std::size_t i = 0; i < ifs.maps.size(); ++i) {
      try {
        best = std::max(best, b.depth(ifs.maps[i]->inverse(p)) / inv_lip[i]);
      } catch (const std::domain_error&) {
      }
    }
    worst = std::min(worst, best);
  };
  constexpr int kRim = 96, kRings = 4, kSpokes = 32;
  for (int i = 0; i < kRim; ++i) probe(b.boundary_point((i + 0.5) / kRim));
  probe(b.center);
  for (int r = 1; r <= kRings; ++r) {
    const double level = r / (kRings + 1.0);
    for (int i = 0; i < kSpokes; ++i) probe(b.center + (b.boundary_point((i + 0.25 * r) / kSpokes) - b.center) * level);
  }
  return std::isfinite(worst) ? worst : -ifs.domain.diameter();
}

constexpr double kExponents[] = {2.0, 4.0, 8.0, kInf};

EllipseSpec normalized(EllipseSpec e) {
  if (e.b > e.a) {
    std::swap(e.a, e.b);
    e.angle += std::numbers::pi / 2;
  }
  e.angle = std::numbers::pi * CircleAngle::reduce(e.angle / std::numbers::pi);
  return e;
}

}  // namespace

CoveringSearchResult covering_search(const Ifs& ifs, int budget, std::uint64_t seed, int resolution) {
  CoveringSearchResult out;
  if (budget < 1) return out;
  std::vector<double> inv_lip(ifs.maps.size());
  for (std::size_t i = 0; i < ifs.maps.size(); ++i) inv_lip[i] = ifs.maps[i]->inverse_lipschitz();
  const DiskDomain& d = ifs.domain;
  Rng rng(seed);
  int used = 0;
  double best_score = -kInf;
  double best_margin = -kInf;
  EllipseSpec best{};
  auto evaluate = [&](EllipseSpec e) {
    ++used;
    e = normalized(e);
    if (!(e.a > 1e-6 && e.b > 1e-6) || !region_inside(e, d)) return false;
    // ranked by margin per unit of the short axis, so shrinking a failing region does not pay
    const double m = proxy_margin(ifs, inv_lip, e);
    const double s = m / std::min(e.a, e.b);
    if (s > best_score) {
      best_score = s;
      best_margin = m;
      best = e;
      return true;
    }
    return false;
  };

  const int random_phase = std::max(1, budget / 2);
  while (used < random_phase) {
    const double rr = d.radius * std::sqrt(rng.uniform()) * 0.8, th = 2 * std::numbers::pi * rng.uniform();
    EllipseSpec e;
    e.center = d.center + PlanePoint{std::cos(th), std::sin(th)} * rr;
    e.a = d.radius * rng.uniform(0.05, 0.9);
    e.b = d.radius * rng.uniform(0.05, 0.9);
    e.angle = std::numbers::pi * rng.uniform();
    e.exponent = kExponents[rng.below(4)];
    evaluate(e);
  }
  // coordinate descent with shrinking steps
  double step = 0.1;
  while (used < budget && step > 1e-4 && std::isfinite(best_score)) {
    bool improved = false;
    for (int coord = 0; coord < 6 && used < budget; ++coord) {
      for (int sign : {1, -1}) {
        if (used >= budget) break;
        EllipseSpec e = best;
        switch (coord) {
          case 0: e.center.x1 += sign * step * d.radius; break;
          case 1: e.center.x2 += sign * step * d.radius; break;
          case 2: e.a *= 1 + sign * step; break;
          case 3: e.b *= 1 + sign * step; break;
          case 4: e.angle += sign * step * std::numbers::pi; break;
          default: {
            int idx = 0;
            while (kExponents[idx] != e.exponent && idx < 3) ++idx;
            const int next = idx + sign;
            if (next < 0 || next > 3) continue;
            e.exponent = kExponents[next];
          }
        }
        if (evaluate(e)) improved = true;
      }
    }
    if (!improved) step /= 2;
  }
  if (!std::isfinite(best_score)) {
    out.report.verdict = Verdict::Fail;
    out.report.note = "no candidate region fits in X";
    out.report.samples = static_cast<std::uint64_t>(used);
    out.report.seed = seed;
    return out;
  }
  out.best = best;
  out.proxy_margin = best_margin;
  out.report = covering_verify(ifs, best, 0.0, resolution);
  if (out.report.stat("margin") <= 0.0) out.report.verdict = Verdict::Fail;
  out.report.stats["proxy_margin"] = best_margin;
  out.report.stats["relative_proxy_margin"] = best_score;
  out.report.stats["evaluations"] = used;
  out.report.seed = seed;
  return out;
}

EmpiricalMeasure chaos_game(const Ifs& ifs, std::size_t n, std::size_t burn_in, std::uint64_t seed, PlanePoint start) {
  if (!ifs.domain.contains(start)) throw std::invalid_argument("chaos_game: start outside X");
  Rng rng(seed);
  PlanePoint x = start;
  std::vector<PlanePoint> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < burn_in + n; ++i) {
    x = ifs.maps[rng.below(ifs.maps.size())]->apply(x);
    if (i >= burn_in) pts.push_back(x);
  }
  return EmpiricalMeasure::uniform(std::move(pts));
}

EmpiricalMeasure transfer_step(const Ifs& ifs, const EmpiricalMeasure& mu, std::uint64_t seed, std::size_t cap) {
  if (!mu.normalized()) throw std::invalid_argument("transfer_step: measure not normalized");
  const std::size_t m = ifs.maps.size();
  std::vector<PlanePoint> pts(mu.size() * m);
  std::vector<double> w(mu.size() * m);
  parallel_for(mu.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < m; ++j) {
      pts[i * m + j] = ifs.maps[j]->apply(mu.points()[i]);
      w[i * m + j] = mu.weights()[i] / static_cast<double>(m);
    }
  });
  if (pts.size() <= cap) return EmpiricalMeasure(std::move(pts), std::move(w));
  // systematic resampling; repeated picks of one atom merge into one weight
  Rng rng(seed);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  const double stride = total / static_cast<double>(cap);
  double u = rng.uniform() * stride, acc = 0.0;
  std::vector<PlanePoint> keep;
  std::vector<double> kw;
  std::size_t picked = 0;
  for (std::size_t i = 0; i < pts.size() && picked < cap; ++i) {
    acc += w[i];
    std::size_t hits = 0;
    while (picked + hits < cap && u < acc) {
      ++hits;
      u += stride;
    }
    if (hits) {
      keep.push_back(pts[i]);
      kw.push_back(static_cast<double>(hits));
      picked += hits;
    }
  }
  for (auto& x : kw) x /= static_cast<double>(picked);
  return EmpiricalMeasure(std::move(keep), std::move(kw));
}

Box default_cusp_rectangle(const FamilyConfig& cfg) {
  return {{cfg.x0.x1 + 0.05, cfg.x0.x2 - 0.15}, {cfg.x0.x1 + 0.35, cfg.x0.x2 + 0.15}};
}

GridSet fill_polygon(const GridGeometry& grid, std::span<const PlanePoint> polygon) {
  GridSet out(grid);
  if (polygon.empty()) return out;
  double ylo = kInf, yhi = -kInf;
  for (const auto& p : polygon) {
    ylo = std::min(ylo, p.x2);
    yhi = std::max(yhi, p.x2);
  }
  const int iy0 = std::max(0, static_cast<int>(std::floor((ylo - grid.lo.x2) / grid.h - 0.5)));
  const int iy1 = std::min(grid.ny - 1, static_cast<int>(std::ceil((yhi - grid.lo.x2) / grid.h - 0.5)));
  std::vector<double> xs;
  const std::size_t n = polygon.size();
  for (int iy = iy0; iy <= iy1; ++iy) {
    const double y = grid.lo.x2 + (iy + 0.5) * grid.h;
    xs.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const PlanePoint p = polygon[i], q = polygon[(i + 1) % n];
      if ((p.x2 <= y && y < q.x2) || (q.x2 <= y && y < p.x2)) xs.push_back(p.x1 + (y - p.x2) * (q.x1 - p.x1) / (q.x2 - p.x2));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t j = 0; j + 1 < xs.size(); j += 2) {
      const int ix0 = std::max(0, static_cast<int>(std::ceil((xs[j] - grid.lo.x1) / grid.h - 0.5)));
      const int ix1 = std::min(grid.nx - 1, static_cast<int>(std::floor((xs[j + 1] - grid.lo.x1) / grid.h - 0.5)));
      for (int ix = ix0; ix <= ix1; ++ix) out.set(ix, iy);
    }
  }
  for (const auto& p : polygon) out.mark(p);
  return out;
}

CuspRegions cusp_regions(const PlaneMap& f, const GridGeometry& grid, const Box& w1, int depth, int boundary_samples) {
  if (depth < 1 || boundary_samples < 4) throw std::invalid_argument("cusp_regions: bad sizes");
  std::vector<PlanePoint> poly;
  poly.reserve(static_cast<std::size_t>(boundary_samples));
  const double w = w1.hi.x1 - w1.lo.x1, hgt = w1.hi.x2 - w1.lo.x2, perim = 2 * (w + hgt);
  for (int i = 0; i < boundary_samples; ++i) {
    double s = perim * i / boundary_samples;
    if (s < w) {
      poly.push_back({w1.lo.x1 + s, w1.lo.x2});
    } else if ((s -= w) < hgt) {
      poly.push_back({w1.hi.x1, w1.lo.x2 + s});
    } else if ((s -= hgt) < w) {
      poly.push_back({w1.hi.x1 - s, w1.hi.x2});
    } else {
      s -= w;
      poly.push_back({w1.lo.x1, w1.hi.x2 - s});
    }
  }
  CuspRegions out;
  for (int k = 0; k < depth; ++k) {
    if (k > 0) {
      for (auto& p : poly) p = f.apply(p);
    }
    out.regions.push_back(fill_polygon(grid, poly));
    out.diameters.push_back(point_cloud_diameter(poly));
  }
  return out;
}

}  // namespace ergograph
