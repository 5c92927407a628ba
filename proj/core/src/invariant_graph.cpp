#include "ergograph/invariant_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "ergograph/attractor.hpp"
#include "ergograph/io.hpp"
#include "ergograph/parallel.hpp"
#include "ergograph/rng.hpp"

namespace ergograph {

namespace {

void require_depth(const SolenoidPoint& s, std::size_t n, const char* who) {
  if (n > s.depth()) throw std::invalid_argument(std::string(who) + ": backward word shorter than the depth");
}

std::vector<PlanePoint> circle_polygon(const DiskDomain& d, int samples) {
  std::vector<PlanePoint> poly(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    const double a = 2 * std::numbers::pi * i / samples;
    poly[static_cast<std::size_t>(i)] = {d.center.x1 + d.radius * std::cos(a), d.center.x2 + d.radius * std::sin(a)};
  }
  return poly;
}

std::vector<PlanePoint> fiber_boundary(const FiberFamily& family, const SolenoidPoint& s, std::size_t depth,
                                       int samples) {
  require_depth(s, depth, "fiber_set");
  auto poly = circle_polygon(family.domain(), samples);
  for (std::size_t j = depth; j >= 1; --j) {
    const CircleAngle t(s.coordinate(j));
    for (auto& p : poly) p = family.eval(t, p);
  }
  return poly;
}

// A point within delta of s in the solenoid metric: t_0 nudged by eps and every kept coordinate by
// eps / k^j, with digits re-derived as floor(k t_-j) so carries across digit boundaries happen;
// the deeper digits are redrawn.
SolenoidPoint nearby_point(const SolenoidPoint& s, double delta, Rng& rng) {
  const auto keep = std::min(s.depth(), static_cast<std::size_t>(std::ceil(std::log2(1.0 / delta))) + 2);
  const int k = s.k();
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double eps = rng.uniform(-0.25, 0.25) * delta;
    std::vector<std::uint8_t> digits(s.depth());
    double scale = eps;
    for (std::size_t j = 1; j <= keep; ++j) {
      scale /= k;
      const double tj = CircleAngle::reduce(s.coordinate(j) + scale);
      digits[j - 1] = static_cast<std::uint8_t>(std::min(k - 1, static_cast<int>(std::floor(k * tj))));
    }
    for (std::size_t j = keep; j < digits.size(); ++j) digits[j] = static_cast<std::uint8_t>(rng.below(static_cast<std::uint64_t>(k)));
    SolenoidPoint cand(CircleAngle(s.t0().value() + eps), std::move(digits), k);
    if (solenoid_metric(s, cand) < delta) return cand;
  }
  return s;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

PlanePoint pullback_point(const FiberFamily& family, const SolenoidPoint& s, std::size_t n, PlanePoint x) {
  require_depth(s, n, "pullback_point");
  for (std::size_t j = n; j >= 1; --j) x = family.eval(CircleAngle(s.coordinate(j)), x);
  return x;
}

Enclosure pullback_enclosure(const FiberFamily& family, const SolenoidPoint& s, std::size_t n) {
  require_depth(s, n, "pullback_enclosure");
  auto e = Enclosure::of_disk(family.domain());
  for (std::size_t j = n; j >= 1; --j) e = push_forward(FiberSlice(family, CircleAngle(s.coordinate(j))), e);
  return e;
}

GraphSample pullback_at_depth(const FiberFamily& family, const SolenoidPoint& s, std::size_t depth) {
  const auto e = pullback_enclosure(family, s, depth);
  return {s, e.point, depth, e.bound()};
}

GraphSample pullback_gamma(const FiberFamily& family, const SolenoidPoint& s, double tol) {
  const std::size_t available = s.depth();
  std::size_t n = std::min<std::size_t>(16, available);
  bool have_prev = false;
  PlanePoint prev{};
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    const auto e = pullback_enclosure(family, s, n);
    best = std::min(best, e.bound());
    if (e.bound() < tol / 2 && have_prev && distance(e.point, prev) < tol / 2) return {s, e.point, n, e.bound()};
    if (n == available) break;
    prev = e.point;
    have_prev = true;
    n = std::min(2 * n, available);
  }
  throw InconclusiveError("pullback_gamma: backward word exhausted before the tail bound reached tol", best);
}

std::string digits_digest(const SolenoidPoint& s) {
  const auto& d = s.digits();
  return hex16(fnv1a64(std::string_view(reinterpret_cast<const char*>(d.data()), d.size())));
}

double distance_to_polygon_region(PlanePoint p, const std::vector<PlanePoint>& polygon) {
  const std::size_t n = polygon.size();
  if (n == 0) return std::numeric_limits<double>::infinity();
  bool inside = false;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const PlanePoint a = polygon[j], b = polygon[i];
    if ((b.x2 > p.x2) != (a.x2 > p.x2) && p.x1 < (a.x1 - b.x1) * (p.x2 - b.x2) / (a.x2 - b.x2) + b.x1) inside = !inside;
    const PlanePoint ab = b - a, ap = p - a;
    const double len2 = ab.x1 * ab.x1 + ab.x2 * ab.x2;
    const double u = len2 > 0 ? std::clamp((ap.x1 * ab.x1 + ap.x2 * ab.x2) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, distance(p, a + ab * u));
  }
  return inside ? 0.0 : best;
}

FiberSet fiber_set(const FiberFamily& family, const SolenoidPoint& s, std::size_t depth, const GridGeometry& grid,
                   int boundary_samples) {
  if (boundary_samples < 3) throw std::invalid_argument("fiber_set: need at least 3 boundary samples");
  FiberSet out;
  out.boundary = fiber_boundary(family, s, depth, boundary_samples);
  out.set = fill_polygon(grid, out.boundary);
  out.diameter = point_cloud_diameter(out.boundary);
  return out;
}

DiagnosticReport usc_probe(const FiberFamily& family, const SolenoidPoint& s, double eps, int trials,
                           std::uint64_t seed, const UscOptions& opt) {
  DiagnosticReport rep;
  rep.seed = seed;
  const auto base = fiber_boundary(family, s, opt.depth, opt.boundary_samples);
  Rng rng(seed);
  double worst_at_fail = 0.0;
  for (double delta = opt.delta_start; delta >= opt.delta_min; delta /= 2) {
    bool ok = true;
    double worst = 0.0;
    for (int i = 0; i < trials && ok; ++i) {
      const auto near = nearby_point(s, delta, rng);
      const auto poly = fiber_boundary(family, near, opt.depth, opt.boundary_samples);
      ++rep.samples;
      for (const auto& p : poly) worst = std::max(worst, distance_to_polygon_region(p, base));
      ok = worst <= eps;
    }
    if (ok) {
      rep.verdict = Verdict::Pass;
      rep.stats["delta"] = delta;
      rep.stats["max_excursion"] = worst;
      rep.stats["eps"] = eps;
      return rep;
    }
    worst_at_fail = worst;
  }
  rep.verdict = Verdict::Fail;
  rep.stats["delta"] = 0.0;
  rep.stats["max_excursion"] = worst_at_fail;
  rep.stats["eps"] = eps;
  rep.note = "inclusion fails at the smallest probed delta";
  return rep;
}

DiagnosticReport usc_batch(const FiberFamily& family, int points, double eps, int trials, std::uint64_t seed,
                           const UscOptions& options) {
  if (points < 1) throw std::invalid_argument("usc_batch: need at least one point");
  std::vector<DiagnosticReport> reps(static_cast<std::size_t>(points));
  parallel_for(reps.size(), [&](std::size_t i) {
    const auto s = sample_solenoid(mix_seed(seed, 2 * i), options.depth + 64, family.k());
    reps[i] = usc_probe(family, s, eps, trials, mix_seed(seed, 2 * i + 1), options);
  });
  DiagnosticReport rep;
  rep.seed = seed;
  double min_delta = options.delta_start, excursion = 0.0;
  int failures = 0;
  for (const auto& r : reps) {
    rep.samples += r.samples;
    min_delta = std::min(min_delta, r.stat("delta"));
    excursion = std::max(excursion, r.stat("max_excursion"));
    failures += r.passed() ? 0 : 1;
  }
  rep.stats["min_delta"] = min_delta;
  rep.stats["max_excursion"] = excursion;
  rep.stats["failures"] = failures;
  rep.stats["eps"] = eps;
  rep.verdict = failures == 0 ? Verdict::Pass : Verdict::Fail;
  return rep;
}

BonyScan bony_scan(const FiberFamily& family, int samples, std::size_t depth, double diam_tol, std::uint64_t seed,
                   double max_bone_fraction, int boundary_samples) {
  BonyScan out;
  out.diameters.assign(static_cast<std::size_t>(samples), 0.0);
  parallel_for(out.diameters.size(), [&](std::size_t i) {
    const auto s = sample_solenoid(mix_seed(seed, i), depth, family.k());
    out.diameters[i] = point_cloud_diameter(fiber_boundary(family, s, depth, boundary_samples));
  });
  const auto bones = std::count_if(out.diameters.begin(), out.diameters.end(), [&](double d) { return d > diam_tol; });
  const double frac = samples > 0 ? static_cast<double>(bones) / samples : 0.0;
  auto& rep = out.report;
  rep.seed = seed;
  rep.samples = static_cast<std::uint64_t>(samples);
  rep.stats["bone_fraction"] = frac;
  rep.stats["diam_tol"] = diam_tol;
  rep.stats["max_diameter"] = out.diameters.empty() ? 0.0 : *std::max_element(out.diameters.begin(), out.diameters.end());
  rep.verdict = frac <= max_bone_fraction ? Verdict::Pass : Verdict::Fail;
  return out;
}

std::vector<BoneTrendPoint> bone_fraction_trend(const std::vector<double>& diameters, double diam_x,
                                                const std::vector<int>& resolutions, double cells) {
  std::vector<BoneTrendPoint> out;
  for (const int r : resolutions) {
    if (r < 1) throw std::invalid_argument("bone_fraction_trend: resolution must be positive");
    const double tol = cells * diam_x / r;
    const auto above = std::count_if(diameters.begin(), diameters.end(), [&](double d) { return d > tol; });
    out.push_back({r, tol, diameters.empty() ? 0.0 : static_cast<double>(above) / static_cast<double>(diameters.size())});
  }
  return out;
}

std::vector<HistogramBin> histogram(const std::vector<double>& values, int bins) {
  if (bins < 1) throw std::invalid_argument("histogram: bins must be positive");
  double top = 0.0;
  for (double v : values) top = std::max(top, v);
  if (top == 0.0) top = 1.0;
  std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) out[static_cast<std::size_t>(b)] = {top * b / bins, top * (b + 1) / bins, 0};
  for (double v : values) {
    const int b = std::min(bins - 1, static_cast<int>(v / top * bins));
    ++out[static_cast<std::size_t>(std::max(b, 0))].count;
  }
  return out;
}

SyncResult sync_test(const FiberFamily& family, int pairs, std::int64_t max_steps, double tol, std::uint64_t seed) {
  SyncResult out;
  out.steps.assign(static_cast<std::size_t>(pairs), -1);
  parallel_for(out.steps.size(), [&](std::size_t i) {
    Rng rng(mix_seed(seed, i));
    const CircleAngle t0(rng.uniform());
    PlanePoint x = uniform_in_disk(family.domain(), rng);
    PlanePoint y = uniform_in_disk(family.domain(), rng);
    while (y == x) y = uniform_in_disk(family.domain(), rng);
    BaseOrbit base(t0, family.k(), rng());
    for (std::int64_t n = 0; n <= max_steps; ++n) {
      if (distance(x, y) < tol) {
        out.steps[i] = n;
        return;
      }
      const CircleAngle t = base.current();
      x = family.eval(t, x);
      y = family.eval(t, y);
      base.advance();
    }
  });
  std::vector<std::int64_t> met;
  for (auto n : out.steps)
    if (n >= 0) met.push_back(n);
  std::sort(met.begin(), met.end());
  auto& rep = out.report;
  rep.seed = seed;
  rep.samples = static_cast<std::uint64_t>(pairs);
  const double frac = pairs > 0 ? static_cast<double>(met.size()) / pairs : 0.0;
  rep.stats["converged_fraction"] = frac;
  rep.stats["median_steps"] = met.empty() ? -1.0 : static_cast<double>(met[met.size() / 2]);
  rep.stats["max_steps_used"] = met.empty() ? -1.0 : static_cast<double>(met.back());
  rep.verdict = frac >= 0.99 ? Verdict::Pass : Verdict::Fail;
  return out;
}

DiagnosticReport invariance_residual(const FiberFamily& family, int samples, double tol, std::uint64_t seed,
                                     std::size_t fixed_depth) {
  std::vector<double> residual(static_cast<std::size_t>(samples)), tail(residual.size());
  std::vector<int> inconclusive(residual.size(), 0);
  parallel_for(residual.size(), [&](std::size_t i) {
    const auto s = sample_solenoid(mix_seed(seed, i), kDeepSolenoid, family.k());
    const auto shifted = step_G(family, {s, family.domain().center}).s;
    try {
      const auto a = fixed_depth ? pullback_at_depth(family, s, fixed_depth) : pullback_gamma(family, s, tol / 4);
      const auto b = fixed_depth ? pullback_at_depth(family, shifted, fixed_depth) : pullback_gamma(family, shifted, tol / 4);
      residual[i] = distance(family.eval(s.t0(), a.gamma), b.gamma);
      tail[i] = std::max(a.tail_bound, b.tail_bound);
    } catch (const InconclusiveError& e) {
      inconclusive[i] = 1;
      tail[i] = e.achieved();
    }
  });
  DiagnosticReport rep;
  rep.seed = seed;
  rep.samples = static_cast<std::uint64_t>(samples);
  rep.stats["max_residual"] = residual.empty() ? 0.0 : *std::max_element(residual.begin(), residual.end());
  rep.stats["max_tail"] = tail.empty() ? 0.0 : *std::max_element(tail.begin(), tail.end());
  rep.stats["tol"] = tol;
  rep.stats["depth"] = static_cast<double>(fixed_depth);
  if (std::any_of(inconclusive.begin(), inconclusive.end(), [](int v) { return v != 0; })) {
    rep.verdict = Verdict::Inconclusive;
    rep.note = "pullback tail not certified within the sampled backward word";
  } else {
    rep.verdict = rep.stat("max_residual") < tol ? Verdict::Pass : Verdict::Fail;
  }
  return rep;
}

std::vector<PlanePoint> base_fiber_points(const FiberFamily& family, CircleAngle t, int branches, std::size_t depth,
                                          std::uint64_t seed) {
  std::vector<PlanePoint> pts(static_cast<std::size_t>(branches));
  parallel_for(pts.size(), [&](std::size_t i) {
    Rng rng(mix_seed(seed, i));
    std::vector<std::uint8_t> digits(depth);
    for (auto& d : digits) d = static_cast<std::uint8_t>(rng.below(static_cast<std::uint64_t>(family.k())));
    pts[i] = pullback_at_depth(family, SolenoidPoint(t, std::move(digits), family.k()), depth).gamma;
  });
  return pts;
}

GridSet base_fiber_cloud(const FiberFamily& family, CircleAngle t, int branches, std::size_t depth,
                         std::uint64_t seed, const GridGeometry& grid) {
  const auto pts = base_fiber_points(family, t, branches, depth, seed);
  return GridSet::from_points(grid, pts);
}

}  // namespace ergograph
