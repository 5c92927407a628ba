#include <doctest.h>

#include "ergograph/attractor.hpp"
#include "ergograph/invariant_graph.hpp"

using namespace ergograph;

namespace {

std::shared_ptr<const PlateauFamily> default_family() {
  static const auto f = std::make_shared<PlateauFamily>(FamilyConfig::defaults());
  return f;
}

std::shared_ptr<const ConstantFamily> constant_family(PlanePoint p, double scale = 0.5) {
  return std::make_shared<ConstantFamily>(std::make_shared<AffineMap>(AffineMap::scaling(scale, p * (1 - scale))),
                                          DiskDomain{{0, 0}, 3.0}, 8);
}

}  // namespace

TEST_CASE("pullback gamma") {
  const auto& f = *default_family();

  SUBCASE("backward word inside the weak plateau converges to x0") {
    const SolenoidPoint s(CircleAngle(0.0), std::vector<std::uint8_t>(4000, 0), 8);
    const auto g = pullback_at_depth(f, s, 4000);
    CHECK(distance(g.gamma, {1.0, 0.0}) <= g.tail_bound);
    CHECK(g.tail_bound < 0.05);
    // cubic weak contraction: no certificate at 1e-3 within the available depth
    CHECK_THROWS_AS(pullback_gamma(f, SolenoidPoint(CircleAngle(0.0), std::vector<std::uint8_t>(64, 0), 8), 1e-3),
                    InconclusiveError);
  }

  SUBCASE("constant family gives its fixed point") {
    const PlanePoint p{0.4, -0.7};
    const auto c = constant_family(p);
    const auto g = pullback_gamma(*c, sample_solenoid(1, 200, 8), 1e-10);
    CHECK(distance(g.gamma, p) < 1e-10);
    CHECK(g.tail_bound < 1e-10);
  }

  SUBCASE("limit does not depend on the start") {
    Rng rng(2);
    for (int i = 0; i < 50; ++i) {
      const auto s = sample_solenoid(mix_seed(3, i), kDeepSolenoid, 8);
      const auto g = pullback_gamma(f, s, 1e-8);
      CHECK(g.tail_bound < 1e-8);
      CHECK(g.depth_used >= 16);
      const auto a = pullback_point(f, s, g.depth_used, uniform_in_disk(f.domain(), rng));
      const auto b = pullback_point(f, s, g.depth_used, uniform_in_disk(f.domain(), rng));
      CHECK(distance(a, b) < 2e-8);
      CHECK(distance(a, g.gamma) <= g.tail_bound);
    }
  }

  SUBCASE("short words are rejected") {
    const auto s = sample_solenoid(4, 10, 8);
    CHECK_THROWS_AS(pullback_point(f, s, 11, {0, 0}), std::invalid_argument);
  }

  CHECK(digits_digest(SolenoidPoint(CircleAngle(0.5), {}, 8)) == "cbf29ce484222325");
  CHECK(digits_digest(SolenoidPoint(CircleAngle(0.5), {1, 2}, 8)).size() == 16);
}

TEST_CASE("fiber sets") {
  const auto& f = *default_family();
  const auto g = GridGeometry::for_domain(f.domain(), 512);
  const auto s = sample_solenoid(9, 300, 8);

  const auto whole = fiber_set(f, s, 0, g);
  CHECK(hausdorff_distance(whole.set, GridSet::full_disk(g, f.domain())) <= 2 * g.h);
  CHECK(whole.diameter == doctest::Approx(6.0).epsilon(1e-3));

  for (std::size_t d : {1u, 3u, 8u, 20u}) {
    const auto outer = fiber_set(f, s, d, g);
    const auto inner = fiber_set(f, s, d + 10, g);
    CHECK(inclusion_margin(inner.set, dilate(outer.set, 2 * g.h)) >= 0);
    CHECK(inner.diameter <= outer.diameter + 1e-12);
  }

  const auto deep = fiber_set(f, s, 200, g);
  CHECK(deep.diameter < 1e-3 * 6.0);
  const auto gamma = pullback_gamma(f, s, 1e-9);
  CHECK(distance(deep.boundary.front(), gamma.gamma) < 1e-6);
}

TEST_CASE("polygon region distance") {
  const std::vector<PlanePoint> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  CHECK(distance_to_polygon_region({0.5, 0.5}, sq) == 0.0);
  CHECK(distance_to_polygon_region({2, 0.5}, sq) == doctest::Approx(1.0));
  CHECK(distance_to_polygon_region({2, 2}, sq) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("upper semicontinuity probe") {
  const auto& f = *default_family();
  const auto s = sample_solenoid(12, 256, 8);
  const auto same = fiber_set(f, s, 200, GridGeometry::for_domain(f.domain(), 64), 64);
  for (auto p : same.boundary) CHECK(distance_to_polygon_region(p, same.boundary) == 0.0);

  for (int i = 0; i < 10; ++i) {
    const auto rep = usc_probe(f, sample_solenoid(mix_seed(13, i), 256, 8), 0.06, 10, mix_seed(14, i));
    CHECK(rep.passed());
    CHECK(rep.stat("delta") > 0);
  }

  // a fiber map that jumps at t = 1/2 is not upper semicontinuous over base points with t_-1 = 1/2
  const DiskDomain x{{0, 0}, 3.0};
  const PiecewiseFamily jump({0.0, 0.5},
                             {std::make_shared<AffineMap>(AffineMap::scaling(0.5, {0.5, 0.0})),
                              std::make_shared<AffineMap>(AffineMap::scaling(0.5, {-0.5, 0.0}))},
                             x, 8);
  const SolenoidPoint at_jump(CircleAngle(0.0), std::vector<std::uint8_t>(64, 4), 8);
  REQUIRE(at_jump.coordinate(1) == 0.5);
  UscOptions opt;
  opt.depth = 40;
  opt.delta_min = 0x1.0p-24;
  const auto bad = usc_probe(jump, at_jump, 0.06, 20, 3, opt);
  CHECK(bad.verdict == Verdict::Fail);
}

TEST_CASE("bony scan") {
  const auto& f = *default_family();
  const double h = 6.0 / 1024;
  const auto scan = bony_scan(f, 100, 200, 10 * h, 5);
  CHECK(scan.report.passed());
  CHECK(scan.report.stat("bone_fraction") <= 0.01);
  CHECK(scan.diameters.size() == 100);

  const auto c = constant_family({0.1, 0.2});
  CHECK(bony_scan(*c, 50, 100, 10 * h, 6).report.stat("bone_fraction") == 0.0);

  // shallow depth leaves every fiber fat
  CHECK(bony_scan(f, 20, 2, 10 * h, 7).report.verdict == Verdict::Fail);

  const auto bins = histogram({0.0, 0.5, 1.0, 1.0}, 4);
  REQUIRE(bins.size() == 4);
  CHECK(bins[0].count == 1);
  CHECK(bins[2].count == 1);
  CHECK(bins[3].count == 2);
  CHECK(bins[3].hi == 1.0);
}

TEST_CASE("bone fraction trend") {
  const std::vector<double> d{0.001, 0.01, 0.02, 0.05, 0.2};
  const auto trend = bone_fraction_trend(d, 6.0, {256, 512, 1024, 2048});
  REQUIRE(trend.size() == 4);
  CHECK(trend[0].diam_tol == doctest::Approx(60.0 / 256));
  CHECK(trend[0].bone_fraction == doctest::Approx(0.0));
  CHECK(trend[3].bone_fraction == doctest::Approx(0.4));
  for (std::size_t i = 1; i < trend.size(); ++i) CHECK(trend[i].bone_fraction >= trend[i - 1].bone_fraction);
}

TEST_CASE("synchronization") {
  const auto& f = *default_family();
  const auto res = sync_test(f, 100, 5000, 1e-8, 4);
  CHECK(res.report.passed());
  CHECK(res.report.stat("median_steps") > 0);

  // tolerance above diam X: every pair meets at step 0
  const auto trivial = sync_test(f, 10, 10, 7.0, 4);
  for (auto n : trivial.steps) CHECK(n == 0);

  // converged counts are monotone in the step budget
  double prev = 0;
  for (std::int64_t steps : {5, 10, 20, 40}) {
    const double frac = sync_test(f, 100, steps, 1e-8, 4).report.stat("converged_fraction");
    CHECK(frac >= prev);
    prev = frac;
  }

  const auto expanding = constant_family({0, 0}, 1.05);
  CHECK(sync_test(*expanding, 20, 500, 1e-8, 1).report.verdict == Verdict::Fail);
}

TEST_CASE("invariance residual") {
  const auto& f = *default_family();
  const auto rep = invariance_residual(f, 100, 1e-6, 3);
  CHECK(rep.passed());
  CHECK(rep.stat("max_residual") < 1e-6);

  const auto c = constant_family({0.3, 0.3});
  CHECK(invariance_residual(*c, 20, 1e-12, 3).stat("max_residual") < 1e-13);

  CHECK(invariance_residual(f, 100, 1e-6, 3, 3).verdict == Verdict::Fail);
}

TEST_CASE("base fiber cloud") {
  const auto& f = *default_family();
  const auto g = GridGeometry::for_domain(f.domain(), 128);
  const auto one = base_fiber_cloud(f, CircleAngle(0.3), 1, 200, 1, g);
  CHECK(one.count() == 1);

  const auto pts = base_fiber_points(f, CircleAngle(0.3), 500, 200, 2);
  // pullback points over an arbitrary t lie in the attractor of the circle-driven system (all f_t),
  // not necessarily in the smaller generator attractor
  const auto run = attractor_iterate([&](const GridSet& k) { return hutchinson_step_circle(f, k, 32); },
                                     GridSet::full_disk(g, f.domain()), 0.5 * g.h, 200);
  const auto field = distance_field(run.set);
  for (auto p : pts) {
    int ix = 0, iy = 0;
    REQUIRE(g.locate(p, ix, iy));
    CHECK(field[g.index(ix, iy)] <= 2 * g.h);
  }
}
