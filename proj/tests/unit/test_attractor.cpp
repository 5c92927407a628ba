#include <doctest.h>

#include "ergograph/attractor.hpp"
#include "ergograph/rng.hpp"

using namespace ergograph;

namespace {

std::shared_ptr<const PlateauFamily> default_family() {
  static const auto f = std::make_shared<PlateauFamily>(FamilyConfig::defaults());
  return f;
}

Ifs square_control() {
  Ifs ifs;
  ifs.domain = {{0.5, 0.5}, 1.0};
  for (double cx : {0.0, 0.4})
    for (double cy : {0.0, 0.4}) ifs.maps.push_back(std::make_shared<AffineMap>(AffineMap::scaling(0.6, {cx, cy})));
  return ifs;
}

Ifs cantor_control() {
  Ifs ifs;
  ifs.domain = {{0.5, 0.5}, 1.0};
  for (double cx : {0.0, 2.0 / 3})
    for (double cy : {0.0, 2.0 / 3}) ifs.maps.push_back(std::make_shared<AffineMap>(AffineMap::scaling(1.0 / 3, {cx, cy})));
  return ifs;
}

const AttractorRun& default_attractor_256() {
  static const AttractorRun run = [] {
    const auto ifs = generator_ifs(default_family());
    const auto g = GridGeometry::for_domain(ifs.domain, 256);
    return attractor_iterate([&](const GridSet& k) { return hutchinson_step(ifs, k); },
                             GridSet::full_disk(g, ifs.domain), 0.5 * g.h, 400);
  }();
  return run;
}

}  // namespace

TEST_CASE("hutchinson step basics") {
  const auto fam = default_family();
  const auto ifs = generator_ifs(fam);
  const auto g = GridGeometry::for_domain(ifs.domain, 256);
  const PlanePoint x0{1.0, 0.0};

  SUBCASE("single cell maps to small stamps at the generator images") {
    const auto one = GridSet::single_cell(g, x0);
    const auto img = hutchinson_step(ifs, one);
    const auto c = g.cell_center(one.occupied().front());
    std::vector<PlanePoint> images;
    for (const auto& f : ifs.maps) images.push_back(f->apply(c));
    for (auto p : images) {
      int ix = 0, iy = 0;
      REQUIRE(g.locate(p, ix, iy));
      CHECK(img.test(ix, iy));
    }
    for (auto idx : img.occupied()) {
      double best = 1e9;
      for (auto p : images) best = std::min(best, distance(g.cell_center(idx), p));
      CHECK(best <= 2.5 * g.h);
    }
    CHECK(img.count() <= 4 * 25);
  }

  SUBCASE("union morphism") {
    Rng rng(1);
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<PlanePoint> a, b;
      for (int i = 0; i < 40; ++i) a.push_back(uniform_in_disk(ifs.domain, rng));
      for (int i = 0; i < 40; ++i) b.push_back(uniform_in_disk(ifs.domain, rng));
      const auto ka = GridSet::from_points(g, a), kb = GridSet::from_points(g, b);
      CHECK(hutchinson_step(ifs, set_union(ka, kb)) == set_union(hutchinson_step(ifs, ka), hutchinson_step(ifs, kb)));
    }
  }

  SUBCASE("image of X stays in X") {
    const auto x = GridSet::full_disk(g, ifs.domain);
    CHECK(inclusion_margin(hutchinson_step(ifs, x), x) >= 0.0);
  }

  SUBCASE("circle mode contains generator mode") {
    const auto seed = GridSet::single_cell(g, {0.3, 0.2});
    const auto gen = hutchinson_step(ifs, seed);
    const auto circ = hutchinson_step_circle(*fam, seed, 64);
    CHECK(inclusion_margin(gen, circ) >= 0.0);
    CHECK(circ.count() > gen.count());
  }
}

TEST_CASE("single contraction attractor") {
  Ifs ifs;
  ifs.domain = {{0, 0}, 1.0};
  const PlanePoint p{0.2, -0.3};
  ifs.maps.push_back(std::make_shared<AffineMap>(AffineMap::scaling(0.5, p * 0.5)));
  const auto g = GridGeometry::for_domain(ifs.domain, 128);
  const auto run = attractor_iterate([&](const GridSet& k) { return hutchinson_step(ifs, k); },
                                     GridSet::full_disk(g, ifs.domain), 0.5 * g.h, 100);
  // conservative stamping leaves a band of radius (L h sqrt(2)/2 + h) / (1 - L) around p
  const double band = (0.5 * g.h * std::sqrt(2.0) / 2 + g.h) / 0.5;
  CHECK(hausdorff_distance(run.set, GridSet::single_cell(g, p)) <= band + g.h);
  CHECK(run.set.count() <= 37);
}

TEST_CASE("attractor iteration") {
  const auto& run = default_attractor_256();
  const auto ifs = generator_ifs(default_family());
  const auto& g = run.set.geometry();
  CHECK(run.log.size() < 200);
  CHECK(run.log.back() < 2 * g.h);
  CHECK(hausdorff_distance(hutchinson_step(ifs, run.set), run.set) <= 2 * g.h);

  // the fixed point contains the generator fixed points
  for (double t : default_family()->generator_angles()) {
    int ix = 0, iy = 0;
    REQUIRE(g.locate(default_family()->fixed_point(t), ix, iy));
    CHECK(run.set.test(ix, iy));
  }

  CHECK_THROWS_AS(attractor_iterate([&](const GridSet& k) { return hutchinson_step(ifs, k); },
                                    GridSet::full_disk(g, ifs.domain), 0.5 * g.h, 3),
                  InconclusiveError);
}

TEST_CASE("coding points") {
  const auto fam = default_family();
  const auto ifs = generator_ifs(fam);

  const std::vector<int> ones(4000, 0);
  const auto p1 = coding_point(ifs, ones, 5e-2);
  CHECK(distance(p1.point, {1.0, 0.0}) <= p1.radius);
  CHECK(p1.radius < 5e-2);

  const std::vector<int> twos(400, 1);
  const auto p2 = coding_point(ifs, twos, 1e-9);
  CHECK(distance(p2.point, fam->fixed_point(fam->config().t[1])) < 1e-9);

  CHECK_THROWS_AS(coding_point(ifs, std::vector<int>(3, 1), 1e-6), InconclusiveError);

  // random words land in the computed attractor
  const auto& run = default_attractor_256();
  const double h = run.set.geometry().h;
  const auto field = distance_field(run.set);
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    std::vector<int> word(300);
    for (auto& w : word) w = static_cast<int>(rng.below(4));
    const auto cp = coding_point(ifs, word, 1e-3);
    int ix = 0, iy = 0;
    REQUIRE(run.set.geometry().locate(cp.point, ix, iy));
    CHECK(field[run.set.geometry().index(ix, iy)] <= 1e-3 + 2 * h);
  }
}

TEST_CASE("weak hyperbolicity scan") {
  const auto ifs = generator_ifs(default_family());
  const auto scan = weak_hyperbolicity_scan(ifs, 200, 200, 4);
  CHECK(scan.report.passed());
  CHECK(scan.max_profile.size() == 201);
  CHECK(scan.max_profile.front() == doctest::Approx(6.0).epsilon(1e-3));
  CHECK(scan.max_profile.back() < 6e-3);

  // the weak generator alone: still shrinking, but far slower than geometric
  Ifs weak{{ifs.maps[0]}, ifs.domain};
  const auto slow = weak_hyperbolicity_scan(weak, 1, 200, 4);
  CHECK(slow.max_profile[200] < slow.max_profile[100]);
  CHECK(slow.max_profile[200] > std::pow(0.9, 200) * 6.0);
  CHECK_FALSE(slow.report.passed());

  Ifs iso{{std::make_shared<AffineMap>(Mat2::rotation(0.3), PlanePoint{0, 0})}, {{0, 0}, 1.0}};
  const auto bad = weak_hyperbolicity_scan(iso, 10, 50, 1);
  CHECK(bad.report.verdict == Verdict::Fail);
  CHECK(bad.max_profile.back() == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("superellipse region") {
  const EllipseSpec e{{1, 2}, 2.0, 1.0, 0.0, 2.0};
  CHECK(e.contains({3, 2}));
  CHECK_FALSE(e.contains({3.01, 2}));
  CHECK(e.depth({1, 2}) == doctest::Approx(1.0));
  CHECK(e.depth({4, 2}) < 0);
  CHECK(e.outside_distance_lower({4, 2}) <= 1.0);
  const EllipseSpec sq{{0.5, 0.5}, 0.4, 0.4, 0.3, std::numeric_limits<double>::infinity()};
  for (int i = 0; i < 16; ++i) CHECK(sq.gauge(sq.boundary_point(i / 16.0)) == doctest::Approx(1.0));
  Rng rng(2);
  for (int i = 0; i < 2000; ++i) {
    const PlanePoint p{rng.uniform(-1, 2), rng.uniform(-1, 2)};
    // depth is a certified distance bound: moving by less than it cannot change membership
    const double d = e.depth(p);
    if (d > 0) CHECK(e.contains(p + PlanePoint{0.99 * d, 0}));
    const double out = e.outside_distance_lower(p);
    if (out > 0) CHECK_FALSE(e.contains(p + PlanePoint{0, 0.99 * out}));
  }
}

TEST_CASE("covering certificate controls") {
  const EllipseSpec inner{{0.5, 0.5}, 0.4, 0.4, 0.0, std::numeric_limits<double>::infinity()};
  const auto pos = covering_verify(square_control(), inner, 0.0, 256);
  CHECK(pos.passed());
  CHECK(pos.stat("margin") == doctest::Approx(0.04).epsilon(0.25));

  const EllipseSpec unit{{0.5, 0.5}, 0.5, 0.5, 0.0, std::numeric_limits<double>::infinity()};
  const auto neg = covering_verify(cantor_control(), unit, 0.0, 256);
  CHECK(neg.verdict == Verdict::Fail);
  CHECK(neg.stat("margin") < 0);

  // the requirement is honoured
  CHECK_FALSE(covering_verify(square_control(), inner, 0.2, 256).passed());

  const EllipseSpec escaping{{0.5, 0.5}, 2.0, 2.0, 0.0, 2.0};
  CHECK_THROWS_AS(covering_verify(square_control(), escaping, 0.0, 64), std::invalid_argument);
}

TEST_CASE("covering search") {
  const auto found = covering_search(square_control(), 1000, 3, 256);
  REQUIRE(found.best.has_value());
  CHECK(found.report.passed());
  CHECK(found.report.stat("margin") > 0);

  const auto cantor = covering_search(cantor_control(), 300, 3, 128);
  CHECK_FALSE(cantor.report.passed());
  CHECK(cantor.proxy_margin < 0);
}

TEST_CASE("covering implies interior") {
  const auto ifs = square_control();
  const auto g = GridGeometry::for_domain(ifs.domain, 256);
  const auto run = attractor_iterate([&](const GridSet& k) { return hutchinson_step(ifs, k); },
                                     GridSet::full_disk(g, ifs.domain), 0.5 * g.h, 200);
  const EllipseSpec inner{{0.5, 0.5}, 0.4, 0.4, 0.0, std::numeric_limits<double>::infinity()};
  REQUIRE(covering_verify(ifs, inner, 0.0, 256).passed());
  std::size_t in_b = 0, hit = 0;
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix)
      if (inner.contains(g.cell_center(ix, iy))) {
        ++in_b;
        hit += run.set.test(ix, iy);
      }
  CHECK(static_cast<double>(hit) >= 0.99 * static_cast<double>(in_b));
}

TEST_CASE("chaos game") {
  const auto fam = default_family();
  const auto ifs = generator_ifs(fam);

  Ifs single{{ifs.maps[1]}, ifs.domain};
  const auto mu = chaos_game(single, 10000, 0, 1, {2.0, 1.0});
  const auto p2 = fam->fixed_point(fam->config().t[1]);
  CHECK(wasserstein1(mu, EmpiricalMeasure::dirac(p2)) < 1e-3);

  const auto a = chaos_game(ifs, 20000, 100, 5, {0.0, 0.0});
  const auto b = chaos_game(ifs, 20000, 100, 5, {0.0, 0.0});
  CHECK(a.points() == b.points());
  CHECK(a.size() == 20000);
  CHECK(a.normalized());

  // support inside the computed attractor
  const auto& run = default_attractor_256();
  const auto field = distance_field(run.set);
  const auto& g = run.set.geometry();
  double worst = 0;
  for (auto p : a.points()) {
    int ix = 0, iy = 0;
    REQUIRE(g.locate(p, ix, iy));
    worst = std::max(worst, field[g.index(ix, iy)]);
  }
  CHECK(worst <= 2 * g.h);
}

TEST_CASE("transfer operator") {
  const auto ifs = generator_ifs(default_family());
  const PlanePoint x0{1.0, 0.0};
  const auto t1 = transfer_step(ifs, EmpiricalMeasure::dirac(x0), 1);
  CHECK(t1.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(t1.points()[i] == ifs.maps[i]->apply(x0));
    CHECK(t1.weights()[i] == doctest::Approx(0.25));
  }

  Rng rng(3);
  std::vector<PlanePoint> pa, pb;
  for (int i = 0; i < 8; ++i) pa.push_back(uniform_in_disk(ifs.domain, rng));
  for (int i = 0; i < 8; ++i) pb.push_back(PlanePoint{rng.uniform(-0.5, 0.5), rng.uniform(1.5, 2.0)});
  auto mu = EmpiricalMeasure::uniform(pa), nu = EmpiricalMeasure::uniform(pb);
  double prev = wasserstein1(mu, nu);
  // no thinning up to 512 atoms, so the exact solver sees the true pushforwards
  for (int n = 0; n < 3; ++n) {
    mu = transfer_step(ifs, mu, 10 + n);
    nu = transfer_step(ifs, nu, 20 + n);
    CHECK(std::abs(mu.total_mass() - 1.0) < 1e-12);
    const double w = wasserstein1(mu, nu);
    CHECK(w < prev);
    prev = w;
  }

  auto big = EmpiricalMeasure::uniform(pa);
  for (int n = 0; n < 6; ++n) big = transfer_step(ifs, big, 30 + n, 1000);
  CHECK(big.size() <= 1000);
  CHECK(std::abs(big.total_mass() - 1.0) < 1e-12);
}

TEST_CASE("cusp regions") {
  const auto fam = default_family();
  const auto f = generator_maps(fam)[0];
  const auto g = GridGeometry::for_domain(fam->domain(), 512);
  const auto w1 = default_cusp_rectangle(fam->config());
  CHECK(w1.lo.x1 == doctest::Approx(1.05));
  CHECK(w1.hi.x2 == doctest::Approx(0.15));
  const auto cusp = cusp_regions(*f, g, w1, 50);
  REQUIRE(cusp.regions.size() == 50);
  REQUIRE(cusp.diameters.size() == 50);
  for (std::size_t j = 1; j + 1 < cusp.diameters.size(); ++j) CHECK(cusp.diameters[j + 1] <= cusp.diameters[j]);
  const auto x = GridSet::full_disk(g, fam->domain());
  for (const auto& w : cusp.regions) CHECK(inclusion_margin(w, x) >= 0);
  // the weak direction contracts only cubically, so the approach to x0 is slow but steady
  const auto target = GridSet::single_cell(g, {1.0, 0.0});
  std::vector<double> dist;
  for (const auto& w : cusp.regions) dist.push_back(hausdorff_distance(w, target));
  for (std::size_t j = 1; j + 1 < dist.size(); ++j) CHECK(dist[j + 1] <= dist[j] + g.h);
  CHECK(dist.back() < 0.6 * dist[1]);
  CHECK(cusp.diameters.back() < 0.4 * cusp.diameters.front());
}

TEST_CASE("polygon fill") {
  const GridGeometry g{{0, 0}, 0.1, 10, 10};
  const std::vector<PlanePoint> square{{0.2, 0.2}, {0.8, 0.2}, {0.8, 0.8}, {0.2, 0.8}};
  const auto set = fill_polygon(g, square);
  CHECK(set.count() >= 36);
  CHECK(set.count() <= 40);
  CHECK(set.test(2, 2));
  CHECK_FALSE(set.test(1, 1));
}
