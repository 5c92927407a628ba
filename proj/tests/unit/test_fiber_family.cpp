#include <doctest.h>

#include <numbers>

#include "ergograph/fiber_family.hpp"
#include "ergograph/rng.hpp"

using namespace ergograph;

namespace {

const PlateauFamily& family() {
  static const PlateauFamily f(FamilyConfig::defaults());
  return f;
}

double fd_scale(double a, double b) { return std::max({std::abs(a), std::abs(b), 1e-3}); }

}  // namespace

TEST_CASE("default configuration") {
  const auto c = FamilyConfig::defaults();
  CHECK(validate(c).empty());
  CHECK(c.k == 8);
  CHECK(c.t[1] == doctest::Approx(0.2360679775));
  CHECK(c.t[2] == 0.5);
  CHECK(c.t[3] == doctest::Approx(0.7360679775));
  CHECK(c.delta == doctest::Approx(0.1));
  // disjoint arcs of length 1/8: neighbouring centres are more than 1/8 apart
  for (std::size_t i = 0; i < 4; ++i) {
    const double gap = CircleAngle::reduce(c.t[(i + 1) % 4] - c.t[i]);
    CHECK(gap > 1.0 / 8);
  }
}

TEST_CASE("configuration JSON round trip and validation") {
  const auto c = FamilyConfig::defaults();
  const auto j = to_json(c);
  CHECK(family_config_from_json(j) == c);
  CHECK(family_config_from_json(nlohmann::json::parse(j.dump())) == c);

  auto extra = j;
  extra["colour"] = 3;
  CHECK_THROWS_AS(family_config_from_json(extra), ConfigError);

  auto missing = j;
  missing.erase("beta");
  CHECK_THROWS_AS(family_config_from_json(missing), ConfigError);

  auto bad = c;
  bad.t[1] = 0.05;  // t_2 < delta
  bad.n[1] = 0;
  const auto issues = validate(bad);
  CHECK_FALSE(issues.empty());
  bool ordering = false;
  for (const auto& i : issues) ordering |= i.message.find("plateau ordering") != std::string::npos && i.pointer == "/t/1";
  CHECK(ordering);
  CHECK_THROWS_AS(PlateauFamily{bad}, ConfigError);

  auto wrong_k = c;
  wrong_k.k = 9;
  CHECK(validate(wrong_k).front().pointer == "/k");

  auto rational = FamilyConfig::derived(2, 0.5, 0.9, 0.25, {0, 1});
  bool beta_flagged = false;
  for (const auto& i : validate(rational)) beta_flagged |= i.pointer == "/beta";
  CHECK(beta_flagged);
}

TEST_CASE("eta") {
  const auto& f = family();
  const double d = f.config().delta;
  CHECK(f.eta(0.0) == 0.0);
  CHECK(f.eta(0.25) == d);
  CHECK(f.eta(0.5) == 0.0);
  CHECK(f.eta(1.0) == 0.0);
  CHECK(f.eta(0.75) == d);
  CHECK_THROWS_AS(f.eta(1.5), std::domain_error);
  CHECK_THROWS_AS(f.eta(-0.1), std::domain_error);
  // monotone ramps and flat junctions
  for (int i = 0; i < 100; ++i) {
    const double a = d * i / 100.0, b = d * (i + 1) / 100.0;
    CHECK(f.eta(a) <= f.eta(b));
  }
  for (double tau : {0.0, d, 0.5 - d, 0.5, 0.5 + d, 1.0 - d}) {
    CHECK(std::abs(f.eta_prime(tau)) < 1e-12);
  }
  // derivative against central differences
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const double tau = rng.uniform(1e-4, 1 - 1e-4);
    const double e = 1e-6;
    const double fd = (f.eta(tau + e) - f.eta(tau - e)) / (2 * e);
    CHECK(f.eta_prime(tau) == doctest::Approx(fd).epsilon(1e-5).scale(1));
  }
}

TEST_CASE("theta") {
  const auto& f = family();
  const auto& c = f.config();
  CHECK(f.theta(CircleAngle(c.t[1])) == c.t[1]);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(f.theta(CircleAngle(c.arcs[i].lo + 1e-9)) == c.t[i]);
    CHECK(f.theta(CircleAngle(c.arcs[i].hi - 1e-9)) == c.t[i]);
  }
  const double mid = (c.arcs[1].hi + c.arcs[2].lo) / 2;
  CHECK(f.theta(CircleAngle(mid)) == doctest::Approx((c.t[1] + 0.5) / 2));
  CHECK(f.theta(CircleAngle(c.arcs[0].lo + 1.0 - 1e-12)) == doctest::Approx(1.0));
  // strictly increasing across each gap
  double prev = -1.0;
  for (int i = 0; i < 1000; ++i) {
    const double th = f.theta(CircleAngle(c.arcs[0].hi + (c.arcs[0].lo + 1 - c.arcs[0].hi) * i / 1000.0));
    CHECK(th >= prev);
    prev = th;
  }
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const double t = rng.uniform(0.01, 0.99), e = 1e-7;
    const double fd = (f.theta(CircleAngle(t + e)) - f.theta(CircleAngle(t - e))) / (2 * e);
    CHECK(f.theta_prime(CircleAngle(t)) == doctest::Approx(fd).epsilon(1e-4).scale(1));
  }
}

TEST_CASE("h_eval examples") {
  const auto& f = family();
  const PlanePoint x0 = f.config().x0;
  CHECK(f.h_eval(0.0, x0) == x0);
  const auto p = f.h_eval(0.0, x0 + PlanePoint{1.0, 0.0});
  CHECK(p.x1 == doctest::Approx(x0.x1 + 1.0 / 3 + std::numbers::pi / 6));
  CHECK(p.x2 == doctest::Approx(0.0));
  const auto q = f.h_eval(0.25, x0);
  CHECK(q.x1 == doctest::Approx(0.0).scale(1));
  CHECK(q.x2 == doctest::Approx(1.0));
  CHECK_THROWS_AS(f.h_eval(0.1, PlanePoint{5.0, 0.0}), std::domain_error);
}

TEST_CASE("fiber_eval on plateaus") {
  const auto& f = family();
  const auto& c = f.config();
  const PlanePoint x0 = c.x0;
  CHECK(f.eval(CircleAngle(0.01), x0) == x0);
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    const PlanePoint x = uniform_in_disk(c.domain, rng);
    const double t2 = c.t[1];
    const auto expected2 = Mat2::rotation(2 * std::numbers::pi * t2) * f.g_eval(c.delta, x);
    const auto got2 = f.eval(CircleAngle(t2 + 0.03), x);
    CHECK(got2.x1 == doctest::Approx(expected2.x1));
    CHECK(got2.x2 == doctest::Approx(expected2.x2));
    const auto expected3 = Mat2::rotation(std::numbers::pi) * f.g_eval(0.0, x);
    const auto got3 = f.eval(CircleAngle(0.5 - 0.05), x);
    CHECK(got3.x1 == doctest::Approx(expected3.x1));
    CHECK(got3.x2 == doctest::Approx(expected3.x2));
  }
}

TEST_CASE("plateau property: f_t equals generator i bit for bit") {
  auto fam = std::make_shared<PlateauFamily>(FamilyConfig::defaults());
  const auto gens = generator_maps(fam);
  Rng rng(12);
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const auto arc = fam->config().arcs[i];
    for (int j = 0; j < 50; ++j) {
      const PlanePoint x = uniform_in_disk(fam->domain(), rng);
      const CircleAngle t(rng.uniform(arc.lo, arc.hi));
      const auto a = fam->eval(t, x), b = gens[i]->apply(x);
      CHECK(a.x1 == b.x1);
      CHECK(a.x2 == b.x2);
    }
  }
}

TEST_CASE("fiber_jacobian") {
  const auto& f = family();
  const auto& c = f.config();
  const auto j1 = f.jacobian(CircleAngle(0.0), c.x0);
  CHECK(j1 == Mat2::diag(1.0, 0.5));
  const auto j2 = f.jacobian(CircleAngle(c.t[1]), c.x0);
  const auto expect = Mat2::rotation(2 * std::numbers::pi * c.t[1]) * Mat2::diag(0.9, 0.5);
  CHECK(j2.a11 == doctest::Approx(expect.a11));
  CHECK(j2.a12 == doctest::Approx(expect.a12));
  CHECK(j2.a21 == doctest::Approx(expect.a21));
  CHECK(j2.a22 == doctest::Approx(expect.a22));

  SUBCASE("finite-difference oracle") {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
      const CircleAngle t(rng.uniform());
      const PlanePoint x = uniform_in_disk({c.domain.center, c.domain.radius - 1e-3}, rng);
      const double e = 1e-6;
      const auto dx1 = (f.eval(t, x + PlanePoint{e, 0}) - f.eval(t, x - PlanePoint{e, 0})) * (0.5 / e);
      const auto dx2 = (f.eval(t, x + PlanePoint{0, e}) - f.eval(t, x - PlanePoint{0, e})) * (0.5 / e);
      const auto j = f.jacobian(t, x);
      const double scale = j.norm();
      CHECK(std::abs(j.a11 - dx1.x1) / scale < 1e-6);
      CHECK(std::abs(j.a21 - dx1.x2) / scale < 1e-6);
      CHECK(std::abs(j.a12 - dx2.x1) / scale < 1e-6);
      CHECK(std::abs(j.a22 - dx2.x2) / scale < 1e-6);
    }
  }
}

TEST_CASE("eigenvalues at the weak fixed point") {
  const auto& f = family();
  const auto p = f.fixed_point(0.0);
  const auto ev = f.jacobian(CircleAngle(0.0), p).real_eigenvalues();
  CHECK(std::abs(ev[0] - 1.0) < 1e-9);
  CHECK(std::abs(ev[1] - 0.5) < 1e-9);
  const auto g = f.h_jacobian(0.25, f.config().x0);
  // Dg(x0) = diag(0.9, 0.5) before the rotation
  const auto dg = Mat2::rotation(-0.5 * std::numbers::pi) * g;
  const auto evg = dg.real_eigenvalues();
  CHECK(std::abs(evg[0] - 0.9) < 1e-9);
  CHECK(std::abs(evg[1] - 0.5) < 1e-9);
}

TEST_CASE("fiber_inverse") {
  const auto& f = family();
  const auto& c = f.config();
  Rng rng(6);
  for (int i = 0; i < 500; ++i) {
    const CircleAngle t(rng.uniform());
    const PlanePoint x = uniform_in_disk(c.domain, rng);
    const auto y = f.eval(t, x);
    const auto back = f.inverse(t, y);
    CHECK(distance(back, x) < 1e-10);
    CHECK(distance(f.eval(t, back), y) < 1e-12);
  }
  CHECK(distance(f.inverse(CircleAngle(0.0), c.x0), c.x0) < 1e-14);
  CHECK_THROWS_AS(f.inverse(CircleAngle(0.3), PlanePoint{2.95, 0.0}), std::domain_error);
  CHECK(std::abs(PlateauFamily::s(PlateauFamily::s_inverse(-7.3)) + 7.3) < 1e-14);
}

TEST_CASE("fixed_point") {
  const auto& f = family();
  const auto& c = f.config();
  CHECK(distance(f.fixed_point(0.0), c.x0) < 1e-10);
  CHECK(distance(f.fixed_point(1.0), c.x0) < 1e-10);
  const auto p = f.fixed_point(c.t[1]);
  CHECK(distance(f.h_eval(c.t[1], p), p) < 1e-12);
  // independent oracle: plain iteration from another start
  PlanePoint q{-1.0, 1.0};
  for (int i = 0; i < 2000; ++i) q = f.h_eval(c.t[1], q);
  CHECK(distance(p, q) < 1e-10);
}

TEST_CASE("image clearance and continuity in tau") {
  const auto& f = family();
  const auto& c = f.config();
  double worst = 0.0, lip = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double tau = i / 200.0;
    for (int j = 0; j < 720; ++j) {
      const double a = 2 * std::numbers::pi * j / 720;
      const PlanePoint x = c.domain.center + PlanePoint{std::cos(a), std::sin(a)} * c.domain.radius;
      const auto y = f.h_eval(tau, x);
      worst = std::max(worst, distance(y, c.domain.center));
      if (i > 0) lip = std::max(lip, distance(y, f.h_eval((i - 1) / 200.0, x)) * 200.0);
    }
  }
  CHECK(c.domain.radius - worst >= 0.5);
  MESSAGE("empirical tau-Lipschitz constant of h on the boundary: " << lip);
  CHECK(lip < 1e3);
}

TEST_CASE("weak contraction of s") {
  Rng rng(10);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform(-4, 4), v = rng.uniform(-4, 4);
    if (u == v) continue;
    CHECK(std::abs(PlateauFamily::s(u) - PlateauFamily::s(v)) < std::abs(u - v));
  }
  CHECK(PlateauFamily::s_prime(0.0) == 1.0);
}

TEST_CASE("t derivative and modulus") {
  const auto& f = family();
  Rng rng(13);
  double sampled = 0.0;
  for (int i = 0; i < 500; ++i) {
    const CircleAngle t(rng.uniform());
    const PlanePoint x = uniform_in_disk(f.domain(), rng);
    const double e = 1e-7;
    const auto fd = (f.eval(CircleAngle(t.value() + e), x) - f.eval(CircleAngle(t.value() - e), x)) * (0.5 / e);
    const auto an = f.dt(t, x);
    CHECK(distance(fd, an) <= 1e-5 * fd_scale(norm(fd), norm(an)));
    sampled = std::max(sampled, norm(an));
  }
  CHECK(f.t_modulus(0.0, 1.0) >= sampled);
  // zero on the interior of a plateau
  CHECK(f.t_modulus(0.01, 0.05) == 0.0);
}

TEST_CASE("enclosure data is conservative") {
  const auto& f = family();
  Rng rng(14);
  for (int i = 0; i < 300; ++i) {
    const CircleAngle t(rng.uniform());
    const PlanePoint c = uniform_in_disk({f.domain().center, 2.0}, rng);
    const double r = rng.uniform(0.001, 0.9);
    const double lip = f.lipschitz_on_ball(t, c, r);
    const Box b = Box::around(c, r / std::sqrt(2.0));
    const Box img = f.image_box(t, b);
    for (int j = 0; j < 20; ++j) {
      const PlanePoint x = c + PlanePoint{rng.uniform(-1, 1), rng.uniform(-1, 1)} * (r / std::sqrt(2.0));
      const PlanePoint y = c + PlanePoint{rng.uniform(-1, 1), rng.uniform(-1, 1)} * (r / std::sqrt(2.0));
      CHECK(distance(f.eval(t, x), f.eval(t, y)) <= lip * distance(x, y) + 1e-14);
      CHECK(img.contains(f.eval(t, x)));
    }
    const PlanePoint x = uniform_in_disk(f.domain(), rng);
    const PlanePoint y = uniform_in_disk(f.domain(), rng);
    const double il = f.inverse_lipschitz(t);
    CHECK(distance(x, y) <= il * distance(f.eval(t, x), f.eval(t, y)) + 1e-12);
  }
}

TEST_CASE("contraction_report") {
  const auto rep = contraction_report(family(), 20000, 42);
  CHECK(rep.verdict == Verdict::Pass);
  CHECK(rep.stat("max_ratio") <= 1.0 + 1e-12);
  CHECK(rep.stat("max_uniform_jacobian_norm") <= 0.9 + 1e-9);
  CHECK(rep.stat("max_uniform_jacobian_norm") > 0.85);

  const auto expanding = PlateauFamily::unchecked(FamilyConfig::derived(2, 0.5, 1.1, (std::sqrt(5.0) - 1) / 2, {0, 2}));
  CHECK(contraction_report(expanding, 2000, 1).verdict == Verdict::Fail);
}

TEST_CASE("reference families") {
  const DiskDomain d{{0, 0}, 3};
  auto map = std::make_shared<AffineMap>(AffineMap::scaling(0.5, {0.2, 0.1}));
  ConstantFamily cf(map, d, 8);
  CHECK(cf.eval(CircleAngle(0.3), {1, 1}) == PlanePoint{0.7, 0.6});
  CHECK(distance(cf.inverse(CircleAngle(0.3), {0.7, 0.6}), {1, 1}) < 1e-14);
  auto other = std::make_shared<AffineMap>(AffineMap::scaling(0.5, {-0.2, 0.1}));
  PiecewiseFamily pf({0.0, 0.5}, {map, other}, d, 8);
  CHECK(pf.eval(CircleAngle(0.49), {0, 0}) == PlanePoint{0.2, 0.1});
  CHECK(pf.eval(CircleAngle(0.5), {0, 0}) == PlanePoint{-0.2, 0.1});
  CHECK_THROWS_AS(PiecewiseFamily({0.1}, {map}, d, 8), std::invalid_argument);
}

TEST_CASE("jacobian consistency and weak point reports") {
  const auto jc = jacobian_consistency(family(), 1000, 3);
  CHECK(jc.passed());
  CHECK(jc.stat("max_rel_error") < 1e-6);
  // a wrong analytic Jacobian is caught
  class Lying final : public FiberFamily {
   public:
    explicit Lying(const PlateauFamily& f) : f_(f) {}
    const DiskDomain& domain() const override { return f_.domain(); }
    int k() const override { return 8; }
    std::vector<double> generator_angles() const override { return f_.generator_angles(); }
    PlanePoint eval(CircleAngle t, PlanePoint x) const override { return f_.eval(t, x); }
    Mat2 jacobian(CircleAngle t, PlanePoint x) const override { return f_.jacobian(t, x) * (1 + 1e-4); }
    double lipschitz_on_ball(CircleAngle t, PlanePoint c, double r) const override {
      return f_.lipschitz_on_ball(t, c, r);
    }
    double inverse_lipschitz(CircleAngle t) const override { return f_.inverse_lipschitz(t); }

   private:
    const PlateauFamily& f_;
  };
  CHECK(jacobian_consistency(Lying(family()), 100, 3).verdict == Verdict::Fail);

  const auto wp = weak_point_report(family());
  CHECK(wp.passed());
  CHECK(wp.stat("f_ev1") == doctest::Approx(1.0));
  CHECK(wp.stat("g_ev1") == doctest::Approx(0.9));
  CHECK(wp.stat("g_ev2") == doctest::Approx(0.5));
}
