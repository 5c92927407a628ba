#include "ergograph/fiber_family.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>

#include "ergograph/parallel.hpp"
#include "ergograph/rng.hpp"

namespace ergograph {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double smoothstep(double x) { return std::clamp(x * x * x * (10.0 - 15.0 * x + 6.0 * x * x), 0.0, 1.0); }
double smoothstep_prime(double x) { return 30.0 * x * x * (1.0 - x) * (1.0 - x); }
constexpr double kSmoothstepSlope = 1.875;  // max of smoothstep_prime

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

FamilyConfig FamilyConfig::derived(int m, double lambda, double lambda_prime, double beta, std::vector<int> n) {
  FamilyConfig c;
  c.m = m;
  c.k = 4 * m;
  c.lambda = lambda;
  c.lambda_prime = lambda_prime;
  c.delta = 1.0 - lambda_prime;
  c.beta = beta;
  c.n = std::move(n);
  c.t.assign(2 * m, 0.0);
  for (int i = 1; i < m && i < static_cast<int>(c.n.size()); ++i) {
    c.t[i] = CircleAngle::reduce(c.n[i] * beta);
  }
  c.t[m] = 0.5;
  for (int i = 1; i < m; ++i) c.t[m + i] = CircleAngle::reduce(c.t[i] + 0.5);
  const double hw = 0.5 / c.k;
  for (double ti : c.t) c.arcs.push_back({ti - hw, ti + hw});
  return c;
}

FamilyConfig FamilyConfig::defaults() {
  return derived(2, 0.5, 0.9, (std::sqrt(5.0) - 1.0) / 2.0, {0, 2});
}

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : std::invalid_argument([&] {
        std::string msg = "invalid family configuration:";
        for (const auto& i : issues) msg += "\n  " + i.pointer + ": " + i.message;
        return msg;
      }()),
      issues_(std::move(issues)) {}

std::vector<ConfigIssue> validate(const FamilyConfig& c) {
  std::vector<ConfigIssue> out;
  auto issue = [&](std::string p, std::string m) { out.push_back({std::move(p), std::move(m)}); };
  constexpr double tol = 1e-12;

  if (c.m < 2) issue("/m", "m must be >= 2");
  if (c.k != 4 * c.m) issue("/k", "k must equal 4m = " + std::to_string(4 * c.m));
  if (!(c.lambda > 0.0 && c.lambda < 1.0)) issue("/lambda", "lambda must lie in (0, 1)");
  if (!(c.lambda_prime > c.lambda && c.lambda_prime < 1.0)) issue("/lambda_prime", "lambda_prime must lie in (lambda, 1)");
  if (!(std::abs(c.delta - (1.0 - c.lambda_prime)) <= tol)) issue("/delta", "delta must equal 1 - lambda_prime");
  if (!(c.beta > 0.0 && c.beta < 1.0)) {
    issue("/beta", "beta must lie in (0, 1)");
  } else {
    for (int q = 1; q <= 100; ++q) {
      const double p = std::round(c.beta * q);
      if (std::abs(c.beta * q - p) <= tol * q) {
        issue("/beta", "beta must be irrational (equals " + fmt(p) + "/" + std::to_string(q) + ")");
        break;
      }
    }
  }
  if (!(c.domain.radius > 0.0) || !is_finite(c.domain.center)) issue("/domain/radius", "domain radius must be positive");
  if (!c.domain.contains(c.x0)) issue("/x0", "x0 must lie in the domain");
  if (!c.domain.contains(c.z)) issue("/z", "z must lie in the domain");
  if (c.m < 2) return out;

  const auto m = static_cast<std::size_t>(c.m);
  if (c.n.size() != m) {
    issue("/n", "n must list m = " + std::to_string(c.m) + " exponents (n_1 = 0)");
  } else {
    if (c.n[0] != 0) issue("/n/0", "n_1 must be 0 (t_1 = 0)");
    for (std::size_t i = 1; i < m; ++i) {
      if (c.n[i] < 1) issue("/n/" + std::to_string(i), "n_i must be a positive integer");
    }
  }
  if (c.t.size() != 2 * m) {
    issue("/t", "t must list 2m = " + std::to_string(2 * c.m) + " plateau angles");
    return out;
  }
  if (c.t[0] != 0.0) issue("/t/0", "t_1 must be 0");
  if (c.t[m] != 0.5) issue("/t/" + std::to_string(m), "t_{m+1} must be 1/2");
  if (c.n.size() == m && c.beta > 0.0) {
    for (std::size_t i = 1; i < m; ++i) {
      if (std::abs(c.t[i] - CircleAngle::reduce(c.n[i] * c.beta)) > tol) {
        issue("/t/" + std::to_string(i), "t_i must equal n_i * beta mod 1");
      }
    }
  }
  for (std::size_t i = 1; i < m; ++i) {
    if (std::abs(c.t[m + i] - CircleAngle::reduce(c.t[i] + 0.5)) > tol) {
      issue("/t/" + std::to_string(m + i), "t_{m+i} must equal t_i + 1/2 mod 1");
    }
  }
  // 0 = t_1 < delta < t_2 < ... < t_m < 1/2 - delta < t_{m+1} = 1/2 < 1/2 + delta < ... < t_2m < 1
  std::vector<double> chain{c.t[0], c.delta};
  std::vector<int> who{0, -1};
  for (std::size_t i = 1; i < m; ++i) {
    chain.push_back(c.t[i]);
    who.push_back(static_cast<int>(i));
  }
  chain.push_back(0.5 - c.delta);
  who.push_back(-1);
  chain.push_back(c.t[m]);
  who.push_back(static_cast<int>(m));
  chain.push_back(0.5 + c.delta);
  who.push_back(-1);
  for (std::size_t i = m + 1; i < 2 * m; ++i) {
    chain.push_back(c.t[i]);
    who.push_back(static_cast<int>(i));
  }
  chain.push_back(1.0);
  who.push_back(-1);
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    if (!(chain[i] < chain[i + 1])) {
      const int idx = who[i + 1] >= 0 ? who[i + 1] : who[i];
      issue("/t/" + std::to_string(std::max(idx, 0)),
            "plateau ordering 0 = t_1 < delta < t_2 < ... < t_m < 1/2 - delta < t_{m+1} = 1/2 < 1/2 + delta < ... "
            "< t_2m < 1 is violated");
      break;
    }
  }

  if (c.arcs.size() != 2 * m) {
    issue("/arcs", "arcs must list 2m closed arcs");
    return out;
  }
  for (std::size_t i = 0; i < 2 * m; ++i) {
    const auto& a = c.arcs[i];
    const std::string p = "/arcs/" + std::to_string(i);
    if (!(std::abs(a.length() - 1.0 / c.k) <= tol)) issue(p, "arc length must be 1/k");
    if (!a.contains(CircleAngle(c.t[i]))) issue(p, "arc must contain its plateau angle t_i");
  }
  for (std::size_t i = 0; i < 2 * m; ++i) {
    const auto& a = c.arcs[i];
    const auto& b = c.arcs[(i + 1) % (2 * m)];
    const double gap = CircleAngle::reduce(b.lo - a.hi);
    if (!(gap > 0.0 && gap < 1.0 - a.length() - b.length())) {
      issue("/arcs/" + std::to_string(i), "arcs must be pairwise disjoint and ordered like t");
    }
  }
  return out;
}

namespace {

void require(bool ok, std::vector<ConfigIssue>& issues, const std::string& ptr, const std::string& msg) {
  if (!ok) issues.push_back({ptr, msg});
}

PlanePoint point_from_json(const nlohmann::json& j, const std::string& ptr, std::vector<ConfigIssue>& issues) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    issues.push_back({ptr, "expected [x1, x2]"});
    return {};
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

nlohmann::json to_json(const FamilyConfig& c) {
  nlohmann::json arcs = nlohmann::json::array();
  for (const auto& a : c.arcs) arcs.push_back({a.lo, a.hi});
  return {
      {"m", c.m},
      {"k", c.k},
      {"lambda", c.lambda},
      {"lambda_prime", c.lambda_prime},
      {"delta", c.delta},
      {"beta", c.beta},
      {"n", c.n},
      {"t", c.t},
      {"arcs", arcs},
      {"x0", {c.x0.x1, c.x0.x2}},
      {"z", {c.z.x1, c.z.x2}},
      {"domain", {{"center", {c.domain.center.x1, c.domain.center.x2}}, {"radius", c.domain.radius}}},
  };
}

FamilyConfig family_config_from_json(const nlohmann::json& j) {
  std::vector<ConfigIssue> issues;
  if (!j.is_object()) throw ConfigError(std::vector<ConfigIssue>{{"", "family configuration must be a JSON object"}});
  static const std::vector<std::string> keys{"m", "k", "lambda", "lambda_prime", "delta", "beta",
                                             "n", "t", "arcs",   "x0",           "z",     "domain"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) issues.push_back({"/" + key, "unknown key"});
  }
  for (const auto& key : keys) {
    if (!j.contains(key)) issues.push_back({"/" + key, "missing key"});
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));

  FamilyConfig c;
  auto integer = [&](const char* key, int& out) {
    require(j[key].is_number_integer(), issues, std::string("/") + key, "expected an integer");
    if (j[key].is_number_integer()) out = j[key].get<int>();
  };
  auto real = [&](const char* key, double& out) {
    require(j[key].is_number(), issues, std::string("/") + key, "expected a number");
    if (j[key].is_number()) out = j[key].get<double>();
  };
  integer("m", c.m);
  integer("k", c.k);
  real("lambda", c.lambda);
  real("lambda_prime", c.lambda_prime);
  real("delta", c.delta);
  real("beta", c.beta);
  c.n.clear();
  if (!j["n"].is_array()) {
    issues.push_back({"/n", "expected an array of integers"});
  } else {
    for (std::size_t i = 0; i < j["n"].size(); ++i) {
      const auto& v = j["n"][i];
      require(v.is_number_integer(), issues, "/n/" + std::to_string(i), "expected an integer");
      c.n.push_back(v.is_number_integer() ? v.get<int>() : 0);
    }
  }
  c.t.clear();
  if (!j["t"].is_array()) {
    issues.push_back({"/t", "expected an array of numbers"});
  } else {
    for (std::size_t i = 0; i < j["t"].size(); ++i) {
      const auto& v = j["t"][i];
      require(v.is_number(), issues, "/t/" + std::to_string(i), "expected a number");
      c.t.push_back(v.is_number() ? v.get<double>() : 0.0);
    }
  }
  c.arcs.clear();
  if (!j["arcs"].is_array()) {
    issues.push_back({"/arcs", "expected an array of [lo, hi] pairs"});
  } else {
    for (std::size_t i = 0; i < j["arcs"].size(); ++i) {
      const auto p = point_from_json(j["arcs"][i], "/arcs/" + std::to_string(i), issues);
      c.arcs.push_back({p.x1, p.x2});
    }
  }
  c.x0 = point_from_json(j["x0"], "/x0", issues);
  c.z = point_from_json(j["z"], "/z", issues);
  const auto& d = j["domain"];
  if (!d.is_object()) {
    issues.push_back({"/domain", "expected {center, radius}"});
  } else {
    for (const auto& [key, _] : d.items()) {
      if (key != "center" && key != "radius") issues.push_back({"/domain/" + key, "unknown key"});
    }
    if (!d.contains("center") || !d.contains("radius")) {
      issues.push_back({"/domain", "expected {center, radius}"});
    } else {
      c.domain.center = point_from_json(d["center"], "/domain/center", issues);
      require(d["radius"].is_number(), issues, "/domain/radius", "expected a number");
      if (d["radius"].is_number()) c.domain.radius = d["radius"].get<double>();
    }
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return c;
}

// ---------------------------------------------------------------------------
// Family interface defaults

Box FiberFamily::image_box(CircleAngle t, const Box& b) const {
  const PlanePoint c = b.center();
  const double r = b.half_diagonal();
  return Box::around(eval(t, c), lipschitz_on_ball(t, c, r) * r);
}

PlanePoint FiberFamily::dt(CircleAngle t, PlanePoint x) const {
  constexpr double step = 1e-6;
  const PlanePoint a = eval(CircleAngle(t.value() + step), x);
  const PlanePoint b = eval(CircleAngle(t.value() - step), x);
  return (a - b) * (0.5 / step);
}

double FiberFamily::t_modulus(double a, double b) const {
  // Sampled estimate, not a certified bound.
  constexpr int nt = 64, nx = 64;
  const auto& d = domain();
  double best = 0.0;
  for (int i = 0; i <= nt; ++i) {
    const CircleAngle t(a + (b - a) * i / nt);
    for (int j = 0; j < nx; ++j) {
      const double ang = kTwoPi * j / nx;
      for (double rad : {0.0, 0.5, 1.0}) {
        const PlanePoint x = d.center + PlanePoint{std::cos(ang), std::sin(ang)} * (rad * d.radius);
        best = std::max(best, norm(dt(t, x)));
      }
    }
  }
  return 1.25 * best;
}

PlanePoint FiberFamily::inverse(CircleAngle t, PlanePoint y) const {
  return newton_inverse([&](PlanePoint x) { return eval(t, x); }, [&](PlanePoint x) { return jacobian(t, x); }, y, y,
                        domain());
}

std::vector<PlaneMapPtr> generator_maps(const FiberFamilyPtr& family) {
  std::vector<PlaneMapPtr> out;
  for (double t : family->generator_angles()) out.push_back(std::make_shared<FiberSlice>(family, CircleAngle(t)));
  return out;
}

// ---------------------------------------------------------------------------
// PlateauFamily

PlateauFamily::PlateauFamily(FamilyConfig cfg) : cfg_(std::move(cfg)) {
  if (auto issues = validate(cfg_); !issues.empty()) throw ConfigError(std::move(issues));
}

PlateauFamily::PlateauFamily(FamilyConfig cfg, Unchecked) : cfg_(std::move(cfg)) {}

PlateauFamily PlateauFamily::unchecked(FamilyConfig cfg) { return PlateauFamily(std::move(cfg), Unchecked{}); }

double PlateauFamily::s(double u) { return u / 3.0 + (2.0 / 3.0) * std::atan(u); }

double PlateauFamily::s_minus_identity(double u) {
  // (2/3)(atan(u) - u); the series avoids cancellation near 0.
  if (std::abs(u) < 1e-2) {
    const double u2 = u * u;
    return (2.0 / 3.0) * u * u2 * (-1.0 / 3 + u2 * (1.0 / 5 + u2 * (-1.0 / 7 + u2 * (1.0 / 9 - u2 / 11))));
  }
  return (2.0 / 3.0) * (std::atan(u) - u);
}

double PlateauFamily::s_prime(double u) { return 1.0 - (2.0 / 3.0) * u * u / (1.0 + u * u); }

double PlateauFamily::s_inverse(double w) {
  if (w == 0.0 || !std::isfinite(w)) return w;
  const double a = std::abs(w);
  // u/3 <= s(u) <= u for u >= 0 brackets the root in [a, 3a].
  double lo = a, hi = 3.0 * a;
  double u = std::clamp(3.0 * (a - std::numbers::pi / 3.0), lo, hi);
  if (a < 1.0) u = a;
  for (int it = 0; it < 100; ++it) {
    const double f = s(u) - a;
    if (f > 0.0) {
      hi = u;
    } else {
      lo = u;
    }
    double next = u - f / s_prime(u);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - u) <= 1e-16 * std::max(1.0, u)) {
      u = next;
      break;
    }
    u = next;
  }
  return w < 0.0 ? -u : u;
}

double PlateauFamily::eta(double tau) const {
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::domain_error("eta: tau must lie in [0, 1]");
  const double d = cfg_.delta;
  if (tau < d) return d * smoothstep(tau / d);
  if (tau <= 0.5 - d) return d;
  if (tau < 0.5) return d * smoothstep((0.5 - tau) / d);
  if (tau < 0.5 + d) return d * smoothstep((tau - 0.5) / d);
  if (tau <= 1.0 - d) return d;
  return d * smoothstep((1.0 - tau) / d);
}

double PlateauFamily::eta_prime(double tau) const {
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::domain_error("eta: tau must lie in [0, 1]");
  const double d = cfg_.delta;
  if (tau < d) return smoothstep_prime(tau / d);
  if (tau <= 0.5 - d) return 0.0;
  if (tau < 0.5) return -smoothstep_prime((0.5 - tau) / d);
  if (tau < 0.5 + d) return smoothstep_prime((tau - 0.5) / d);
  if (tau <= 1.0 - d) return 0.0;
  return -smoothstep_prime((1.0 - tau) / d);
}

int PlateauFamily::locate(CircleAngle t) const {
  const int n = static_cast<int>(cfg_.arcs.size());
  for (int i = 0; i < n; ++i) {
    if (cfg_.arcs[i].contains(t)) return i;
  }
  for (int i = 0; i < n; ++i) {
    const double start = cfg_.arcs[i].hi;
    const double len = CircleAngle::reduce(cfg_.arcs[(i + 1) % n].lo - start);
    if (CircleAngle::reduce(t.value() - start) < len) return -1 - i;
  }
  throw std::logic_error("theta: angle in no arc and no gap");
}

double PlateauFamily::theta(CircleAngle t) const {
  const int where = locate(t);
  if (where >= 0) return cfg_.t[where];
  const int i = -1 - where;
  const int n = static_cast<int>(cfg_.arcs.size());
  const double start = cfg_.arcs[i].hi;
  const double len = CircleAngle::reduce(cfg_.arcs[(i + 1) % n].lo - start);
  const double p = CircleAngle::reduce(t.value() - start) / len;
  const double target = i + 1 < n ? cfg_.t[i + 1] : 1.0;
  return std::clamp(cfg_.t[i] + (target - cfg_.t[i]) * smoothstep(p), 0.0, 1.0);
}

double PlateauFamily::theta_prime(CircleAngle t) const {
  const int where = locate(t);
  if (where >= 0) return 0.0;
  const int i = -1 - where;
  const int n = static_cast<int>(cfg_.arcs.size());
  const double start = cfg_.arcs[i].hi;
  const double len = CircleAngle::reduce(cfg_.arcs[(i + 1) % n].lo - start);
  const double p = CircleAngle::reduce(t.value() - start) / len;
  const double target = i + 1 < n ? cfg_.t[i + 1] : 1.0;
  return (target - cfg_.t[i]) * smoothstep_prime(p) / len;
}

PlanePoint PlateauFamily::g_eval(double c, PlanePoint x) const {
  const double u = x.x1 - cfg_.x0.x1, v = x.x2 - cfg_.x0.x2;
  return {cfg_.x0.x1 + (1.0 - c) * s(u), cfg_.x0.x2 + cfg_.lambda * v};
}

namespace {

// Rotation by tau full turns; exactly the identity for integer tau.
Mat2 turn(double tau) {
  const double r = CircleAngle::reduce(tau);
  return r == 0.0 ? Mat2::identity() : Mat2::rotation(kTwoPi * r);
}

}  // namespace

PlanePoint PlateauFamily::h_unchecked(double tau, PlanePoint x) const {
  const PlanePoint g = g_eval(eta(tau), x);
  return turn(tau) * (g - cfg_.z) + cfg_.z;
}

PlanePoint PlateauFamily::h_eval(double tau, PlanePoint x) const {
  if (!cfg_.domain.contains(x, 1e-9 * cfg_.domain.radius)) throw std::domain_error("h_eval: x outside X");
  return h_unchecked(tau, x);
}

Mat2 PlateauFamily::h_jacobian(double tau, PlanePoint x) const {
  const double c = eta(tau);
  const double u = x.x1 - cfg_.x0.x1;
  return turn(tau) * Mat2::diag((1.0 - c) * s_prime(u), cfg_.lambda);
}

PlanePoint PlateauFamily::fixed_point(double tau) const {
  constexpr double kStop = 1e-13;
  constexpr long kCap = 1'000'000;
  // Work in w = x - x0 so the weak fixed point of h_0 (a triple root of h(x) - x) is resolved
  // below the cube root of machine epsilon.
  const double c = 1.0 - eta(tau);
  const Mat2 rot = turn(tau);
  const PlanePoint offset = rot * (cfg_.x0 - cfg_.z) - (cfg_.x0 - cfg_.z);
  auto h_rel = [&](PlanePoint w) { return rot * PlanePoint{c * s(w.x1), cfg_.lambda * w.x2} + offset; };
  // h(w) - w without cancelling s(u) against u.
  const Mat2 lin = rot * Mat2::diag(c, cfg_.lambda) - Mat2::identity();
  auto residual = [&](PlanePoint w) {
    return rot * PlanePoint{c * s_minus_identity(w.x1), 0.0} + lin * w + offset;
  };
  PlanePoint w = cfg_.z - cfg_.x0;
  long it = 0;
  // Plain iteration until the steps are small, then Newton on h(w) - w; plain iteration resumes
  // if Newton stops reducing the residual.
  for (; it < kCap; ++it) {
    const PlanePoint y = h_rel(w);
    const double step = distance(w, y);
    w = y;
    if (step < kStop) return cfg_.x0 + w;
    if (step < 1e-6) break;
  }
  for (int nt = 0; nt < 500; ++nt) {
    const PlanePoint r = residual(w);
    const double u2 = w.x1 * w.x1;
    const Mat2 a = rot * Mat2::diag(-c * (2.0 / 3.0) * u2 / (1.0 + u2), 0.0) + lin;
    if (a.det() == 0.0) break;
    const PlanePoint next = w - a.inverse() * r;
    if (!(norm(residual(next)) <= norm(r))) break;
    const double step = distance(w, next);
    w = next;
    if (step < kStop) return cfg_.x0 + w;
  }
  for (; it < kCap; ++it) {
    const PlanePoint y = h_rel(w);
    const double step = distance(w, y);
    w = y;
    if (step < kStop) return cfg_.x0 + w;
  }
  throw InconclusiveError("fixed_point: iteration cap reached", distance(w, h_rel(w)));
}

PlanePoint PlateauFamily::eval(CircleAngle t, PlanePoint x) const { return h_eval(theta(t), x); }

Mat2 PlateauFamily::jacobian(CircleAngle t, PlanePoint x) const { return h_jacobian(theta(t), x); }

double PlateauFamily::lipschitz_on_ball(CircleAngle t, PlanePoint c, double r) const {
  const double scale = std::abs(1.0 - eta(theta(t)));
  const double lo = c.x1 - cfg_.x0.x1 - r, hi = c.x1 - cfg_.x0.x1 + r;
  const double nearest = (lo <= 0.0 && hi >= 0.0) ? 0.0 : std::min(std::abs(lo), std::abs(hi));
  return std::max(scale * s_prime(nearest), std::abs(cfg_.lambda));
}

double PlateauFamily::inverse_lipschitz(CircleAngle t) const {
  const double scale = std::abs(1.0 - eta(theta(t)));
  const auto& d = cfg_.domain;
  const double umax = std::max(std::abs(d.center.x1 - d.radius - cfg_.x0.x1), std::abs(d.center.x1 + d.radius - cfg_.x0.x1));
  return std::max(1.0 / (scale * s_prime(umax)), 1.0 / std::abs(cfg_.lambda));
}

Box PlateauFamily::image_box(CircleAngle t, const Box& b) const {
  const double tau = theta(t);
  const double c = 1.0 - eta(tau);
  double u0 = c * s(b.lo.x1 - cfg_.x0.x1), u1 = c * s(b.hi.x1 - cfg_.x0.x1);
  double v0 = cfg_.lambda * (b.lo.x2 - cfg_.x0.x2), v1 = cfg_.lambda * (b.hi.x2 - cfg_.x0.x2);
  if (u0 > u1) std::swap(u0, u1);
  if (v0 > v1) std::swap(v0, v1);
  const double pad = 4 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(u0) + std::abs(u1));
  const Box gbox{{cfg_.x0.x1 + u0 - pad, cfg_.x0.x2 + v0}, {cfg_.x0.x1 + u1 + pad, cfg_.x0.x2 + v1}};
  const Mat2 rot = turn(tau);
  return affine_image_box(rot, cfg_.z - rot * cfg_.z, gbox);
}

PlanePoint PlateauFamily::dt(CircleAngle t, PlanePoint x) const {
  const double tp = theta_prime(t);
  if (tp == 0.0) return {0.0, 0.0};
  const double tau = theta(t);
  const double u = x.x1 - cfg_.x0.x1;
  const PlanePoint g = g_eval(eta(tau), x);
  const double a = kTwoPi * tau;
  const Mat2 drot{-std::sin(a), -std::cos(a), std::cos(a), -std::sin(a)};
  const PlanePoint dg{-eta_prime(tau) * s(u), 0.0};
  return (drot * (g - cfg_.z) * kTwoPi + Mat2::rotation(a) * dg) * tp;
}

double PlateauFamily::h_tau_modulus() const {
  const auto& d = cfg_.domain;
  const double umin = d.center.x1 - d.radius - cfg_.x0.x1, umax = d.center.x1 + d.radius - cfg_.x0.x1;
  const double smax = std::max(std::abs(s(umin)), std::abs(s(umax)));
  const double vmax = std::abs(d.center.x2 - cfg_.x0.x2) + d.radius;
  const double gmax = distance(cfg_.x0, cfg_.z) + std::hypot((1.0 + std::abs(cfg_.delta)) * smax, cfg_.lambda * vmax);
  return kTwoPi * gmax + kSmoothstepSlope * smax;
}

double PlateauFamily::t_modulus(double a, double b) const {
  if (b < a) std::swap(a, b);
  const int n = static_cast<int>(cfg_.arcs.size());
  double slope = 0.0;
  for (int i = 0; i < n; ++i) {
    const double start = cfg_.arcs[i].hi;
    const double len = CircleAngle::reduce(cfg_.arcs[(i + 1) % n].lo - start);
    const double target = i + 1 < n ? cfg_.t[i + 1] : 1.0;
    bool hit = b - a >= 1.0;
    for (int shift = -1; shift <= 1 && !hit; ++shift) {
      const double g0 = start + shift, g1 = start + len + shift;
      hit = a < g1 && b > g0;
    }
    if (hit) slope = std::max(slope, std::abs(target - cfg_.t[i]) * kSmoothstepSlope / len);
  }
  return slope * h_tau_modulus();
}

PlanePoint PlateauFamily::inverse(CircleAngle t, PlanePoint y) const {
  if (!is_finite(y)) throw std::domain_error("fiber_inverse: non-finite point");
  const double tau = theta(t);
  const double c = 1.0 - eta(tau);
  const PlanePoint w = turn(-tau) * (y - cfg_.z) + cfg_.z - cfg_.x0;
  const PlanePoint x{cfg_.x0.x1 + s_inverse(w.x1 / c), cfg_.x0.x2 + w.x2 / cfg_.lambda};
  if (!cfg_.domain.contains(x, 1e-9 * cfg_.domain.radius)) {
    throw std::domain_error("fiber_inverse: point is not in the image of X");
  }
  if (norm(h_unchecked(tau, x) - y) < 1e-12) return x;
  return newton_inverse([&](PlanePoint p) { return h_unchecked(tau, p); },
                        [&](PlanePoint p) { return h_jacobian(tau, p); }, y, x, cfg_.domain);
}

// ---------------------------------------------------------------------------
// Reference families

ConstantFamily::ConstantFamily(PlaneMapPtr map, DiskDomain domain, int k, int generators)
    : map_(std::move(map)), domain_(domain), k_(k), generators_(generators) {
  if (!map_) throw std::invalid_argument("ConstantFamily: null map");
  if (k_ < 2) throw std::invalid_argument("ConstantFamily: k must be >= 2");
  if (generators_ < 1) throw std::invalid_argument("ConstantFamily: need at least one generator");
}

std::vector<double> ConstantFamily::generator_angles() const {
  std::vector<double> out;
  for (int i = 0; i < generators_; ++i) out.push_back(static_cast<double>(i) / generators_);
  return out;
}

PiecewiseFamily::PiecewiseFamily(std::vector<double> breaks, std::vector<PlaneMapPtr> maps, DiskDomain domain, int k)
    : breaks_(std::move(breaks)), maps_(std::move(maps)), domain_(domain), k_(k) {
  if (breaks_.empty() || breaks_.size() != maps_.size() || breaks_.front() != 0.0 ||
      !std::is_sorted(breaks_.begin(), breaks_.end())) {
    throw std::invalid_argument("PiecewiseFamily: breaks must start at 0, be sorted, and match the maps");
  }
}

const PlaneMap& PiecewiseFamily::piece(CircleAngle t) const {
  const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t.value());
  return *maps_[static_cast<std::size_t>(it - breaks_.begin()) - 1];
}

// ---------------------------------------------------------------------------
// Diagnostics

PlanePoint uniform_in_disk(const DiskDomain& d, Rng& rng) {
  const double r = d.radius * std::sqrt(rng.uniform());
  const double a = kTwoPi * rng.uniform();
  return d.center + PlanePoint{r * std::cos(a), r * std::sin(a)};
}

DiagnosticReport jacobian_consistency(const FiberFamily& family, std::uint64_t samples, std::uint64_t seed,
                                      double rel_tol) {
  constexpr double e = 1e-6;
  const DiskDomain inner{family.domain().center, family.domain().radius - 1e-3};
  std::vector<double> err(samples, 0.0);
  parallel_for(samples, [&](std::size_t i) {
    Rng rng(mix_seed(seed, i));
    const CircleAngle t(rng.uniform());
    const PlanePoint x = uniform_in_disk(inner, rng);
    const PlanePoint d1 = (family.eval(t, x + PlanePoint{e, 0}) - family.eval(t, x - PlanePoint{e, 0})) * (0.5 / e);
    const PlanePoint d2 = (family.eval(t, x + PlanePoint{0, e}) - family.eval(t, x - PlanePoint{0, e})) * (0.5 / e);
    const Mat2 j = family.jacobian(t, x);
    const double scale = j.norm();
    err[i] = std::max({std::abs(j.a11 - d1.x1), std::abs(j.a21 - d1.x2), std::abs(j.a12 - d2.x1),
                       std::abs(j.a22 - d2.x2)}) /
             scale;
  });
  DiagnosticReport rep;
  rep.samples = samples;
  rep.seed = seed;
  const double worst = err.empty() ? 0.0 : *std::max_element(err.begin(), err.end());
  rep.stats["max_rel_error"] = worst;
  rep.stats["rel_tol"] = rel_tol;
  rep.verdict = worst < rel_tol ? Verdict::Pass : Verdict::Fail;
  return rep;
}

DiagnosticReport weak_point_report(const PlateauFamily& family, double tol) {
  const auto& c = family.config();
  const auto ef = family.jacobian(CircleAngle(c.t[0]), c.x0).real_eigenvalues();
  // tau = 1/4 sits on the plateau eta = delta, so h_tau = R_{pi/2, z} o g_delta
  const auto eg = (Mat2::rotation(-kTwoPi * 0.25) * family.h_jacobian(0.25, c.x0)).real_eigenvalues();
  const double top = std::max(c.lambda_prime, c.lambda), bottom = std::min(c.lambda_prime, c.lambda);
  DiagnosticReport rep;
  rep.samples = 2;
  rep.stats["f_ev1"] = ef[0];
  rep.stats["f_ev2"] = ef[1];
  rep.stats["g_ev1"] = eg[0];
  rep.stats["g_ev2"] = eg[1];
  const double err = std::max({std::abs(ef[0] - 1.0), std::abs(ef[1] - c.lambda), std::abs(eg[0] - top),
                               std::abs(eg[1] - bottom)});
  rep.stats["max_error"] = err;
  rep.stats["tol"] = tol;
  rep.verdict = err < tol ? Verdict::Pass : Verdict::Fail;
  return rep;
}

DiagnosticReport contraction_report(const PlateauFamily& family, std::uint64_t samples, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("contraction_report: samples must be >= 1");
  const auto& cfg = family.config();
  const auto& dom = cfg.domain;
  std::vector<double> ratio(samples, 0.0), jnorm(samples, 0.0);
  parallel_for(samples, [&](std::size_t i) {
    Rng rng(mix_seed(seed, i));
    const CircleAngle t(rng.uniform());
    PlanePoint x = uniform_in_disk(dom, rng);
    PlanePoint y;
    // A quarter of the pairs are infinitesimally close, a quarter sit near the weak fixed point.
    switch (i % 4) {
      case 0:
      case 1:
        do {
          y = uniform_in_disk(dom, rng);
        } while (y == x);
        break;
      case 2: {
        const double a = kTwoPi * rng.uniform();
        y = x + PlanePoint{std::cos(a), std::sin(a)} * 1e-6;
        if (!dom.contains(y)) y = x - PlanePoint{std::cos(a), std::sin(a)} * 1e-6;
        break;
      }
      default: {
        const double a = kTwoPi * rng.uniform();
        x = cfg.x0 + PlanePoint{rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05)};
        y = x + PlanePoint{std::cos(a), std::sin(a)} * (1e-3 * rng.uniform() + 1e-9);
        break;
      }
    }
    ratio[i] = distance(family.eval(t, x), family.eval(t, y)) / distance(x, y);

    // Uniform part: draw t until eta(theta(t)) = delta.
    for (int tries = 0; tries < 256; ++tries) {
      const CircleAngle tu(rng.uniform());
      if (family.eta(family.theta(tu)) == cfg.delta) {
        const PlanePoint xu = (i % 2 == 0) ? uniform_in_disk(dom, rng)
                                           : cfg.x0 + PlanePoint{rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01)};
        jnorm[i] = family.jacobian(tu, xu).norm();
        break;
      }
    }
  });
  DiagnosticReport rep;
  rep.samples = samples;
  rep.seed = seed;
  const double max_ratio = *std::max_element(ratio.begin(), ratio.end());
  const double max_j = *std::max_element(jnorm.begin(), jnorm.end());
  const double bound = std::max(cfg.lambda_prime, cfg.lambda);
  rep.stats["max_ratio"] = max_ratio;
  rep.stats["max_uniform_jacobian_norm"] = max_j;
  rep.stats["uniform_bound"] = bound;
  const bool ok = max_ratio <= 1.0 + 1e-12 && max_j <= bound + 1e-9;
  rep.verdict = ok ? Verdict::Pass : Verdict::Fail;
  rep.note = ok ? "weak contraction holds on all samples" : "contraction violated on some sample";
  return rep;
}

}  // namespace ergograph
