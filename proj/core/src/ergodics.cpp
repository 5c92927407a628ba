#include "ergograph/ergodics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "ergograph/invariant_graph.hpp"
#include "ergograph/parallel.hpp"
#include "ergograph/rng.hpp"

namespace ergograph {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

SkewState random_start(const FiberFamily& family, Rng& rng) {
  const CircleAngle t(rng.uniform());
  return {t, uniform_in_disk(family.domain(), rng)};
}

// Birkhoff sums of several observables along one orbit, with batch means for the SE.
std::vector<BirkhoffResult> birkhoff_multi(const FiberFamily& family, const std::vector<Observable>& obs,
                                           SkewState start, std::uint64_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("birkhoff: n must be positive");
  const std::uint64_t batches = std::min<std::uint64_t>(100, n);
  const std::uint64_t per = n / batches;
  std::vector<std::vector<double>> batch(obs.size(), std::vector<double>(batches, 0.0));
  std::vector<double> total(obs.size(), 0.0);
  BaseOrbit base(start.t, family.k(), seed);
  PlanePoint x = start.x;
  for (std::uint64_t i = 0; i < n; ++i) {
    const CircleAngle t = base.current();
    const std::uint64_t b = std::min(batches - 1, i / per);
    for (std::size_t j = 0; j < obs.size(); ++j) {
      const double v = obs[j](t, x);
      total[j] += v;
      batch[j][b] += v;
    }
    x = family.eval(t, x);
    base.advance();
  }
  std::vector<BirkhoffResult> out(obs.size());
  for (std::size_t j = 0; j < obs.size(); ++j) {
    for (std::uint64_t b = 0; b < batches; ++b) {
      const std::uint64_t len = b + 1 == batches ? n - per * (batches - 1) : per;
      batch[j][b] /= static_cast<double>(len);
    }
    out[j].mean = total[j] / static_cast<double>(n);
    out[j].se = batches > 1 ? sd_of(batch[j]) / std::sqrt(static_cast<double>(batches)) : 0.0;
  }
  return out;
}

}  // namespace

Observable Observable::constant(double c) {
  Observable o;
  o.kind_ = Kind::Constant;
  o.c_ = c;
  return o;
}

Observable Observable::coordinate(int axis) {
  if (axis != 0 && axis != 1) throw std::invalid_argument("Observable::coordinate: axis must be 0 or 1");
  Observable o;
  o.kind_ = Kind::Coordinate;
  o.axis_ = axis;
  return o;
}

Observable Observable::gaussian(PlanePoint center, double width) {
  if (!(width > 0)) throw std::invalid_argument("Observable::gaussian: width must be positive");
  Observable o;
  o.kind_ = Kind::Gaussian;
  o.center_ = center;
  o.width_ = width;
  return o;
}

Observable Observable::trig(int a, double b, double c) {
  Observable o;
  o.kind_ = Kind::Trig;
  o.a_ = a;
  o.b_ = b;
  o.cc_ = c;
  return o;
}

Observable Observable::base_cos(int freq) {
  Observable o;
  o.kind_ = Kind::BaseCos;
  o.a_ = freq;
  return o;
}

double Observable::operator()(CircleAngle t, PlanePoint x) const {
  switch (kind_) {
    case Kind::Constant:
      return c_;
    case Kind::Coordinate:
      return axis_ == 0 ? x.x1 : x.x2;
    case Kind::Gaussian: {
      const PlanePoint d = x - center_;
      return std::exp(-(d.x1 * d.x1 + d.x2 * d.x2) / (2 * width_ * width_));
    }
    case Kind::Trig:
      return std::cos(kTwoPi * (a_ * t.value() + b_ * x.x1 + cc_ * x.x2));
    case Kind::BaseCos:
      return std::cos(kTwoPi * a_ * t.value());
  }
  return 0.0;
}

double Observable::sup_norm(const DiskDomain& d) const {
  switch (kind_) {
    case Kind::Constant:
      return std::abs(c_);
    case Kind::Coordinate:
      return std::abs(axis_ == 0 ? d.center.x1 : d.center.x2) + d.radius;
    default:
      return 1.0;
  }
}

std::string Observable::name() const {
  switch (kind_) {
    case Kind::Constant:
      return "constant";
    case Kind::Coordinate:
      return axis_ == 0 ? "x1" : "x2";
    case Kind::Gaussian:
      return "gaussian";
    case Kind::Trig:
      return "trig";
    case Kind::BaseCos:
      return "base_cos";
  }
  return "?";
}

nlohmann::json Observable::to_json() const {
  nlohmann::json j{{"kind", name()}};
  switch (kind_) {
    case Kind::Constant:
      j["value"] = c_;
      break;
    case Kind::Coordinate:
      j["kind"] = "coordinate";
      j["axis"] = axis_;
      break;
    case Kind::Gaussian:
      j["center"] = {center_.x1, center_.x2};
      j["width"] = width_;
      break;
    case Kind::Trig:
      j["t"] = a_;
      j["x1"] = b_;
      j["x2"] = cc_;
      break;
    case Kind::BaseCos:
      j["freq"] = a_;
      break;
  }
  return j;
}

Observable Observable::from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "constant") return constant(j.at("value").get<double>());
  if (kind == "coordinate") return coordinate(j.at("axis").get<int>());
  if (kind == "x1") return coordinate(0);
  if (kind == "x2") return coordinate(1);
  if (kind == "gaussian") {
    const auto& c = j.at("center");
    return gaussian({c.at(0).get<double>(), c.at(1).get<double>()}, j.at("width").get<double>());
  }
  if (kind == "trig") return trig(j.at("t").get<int>(), j.at("x1").get<double>(), j.at("x2").get<double>());
  if (kind == "base_cos") return base_cos(j.at("freq").get<int>());
  throw std::invalid_argument("unknown observable kind: " + kind);
}

std::vector<Observable> default_observables(const FamilyConfig& cfg) {
  return {Observable::coordinate(0), Observable::coordinate(1), Observable::gaussian(cfg.x0, 0.5)};
}

double lyapunov_top(const FiberFamily& family, SkewState start, std::uint64_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("lyapunov_top: n must be positive");
  BaseOrbit base(start.t, family.k(), seed);
  PlanePoint x = start.x;
  PlanePoint v{std::numbers::sqrt2 / 2, std::numbers::sqrt2 / 2};
  double acc = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const CircleAngle t = base.current();
    v = family.jacobian(t, x) * v;
    const double len = norm(v);
    acc += std::log(len);
    v = v * (1.0 / len);
    x = family.eval(t, x);
    base.advance();
  }
  return acc / static_cast<double>(n);
}

std::array<double, 2> lyapunov_spectrum(const FiberFamily& family, SkewState start, std::uint64_t n,
                                        std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("lyapunov_spectrum: n must be positive");
  BaseOrbit base(start.t, family.k(), seed);
  PlanePoint x = start.x;
  PlanePoint e1{1.0, 0.0}, e2{0.0, 1.0};
  double s1 = 0.0, s2 = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const CircleAngle t = base.current();
    const Mat2 j = family.jacobian(t, x);
    PlanePoint a = j * e1, b = j * e2;
    const double r11 = norm(a);
    a = a * (1.0 / r11);
    const double r12 = a.x1 * b.x1 + a.x2 * b.x2;
    b = b - a * r12;
    const double r22 = norm(b);
    b = b * (1.0 / r22);
    s1 += std::log(r11);
    s2 += std::log(r22);
    e1 = a;
    e2 = b;
    x = family.eval(t, x);
    base.advance();
  }
  const double l1 = s1 / static_cast<double>(n), l2 = s2 / static_cast<double>(n);
  return {std::max(l1, l2), std::min(l1, l2)};
}

std::vector<double> lyapunov_prefactors(const FiberFamily& family, int starts, std::uint64_t n, double rate,
                                        std::uint64_t seed) {
  if (starts < 1) throw std::invalid_argument("lyapunov_prefactors: need at least one start");
  std::vector<double> out(static_cast<std::size_t>(starts), 0.0);
  parallel_for(out.size(), [&](std::size_t i) {
    Rng rng(mix_seed(seed, i));
    const auto start = random_start(family, rng);
    BaseOrbit base(start.t, family.k(), rng());
    PlanePoint x = start.x;
    Mat2 m = Mat2::identity();
    double log_scale = 0.0, best = 0.0;  // k = 0 gives log ||I|| = 0
    for (std::uint64_t k = 1; k <= n; ++k) {
      const CircleAngle t = base.current();
      m = family.jacobian(t, x) * m;
      const double s = m.norm();
      log_scale += std::log(s);
      m = m * (1.0 / s);
      best = std::max(best, log_scale - rate * static_cast<double>(k));
      x = family.eval(t, x);
      base.advance();
    }
    out[i] = best;
  });
  return out;
}

LyapunovBatch lyapunov_batch(const FiberFamily& family, int starts, std::uint64_t n, std::uint64_t seed, int bootstrap) {
  if (starts < 1) throw std::invalid_argument("lyapunov_batch: need at least one start");
  LyapunovBatch out;
  out.estimates.assign(static_cast<std::size_t>(starts), 0.0);
  parallel_for(out.estimates.size(), [&](std::size_t i) {
    Rng rng(mix_seed(seed, i));
    const auto start = random_start(family, rng);
    out.estimates[i] = lyapunov_top(family, start, n, rng());
  });
  out.mean = mean_of(out.estimates);
  std::vector<double> means(static_cast<std::size_t>(bootstrap));
  Rng rng(mix_seed(seed, 0xb0075ULL));
  for (auto& m : means) {
    double s = 0.0;
    for (int i = 0; i < starts; ++i) s += out.estimates[rng.below(static_cast<std::uint64_t>(starts))];
    m = s / starts;
  }
  std::sort(means.begin(), means.end());
  if (!means.empty()) {
    const auto at = [&](double q) { return means[std::min(means.size() - 1, static_cast<std::size_t>(q * means.size()))]; };
    out.ci_lo = at(0.025);
    out.ci_hi = at(0.975);
  } else {
    out.ci_lo = out.ci_hi = out.mean;
  }
  auto& rep = out.report;
  rep.seed = seed;
  rep.samples = static_cast<std::uint64_t>(starts) * n;
  rep.stats["mean"] = out.mean;
  rep.stats["ci_lo"] = out.ci_lo;
  rep.stats["ci_hi"] = out.ci_hi;
  rep.stats["sd"] = sd_of(out.estimates);
  rep.verdict = out.ci_hi < 0 ? Verdict::Pass : Verdict::Fail;
  return out;
}

BirkhoffResult birkhoff(const FiberFamily& family, const Observable& obs, SkewState start, std::uint64_t n,
                        std::uint64_t seed) {
  return birkhoff_multi(family, {obs}, start, n, seed).front();
}

DiagnosticReport srb_independence(const FiberFamily& family, const std::vector<Observable>& observables, int starts,
                                  std::uint64_t n, std::uint64_t seed,
                                  std::vector<std::vector<BirkhoffResult>>* per_start) {
  if (starts < 2) throw std::invalid_argument("srb_independence: need at least two starts");
  std::vector<std::vector<BirkhoffResult>> runs(static_cast<std::size_t>(starts));
  parallel_for(runs.size(), [&](std::size_t i) {
    Rng rng(mix_seed(seed, i));
    const auto start = random_start(family, rng);
    runs[i] = birkhoff_multi(family, observables, start, n, rng());
  });
  DiagnosticReport rep;
  rep.seed = seed;
  rep.samples = static_cast<std::uint64_t>(starts) * n;
  bool ok = true;
  double worst = 0.0;
  for (std::size_t j = 0; j < observables.size(); ++j) {
    std::vector<double> means;
    double se2 = 0.0;
    for (const auto& r : runs) {
      means.push_back(r[j].mean);
      se2 += r[j].se * r[j].se;
    }
    const double spread = sd_of(means);
    const double se = std::sqrt(se2 / static_cast<double>(runs.size()));
    const std::string tag = std::to_string(j);
    rep.stats["mean_" + tag] = mean_of(means);
    rep.stats["spread_" + tag] = spread;
    rep.stats["se_" + tag] = se;
    ok = ok && spread <= 3 * se;
    if (se > 0) worst = std::max(worst, spread / se);
    else if (spread > 0) worst = std::numeric_limits<double>::infinity();
  }
  rep.stats["max_spread_over_se"] = worst;
  if (per_start) *per_start = std::move(runs);
  rep.verdict = ok ? Verdict::Pass : Verdict::Fail;
  return rep;
}

EmpiricalMeasure graph_measure_sample(const FiberFamily& family, int samples, double tol, std::uint64_t seed) {
  std::vector<PlanePoint> pts(static_cast<std::size_t>(samples));
  parallel_for(pts.size(), [&](std::size_t i) {
    pts[i] = pullback_gamma(family, sample_solenoid(mix_seed(seed, i), kDeepSolenoid, family.k()), tol).gamma;
  });
  return EmpiricalMeasure::uniform(std::move(pts));
}

CorrelationDecay correlation_decay(const FiberFamily& family, const Observable& obs1, const Observable& obs2,
                                   int n_max, std::uint64_t orbit_len, std::uint64_t seed, int bootstrap) {
  constexpr std::size_t kBlock = 100;
  if (n_max < 0) throw std::invalid_argument("correlation_decay: n_max must be >= 0");
  const auto lags = static_cast<std::size_t>(n_max) + 1;
  if (orbit_len < static_cast<std::uint64_t>(n_max) + 2 * kBlock)
    throw std::invalid_argument("correlation_decay: orbit too short for the lag range");
  std::vector<double> a(orbit_len), b(orbit_len);
  {
    Rng rng(seed);
    const auto start = random_start(family, rng);
    BaseOrbit base(start.t, family.k(), rng());
    PlanePoint x = start.x;
    for (std::uint64_t i = 0; i < orbit_len; ++i) {
      const CircleAngle t = base.current();
      a[i] = obs1(t, x);
      b[i] = obs2(t, x);
      x = family.eval(t, x);
      base.advance();
    }
  }
  const std::size_t blocks = (orbit_len - static_cast<std::size_t>(n_max)) / kBlock;
  std::vector<double> sa(blocks, 0.0), sb(blocks * lags, 0.0), sab(blocks * lags, 0.0);
  parallel_for(blocks, [&](std::size_t beta) {
    for (std::size_t i = beta * kBlock; i < (beta + 1) * kBlock; ++i) {
      sa[beta] += a[i];
      for (std::size_t n = 0; n < lags; ++n) {
        sb[beta * lags + n] += b[i + n];
        sab[beta * lags + n] += a[i] * b[i + n];
      }
    }
  });
  const auto estimate = [&](const std::vector<std::size_t>& pick, std::vector<double>& signed_c) {
    double ta = 0.0;
    std::vector<double> tb(lags, 0.0), tab(lags, 0.0);
    for (auto beta : pick) {
      ta += sa[beta];
      for (std::size_t n = 0; n < lags; ++n) {
        tb[n] += sb[beta * lags + n];
        tab[n] += sab[beta * lags + n];
      }
    }
    const double cnt = static_cast<double>(pick.size() * kBlock);
    for (std::size_t n = 0; n < lags; ++n) signed_c[n] = tab[n] / cnt - (ta / cnt) * (tb[n] / cnt);
  };
  std::vector<std::size_t> all(blocks);
  std::iota(all.begin(), all.end(), 0);
  std::vector<double> full(lags);
  estimate(all, full);

  std::vector<std::vector<double>> boot(lags, std::vector<double>(static_cast<std::size_t>(bootstrap)));
  Rng rng(mix_seed(seed, 0xc0ffeeULL));
  std::vector<std::size_t> pick(blocks);
  std::vector<double> c(lags);
  for (int r = 0; r < bootstrap; ++r) {
    for (auto& p : pick) p = rng.below(blocks);
    estimate(pick, c);
    for (std::size_t n = 0; n < lags; ++n) boot[n][static_cast<std::size_t>(r)] = c[n];
  }
  CorrelationDecay out;
  for (std::size_t n = 0; n < lags; ++n) {
    out.c.push_back(std::abs(full[n]));
    out.se.push_back(sd_of(boot[n]));
  }
  return out;
}

DiagnosticReport avg_contraction_check(const Ifs& ifs, int samples, std::uint64_t seed, std::vector<double> weights,
                                       double margin) {
  const std::size_t m = ifs.maps.size();
  if (m == 0) throw std::invalid_argument("avg_contraction_check: empty IFS");
  if (weights.empty()) weights.assign(m, 1.0 / static_cast<double>(m));
  if (weights.size() != m) throw std::invalid_argument("avg_contraction_check: one weight per map");
  std::vector<double> lip(m, 0.0);
  parallel_for(m, [&](std::size_t i) {
    const auto& f = *ifs.maps[i];
    Rng rng(mix_seed(seed, i));
    double c = 0.0;
    for (int s = 0; s < samples; ++s) {
      const PlanePoint x = uniform_in_disk(ifs.domain, rng);
      c = std::max(c, f.jacobian(x).norm());
      const double ang = rng.uniform(0.0, 2 * std::numbers::pi);
      const double r = ifs.domain.radius * std::pow(10.0, rng.uniform(-6.0, 0.0));
      const PlanePoint y = x + PlanePoint{std::cos(ang), std::sin(ang)} * r;
      if (!ifs.domain.contains(y)) continue;
      c = std::max(c, distance(f.apply(x), f.apply(y)) / distance(x, y));
    }
    // the attracting point of the map, where weak contractions have ||Df|| closest to 1
    PlanePoint p = ifs.domain.center;
    for (int it = 0; it < 20000; ++it) p = f.apply(p);
    lip[i] = std::max(c, f.jacobian(p).norm());
  });
  DiagnosticReport rep;
  rep.seed = seed;
  rep.samples = static_cast<std::uint64_t>(samples) * m;
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sum += weights[i] * std::log(lip[i]);
    rep.stats["lipschitz_" + std::to_string(i)] = lip[i];
  }
  rep.stats["weighted_log_lipschitz"] = sum;
  rep.stats["margin"] = -sum;
  rep.verdict = sum < -margin ? Verdict::Pass : Verdict::Fail;
  return rep;
}

}  // namespace ergograph
