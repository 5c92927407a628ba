// Acceptance suite: one [PASS]/[FAIL] line per criterion at the stated tolerances, plus fixture checks.
//   ergograph_acceptance --criterion N      (N = 1..15, or 0 for all)
//   ergograph_acceptance --fixture NAME     (lyapunov | covering | golden)
//   ergograph_acceptance --regenerate-fixtures

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cli.hpp"
#include "ergograph/attractor.hpp"
#include "ergograph/ergodics.hpp"
#include "ergograph/experiment.hpp"
#include "ergograph/invariant_graph.hpp"
#include "ergograph/io.hpp"
#include "ergograph/parallel.hpp"
#include "ergograph/perturbation.hpp"

using namespace ergograph;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kFixtures = ERGOGRAPH_FIXTURE_DIR;

struct Result {
  bool pass = false;
  std::string detail;
};

// "key=value key=value" with 6 significant digits.
class Detail {
 public:
  template <class T>
  Detail& operator()(const std::string& key, const T& v) {
    if (!first_) os_ << ' ';
    first_ = false;
    os_ << key << '=' << v;
    return *this;
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_ = [] {
    std::ostringstream o;
    o << std::setprecision(6);
    return o;
  }();
  bool first_ = true;
};

const ExperimentConfig& config() {
  static const ExperimentConfig c;
  return c;
}
std::uint64_t seed(int criterion) { return config().seed_for("acceptance-" + std::to_string(criterion)); }

std::shared_ptr<const PlateauFamily> family() {
  static const auto f = std::make_shared<PlateauFamily>(FamilyConfig::defaults());
  return f;
}
const Ifs& ifs() {
  static const Ifs i = generator_ifs(family());
  return i;
}
double diam() { return family()->domain().diameter(); }
double h() { return config().h(); }

Ifs scaled_control(double s, const std::vector<double>& offsets) {
  Ifs out;
  out.domain = {{0.5, 0.5}, 1.0};
  for (double cx : offsets)
    for (double cy : offsets) out.maps.push_back(std::make_shared<AffineMap>(AffineMap::scaling(s, {cx, cy})));
  return out;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("missing fixture " + p.string());
  return json::parse(in);
}

// ---------------------------------------------------------------------------

Result c1() {
  const auto r = jacobian_consistency(*family(), 1000, seed(1), 1e-6);
  return {r.passed(), Detail()("samples", 1000)("max_rel_error", r.stat("max_rel_error"))("limit", 1e-6).str()};
}

Result c2() {
  const auto r = weak_point_report(*family(), 1e-9);
  return {r.passed(), Detail()("Df_x0", std::to_string(r.stat("f_ev1")) + "," + std::to_string(r.stat("f_ev2")))(
                          "Dg_x0", std::to_string(r.stat("g_ev1")) + "," + std::to_string(r.stat("g_ev2")))(
                          "max_error", r.stat("max_error"))("limit", 1e-9)
                          .str()};
}

Result c3() {
  const auto r = contraction_report(*family(), 100000, seed(3));
  return {r.passed(), Detail()("pairs", 100000)("max_ratio", r.stat("max_ratio"))(
                          "sup_uniform_jacobian", r.stat("max_uniform_jacobian_norm"))("bound", r.stat("uniform_bound"))
                          .str()};
}

Result c4() {
  const auto r = weak_hyperbolicity_scan(ifs(), 1000, 200, seed(4), 1e-3).report;
  return {r.passed(), Detail()("words", 1000)("depth", 200)("max_diameter", r.stat("max_diameter"))(
                          "threshold", r.stat("threshold"))
                          .str()};
}

Result c5() {
  const auto grid = config().grid();
  const double tol = 2 * h();
  auto op = [&](const GridSet& k) { return hutchinson_step(ifs(), k); };
  Detail d;
  d("h", h());
  try {
    const auto from_x = attractor_iterate(op, GridSet::full_disk(grid, family()->domain()), tol, 200);
    const auto from_cell = attractor_iterate(op, GridSet::single_cell(grid, family()->domain().center), tol, 200);
    const double dist = hausdorff_distance(from_x.set, from_cell.set);
    d("iterations_from_X", from_x.log.size())("iterations_from_cell", from_cell.log.size())(
        "seed_distance", dist)("seed_distance_h", dist / h())("limit_h", 3);
    return {dist <= 3 * h(), d.str()};
  } catch (const InconclusiveError& e) {
    d("inconclusive", e.what());
    return {false, d.str()};
  }
}

Result c6() {
  const auto& dom = family()->domain();
  const auto mu = chaos_game(ifs(), 100000, 1000, mix_seed(seed(6), 1), FamilyConfig::defaults().x0);
  const auto nu = chaos_game(ifs(), 100000, 1000, mix_seed(seed(6), 2), dom.center + PlanePoint{-0.9 * dom.radius, 0});
  const auto w = wasserstein1_bounds(mu, nu);
  const double limit = 5e-3 * diam();
  // the certified upper bound must clear the threshold
  return {w.upper < limit, Detail()("n", 100000)("w1", w.value)("w1_upper", w.upper)("w1_lower", w.lower)("limit", limit)
                               .str()};
}

Result c7() {
  const auto& f = *family();
  const double tol = 1e-8;
  const auto& dom = f.domain();
  const PlanePoint xa = dom.center + PlanePoint{0.99 * dom.radius, 0.0};
  const PlanePoint xb = dom.center - PlanePoint{0.99 * dom.radius, 0.0};
  std::vector<double> disc(100, std::numeric_limits<double>::infinity());
  parallel_for(disc.size(), [&](std::size_t i) {
    const auto s = sample_solenoid(mix_seed(seed(7), i), kDeepSolenoid, f.k());
    try {
      const auto g = pullback_gamma(f, s, tol);
      disc[i] = distance(pullback_point(f, s, g.depth_used, xa), pullback_point(f, s, g.depth_used, xb));
    } catch (const InconclusiveError&) {
    }
  });
  const double max_disc = *std::max_element(disc.begin(), disc.end());
  const auto inv = invariance_residual(f, 100, 1e-6, mix_seed(seed(7), 1000));
  return {max_disc < 2e-8 && inv.passed(),
          Detail()("samples", 100)("two_start_discrepancy", max_disc)("limit", 2e-8)(
              "invariance_residual", inv.stat("max_residual"))("limit", 1e-6)
              .str()};
}

Result sync_criterion(const FiberFamily& f, std::uint64_t s) {
  const auto r = sync_test(f, 100, 5000, 1e-8, s).report;
  return {r.stat("converged_fraction") >= 0.99,
          Detail()("pairs", 100)("converged_fraction", r.stat("converged_fraction"))("median_steps", r.stat("median_steps"))
              .str()};
}

Result c8() { return sync_criterion(*family(), seed(8)); }

Result lyapunov_criterion(const FiberFamily& f, std::uint64_t s) {
  const auto b = lyapunov_batch(f, 50, 100000, s);
  return {b.ci_hi < 0, Detail()("starts", 50)("n", 100000)("mean", b.mean)("ci95", "[" + std::to_string(b.ci_lo) + "," +
                                                                                   std::to_string(b.ci_hi) + "]")
                           .str()};
}

Result c9() { return lyapunov_criterion(*family(), seed(9)); }

Result c10() {
  const auto obs = default_observables(FamilyConfig::defaults());
  const auto r = srb_independence(*family(), obs, 50, 100000, seed(10));
  Detail d;
  d("starts", 50)("n", 100000);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const auto tag = std::to_string(i);
    d(obs[i].name() + "_spread/se", r.stat("spread_" + tag) / r.stat("se_" + tag));
  }
  d("limit", 3);
  return {r.passed(), d.str()};
}

Result c11() {
  bool ok = true;
  Detail d;
  d("orbit", 1000000);
  for (int axis = 0; axis < 2; ++axis) {
    const auto obs = Observable::coordinate(axis);
    const auto c = correlation_decay(*family(), obs, obs, 50, 1000000, mix_seed(seed(11), axis), 200);
    ok = ok && c.c[50] < c.c[1] / 5;
    d(obs.name() + "_C1", c.c[1])(obs.name() + "_C1_se", c.se[1])(obs.name() + "_C50", c.c[50])(obs.name() + "_C50_se",
                                                                                                   c.se[50]);
  }
  return {ok, d.str()};
}

Result c12() {
  const auto bony = bony_scan(*family(), 200, 200, 10 * h(), mix_seed(seed(12), 1), 0.01).report;
  UscOptions opt;
  opt.depth = 200;
  const auto usc = usc_batch(*family(), 100, 1e-2 * diam(), 10, mix_seed(seed(12), 2), opt);
  return {bony.passed() && usc.passed(),
          Detail()("fibers", 200)("bone_fraction", bony.stat("bone_fraction"))("max_fiber_diameter",
                                                                                bony.stat("max_diameter"))(
              "limit", 10 * h())("usc_points", 100)("usc_failures", usc.stat("failures"))("usc_min_delta",
                                                                                          usc.stat("min_delta"))
              .str()};
}

json covering_json(const CoveringSearchResult& r) {
  json j{{"verdict", to_string(r.report.verdict)}, {"margin", r.report.stat("margin")}};
  const auto& b = *r.best;
  j["center"] = {b.center.x1, b.center.x2};
  j["axes"] = {b.a, b.b};
  j["angle"] = b.angle;
  j["exponent"] = std::isfinite(b.exponent) ? json(b.exponent) : json("inf");
  return j;
}

CoveringSearchResult default_covering() {
  const auto& blk = config().block("covering");
  return covering_search(ifs(), blk["budget"].get<int>(), config().seed_for("covering"), blk["resolution"].get<int>());
}

bool covering_matches(const json& got, const json& want, std::string& why) {
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); };
  if (got["verdict"] != want["verdict"]) why = "verdict";
  else if (got["exponent"] != want["exponent"]) why = "exponent";
  else if (!close(got["margin"], want["margin"])) why = "margin";
  else if (!close(got["angle"], want["angle"])) why = "angle";
  for (int i = 0; i < 2 && why.empty(); ++i) {
    if (!close(got["center"][i], want["center"][i])) why = "center";
    if (!close(got["axes"][i], want["axes"][i])) why = "axes";
  }
  return why.empty();
}

Result c13() {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const EllipseSpec inner{{0.5, 0.5}, 0.4, 0.4, 0.0, inf};
  const auto pos = covering_verify(scaled_control(0.6, {0.0, 0.4}), inner, 0.0, 512);
  const EllipseSpec unit{{0.5, 0.5}, 0.5, 0.5, 0.0, inf};
  const auto neg = covering_verify(scaled_control(1.0 / 3, {0.0, 2.0 / 3}), unit, 0.0, 512);
  const auto found = default_covering();
  std::string why;
  const bool fixture_ok = found.best && covering_matches(covering_json(found), read_json(kFixtures / "covering_default.json"), why);
  return {pos.passed() && neg.verdict == Verdict::Fail && fixture_ok,
          Detail()("positive_control", to_string(pos.verdict))("positive_margin", pos.stat("margin"))(
              "negative_control", to_string(neg.verdict))("negative_margin", neg.stat("margin"))(
              "default_verdict", to_string(found.report.verdict))("default_margin", found.report.stat("margin"))(
              "fixture", fixture_ok ? "match" : "mismatch " + why)
              .str()};
}

Result c14() {
  const PerturbationSpec spec{1e-3, seed(14), 4};
  const auto pert = perturb_family(family(), spec);
  const auto sync = sync_criterion(*pert, mix_seed(seed(14), 1));
  const auto lyap = lyapunov_criterion(*pert, mix_seed(seed(14), 2));
  const auto base_split = dominated_splitting_check(*family(), 100000, mix_seed(seed(14), 3));
  const auto pert_split = dominated_splitting_check(*pert, 100000, mix_seed(seed(14), 3));
  const bool split_ok = base_split.stat("L") < 8 && pert_split.stat("L") < 8;
  return {sync.pass && lyap.pass && split_ok,
          Detail()("eps", 1e-3)("sync", sync.pass ? "PASS" : "FAIL")("lyapunov", lyap.pass ? "PASS" : "FAIL")(
              "L_base", base_split.stat("L"))("L_perturbed", pert_split.stat("L"))("k", 8)("t_term_base",
                                                                                         base_split.stat("t_term"))(
              "x_term_base", base_split.stat("x_term"))("perturbed_sync", sync.detail)("perturbed_lyapunov", lyap.detail)
              .str()};
}

// Runs every CLI command into `dir` with the given thread count.
void run_suite(const fs::path& dir, int threads, const std::vector<std::string>& extra) {
  for (const auto& cmd : ExperimentConfig::command_names()) {
    std::vector<std::string> args{"ergograph", cmd, "--out", dir.string(), "--threads", std::to_string(threads)};
    args.insert(args.end(), extra.begin(), extra.end());
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (code == kExitError) throw std::runtime_error(cmd + ": " + err.str());
  }
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    files[e.path().filename().string()] = s.str();
  }
  return files;
}

Result c15() {
  const fs::path root = fs::temp_directory_path() / ("ergograph_determinism_" + std::to_string(seed(15)));
  fs::remove_all(root);
  const auto t0 = std::chrono::steady_clock::now();
  run_suite(root / "t1", 1, {});
  run_suite(root / "t3", 3, {});
  run_suite(root / "t1_again", 1, {});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  set_thread_count(0);
  const auto a = snapshot(root / "t1"), b = snapshot(root / "t3"), c = snapshot(root / "t1_again");
  std::string diff;
  for (const auto& [name, bytes] : a) {
    if (!b.count(name) || b.at(name) != bytes) diff += (diff.empty() ? "" : ",") + name + "@3threads";
    if (!c.count(name) || c.at(name) != bytes) diff += (diff.empty() ? "" : ",") + name + "@rerun";
  }
  if (a.size() != b.size() || a.size() != c.size()) diff += (diff.empty() ? "" : ",") + std::string("file sets differ");
  fs::remove_all(root);
  return {diff.empty() && !a.empty(),
          Detail()("commands", ExperimentConfig::command_names().size())("artifacts", a.size())("runs", 3)(
              "seconds", secs)("differences", diff.empty() ? "none" : diff)
              .str()};
}

const std::map<int, std::pair<std::string, std::function<Result()>>>& criteria() {
  static const std::map<int, std::pair<std::string, std::function<Result()>>> m{
      {1, {"jacobian consistency", c1}},
      {2, {"weak fixed point eigenvalues", c2}},
      {3, {"weak contraction", c3}},
      {4, {"weak hyperbolicity", c4}},
      {5, {"strict attractor", c5}},
      {6, {"stationary measure uniqueness", c6}},
      {7, {"pullback graph", c7}},
      {8, {"synchronization", c8}},
      {9, {"negative top Lyapunov exponent", c9}},
      {10, {"SRB start independence", c10}},
      {11, {"mixing trend", c11}},
      {12, {"non-bony graph structure", c12}},
      {13, {"covering certificate", c13}},
      {14, {"robustness under perturbation", c14}},
      {15, {"determinism", c15}},
  };
  return m;
}

bool report(const std::string& label, const std::function<Result()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Result r;
  try {
    r = fn();
  } catch (const std::exception& e) {
    r = {false, std::string("error: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << label << ": " << r.detail << " (" << std::fixed << std::setprecision(1)
            << secs << " s)" << std::defaultfloat << std::endl;
  return r.pass;
}

// ---------------------------------------------------------------------------
// Fixtures

json lyapunov_fixture_value() {
  const auto b = lyapunov_batch(*family(), 50, 100000, seed(9));
  return {{"starts", 50}, {"n", 100000}, {"seed", seed(9)}, {"mean", b.mean}, {"ci_lo", b.ci_lo}, {"ci_hi", b.ci_hi}};
}

// attractor at the golden config, re-rendered through the CLI
std::string golden_render(const fs::path& work) {
  fs::remove_all(work);
  const std::string cfg = (kFixtures / "golden_config.json").string();
  const std::string out = work.string();
  const std::string pgm = (work / "attractor.pgm").string();
  const std::string rendered = (work / "rendered.pgm").string();
  std::ostringstream o, e;
  const char* run[] = {"ergograph", "attractor", cfg.c_str(), "--out", out.c_str()};
  if (run_cli(5, run, o, e) != kExitPass) throw std::runtime_error("attractor: " + e.str());
  const char* render[] = {"ergograph", "render", pgm.c_str(), rendered.c_str(), "--config", cfg.c_str()};
  if (run_cli(6, render, o, e) != kExitPass) throw std::runtime_error("render: " + e.str());
  std::ifstream in(rendered, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  fs::remove_all(work);
  return s.str();
}

Result fixture(const std::string& name) {
  if (name == "lyapunov") {
    const auto want = read_json(kFixtures / "lyapunov_default.json");
    const auto got = lyapunov_fixture_value();
    const double d = std::abs(got["mean"].get<double>() - want["mean"].get<double>());
    return {d <= 1e-9, Detail()("mean", got["mean"].get<double>())("fixture", want["mean"].get<double>())("diff", d).str()};
  }
  if (name == "covering") {
    const auto found = default_covering();
    std::string why;
    const bool ok = found.best && covering_matches(covering_json(found), read_json(kFixtures / "covering_default.json"), why);
    return {ok, Detail()("verdict", to_string(found.report.verdict))("match", ok ? "yes" : why).str()};
  }
  if (name == "golden") {
    const auto got = golden_render(fs::temp_directory_path() / "ergograph_golden_check");
    std::ifstream in(kFixtures / "attractor_golden.pgm", std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return {!got.empty() && got == s.str(), Detail()("bytes", got.size())("fixture_bytes", s.str().size()).str()};
  }
  throw std::invalid_argument("unknown fixture " + name);
}

void regenerate() {
  {
    std::ofstream f(kFixtures / "lyapunov_default.json");
    f << std::setprecision(17) << lyapunov_fixture_value().dump(2) << '\n';
  }
  {
    const auto found = default_covering();
    auto j = covering_json(found);
    j["budget"] = config().block("covering")["budget"];
    j["resolution"] = config().block("covering")["resolution"];
    j["seed"] = config().seed_for("covering");
    std::ofstream f(kFixtures / "covering_default.json");
    f << j.dump(2) << '\n';
  }
  {
    const auto bytes = golden_render(fs::temp_directory_path() / "ergograph_golden_regen");
    std::ofstream f(kFixtures / "attractor_golden.pgm", std::ios::binary);
    f << bytes;
  }
  std::cout << "fixtures written to " << kFixtures << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int criterion = 0;
  std::string fixture_name;
  bool regen = false;
  app.add_option("--criterion", criterion, "criterion number, 0 for all")->check(CLI::Range(0, 15));
  app.add_option("--fixture", fixture_name, "fixture check")->check(CLI::IsMember({"lyapunov", "covering", "golden"}));
  app.add_flag("--regenerate-fixtures", regen, "rewrite the fixture files");
  CLI11_PARSE(app, argc, argv);

  if (regen) {
    regenerate();
    return 0;
  }
  if (!fixture_name.empty()) return report("fixture " + fixture_name, [&] { return fixture(fixture_name); }) ? 0 : 1;
  bool ok = true;
  for (const auto& [n, c] : criteria()) {
    if (criterion == 0 || criterion == n) ok = report("criterion " + std::to_string(n) + " " + c.first, c.second) && ok;
  }
  return ok ? 0 : 1;
}
