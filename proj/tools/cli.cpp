#include "cli.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ergograph/attractor.hpp"
#include "ergograph/ergodics.hpp"
#include "ergograph/experiment.hpp"
#include "ergograph/invariant_graph.hpp"
#include "ergograph/io.hpp"
#include "ergograph/parallel.hpp"
#include "ergograph/perturbation.hpp"
#include "ergograph/rng.hpp"

namespace ergograph {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

ConfigError config_error(std::string pointer, std::string message) {
  return ConfigError(std::vector<ConfigIssue>{{std::move(pointer), std::move(message)}});
}

struct Overrides {
  std::optional<std::uint64_t> n;
  std::optional<std::uint64_t> depth;
  std::optional<double> tol;
  std::optional<double> eps;
};

// Block keys that each override flag sets, per command.
const std::map<std::string, std::map<std::string, std::vector<std::string>>>& override_targets() {
  static const std::map<std::string, std::map<std::string, std::vector<std::string>>> t{
      {"family-check", {{"n", {"contraction_samples"}}}},
      {"attractor", {{"tol", {"tol_cells"}}}},
      {"chaos", {{"n", {"n"}}, {"tol", {"max_w1_rel"}}}},
      {"covering", {{"n", {"budget"}}}},
      {"cusp", {{"n", {"boundary_samples"}}, {"depth", {"depth"}}}},
      {"graph", {{"n", {"samples"}}, {"tol", {"tol"}}}},
      {"bony", {{"n", {"samples"}}, {"depth", {"depth"}}}},
      {"usc", {{"n", {"points"}}, {"depth", {"depth"}}, {"eps", {"eps_rel"}}}},
      {"sync", {{"n", {"pairs"}}, {"tol", {"tol"}}}},
      {"lyapunov", {{"n", {"n"}}}},
      {"birkhoff", {{"n", {"n"}}}},
      {"mixing", {{"n", {"orbit_len"}}}},
      {"perturb", {{"n", {"c1_samples"}}, {"eps", {"eps"}}}},
  };
  return t;
}

void apply_overrides(ExperimentConfig& cfg, const std::string& cmd, const Overrides& o) {
  const auto& targets = override_targets().at(cmd);
  auto apply = [&](const char* flag, const json& value) {
    const auto it = targets.find(flag);
    if (it == targets.end()) {
      throw config_error("/commands/" + cmd, std::string("--") + flag + " does not apply to " + cmd);
    }
    for (const auto& key : it->second) set_command_param(cfg, cmd, key, value);
  };
  if (o.n) apply("n", *o.n);
  if (o.depth) apply("depth", *o.depth);
  if (o.tol) apply("tol", *o.tol);
  if (o.eps) apply("eps", *o.eps);
}

struct Context {
  ExperimentConfig cfg;
  std::string cmd;
  std::uint64_t seed = 0;
  Provenance prov;
  fs::path dir;
  std::shared_ptr<const PlateauFamily> plateau;
  FiberFamilyPtr family;
  std::vector<std::string> artifacts;
  std::string perturb_mode = "all";

  const json& p() const { return cfg.block(cmd); }
  template <class T>
  T get(const std::string& key) const {
    return p().at(key).get<T>();
  }
  std::uint64_t sub(std::uint64_t i) const { return mix_seed(seed, i); }

  std::ofstream open(const std::string& name) {
    fs::create_directories(dir);
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    f << std::setprecision(17);
    artifacts.push_back(name);
    return f;
  }
  // CSV with the provenance line first.
  std::ofstream csv(const std::string& name, const std::string& columns) {
    auto f = open(name);
    f << prov.comment() << '\n' << columns << '\n';
    return f;
  }
  void pgm(const std::string& name, const GridSet& set) {
    auto f = open(name);
    write_gridset_pgm(f, set, prov);
  }
};

struct Outcome {
  DiagnosticReport report;
  json extra = json::object();
};

void merge_stats(DiagnosticReport& into, const std::string& prefix, const DiagnosticReport& from) {
  for (const auto& [k, v] : from.stats) into.stats[prefix + k] = v;
  into.samples += from.samples;
  into.verdict = worst(into.verdict, from.verdict);
}

DiagnosticReport fresh(std::uint64_t seed) {
  DiagnosticReport r;
  r.verdict = Verdict::Pass;
  r.seed = seed;
  return r;
}

json point_json(PlanePoint p) { return json::array({p.x1, p.x2}); }

// bone fraction at 10 h as the grid refines
json trend_json(const std::vector<double>& diameters, double diam_x) {
  json out = json::array();
  for (const auto& p : bone_fraction_trend(diameters, diam_x, {256, 512, 1024, 2048, 4096})) {
    out.push_back({{"resolution", p.resolution}, {"diam_tol", p.diam_tol}, {"bone_fraction", p.bone_fraction}});
  }
  return out;
}

// ---------------------------------------------------------------------------

Outcome family_check(Context& c) {
  Outcome o{fresh(c.seed)};
  const auto jac = jacobian_consistency(*c.plateau, c.get<std::uint64_t>("jacobian_samples"), c.sub(1));
  const auto weak = weak_point_report(*c.plateau);
  const auto con = contraction_report(*c.plateau, c.get<std::uint64_t>("contraction_samples"), c.sub(2));
  merge_stats(o.report, "jacobian_", jac);
  merge_stats(o.report, "weak_point_", weak);
  merge_stats(o.report, "contraction_", con);
  o.extra["checks"] = {{"jacobian", to_json(jac)}, {"weak_point", to_json(weak)}, {"contraction", to_json(con)}};
  return o;
}

Outcome attractor(Context& c) {
  Outcome o{fresh(c.seed)};
  const auto ifs = generator_ifs(c.family);
  const GridGeometry grid = c.cfg.grid();
  const double h = c.cfg.h();
  const double tol = c.get<double>("tol_cells") * h;
  const auto mode = c.get<std::string>("mode");
  const int circle_samples = c.get<int>("circle_samples");
  SetOperator op;
  if (mode == "generators") {
    op = [&](const GridSet& k) { return hutchinson_step(ifs, k); };
  } else if (mode == "circle") {
    op = [&](const GridSet& k) { return hutchinson_step_circle(*c.family, k, circle_samples); };
  } else {
    throw config_error("/commands/attractor/mode", "expected \"generators\" or \"circle\"");
  }
  o.report.stats["h"] = h;
  o.report.stats["tol"] = tol;
  try {
    const auto run = attractor_iterate(op, GridSet::full_disk(grid, c.family->domain()), tol, c.get<int>("max_iters"));
    auto log = c.csv("attractor_convergence.csv", "iteration,hausdorff");
    for (std::size_t i = 0; i < run.log.size(); ++i) log << i + 1 << ',' << run.log[i] << '\n';
    c.pgm("attractor.pgm", run.set);
    o.report.stats["iterations"] = static_cast<double>(run.log.size());
    o.report.stats["final_hausdorff"] = run.log.empty() ? 0.0 : run.log.back();
    o.report.stats["cells"] = static_cast<double>(run.set.count());
    o.report.stats["diameter"] = run.set.diameter();
  } catch (const InconclusiveError& e) {
    o.report.verdict = Verdict::Inconclusive;
    o.report.note = e.what();
    o.report.stats["final_hausdorff"] = e.achieved();
  }
  return o;
}

Outcome chaos(Context& c) {
  Outcome o{fresh(c.seed)};
  const auto ifs = generator_ifs(c.family);
  const auto& dom = c.family->domain();
  const auto n = c.get<std::size_t>("n");
  const auto burn = c.get<std::size_t>("burn_in");
  const PlanePoint a = c.cfg.family.x0;
  const PlanePoint b = dom.center + PlanePoint{-0.9 * dom.radius, 0.0};
  const auto mu = chaos_game(ifs, n, burn, c.sub(1), a);
  const auto nu = chaos_game(ifs, n, burn, c.sub(2), b);
  const auto w = wasserstein1_bounds(mu, nu);
  const double threshold = c.get<double>("max_w1_rel") * dom.diameter();
  o.report.stats["w1"] = w.value;
  o.report.stats["w1_lower"] = w.lower;
  o.report.stats["w1_upper"] = w.upper;
  o.report.stats["threshold"] = threshold;
  o.report.samples = 2 * n;
  // the binned estimate is bracketed; decide only when the bracket is on one side
  if (w.upper < threshold) o.report.verdict = Verdict::Pass;
  else if (w.lower >= threshold) o.report.verdict = Verdict::Fail;
  else o.report.verdict = Verdict::Inconclusive;
  o.extra["starts"] = {point_json(a), point_json(b)};
  {
    auto f = c.open("chaos.csv");
    f << c.prov.comment() << '\n';
    write_measure_csv(f, mu);
  }
  auto img = c.open("chaos.pgm");
  write_pgm(img, render_measure(mu, c.cfg.grid()), c.prov);
  return o;
}

Outcome covering(Context& c) {
  const auto ifs = generator_ifs(c.family);
  const auto res = covering_search(ifs, c.get<int>("budget"), c.seed, c.get<int>("resolution"));
  Outcome o{res.report};
  json cov{{"verdict", to_string(res.report.verdict)}, {"proxy_margin", res.proxy_margin}};
  if (res.best) {
    const auto& b = *res.best;
    cov["center"] = point_json(b.center);
    cov["axes"] = json::array({b.a, b.b});
    cov["angle"] = b.angle;
    cov["exponent"] = std::isfinite(b.exponent) ? json(b.exponent) : json("inf");
    cov["margin"] = res.report.stats.count("margin") ? json(res.report.stat("margin")) : json(nullptr);
  }
  o.extra["covering"] = cov;
  auto f = c.open("covering.json");
  f << json{{"provenance", {{"version", ERGOGRAPH_VERSION}, {"config_hash", c.prov.config_hash}, {"seed", c.seed}}},
            {"covering", cov}}
           .dump(2)
    << '\n';
  return o;
}

Outcome cusp(Context& c) {
  Outcome o{fresh(c.seed)};
  const auto f = generator_maps(c.family).front();
  const GridGeometry grid = c.cfg.grid();
  const Box w1 = default_cusp_rectangle(c.cfg.family);
  const auto reg = cusp_regions(*f, grid, w1, c.get<int>("depth"), c.get<int>("boundary_samples"));
  const PlanePoint x0 = c.cfg.family.x0;
  const double h = grid.h;
  auto out = c.csv("cusp.csv", "j,diameter,dist_x0");
  GridSet all(grid);
  bool monotone = true;
  double prev_diam = INFINITY, prev_dist = INFINITY;
  for (std::size_t j = 0; j < reg.regions.size(); ++j) {
    double dist = INFINITY;
    for (const auto idx : reg.regions[j].occupied()) dist = std::min(dist, distance(grid.cell_center(idx), x0));
    const double diam = reg.diameters[j];
    out << j + 1 << ',' << diam << ',' << dist << '\n';
    // polygon diameters shrink exactly; the rasterized distance may wobble by a cell
    monotone = monotone && diam <= prev_diam * (1 + 1e-12) && dist <= prev_dist + h && std::isfinite(dist);
    prev_diam = diam;
    prev_dist = std::min(prev_dist, dist);
    all |= reg.regions[j];
  }
  c.pgm("cusp.pgm", all);
  o.report.verdict = monotone && !reg.regions.empty() ? Verdict::Pass : Verdict::Fail;
  o.report.stats["depth"] = static_cast<double>(reg.regions.size());
  o.report.stats["final_diameter"] = reg.diameters.empty() ? 0.0 : reg.diameters.back();
  o.report.stats["final_dist_x0"] = prev_dist;
  o.report.samples = reg.regions.size();
  return o;
}

Outcome graph(Context& c) {
  Outcome o{fresh(c.seed)};
  const auto& f = *c.family;
  const int n = c.get<int>("samples");
  const double tol = c.get<double>("tol");
  const auto& dom = f.domain();
  const PlanePoint xa = dom.center + PlanePoint{0.99 * dom.radius, 0.0};
  const PlanePoint xb = dom.center - PlanePoint{0.99 * dom.radius, 0.0};
  std::vector<std::optional<GraphSample>> g(static_cast<std::size_t>(n));
  std::vector<double> disc(g.size(), 0.0);
  parallel_for(g.size(), [&](std::size_t i) {
    const auto s = sample_solenoid(mix_seed(c.sub(1), i), kDeepSolenoid, f.k());
    try {
      g[i] = pullback_gamma(f, s, tol);
      disc[i] = distance(pullback_point(f, s, g[i]->depth_used, xa), pullback_point(f, s, g[i]->depth_used, xb));
    } catch (const InconclusiveError&) {
    }
  });
  auto out = c.csv("graph.csv", "t0,digest,gamma_x1,gamma_x2,depth,tail");
  std::size_t uncertified = 0;
  double max_tail = 0.0, max_disc = 0.0, max_depth = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!g[i]) {
      ++uncertified;
      continue;
    }
    const auto& s = *g[i];
    out << s.s.t0().value() << ',' << digits_digest(s.s) << ',' << s.gamma.x1 << ',' << s.gamma.x2 << ','
        << s.depth_used << ',' << s.tail_bound << '\n';
    max_tail = std::max(max_tail, s.tail_bound);
    max_disc = std::max(max_disc, disc[i]);
    max_depth = std::max(max_depth, static_cast<double>(s.depth_used));
  }
  const auto inv = invariance_residual(f, n, c.get<double>("invariance_tol"), c.sub(2));
  o.report.samples = static_cast<std::uint64_t>(n);
  o.report.stats["uncertified"] = static_cast<double>(uncertified);
  o.report.stats["max_tail"] = max_tail;
  o.report.stats["max_depth"] = max_depth;
  o.report.stats["max_two_start_discrepancy"] = max_disc;
  o.report.stats["discrepancy_limit"] = 2 * tol;
  if (uncertified > 0) o.report.verdict = Verdict::Inconclusive;
  if (max_disc >= 2 * tol) o.report.verdict = Verdict::Fail;
  merge_stats(o.report, "invariance_", inv);
  return o;
}

Outcome bony(Context& c) {
  const double diam_tol = c.get<double>("diam_tol_cells") * c.cfg.h();
  const auto scan = bony_scan(*c.family, c.get<int>("samples"), c.get<std::size_t>("depth"), diam_tol, c.seed);
  auto out = c.csv("bony.csv", "lo,hi,count");
  for (const auto& b : histogram(scan.diameters, c.get<int>("bins"))) out << b.lo << ',' << b.hi << ',' << b.count << '\n';
  return {scan.report, {{"bone_trend", trend_json(scan.diameters, c.family->domain().diameter())}}};
}

Outcome usc(Context& c) {
  UscOptions opt;
  opt.depth = c.get<std::size_t>("depth");
  const double eps = c.get<double>("eps_rel") * c.family->domain().diameter();
  return {usc_batch(*c.family, c.get<int>("points"), eps, c.get<int>("trials"), c.seed, opt)};
}

Outcome sync(Context& c) {
  const auto r = sync_test(*c.family, c.get<int>("pairs"), c.get<std::int64_t>("max_steps"), c.get<double>("tol"), c.seed);
  auto out = c.csv("sync.csv", "pair,steps");
  for (std::size_t i = 0; i < r.steps.size(); ++i) out << i << ',' << r.steps[i] << '\n';
  return {r.report};
}

Outcome lyapunov(Context& c) {
  const auto b = lyapunov_batch(*c.family, c.get<int>("starts"), c.get<std::uint64_t>("n"), c.seed, c.get<int>("bootstrap"));
  const double rate = b.mean + c.get<double>("prefactor_eps");
  const auto pre = lyapunov_prefactors(*c.family, c.get<int>("starts"), c.get<std::uint64_t>("n"), rate, c.seed);
  auto out = c.csv("lyapunov.csv", "start,estimate,log_prefactor");
  for (std::size_t i = 0; i < b.estimates.size(); ++i) out << i << ',' << b.estimates[i] << ',' << pre[i] << '\n';
  Outcome o{b.report};
  auto sorted = pre;
  std::sort(sorted.begin(), sorted.end());
  o.extra["prefactors"] = {{"rate", rate},
                           {"median_log_prefactor", sorted[sorted.size() / 2]},
                           {"max_log_prefactor", sorted.back()}};
  return o;
}

Outcome birkhoff(Context& c) {
  const auto obs = default_observables(c.cfg.family);
  std::vector<std::vector<BirkhoffResult>> runs;
  Outcome o{srb_independence(*c.family, obs, c.get<int>("starts"), c.get<std::uint64_t>("n"), c.seed, &runs)};
  auto out = c.csv("birkhoff.csv", "start,observable,mean,se");
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (std::size_t j = 0; j < obs.size(); ++j) out << i << ',' << obs[j].name() << ',' << runs[i][j].mean << ',' << runs[i][j].se << '\n';
  }
  json names = json::array();
  for (const auto& ob : obs) names.push_back(ob.to_json());
  o.extra["observables"] = names;
  return o;
}

Outcome mixing(Context& c) {
  Outcome o{fresh(c.seed)};
  const int n_max = c.get<int>("n_max");
  const double ratio = c.get<double>("ratio");
  if (n_max < 1) throw config_error("/commands/mixing/n_max", "expected an integer >= 1");
  const std::vector<Observable> obs{Observable::coordinate(0), Observable::coordinate(1)};
  auto out = c.csv("mixing.csv", "n,observable,c,se");
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const auto d = correlation_decay(*c.family, obs[i], obs[i], n_max, c.get<std::uint64_t>("orbit_len"), c.sub(i + 1),
                                     c.get<int>("bootstrap"));
    const std::string tag = obs[i].name();
    for (int n = 0; n <= n_max; ++n) out << n << ',' << tag << ',' << d.c[n] << ',' << d.se[n] << '\n';
    o.report.stats["c1_" + tag] = d.c[1];
    o.report.stats["c" + std::to_string(n_max) + "_" + tag] = d.c[n_max];
    o.report.stats["se1_" + tag] = d.se[1];
    o.report.stats["se" + std::to_string(n_max) + "_" + tag] = d.se[n_max];
    if (!(d.c[n_max] < d.c[1] / ratio)) o.report.verdict = Verdict::Fail;
  }
  o.report.samples = c.get<std::uint64_t>("orbit_len");
  return o;
}

Outcome perturb(Context& c) {
  Outcome o{fresh(c.seed)};
  const PerturbationSpec spec{c.get<double>("eps"), c.seed, c.get<int>("modes")};
  const std::string& mode = c.perturb_mode;
  const auto pert = perturb_family(c.family, spec, c.get<int>("gate_samples"));
  o.report.stats["eps"] = spec.eps;
  if (mode == "all" || mode == "c1") {
    const auto d = c1_distance(*c.family, *pert, c.get<int>("c1_samples"), c.sub(1));
    o.extra["c1"] = {{"value", d.value},
                     {"jacobian", d.jacobian},
                     {"inverse_value", d.inverse_value},
                     {"inverse_jacobian", d.inverse_jacobian},
                     {"total", d.total},
                     {"samples", d.samples},
                     {"inverse_samples", d.inverse_samples}};
    o.report.stats["c1_total"] = d.total;
    // the perturbation must be C1-small at the requested scale
    if (!(d.total <= 10 * spec.eps)) o.report.verdict = worst(o.report.verdict, Verdict::Fail);
  }
  if (mode == "all" || mode == "splitting") {
    const int n = c.get<int>("splitting_samples");
    const auto base = dominated_splitting_check(*c.family, n, c.sub(2));
    const auto per = dominated_splitting_check(*pert, n, c.sub(2));
    merge_stats(o.report, "splitting_base_", base);
    merge_stats(o.report, "splitting_perturbed_", per);
    o.extra["splitting"] = {{"base", to_json(base)}, {"perturbed", to_json(per)}};
  }
  if (mode == "all" || mode == "suite") {
    SuiteBudget b;
    b.sync_pairs = c.get<int>("sync_pairs");
    b.lyapunov_starts = c.get<int>("lyapunov_starts");
    b.lyapunov_n = c.get<std::uint64_t>("lyapunov_n");
    b.bony_samples = c.get<int>("bony_samples");
    b.usc_points = c.get<int>("usc_points");
    b.invariance_samples = c.get<int>("invariance_samples");
    b.srb_starts = c.get<int>("srb_starts");
    b.srb_n = c.get<std::uint64_t>("srb_n");
    b.gate_samples = c.get<int>("gate_samples");
    const auto suite = robustness_suite(c.family, spec, b);
    const auto bones = bony_scan(*pert, b.bony_samples, b.bony_depth, 10 * c.cfg.h(), c.sub(3));
    o.extra["perturbed_bone_trend"] = trend_json(bones.diameters, c.family->domain().diameter());
    o.report.verdict = worst(o.report.verdict, suite.overall.verdict);
    o.report.samples += suite.overall.samples;
    o.extra["suite"] = suite.to_json();
  }
  return o;
}

const std::map<std::string, std::function<Outcome(Context&)>>& commands() {
  static const std::map<std::string, std::function<Outcome(Context&)>> m{
      {"family-check", family_check}, {"attractor", attractor}, {"chaos", chaos},       {"covering", covering},
      {"cusp", cusp},                 {"graph", graph},         {"bony", bony},         {"usc", usc},
      {"sync", sync},                 {"lyapunov", lyapunov},   {"birkhoff", birkhoff}, {"mixing", mixing},
      {"perturb", perturb},
  };
  return m;
}

const std::map<std::string, std::string>& descriptions() {
  static const std::map<std::string, std::string> d{
      {"family-check", "Jacobian, weak fixed point and contraction checks of the fiber family"},
      {"attractor", "Hutchinson iteration on the grid; attractor.pgm and a convergence log"},
      {"chaos", "chaos games from two starts compared in W1"},
      {"covering", "search for a covering region and certify it"},
      {"cusp", "images of a rectangle next to the weak fixed point"},
      {"graph", "certified pullback graph samples and invariance residual"},
      {"bony", "fiber-set diameter histogram"},
      {"usc", "upper semicontinuity probes of fiber sets"},
      {"sync", "synchronization of fiber orbits over a shared base orbit"},
      {"lyapunov", "top Lyapunov exponent batch with a bootstrap interval"},
      {"birkhoff", "Birkhoff averages from many starts"},
      {"mixing", "correlation decay of coordinate observables"},
      {"perturb", "C1 perturbation: distance, dominated splitting and the diagnostic suite"},
  };
  return d;
}

Verdict run_command(Context& c, std::ostream& out) {
  const auto o = commands().at(c.cmd)(c);
  json cfg = to_json(c.cfg);
  cfg.erase("output_dir");
  json report{{"command", c.cmd},
              {"provenance", {{"version", ERGOGRAPH_VERSION}, {"config_hash", c.prov.config_hash}, {"seed", c.seed}}},
              {"config", cfg},
              {"verdict", to_string(o.report.verdict)},
              {"report", to_json(o.report)}};
  for (const auto& [k, v] : o.extra.items()) report[k] = v;
  c.artifacts.push_back(c.cmd + "_report.json");
  report["artifacts"] = c.artifacts;
  const std::string text = report.dump(2);
  fs::create_directories(c.dir);
  std::ofstream f(c.dir / (c.cmd + "_report.json"), std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + (c.dir / (c.cmd + "_report.json")).string());
  f << text << '\n';
  out << text << '\n';
  return o.report.verdict;
}

std::optional<Provenance> parse_provenance(const std::string& line) {
  char hash[64] = {0};
  unsigned long long seed = 0;
  std::string s = line;
  if (s.rfind("# ", 0) == 0) s = s.substr(2);
  if (std::sscanf(s.c_str(), "ergograph version=%*s config=%63s seed=%llu", hash, &seed) != 2) return std::nullopt;
  return Provenance{hash, seed};
}

void render(const ExperimentConfig& cfg, const std::string& input, const std::string& output, std::ostream& out) {
  std::ifstream in(input, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + input);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string data = buf.str();
  std::ofstream f(output, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + output);
  if (data.rfind("P5", 0) == 0) {
    std::vector<std::string> comments;
    std::istringstream probe(data);
    read_pgm(probe, &comments);
    std::optional<Provenance> prov;
    for (const auto& cmt : comments) {
      if (!prov) prov = parse_provenance(cmt);
    }
    std::istringstream again(data);
    write_gridset_pgm(f, read_gridset_pgm(again), prov.value_or(cfg.provenance("render")));
  } else {
    std::istringstream lines(data);
    std::string first;
    std::getline(lines, first);
    const auto prov = parse_provenance(first);
    std::istringstream again(data);
    write_pgm(f, render_measure(read_measure_csv(again), cfg.grid()), prov.value_or(cfg.provenance("render")));
  }
  out << output << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Skew-product diagnostics over a JSON experiment config", "ergograph"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ERGOGRAPH_VERSION));

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out_dir;
  Overrides ov;
  app.add_option("--config", config_path, "experiment config (JSON)");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--threads", threads, "worker threads (default: ERGOGRAPH_THREADS, else hardware)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--n", ov.n, "sample count override");
  app.add_option("--depth", ov.depth, "depth override");
  app.add_option("--tol", ov.tol, "tolerance override");
  app.add_option("--eps", ov.eps, "perturbation size or relative radius override");

  std::string positional;
  std::string perturb_mode = "all";
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, desc] : descriptions()) {
    auto* sc = app.add_subcommand(name, desc);
    sc->fallthrough();
    sc->add_option("config", positional, "experiment config (JSON)");
    subs[name] = sc;
  }
  subs["perturb"]
      ->add_option("--mode", perturb_mode, "which parts to run")
      ->check(CLI::IsMember({"all", "suite", "c1", "splitting"}));
  std::string render_in, render_out;
  auto* render_cmd = app.add_subcommand("render", "render a grid-set PGM or measure CSV to a PGM");
  render_cmd->fallthrough();
  render_cmd->add_option("input", render_in, "attractor/cusp PGM or measure CSV")->required();
  render_cmd->add_option("output", render_out, "PGM path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitPass : kExitError;
  }

  try {
    if (threads) set_thread_count(*threads);
    if (!positional.empty() && !config_path.empty() && positional != config_path) {
      throw std::invalid_argument("config given twice: " + positional + " and " + config_path);
    }
    if (config_path.empty()) config_path = positional;
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_experiment_config(config_path);
    if (seed) cfg.master_seed = *seed;
    if (out_dir) cfg.output_dir = *out_dir;

    if (render_cmd->parsed()) {
      render(cfg, render_in, render_out, out);
      return kExitPass;
    }
    std::string cmd;
    for (const auto& [name, sc] : subs) {
      if (sc->parsed()) cmd = name;
    }
    apply_overrides(cfg, cmd, ov);

    Context c;
    c.cfg = cfg;
    c.cmd = cmd;
    c.seed = cfg.seed_for(cmd);
    c.prov = cfg.provenance(cmd);
    c.dir = cfg.output_dir;
    c.plateau = std::make_shared<PlateauFamily>(cfg.family);
    c.family = c.plateau;
    c.perturb_mode = perturb_mode;
    switch (run_command(c, out)) {
      case Verdict::Pass:
        return kExitPass;
      case Verdict::Fail:
        return kExitFail;
      case Verdict::Inconclusive:
        return kExitInconclusive;
    }
    return kExitError;
  } catch (const ConfigError& e) {
    err << "config error:\n";
    for (const auto& i : e.issues()) err << "  " << (i.pointer.empty() ? "/" : i.pointer) << ": " << i.message << '\n';
    return kExitError;
  } catch (const PerturbationRejected& e) {
    err << "perturbation rejected: " << e.what() << '\n';
    return kExitError;
  } catch (const InconclusiveError& e) {
    err << "inconclusive: " << e.what() << '\n';
    return kExitInconclusive;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace ergograph
