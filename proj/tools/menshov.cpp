// menshov: batch experiment runner. One subcommand per run; every run is a
// pure function of its JSON config and writes a manifest plus CSVs.
//
// Exit status: 0 all certificates passed, 1 a certificate failed or the
// construction gave up (failures.json has the details), 2 usage or config
// error.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "config.hpp"
#include "menshov/approximants.hpp"
#include "menshov/blocks.hpp"
#include "menshov/engines.hpp"
#include "menshov/errors.hpp"
#include "menshov/numbertheory.hpp"
#include "menshov/riesz.hpp"
#include "menshov/targets.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace menshov::cli {
namespace {

struct Overrides {
  std::string config_path;
  std::string out;
  std::size_t grid = 0;
  std::uint64_t seed = 0;
  bool has_grid = false;
  bool has_seed = false;
};

// Settings shared by every subcommand, flags taking precedence.
struct Common {
  fs::path out;
  CircleGrid grid;
  std::uint64_t seed = 1;
};

struct Outcome {
  std::vector<json> failures;  // {id, relation, measured, bound}
  std::size_t checked = 0;
  std::string error;

  void add(const std::string& id, const Requirement& r) {
    ++checked;
    if (!r.pass) {
      failures.push_back({{"id", id}, {"relation", r.relation}, {"measured", r.measured}, {"bound", r.bound}});
    }
  }
  void add_all(const std::string& prefix, const std::vector<Requirement>& rs) {
    for (const auto& r : rs) add(prefix + r.name, r);
  }
  bool pass() const { return failures.empty() && error.empty(); }
};

Requirement check(std::string name, std::string relation, double measured, double bound) {
  bool pass = false;
  if (relation == "<") pass = measured < bound;
  else if (relation == "<=") pass = measured <= bound;
  else if (relation == ">") pass = measured > bound;
  else if (relation == ">=") pass = measured >= bound;
  else if (relation == "==") pass = measured == bound;
  return {std::move(name), std::move(relation), measured, bound, pass};
}

json requirements_json(const std::vector<Requirement>& rs) {
  json out = json::array();
  for (const auto& r : rs) {
    out.push_back({{"name", r.name}, {"relation", r.relation}, {"measured", r.measured},
                   {"bound", r.bound}, {"pass", r.pass}});
  }
  return out;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

Common common_settings(Config& cfg, const Overrides& ov) {
  Common c;
  c.out = ov.out.empty() ? fs::path(cfg.get<std::string>("out", "menshov-out")) : fs::path(ov.out);
  if (cfg.has("out")) cfg.raw("out");
  std::size_t M = cfg.get<std::uint64_t>("grid", kDefaultGridSize);
  if (ov.has_grid) M = ov.grid;
  if (M < 8) throw ConfigError("grid", "needs at least 8 points");
  c.grid = CircleGrid(M);
  c.seed = ov.has_seed ? ov.seed : cfg.get<std::uint64_t>("seed", 1);
  return c;
}

// ---------------------------------------------------------------- sequences

RealSequence eps_sequence(Config& cfg, const std::string& key) {
  const json v = cfg.raw(key);
  if (v.is_number()) {
    const double c = v.get<double>();
    if (!(c > 0)) throw ConfigError(cfg.key_path(key), "must be positive");
    return [c](std::int64_t) { return c; };
  }
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "1/log") return [](std::int64_t n) { return 1.0 / std::log(static_cast<double>(n) + 2.0); };
    if (s == "1/sqrt") return [](std::int64_t n) { return 1.0 / std::sqrt(static_cast<double>(n) + 1.0); };
    if (s == "1/n") return [](std::int64_t n) { return 1.0 / (static_cast<double>(n) + 1.0); };
  }
  throw ConfigError(cfg.key_path(key), "expected a positive number or one of 1/log, 1/sqrt, 1/n");
}

RealSequence weight_sequence(Config& cfg, const std::string& key) {
  const json v = cfg.raw(key);
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "k") return [](std::int64_t k) { return static_cast<double>(k); };
    if (s == "k^2") return [](std::int64_t k) { return std::pow(static_cast<double>(k), 2.0); };
    if (s == "k^3") return [](std::int64_t k) { return std::pow(static_cast<double>(k), 3.0); };
    if (s == "sqrt") return [](std::int64_t k) { return std::sqrt(static_cast<double>(k)); };
  }
  throw ConfigError(cfg.key_path(key), "expected one of k, k^2, k^3, sqrt");
}

// ---------------------------------------------------------------- spectra

struct BuiltSpectrum {
  std::string kind;
  SpectrumBuild build;
  std::vector<Requirement> certificates;
};

std::vector<Requirement> hadamard_certificates(const SpectrumBuild& b, const RealSequence& eps,
                                               std::int64_t N, bool analytic) {
  const auto pos = b.spectrum.positive_part().elements();
  std::int64_t violations = 0;
  // lambda(n) = pos[n - 1]
  for (std::size_t n = 1; n < pos.size(); ++n) {
    const long double lhs = static_cast<long double>(pos[n]);
    const long double rhs = static_cast<long double>(pos[n - 1]) *
                            (1.0L + static_cast<long double>(eps(static_cast<std::int64_t>(n))));
    violations += !(lhs > rhs);
  }
  std::vector<Requirement> out;
  out.push_back(check("ratio violations lambda(n+1) <= lambda(n)(1 + eps(n))", "==",
                      static_cast<double>(violations), 0));
  out.push_back(check("positive elements", ">=", static_cast<double>(pos.size()), static_cast<double>(N)));
  if (analytic) {
    out.push_back(check("nonpositive elements", "==",
                        static_cast<double>(b.spectrum.size() - pos.size()), 0));
  } else {
    out.push_back(check("symmetric", "==", b.spectrum.is_symmetric() ? 1 : 0, 1));
  }
  return out;
}

std::vector<Requirement> squares_certificates(const SpectrumBuild& b, const RealSequence& w,
                                              int count, bool analytic) {
  double worst = 0.0;
  for (const auto& rec : b.manifest) {
    for (const auto& p : square_perturbations(rec)) {
      worst = std::max(worst, std::abs(static_cast<double>(p.tau)) / std::sqrt(w(p.k)));
    }
  }
  std::vector<Requirement> out;
  out.push_back(check("max |tau| / sqrt(w(k))", "<", worst, 1.0));
  out.push_back(check("blocks", "==", static_cast<double>(b.manifest.size()), count));
  if (analytic) {
    const auto pos = b.spectrum.positive_part().size();
    out.push_back(check("nonpositive elements", "==", static_cast<double>(b.spectrum.size() - pos), 0));
  }
  return out;
}

BlockRecord block_record(Config c) {
  BlockRecord r;
  r.kind = c.require<std::string>("kind");
  if (r.kind != "B" && r.kind != "B_nu" && r.kind != "D" && r.kind != "D_nu") {
    throw ConfigError(c.key_path("kind"), "expected B, B_nu, D or D_nu");
  }
  r.s = c.require<int>("s");
  r.a = c.require<std::int64_t>("a");
  if (r.kind == "B_nu" || r.kind == "D_nu") r.nu = c.require<std::int64_t>("nu");
  c.finish();
  return r;
}

// Either an explicit block list {blocks: [...]} or a builder {kind, ...}.
BuiltSpectrum build_spectrum(Config& cfg) {
  BuiltSpectrum out;
  if (cfg.has("blocks")) {
    const json list = cfg.raw("blocks");
    if (!list.is_array() || list.empty()) throw ConfigError(cfg.key_path("blocks"), "expected a non-empty array");
    out.kind = "blocks";
    SpectrumSet all;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto rec = block_record(Config(list[i], cfg.key_path("blocks") + "[" + std::to_string(i) + "]"));
      all = set_union(all, rec.materialize());
      out.build.manifest.push_back(rec);
    }
    out.build.spectrum = all;
    return out;
  }
  out.kind = cfg.require<std::string>("kind");
  if (out.kind == "hadamard" || out.kind == "analytic_hadamard") {
    const auto eps = eps_sequence(cfg, "eps");
    const auto N = cfg.require<std::int64_t>("N");
    if (N < 1) throw ConfigError(cfg.key_path("N"), "must be positive");
    HadamardOptions opt;
    opt.max_s = cfg.get<int>("max_s", opt.max_s);
    const bool analytic = out.kind == "analytic_hadamard";
    out.build = analytic ? build_analytic_hadamard_spectrum(eps, N, opt) : build_hadamard_spectrum(eps, N, opt);
    out.certificates = hadamard_certificates(out.build, eps, N, analytic);
  } else if (out.kind == "squares" || out.kind == "analytic_squares") {
    const auto w = weight_sequence(cfg, "w");
    const int count = cfg.require<int>("count");
    if (count < 1) throw ConfigError(cfg.key_path("count"), "must be positive");
    const bool analytic = out.kind == "analytic_squares";
    out.build = analytic ? build_analytic_squares_spectrum(w, count) : build_squares_spectrum(w, count);
    out.certificates = squares_certificates(out.build, w, count, analytic);
  } else {
    throw ConfigError(cfg.key_path("kind"),
                      "expected hadamard, analytic_hadamard, squares or analytic_squares");
  }
  return out;
}

// ---------------------------------------------------------------- targets

struct Target {
  std::string name;
  json params;
  SampledFunction f;
};

Target read_target(Config& cfg, const CircleGrid& grid) {
  Config t = cfg.child("target");
  Target out;
  out.name = t.require<std::string>("name");
  out.params = t.has("params") ? t.raw("params") : json::object();
  t.finish();
  try {
    out.f = make_target(out.name, out.params, grid);
  } catch (const ParameterError& e) {
    throw ConfigError(cfg.key_path("target"), e.what());
  }
  return out;
}

RieszGrowth read_growth(Config& cfg) {
  RieszGrowth g;
  if (!cfg.has("growth")) return g;
  Config c = cfg.child("growth");
  g.first = c.get<std::uint64_t>("first", g.first);
  g.base = c.get<std::uint64_t>("base", g.base);
  g.ratio = c.get<std::uint64_t>("ratio", g.ratio);
  c.finish();
  return g;
}

BlockApproximantOptions block_options(Config& cfg, const Common& common) {
  BlockApproximantOptions o;
  o.fejer_cap = cfg.get<std::int64_t>("fejer_cap", o.fejer_cap);
  o.sstar_budget = cfg.get<double>("sstar_budget", o.sstar_budget);
  o.korner.seed = common.seed;
  return o;
}

StageApproximant stage_approximant(Config& cfg, const Common& common) {
  const auto name = cfg.get<std::string>("approximant", "block");
  if (name == "block") return block_stage_approximant(block_options(cfg, common));
  if (name == "projection") return projection_stage_approximant();
  throw ConfigError(cfg.key_path("approximant"), "expected block or projection");
}

// ---------------------------------------------------------------- commands

Outcome cmd_build_spectrum(Config& cfg, const Common& common) {
  Outcome oc;
  const auto built = build_spectrum(cfg);
  cfg.finish();
  fs::create_directories(common.out);
  {
    std::ofstream out(common.out / "spectrum.csv");
    write_spectrum(out, built.build.spectrum);
  }
  oc.add_all("", built.certificates);
  write_json(common.out / "manifest.json",
             {{"command", "build-spectrum"},
              {"config", cfg.json()},
              {"size", built.build.spectrum.size()},
              {"positive_size", built.build.spectrum.positive_part().size()},
              {"blocks", manifest_to_json(built.build.manifest)},
              {"certificates", requirements_json(built.certificates)},
              {"all_pass", oc.pass()}});
  return oc;
}

Outcome cmd_approximate(Config& cfg, const Common& common) {
  Outcome oc;
  const auto kind = cfg.require<std::string>("approximant");
  ApproximantReport rep;
  json target_info = nullptr;
  if (kind == "korner") {
    KornerParams kp;
    kp.eps = cfg.require<double>("eps");
    kp.delta = cfg.require<double>("delta");
    kp.K = cfg.get<int>("K", 0);
    kp.sstar_budget = cfg.get<double>("sstar_budget", kp.sstar_budget);
    const auto layout = cfg.get<std::string>("layout", "interleaved");
    if (layout == "consecutive") kp.layout = KornerLayout::Consecutive;
    else if (layout != "interleaved") throw ConfigError(cfg.key_path("layout"), "expected interleaved or consecutive");
    kp.seed = common.seed;
    kp.grid = common.grid;
    kp.strict = false;
    cfg.finish();
    rep = korner_polynomial(kp);
  } else if (kind == "analytic_unit") {
    const double eps = cfg.require<double>("eps");
    AnalyticUnitOptions o;
    o.grid = common.grid;
    o.max_degree = cfg.get<std::int64_t>("max_degree", o.max_degree);
    o.strict = false;
    cfg.finish();
    rep = analytic_unit(eps, o);
  } else if (kind == "analytic_korner") {
    const double eps = cfg.require<double>("eps");
    AnalyticKornerOptions o;
    o.grid = common.grid;
    o.K = cfg.get<int>("K", 0);
    o.strict = false;
    cfg.finish();
    rep = analytic_korner(eps, o);
  } else if (kind == "block" || kind == "analytic_block") {
    const auto target = read_target(cfg, common.grid);
    target_info = {{"name", target.name}, {"params", target.params}};
    const double eps = cfg.require<double>("eps");
    const double delta = kind == "block" ? cfg.require<double>("delta") : 0.0;
    const int s = cfg.require<int>("s");
    const auto a = cfg.require<std::int64_t>("a");
    auto o = block_options(cfg, common);
    o.strict = false;
    cfg.finish();
    rep = kind == "block" ? block_approximant(target.f, eps, delta, s, a, o)
                          : analytic_block_approximant(target.f, eps, s, a, o);
    const auto block = kind == "block" ? block_B(s, a) : block_D(s, a);
    std::size_t outside = 0;
    for (const auto& [k, c] : rep.poly.coeffs()) outside += !block.contains(k);
    rep.add_requirement("spec P outside block", "==", static_cast<double>(outside), 0);
  } else {
    throw ConfigError(cfg.key_path("approximant"),
                      "expected korner, analytic_unit, analytic_korner, block or analytic_block");
  }
  fs::create_directories(common.out);
  {
    std::ofstream out(common.out / "poly.csv");
    write_csv(out, rep.poly);
  }
  if (!rep.exceptional_set.empty()) {
    std::ofstream out(common.out / "exceptional_set.txt");
    write_mask(out, rep.exceptional_set);
  }
  for (const auto& r : rep.requirements) oc.add(r.name, r);
  write_json(common.out / "manifest.json", {{"command", "approximate"},
                                            {"config", cfg.json()},
                                            {"grid", common.grid.size()},
                                            {"target", target_info},
                                            {"report", rep.to_json()},
                                            {"all_pass", oc.pass()}});
  return oc;
}

Outcome cmd_represent(Config& cfg, const Common& common) {
  Outcome oc;
  const auto engine = cfg.require<std::string>("engine");
  const auto target = read_target(cfg, common.grid);
  RepresentationRun run;
  if (engine == "ae" || engine == "squares" || engine == "measure") {
    Config sc = cfg.child("spectrum");
    const auto spectrum = build_spectrum(sc);
    sc.finish();
    const int stages = cfg.require<int>("stages");
    if (engine == "ae") {
      AeEngineOptions o;
      o.approximant = stage_approximant(cfg, common);
      o.sstar_budget = cfg.get<double>("sstar_budget", o.sstar_budget);
      cfg.finish();
      run = run_ae_engine(target.f, spectrum.build, stages, o);
    } else if (engine == "squares") {
      SquaresEngineOptions o;
      o.approximant = stage_approximant(cfg, common);
      o.growth = read_growth(cfg);
      o.c1 = cfg.get<double>("c1", o.c1);
      cfg.finish();
      run = run_squares_engine(target.f, spectrum.build, stages, o);
    } else {
      MeasureEngineOptions o;
      o.stoptime.approximant = stage_approximant(cfg, common);
      o.stoptime.growth = read_growth(cfg);
      o.stoptime.stage_cap = cfg.get<int>("stage_cap", o.stoptime.stage_cap);
      cfg.finish();
      run = run_measure_engine(target.f, spectrum.build, stages, o);
    }
  } else if (engine == "stoptime") {
    Config sc = cfg.child("spectrum");
    const auto spectrum = build_spectrum(sc);
    sc.finish();
    const auto [a, b] = cfg.interval("interval");
    StopTimeOptions o;
    o.approximant = stage_approximant(cfg, common);
    o.growth = read_growth(cfg);
    o.stage_cap = cfg.get<int>("stage_cap", o.stage_cap);
    const double eps = cfg.require<double>("eps");
    cfg.finish();
    run = run_stoptime_engine(target.f, interval_mask(common.grid, a, b), spectrum.build, eps, o).run;
  } else if (engine == "asymptotic_L2" || engine == "infinity") {
    AsymptoticEngineOptions o;
    const int stages = cfg.require<int>("stages");
    o.fejer_cap = cfg.get<std::int64_t>("fejer_cap", o.fejer_cap);
    o.l2_budget = cfg.get<double>("l2_budget", o.l2_budget);
    o.decay_factor = cfg.get<double>("decay_factor", o.decay_factor);
    o.exact_sweep_limit = cfg.get<double>("exact_sweep_limit", o.exact_sweep_limit);
    cfg.finish();
    run = engine == "infinity" ? run_infinity_mode(target.f, stages, o)
                               : run_asymptotic_L2_engine(target.f, stages, o);
  } else {
    throw ConfigError(cfg.key_path("engine"),
                      "expected ae, squares, asymptotic_L2, infinity, stoptime or measure");
  }
  run.target_info = {{"name", target.name}, {"params", target.params}};
  run.write(common.out.string());
  write_json(common.out / "config.json", cfg.json());
  for (const auto& s : run.stages) oc.add_all("stage " + std::to_string(s.n) + ": ", s.certificates);
  oc.add_all("summary: ", run.summary);
  if (run.exhausted) oc.error = run.stop_reason.empty() ? "run stopped early" : run.stop_reason;
  return oc;
}

Outcome cmd_riesz(Config& cfg, const Common& common) {
  Outcome oc;
  const auto n = cfg.get<std::uint64_t>("n", 200);
  const auto growth = read_growth(cfg);
  RieszSampling sampling;
  sampling.seed = common.seed;
  sampling.grid = common.grid;
  {
    Config sc = cfg.child("sampling");
    const auto mode = sc.get<std::string>("mode", "montecarlo");
    if (mode == "grid") sampling.mode = RieszSampling::Mode::Grid;
    else if (mode != "montecarlo") throw ConfigError(sc.key_path("mode"), "expected montecarlo or grid");
    sampling.points = sc.get<std::uint64_t>("points", sampling.points);
    sc.finish();
  }
  CosineProductOptions co;
  co.n_max = n;
  co.c = cfg.get<double>("c", co.c);
  if (cfg.has("window")) {
    const auto [lo, hi] = cfg.interval("window");
    co.window_lo = static_cast<std::size_t>(lo);
    co.window_hi = static_cast<std::size_t>(hi);
  }
  co.keep_trace = cfg.get<bool>("trace", false);
  AnalyticProductOptions ao;
  ao.n_max = cfg.get<std::uint64_t>("analytic_n", ao.n_max);
  ao.threshold = cfg.get<double>("liminf_threshold", ao.threshold);
  const auto clt_n = cfg.get<std::uint64_t>("clt_n", n);
  const auto orth_n = cfg.get<std::uint64_t>("orthogonality_n", std::min<std::uint64_t>(n, 64));
  cfg.finish();
  if (n < 1 || co.window_hi > n || ao.n_max > n || clt_n > n || orth_n > n) {
    throw ConfigError("n", "must cover window, analytic_n, clt_n and orthogonality_n");
  }

  const auto sched = make_schedule(n, growth);
  const auto phases = riesz_phases(sched, n, sampling);
  const auto cos_rep = cosine_product_bounds(phases, co);
  const auto an_rep = analytic_product_diagnostics(phases, ao);
  const auto clt = clt_check(phases, clt_n);
  const auto orth = almost_orthogonality(sched, orth_n);

  // Desk gates for the Riesz-product diagnostics.
  std::vector<Requirement> certs;
  certs.push_back(check("|mean log(1 - cos nu_k t) + log 2|", "<", std::abs(cos_rep.empirical_A + std::log(2.0)), 0.05));
  certs.push_back(check("fraction with 3^-n < P_n on the window", ">=", cos_rep.fraction_lower, 0.95));
  certs.push_back(check("fraction with min_n |q_n| below threshold", ">=", an_rep.fraction_liminf, 0.95));
  certs.push_back(check("cross identity error", "<=", an_rep.cross_identity_error, 1e-9));
  certs.push_back(check("KS distance to normal", "<", clt.ks_distance, 0.05));
  std::size_t orth_fail = 0;
  for (std::size_t k = 1; k <= orth.n; ++k) {
    for (std::size_t kp = k + 1; kp <= orth.n; ++kp) orth_fail += !orth.pair_passes(k, kp);
  }
  certs.push_back(check("almost-orthogonality failing pairs", "==", static_cast<double>(orth_fail), 0));
  oc.add_all("", certs);

  fs::create_directories(common.out);
  {
    std::ofstream out(common.out / "points.csv");
    out << "t,masked,mean_log,lower_from,upper_from,min_log_abs_q,K1\n";
    for (std::size_t p = 0; p < cos_rep.points; ++p) {
      std::ostringstream row;
      row.precision(17);
      row << cos_rep.t[p] << ',' << (cos_rep.mask[p] ? 1 : 0) << ',' << cos_rep.mean_log[p] << ','
          << cos_rep.lower_from[p] << ',' << cos_rep.upper_from[p] << ',' << an_rep.min_log_abs[p] << ','
          << an_rep.K1[p] << '\n';
      out << row.str();
    }
  }
  if (co.keep_trace) {
    std::ofstream out(common.out / "trace.csv");
    write_cosine_trace_csv(out, cos_rep);
  }
  write_json(common.out / "manifest.json", {{"command", "riesz"},
                                            {"config", cfg.json()},
                                            {"schedule", sched.to_json()},
                                            {"cosine", cos_rep.summary_json()},
                                            {"analytic", an_rep.summary_json()},
                                            {"clt", clt.to_json()},
                                            {"orthogonality", orth.to_json()},
                                            {"certificates", requirements_json(certs)},
                                            {"all_pass", oc.pass()}});
  return oc;
}

Outcome cmd_sharpness(Config& cfg, const Common& common) {
  Outcome oc;
  const auto A = cfg.require<std::int64_t>("A");
  const auto range = cfg.get<std::int64_t>("checked_range", 10'000);
  const auto cap = cfg.get<std::int64_t>("cap", kPrimeCap);
  std::vector<int> runs;
  if (cfg.has("nonresidue_runs")) {
    const json v = cfg.raw("nonresidue_runs");
    if (!v.is_array()) throw ConfigError("nonresidue_runs", "expected an array of integers");
    for (const auto& r : v) {
      if (!r.is_number_integer()) throw ConfigError("nonresidue_runs", "expected an array of integers");
      runs.push_back(r.get<int>());
    }
  }
  cfg.finish();
  if (A < 1) throw ConfigError("A", "must be positive");

  const auto cert = squares_gap_certificate(A, range, cap);
  std::vector<Requirement> certs;
  certs.push_back(check("gap certificate re-verified", "==", verify_gap_certificate(cert) ? 1 : 0, 1));
  json runs_json = json::array();
  for (int r : runs) {
    const auto run = find_nonresidue_run(r, 3, cap);
    int bad = 0;
    for (int i = 1; i <= r; ++i) bad += legendre(run.x + i, run.p) != -1;
    certs.push_back(check("run " + std::to_string(r) + " residues among x+1..x+r", "==", bad, 0));
    runs_json.push_back({{"r", r}, {"p", run.p}, {"x", run.x}});
  }
  oc.add_all("", certs);
  fs::create_directories(common.out);
  write_json(common.out / "certificate.json", cert.to_json());
  write_json(common.out / "manifest.json", {{"command", "sharpness"},
                                            {"config", cfg.json()},
                                            {"certificate", cert.to_json()},
                                            {"nonresidue_runs", runs_json},
                                            {"certificates", requirements_json(certs)},
                                            {"all_pass", oc.pass()}});
  return oc;
}

using Command = Outcome (*)(Config&, const Common&);

int run_command(const std::string& name, Command cmd, const Overrides& ov) {
  fs::path out_dir;
  try {
    if (ov.config_path.empty()) throw ConfigError("", "a config file is required (--config PATH)");
    std::ifstream in(ov.config_path);
    if (!in) throw ConfigError("", "cannot open config '" + ov.config_path + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("", std::string("config is not valid JSON: ") + e.what());
    }
    Config cfg(j);
    if (cfg.empty()) throw ConfigError("", "config is empty");
    const Common common = common_settings(cfg, ov);
    out_dir = common.out;
    Outcome oc;
    try {
      oc = cmd(cfg, common);
    } catch (const ParameterError& e) {
      throw ConfigError("", e.what());
    } catch (const CertificateFailure& e) {
      oc.failures.push_back({{"id", e.requirement()}, {"relation", nullptr}, {"measured", e.measured()}, {"bound", e.bound()}});
      oc.error = e.what();
    } catch (const BlockTooSmall& e) {
      oc.failures.push_back({{"id", "block s exceeds ingredient degree S"},
                             {"relation", ">"},
                             {"measured", cfg.json().value("s", 0)},
                             {"bound", e.required()}});
      oc.error = e.what();
    } catch (const Error& e) {
      oc.error = e.what();
    }
    const json report = {{"command", name},
                         {"status", oc.pass() ? "pass" : "fail"},
                         {"checked", oc.checked},
                         {"failures", oc.failures},
                         {"error", oc.error.empty() ? json(nullptr) : json(oc.error)}};
    fs::create_directories(out_dir);
    if (oc.pass()) {
      fs::remove(out_dir / "failures.json");
    } else {
      write_json(out_dir / "failures.json", report);
    }
    std::cout << report.dump() << '\n';
    return oc.pass() ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << json({{"command", name}, {"status", "usage"}, {"key", e.key()}, {"error", e.what()}}).dump()
              << '\n';
    return 2;
  }
}

}  // namespace
}  // namespace menshov::cli

int main(int argc, char** argv) {
  using namespace menshov::cli;
  CLI::App app{"Menshov spectra: builders, approximants, engines and certificates"};
  app.require_subcommand(1);
  Overrides ov;
  const std::vector<std::pair<std::string, Command>> commands{
      {"build-spectrum", cmd_build_spectrum},
      {"approximate", cmd_approximate},
      {"represent", cmd_represent},
      {"riesz", cmd_riesz},
      {"sharpness", cmd_sharpness},
  };
  const std::map<std::string, std::string> help{
      {"build-spectrum", "Build an almost-Hadamard or almost-squares spectrum"},
      {"approximate", "Construct one approximating polynomial and its certificates"},
      {"represent", "Run a finite-stage representation engine"},
      {"riesz", "Riesz-product growth, orthogonality and CLT diagnostics"},
      {"sharpness", "Quadratic-residue gap certificate for perturbed squares"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, _] : commands) {
    auto* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", ov.config_path, "JSON config file");
    sub->add_option("--out", ov.out, "output directory (overrides config key out)");
    sub->add_option("--grid", ov.grid, "grid size M (overrides config key grid)");
    sub->add_option("--seed", ov.seed, "seed (overrides config key seed)");
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    ov.has_grid = subs[i]->count("--grid") > 0;
    ov.has_seed = subs[i]->count("--seed") > 0;
    return run_command(commands[i].first, commands[i].second, ov);
  }
  return 2;
}
