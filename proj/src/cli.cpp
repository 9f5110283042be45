#include "phiheat/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "phiheat/errors.hpp"
#include "phiheat/geometry.hpp"
#include "phiheat/heatspace.hpp"
#include "phiheat/parallel.hpp"
#include "phiheat/picard.hpp"
#include "phiheat/schauder.hpp"
#include "phiheat/solver.hpp"

namespace phiheat::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Defaults = std::vector<std::pair<std::string, std::string>>;

const std::map<std::string, Defaults>& section_defaults() {
  static const std::map<std::string, Defaults> table = {
      {"model", {{"kind", "ExactProduct"}, {"b", "1"}, {"f", "1"}, {"x_min", "0.05"}, {"x_max", "1"}}},
      {"grid",
       {{"nx", "48"}, {"k_max", "1"}, {"l_max", "1"}, {"horizon", "0.5"}, {"intervals", "32"}, {"substeps", "2"}}},
      {"sampler", {{"n_pairs", "20000"}, {"n_angles", "0"}, {"near_offset", "8"}}},
      {"stochastic", {{"r_max", "1e6"}, {"n_samples", "400"}}},
      {"initial", {{"center", "0.5"}, {"width", "0.06"}, {"angular", "0.3"}}},
      {"ensemble", {{"n_functions", "50"}, {"roughness", "0.5"}, {"alpha", "0.5"}, {"gamma", "0"}}},
      {"schauder", {{"variant", "mapping"}, {"refine", "true"}}},
      {"rhs", {{"kind", "combined"}, {"drift", "5"}, {"quadratic", "20"}, {"forcing_fraction", "0.3333333333333333"}}},
      {"picard",
       {{"tol", "1e-6"},
        {"max_iter", "50"},
        {"k", "2"},
        {"alpha", "0.5"},
        {"gamma", "0"},
        {"lipschitz_pairs", "100"},
        {"opnorm_functions", "20"},
        {"max_rounds", "6"}}},
      {"heatspace",
       {{"per_regime", "200"}, {"decay", "exponential"}, {"power", "20"}, {"cutoff", "0.1"}, {"ball_radius", "10"}}},
      {"report", {{"n_points", "16"}}},
  };
  return table;
}

const std::map<std::string, std::vector<std::string>>& subcommand_sections() {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"geometry-report", {"model", "report"}},
      {"stochastic-check", {"model", "stochastic"}},
      {"heat-solve", {"model", "grid", "initial"}},
      {"schauder-bench", {"model", "grid", "sampler", "ensemble", "schauder"}},
      {"picard-solve", {"model", "grid", "sampler", "rhs", "picard"}},
      {"heatspace-sample", {"model", "heatspace"}},
  };
  return table;
}

bool needs_seed(const std::string& sub) {
  return sub == "schauder-bench" || sub == "picard-solve" || sub == "heatspace-sample";
}

const std::string& value(const RunConfig& cfg, const std::string& sec, const std::string& key) {
  const auto s = cfg.sections.find(sec);
  if (s == cfg.sections.end() || !s->second.count(key)) throw ConfigError("missing key " + sec + "." + key);
  return s->second.at(key);
}

double number(const RunConfig& cfg, const std::string& sec, const std::string& key) {
  const std::string& v = value(cfg, sec, key);
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos == v.size() && std::isfinite(out)) return out;
  } catch (const std::exception&) {
  }
  throw ConfigError(sec + "." + key + ": expected a number, got '" + v + "'");
}

long integer(const RunConfig& cfg, const std::string& sec, const std::string& key, long lo = 0) {
  const std::string& v = value(cfg, sec, key);
  long out = 0;
  try {
    std::size_t pos = 0;
    out = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
  } catch (const std::exception&) {
    throw ConfigError(sec + "." + key + ": expected an integer, got '" + v + "'");
  }
  if (out < lo) throw ConfigError(sec + "." + key + ": must be at least " + std::to_string(lo));
  return out;
}

bool flag(const RunConfig& cfg, const std::string& sec, const std::string& key) {
  const std::string& v = value(cfg, sec, key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(sec + "." + key + ": expected true or false, got '" + v + "'");
}

geometry::PhiModel model_of(const RunConfig& cfg) { return geometry::model_from_key_values(cfg.sections.at("model")); }

GridPtr grid_of(const RunConfig& cfg, const geometry::PhiModel& model, int level = 0, double horizon = 0.0) {
  const int nx = static_cast<int>(integer(cfg, "grid", "nx", 5)) << level;
  const int intervals = static_cast<int>(integer(cfg, "grid", "intervals", 1)) << level;
  const double h = horizon > 0.0 ? horizon : number(cfg, "grid", "horizon");
  if (!(h > 0.0)) throw ConfigError("grid.horizon must be positive");
  return Grid::make(model.b, model.f, Grid::log_spaced(model.x_min, model.x_max, nx),
                    static_cast<int>(integer(cfg, "grid", "k_max")), static_cast<int>(integer(cfg, "grid", "l_max")),
                    h, intervals, static_cast<int>(integer(cfg, "grid", "substeps", 1)));
}

holder::SamplerPolicy sampler_of(const RunConfig& cfg) {
  holder::SamplerPolicy p;
  p.n_pairs = static_cast<std::size_t>(integer(cfg, "sampler", "n_pairs", 1));
  p.n_angles = static_cast<std::size_t>(integer(cfg, "sampler", "n_angles"));
  p.near_offset = static_cast<int>(integer(cfg, "sampler", "near_offset", 1));
  p.seed = *cfg.seed;
  return p;
}

std::ofstream open(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

using Summary = std::vector<std::string>;

void geometry_report(const RunConfig& cfg, const fs::path& out, Summary& summary) {
  const geometry::PhiModel model = model_of(cfg);
  const int n = static_cast<int>(integer(cfg, "report", "n_points", 2));
  const auto xs = Grid::log_spaced(model.x_min, model.x_max, n);
  std::ofstream os = open(out / "geometry.csv");
  os << "x,sqrt_det,g_inv_xx,laplacian_first_x,perturbation_norm\n";
  os.precision(17);
  for (double x : xs) {
    const auto p = geometry::make_point(x, std::vector<double>(model.b, 0.0), std::vector<double>(model.f, 0.0));
    const auto mp = geometry::metric_eval(model, p);
    const auto lc = geometry::laplacian_coeffs(model, p);
    os << x << ',' << mp.sqrt_det << ',' << mp.g_inv(0, 0) << ',' << lc.first(0) << ','
       << geometry::perturbation_norm(model, x) << '\n';
  }
  summary.push_back("model=" + geometry::to_string(model.kind) + ", m=" + std::to_string(model.m()) +
                    ", n_points=" + std::to_string(n));
  if (!model.perturbation.empty()) {
    summary.push_back("perturbation_decay_order=" + fmt("%.3g", model.perturbation_decay_order()));
  }
}

void stochastic_check(const RunConfig& cfg, const fs::path& out, Summary& summary) {
  const geometry::PhiModel model = model_of(cfg);
  const auto res = geometry::grigoryan_test(model, number(cfg, "stochastic", "r_max"),
                                            static_cast<int>(integer(cfg, "stochastic", "n_samples", 2)));
  std::ofstream os = open(out / "grigoryan.csv");
  os << "radius,volume,partial_integral\n";
  os.precision(17);
  for (std::size_t i = 0; i < res.radii.size(); ++i) {
    os << res.radii[i] << ',' << res.volumes[i] << ',' << res.partial_integrals[i] << '\n';
  }
  summary.push_back("growth_exponent≈" + fmt("%.1f", res.growth_exponent) +
                    ", verdict=" + geometry::to_string(res.verdict));
}

void heat_solve(const RunConfig& cfg, const fs::path& out, Summary& summary) {
  const geometry::PhiModel model = model_of(cfg);
  const GridPtr g = grid_of(cfg, model);
  const double c = number(cfg, "initial", "center");
  const double w = number(cfg, "initial", "width");
  const double a = number(cfg, "initial", "angular");
  if (!(w > 0.0)) throw ConfigError("initial.width must be positive");
  const solver::HeatOperator op = solver::discretize(model, g);
  const Field u0 = project(g, [&](double x, std::span<const double> y, std::span<const double>, double) {
    const double ang = y.empty() ? 1.0 : 1.0 + a * std::cos(y[0]);
    return std::exp(-(x - c) * (x - c) / (2 * w * w)) * ang;
  });
  const Field u = solver::evolve(op, u0);
  const solver::MassReport mass = solver::mass_conservation_check(op, u0);
  {
    std::ofstream os = open(out / "trajectory.csv");
    solver::write_csv(u, os);
  }
  {
    std::ofstream os = open(out / "solution.bin");
    solver::write_binary(u, os);
  }
  std::ofstream os = open(out / "mass.csv");
  os << "t,integral\n";
  os.precision(17);
  for (std::size_t n = 0; n < g->nt(); ++n) os << g->t()[n] << ',' << mass.integrals[n] << '\n';
  summary.push_back("nodes=" + std::to_string(g->nx()) + ", modes=" + std::to_string(g->n_modes()) +
                    ", steps=" + std::to_string((g->nt() - 1) * g->substeps()));
  summary.push_back("mass_drift=" + fmt("%.3e", mass.max_drift) + ", scheme_drift=" + fmt("%.3e", mass.scheme_drift));
}

void schauder_bench(const RunConfig& cfg, const fs::path& out, Summary& summary, json& results) {
  const geometry::PhiModel model = model_of(cfg);
  const holder::SamplerPolicy pol = sampler_of(cfg);
  schauder::EnsembleSpec es;
  es.n_functions = static_cast<int>(integer(cfg, "ensemble", "n_functions"));
  es.roughness = number(cfg, "ensemble", "roughness");
  es.seed = *cfg.seed;
  es.space = {0, number(cfg, "ensemble", "alpha"), number(cfg, "ensemble", "gamma")};
  es.validate();
  es.space.validate();
  const std::string variant = value(cfg, "schauder", "variant");
  if (variant != "mapping") schauder::time_weight_variant_from_string(variant);
  const int levels = flag(cfg, "schauder", "refine") ? 2 : 1;
  const holder::WeightedSpaceSpec out_spec{2, es.space.alpha, es.space.gamma};

  json level_reports = json::array();
  std::vector<double> trend;
  double t_min = 0.0;
  std::ofstream ladder;
  if (variant != "mapping") {
    ladder = open(out / "ladder.csv");
    ladder << "level,t,value\n";
    ladder.precision(17);
  }
  for (int level = 0; level < levels; ++level) {
    const GridPtr g = grid_of(cfg, model, level);
    const solver::HeatOperator op = solver::discretize(model, g);
    if (level == 0) t_min = 10 * op.dt();
    const auto ens = schauder::generate_ensemble(g, es, pol);
    schauder::MappingReport rep;
    if (variant == "mapping") {
      rep = schauder::mapping_bound_check(op, ens, es.space, out_spec, pol);
    } else {
      rep = schauder::time_weight_check(op, ens, schauder::time_weight_variant_from_string(variant), es.space, pol,
                                        t_min);
      for (std::size_t l = 0; l < rep.t_ladder.size(); ++l) {
        ladder << level << ',' << rep.t_ladder[l] << ',' << rep.ladder_values[l] << '\n';
      }
    }
    trend.push_back(rep.max_ratio);
    std::ofstream os = open(out / ("ratios_level" + std::to_string(level) + ".csv"));
    schauder::write_ratios_csv(rep, os);
    json j = schauder::report_json(rep);
    j["grid"] = {{"nx", g->nx()}, {"n_modes", g->n_modes()}, {"nt", g->nt()}, {"dt", op.dt()}};
    level_reports.push_back(j);
    std::string line = "level " + std::to_string(level) + ": max_ratio=" + fmt("%.4g", rep.max_ratio);
    if (variant != "mapping") line += ", slope=" + fmt("%.4g", rep.t_scaling_slope);
    if (variant == "mapping" && es.space.gamma != 0.0) {
      line += ", weight_invariance_defect=" + fmt("%.3g", rep.weight_invariance_defect);
    }
    summary.push_back(line);
  }
  results["variant"] = variant;
  results["levels"] = level_reports;
  results["refinement_trend"] = trend;
  if (trend.size() == 2 && trend[0] > 0.0) {
    summary.push_back("refinement growth=" + fmt("%.4g", trend[1] / trend[0]));
  }
  std::ofstream os = open(out / "report.json");
  os << results.dump(2) << '\n';
}

bool picard_solve(const RunConfig& cfg, const fs::path& out, Summary& summary, json& results) {
  const geometry::PhiModel model = model_of(cfg);
  const holder::SamplerPolicy pol = sampler_of(cfg);
  const double drift = number(cfg, "rhs", "drift");
  const double quad = number(cfg, "rhs", "quadratic");
  const double fraction = number(cfg, "rhs", "forcing_fraction");
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ConfigError("rhs.forcing_fraction must lie in [0, 1)");
  const picard::RhsKind kind = picard::rhs_kind_from_string(value(cfg, "rhs", "kind"));
  if (kind == picard::RhsKind::Custom) throw ConfigError("rhs.kind: custom maps are not configurable");

  picard::CalibrationOptions co;
  co.horizon = number(cfg, "grid", "horizon");
  co.space = {static_cast<int>(integer(cfg, "picard", "k", 2)), number(cfg, "picard", "alpha"),
              number(cfg, "picard", "gamma")};
  co.space.validate();
  co.policy = pol;
  co.ensemble.n_functions = static_cast<int>(integer(cfg, "picard", "opnorm_functions"));
  co.ensemble.seed = *cfg.seed;
  co.ensemble.roughness = co.space.alpha;
  co.ensemble.validate();
  co.lipschitz_pairs = static_cast<int>(integer(cfg, "picard", "lipschitz_pairs", 1));
  co.seed = *cfg.seed;
  co.max_rounds = static_cast<int>(integer(cfg, "picard", "max_rounds", 1));
  picard::PicardConfig pc;
  pc.tol = number(cfg, "picard", "tol");
  pc.max_iter = static_cast<int>(integer(cfg, "picard", "max_iter", 1));
  pc.space = co.space;
  pc.policy = pol;

  auto make = [&](double drift_, double quad_, std::optional<Field> ell) {
    switch (kind) {
      case picard::RhsKind::AffineForcing: return picard::SemilinearRHS::affine_forcing(std::move(ell), drift_);
      case picard::RhsKind::QuadraticZero: return picard::SemilinearRHS::quadratic_zero(quad_);
      default: return picard::SemilinearRHS::combined(std::move(ell), drift_, quad_);
    }
  };
  const picard::Calibration cal =
      picard::calibrate(model, [&](double T) { return grid_of(cfg, model, 0, T); }, make(drift, quad, std::nullopt), co);
  const solver::HeatOperator op = solver::discretize(model, cal.grid);
  std::optional<Field> ell;
  if (kind != picard::RhsKind::QuadraticZero && fraction > 0.0) {
    Field shape = project(cal.grid, [](double x, std::span<const double> y, std::span<const double> z, double t) {
      double a = 1.0;
      if (!y.empty()) a += 0.5 * std::cos(y[0]);
      if (!z.empty()) a += 0.3 * std::sin(z[0]);
      return x * x * a * (1.0 + t);
    });
    ell = picard::scale_forcing(op, shape.factored(co.space.gamma), fraction * cal.eta, co.space, pol);
  }
  picard::SemilinearRHS rhs = make(drift, quad, ell);
  rhs.C_eta = cal.C_eta;
  rhs.C_eta_1 = cal.constants.C_eta_1;
  rhs.C_eta_2 = cal.constants.C_eta_2;
  pc.eta = cal.eta;
  pc.T_prime = cal.T_prime;
  pc.opnorm = cal.opnorm;
  const picard::PicardResult res = picard::picard_solve(op, rhs, pc);
  const picard::ResidualReport rep = picard::verify_solution(res.solution, rhs, op);

  results = picard::result_json(res);
  results["constants"] = {{"opnorm", cal.opnorm},   {"C_eta", cal.C_eta}, {"C_eta_1", cal.constants.C_eta_1},
                          {"C_eta_2", cal.constants.C_eta_2}, {"eta", cal.eta},     {"T_prime", cal.T_prime},
                          {"calibration_rounds", cal.rounds}};
  results["rhs"] = picard::to_string(kind);
  results["strong_residual"] = rep.strong_residual;
  results["initial_norm"] = rep.initial_norm;
  {
    std::ofstream os = open(out / "history.json");
    os << results.dump(2) << '\n';
  }
  std::ofstream os = open(out / "solution.bin");
  solver::write_binary(res.solution, os);

  summary.push_back("eta=" + fmt("%.4g", cal.eta) + ", T_prime=" + fmt("%.4g", cal.T_prime) +
                    ", opnorm=" + fmt("%.4g", cal.opnorm) + ", C_eta=" + fmt("%.4g", cal.C_eta));
  std::string line = "converged=" + std::string(res.converged ? "true" : "false") +
                     ", iterations=" + std::to_string(res.iterations) +
                     ", fixed_point_residual=" + fmt("%.3e", res.fixed_point_residual);
  if (!res.contraction_factors.empty()) line += ", last_contraction=" + fmt("%.4f", res.contraction_factors.back());
  summary.push_back(line);
  summary.push_back("strong_residual=" + fmt("%.3e", rep.strong_residual));
  return res.converged;
}

void heatspace_sample(const RunConfig& cfg, const fs::path& out, Summary& summary) {
  const geometry::PhiModel model = model_of(cfg);
  heatspace::DecayModel decay;
  const std::string d = value(cfg, "heatspace", "decay");
  if (d == "power") {
    decay.kind = heatspace::DecayModel::Kind::Power;
  } else if (d != "exponential") {
    throw ConfigError("heatspace.decay: expected exponential or power, got '" + d + "'");
  }
  decay.power = static_cast<int>(integer(cfg, "heatspace", "power", 1));
  heatspace::RegimeThresholds th;
  th.cutoff = number(cfg, "heatspace", "cutoff");
  th.ball_radius = number(cfg, "heatspace", "ball_radius");
  if (!(th.cutoff > 0.0) || !(th.ball_radius > 0.0)) throw ConfigError("heatspace thresholds must be positive");
  const int per = static_cast<int>(integer(cfg, "heatspace", "per_regime", 1));
  const auto rows = heatspace::sample_charts(model.b, model.f, per, *cfg.seed, decay, th);
  std::ofstream os = open(out / "charts.csv");
  heatspace::write_charts_csv(rows, os);
  summary.push_back("samples=" + std::to_string(rows.size()) + " (" + std::to_string(per) + " per regime)");
}

json manifest(const RunConfig& cfg) {
  json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["subcommand"] = cfg.subcommand;
  j["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
  j["output"] = cfg.output_dir;
  j["threads"] = cfg.threads;
  j["config"] = cfg.sections;
  j["defaults_applied"] = cfg.defaults_applied;
  return j;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"geometry-report", "stochastic-check", "heat-solve",
                                                 "schauder-bench",  "picard-solve",     "heatspace-sample"};
  return names;
}

RunConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }

  RunConfig cfg;
  std::map<std::string, Section> raw;
  std::optional<std::string> sub, seed, output;
  const auto& defaults = section_defaults();
  for (const auto& [name, node] : tree) {
    const bool is_section = !node.empty() || (node.data().empty() && defaults.count(name));
    if (!is_section) {
      if (name == "subcommand") {
        sub = node.data();
      } else if (name == "seed") {
        seed = node.data();
      } else if (name == "output") {
        output = node.data();
      } else {
        throw ConfigError("unknown key '" + name + "'");
      }
      continue;
    }
    Section& s = raw[name];
    for (const auto& [key, leaf] : node) {
      if (!leaf.empty()) throw ConfigError("unknown key '" + name + "." + key + "'");
      s[key] = leaf.data();
    }
  }
  if (!sub || sub->empty()) throw ConfigError("missing required key 'subcommand'");
  const auto& table = subcommand_sections();
  const auto it = table.find(*sub);
  if (it == table.end()) {
    std::string names;
    for (const auto& n : subcommands()) names += (names.empty() ? "" : ", ") + n;
    throw ConfigError("subcommand: unknown value '" + *sub + "' (expected one of " + names + ")");
  }
  cfg.subcommand = *sub;
  const std::set<std::string> allowed(it->second.begin(), it->second.end());

  for (const auto& [name, s] : raw) {
    if (!allowed.count(name)) {
      const std::string key = s.empty() ? name : name + "." + s.begin()->first;
      throw ConfigError("unknown key '" + key + "' for subcommand " + cfg.subcommand);
    }
    for (const auto& [key, v] : s) {
      const auto& keys = defaults.at(name);
      const bool known = std::any_of(keys.begin(), keys.end(), [&](const auto& kv) { return kv.first == key; });
      const bool model_extra = name == "model" && (key == "m" || key.rfind("h_", 0) == 0);
      if (!known && !model_extra) throw ConfigError("unknown key '" + name + "." + key + "'");
    }
  }

  for (const std::string& name : it->second) {
    Section s = raw.count(name) ? raw.at(name) : Section{};
    if (name == "model") {
      Section given = s;
      if (!s.count("kind")) {
        s["kind"] = "ExactProduct";
        cfg.defaults_applied.push_back("model.kind");
      }
      const bool radial = s.at("kind") == "EuclideanRadial";
      for (const auto& [key, def] : defaults.at("model")) {
        if (s.count(key) || (radial && (key == "b" || key == "f"))) continue;
        s[key] = def;
        cfg.defaults_applied.push_back("model." + key);
      }
      cfg.sections["model"] = geometry::to_key_values(geometry::model_from_key_values(s));
      continue;
    }
    for (const auto& [key, def] : defaults.at(name)) {
      if (s.count(key)) continue;
      s[key] = def;
      cfg.defaults_applied.push_back(name + "." + key);
    }
    cfg.sections[name] = s;
  }

  if (seed) {
    try {
      std::size_t pos = 0;
      if (seed->empty() || (*seed)[0] == '-') throw std::invalid_argument(*seed);
      cfg.seed = std::stoull(*seed, &pos);
      if (pos != seed->size()) throw std::invalid_argument(*seed);
    } catch (const std::exception&) {
      throw ConfigError("seed: expected a nonnegative integer, got '" + *seed + "'");
    }
  } else if (needs_seed(cfg.subcommand)) {
    throw ConfigError("missing required key 'seed' for subcommand " + cfg.subcommand);
  }
  cfg.output_dir = output ? *output : "phi_heat_out";
  if (!output) cfg.defaults_applied.push_back("output");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_config(in);
}

int run(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
  try {
    set_thread_cap(cfg.threads);
    const fs::path out(cfg.output_dir);
    fs::create_directories(out);
    {
      std::ofstream os = open(out / "manifest.json");
      os << manifest(cfg).dump(2) << '\n';
    }
    Summary summary;
    json results;
    bool ok = true;
    if (cfg.subcommand == "geometry-report") {
      geometry_report(cfg, out, summary);
    } else if (cfg.subcommand == "stochastic-check") {
      stochastic_check(cfg, out, summary);
    } else if (cfg.subcommand == "heat-solve") {
      heat_solve(cfg, out, summary);
    } else if (cfg.subcommand == "schauder-bench") {
      schauder_bench(cfg, out, summary, results);
    } else if (cfg.subcommand == "picard-solve") {
      ok = picard_solve(cfg, out, summary, results);
    } else if (cfg.subcommand == "heatspace-sample") {
      heatspace_sample(cfg, out, summary);
    } else {
      throw ConfigError("subcommand: unknown value '" + cfg.subcommand + "'");
    }
    std::ofstream os = open(out / "summary.txt");
    os << cfg.subcommand << '\n';
    log << cfg.subcommand << '\n';
    for (const std::string& line : summary) {
      os << line << '\n';
      log << line << '\n';
    }
    if (!ok) {
      err << kToolName << ": fixed-point iteration did not converge\n";
      return kExitNumerical;
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << kToolName << ": invalid configuration: " << e.what() << '\n';
    return kExitValidation;
  } catch (const DomainError& e) {
    err << kToolName << ": invalid configuration: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << kToolName << ": numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}

int run_file(const std::string& path, const std::optional<std::string>& out_override, unsigned threads,
             std::ostream& log, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = load_config(path);
  } catch (const Error& e) {
    err << kToolName << ": invalid configuration: " << e.what() << '\n';
    return kExitValidation;
  }
  if (out_override) {
    cfg.output_dir = *out_override;
  } else if (const char* env = std::getenv("PHI_HEAT_OUT"); env && *env) {
    cfg.output_dir = env;
  }
  cfg.threads = threads;
  return run(cfg, log, err);
}

}  // namespace phiheat::cli
