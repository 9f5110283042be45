#include "phiheat/picard.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "phiheat/errors.hpp"

namespace phiheat::picard {

namespace {

constexpr double kSafety = 1.5;

Field x2_dx(const Field& u) {
  holder::PhiMultiIndex idx;
  idx.q = 1;
  idx.beta.assign(u.grid().b(), 0);
  idx.a.assign(u.grid().f(), 0);
  return holder::phi_derivative(u, idx);
}

FieldMap affine_map(std::optional<Field> ell, double drift) {
  return [ell = std::move(ell), drift](const Field& u) {
    Field out = drift * x2_dx(u);
    if (ell) {
      if (ell->data().size() != u.data().size()) throw ConfigError("forcing grid does not match the iterate");
      out += ell->materialized();
    }
    return out.factored(u.gamma());
  };
}

FieldMap quadratic_map(double quadratic) {
  return [quadratic](const Field& u) { return (quadratic * product(u, u)).factored(u.gamma()); };
}

double norm(const Field& u, const WeightedSpaceSpec& spec, const SamplerPolicy& policy) {
  return holder::weighted_holder_norm(u, spec, policy).total;
}

WeightedSpaceSpec lowered(const WeightedSpaceSpec& space) {
  if (space.k < 2) throw ConfigError("solution space needs k >= 2");
  return {space.k - 2, space.alpha, space.gamma};
}

double physical_sup(const Field& u, std::size_t n_first, std::size_t n_last, std::size_t i_first,
                    std::size_t i_last) {
  const PhysicalField v = synthesize(u.materialized(), holder::default_angle_count(u.grid()));
  double worst = 0.0;
  for (std::size_t n = n_first; n <= n_last; ++n) {
    for (std::size_t i = i_first; i <= i_last; ++i) {
      for (std::size_t j = 0; j < v.n_points; ++j) worst = std::max(worst, std::abs(v(n, i, j)));
    }
  }
  return worst;
}

}  // namespace

std::string to_string(RhsKind kind) {
  switch (kind) {
    case RhsKind::AffineForcing: return "affine_forcing";
    case RhsKind::QuadraticZero: return "quadratic_zero";
    case RhsKind::Combined: return "combined";
    case RhsKind::Custom: return "custom";
  }
  return "custom";
}

RhsKind rhs_kind_from_string(const std::string& name) {
  for (RhsKind k : {RhsKind::AffineForcing, RhsKind::QuadraticZero, RhsKind::Combined, RhsKind::Custom}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown rhs kind '" + name + "'");
}

Field SemilinearRHS::operator()(const Field& u) const {
  Field out(u.grid_ptr(), u.gamma());
  if (F1) out += F1(u);
  if (F2) out += F2(u);
  return out;
}

SemilinearRHS SemilinearRHS::affine_forcing(std::optional<Field> ell, double drift) {
  SemilinearRHS r;
  r.kind = RhsKind::AffineForcing;
  r.F1 = affine_map(std::move(ell), drift);
  return r;
}

SemilinearRHS SemilinearRHS::quadratic_zero(double quadratic) {
  SemilinearRHS r;
  r.kind = RhsKind::QuadraticZero;
  r.F2 = quadratic_map(quadratic);
  return r;
}

SemilinearRHS SemilinearRHS::combined(std::optional<Field> ell, double drift, double quadratic) {
  SemilinearRHS r;
  r.kind = RhsKind::Combined;
  r.F1 = affine_map(std::move(ell), drift);
  r.F2 = quadratic_map(quadratic);
  return r;
}

SemilinearRHS SemilinearRHS::zero() {
  SemilinearRHS r;
  r.kind = RhsKind::Custom;
  return r;
}

ConstantEstimate estimate_constants(const SemilinearRHS& rhs, const GridPtr& grid, double eta,
                                    const WeightedSpaceSpec& solution_space, const SamplerPolicy& policy,
                                    int n_pairs, std::uint64_t seed) {
  if (!(eta > 0.0)) throw DomainError("ball radius must be positive");
  if (n_pairs < 1) throw ConfigError("need at least one pair");
  const WeightedSpaceSpec target = lowered(solution_space);

  schauder::EnsembleSpec es;
  es.n_functions = 20;
  es.roughness = 0.99;
  es.seed = seed;
  es.space = solution_space;
  const std::vector<Field> base = schauder::generate_ensemble(grid, es, policy);

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<std::size_t> pick(0, base.size() - 1);
  std::uniform_real_distribution<double> radius(0.0, 1.0);
  auto zero = [&] { return Field(grid, solution_space.gamma); };

  ConstantEstimate est;
  double q_full = 0.0, q1 = 0.0, q2 = 0.0;
  for (int p = 0; p < n_pairs; ++p) {
    const std::size_t i = pick(rng), j = pick(rng);
    const double r1 = eta * (1.0 - radius(rng)), r2 = eta * (1.0 - radius(rng));
    const Field u = r1 * base[i];
    const Field v = r2 * base[j];
    const double d = norm(u - v, solution_space, policy);
    if (!(d > 0.0)) continue;
    ++est.n_pairs;
    const Field f1u = rhs.F1 ? rhs.F1(u) : zero();
    const Field f1v = rhs.F1 ? rhs.F1(v) : zero();
    const Field f2u = rhs.F2 ? rhs.F2(u) : zero();
    const Field f2v = rhs.F2 ? rhs.F2(v) : zero();
    q1 = std::max(q1, norm(f1u - f1v, target, policy) / d);
    q2 = std::max(q2, norm(f2u, target, policy) / (r1 * r1));
    q_full = std::max(q_full, norm((f1u + f2u) - (f1v + f2v), target, policy) / d);
  }
  est.max_quotient = q_full;
  est.C_eta_1 = kSafety * q1;
  est.C_eta_2 = kSafety * q2;
  est.C_eta = kSafety * q_full;
  return est;
}

std::pair<double, double> choose_constants(double opnorm, double C_eta) {
  if (!(opnorm > 0.0) || !(C_eta > 0.0) || !std::isfinite(opnorm) || !std::isfinite(C_eta)) {
    throw DomainError("choose_constants needs positive finite opnorm and C_eta");
  }
  const double c = 1.0 / (3.0 * opnorm * C_eta);
  return {c, c * c};
}

void PicardConfig::validate(double C_eta) const {
  space.validate();
  lowered(space);
  if (!(eta > 0.0)) throw ConfigError("eta must be positive");
  if (!(T_prime > 0.0)) throw ConfigError("T_prime must be positive");
  if (!(tol > 0.0)) throw ConfigError("tol must be positive");
  if (max_iter < 1) throw ConfigError("max_iter must be at least 1");
  const auto [c, c2] = choose_constants(opnorm, C_eta);
  const double slack = 1.0 + 1e-12;
  if (eta > c * slack) {
    std::ostringstream os;
    os << "eta = " << eta << " exceeds C = " << c;
    throw ConfigError(os.str());
  }
  if (T_prime > c2 * slack) {
    std::ostringstream os;
    os << "T_prime = " << T_prime << " exceeds C^2 = " << c2;
    throw ConfigError(os.str());
  }
}

PicardResult picard_solve(const solver::HeatOperator& op, const SemilinearRHS& rhs, const PicardConfig& cfg,
                          const std::optional<Field>& u0) {
  cfg.validate(rhs.C_eta);
  const Grid& g = op.grid();
  if (std::abs(g.horizon() - cfg.T_prime) > 1e-12 * cfg.T_prime) {
    throw ConfigError("operator horizon differs from T_prime");
  }
  const double gamma = cfg.space.gamma;
  Field u(op.grid_ptr(), gamma);
  if (u0) {
    if (u0->data().size() != u.data().size()) throw ConfigError("starting point is on a different grid");
    u = u0->factored(gamma);
    for (std::size_t m = 0; m < g.n_modes(); ++m) {
      for (const cplx& c : u.profile(0, m)) {
        if (c != cplx{}) throw ConfigError("starting point must vanish at t = 0");
      }
    }
  }

  PicardResult res{Field(op.grid_ptr(), gamma)};
  auto escape = [&](double value, int iteration) {
    if (value > cfg.eta * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "iterate " << iteration << " has norm " << value << " > eta = " << cfg.eta;
      throw BallEscapeError(os.str());
    }
  };
  res.history.push_back(norm(u, cfg.space, cfg.policy));
  escape(res.history.back(), 0);

  int streak = 0;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    Field next = solver::heat_convolve_weighted(op, rhs(u).factored(gamma));
    res.iterations = it;
    res.history.push_back(norm(next, cfg.space, cfg.policy));
    escape(res.history.back(), it);
    const double d = norm(next - u, cfg.space, cfg.policy);
    if (!res.increments.empty() && res.increments.back() > 0.0) {
      const double factor = d / res.increments.back();
      res.contraction_factors.push_back(factor);
      streak = factor >= 1.0 ? streak + 1 : 0;
      if (streak >= 3) {
        std::ostringstream os;
        os << "no contraction for 3 consecutive steps (last factor " << factor << ")";
        throw DivergenceError(os.str());
      }
    }
    res.increments.push_back(d);
    u = std::move(next);
    if (d < cfg.tol) {
      res.converged = true;
      break;
    }
  }
  res.solution = std::move(u);
  res.fixed_point_residual = res.increments.empty() ? 0.0 : res.increments.back();
  return res;
}

Field residual_field(const Field& u, const SemilinearRHS& rhs, const solver::HeatOperator& op) {
  const Grid& g = op.grid();
  if (g.nt() < 3) throw ResolutionError("residual needs at least 3 time nodes");
  const Field v = u.materialized();
  Field r = op.apply(v);
  const double h = g.output_dt();
  const std::size_t last = g.nt() - 1;
  for (std::size_t n = 0; n <= last; ++n) {
    for (std::size_t m = 0; m < g.n_modes(); ++m) {
      auto out = r.profile(n, m);
      for (std::size_t i = 0; i < g.nx(); ++i) {
        cplx dt;
        if (n == 0) {
          dt = (-3.0 * v.at(0, m, i) + 4.0 * v.at(1, m, i) - v.at(2, m, i)) / (2 * h);
        } else if (n == last) {
          dt = (3.0 * v.at(n, m, i) - 4.0 * v.at(n - 1, m, i) + v.at(n - 2, m, i)) / (2 * h);
        } else {
          dt = (v.at(n + 1, m, i) - v.at(n - 1, m, i)) / (2 * h);
        }
        out[i] += dt;
      }
    }
  }
  r -= rhs(u).materialized();
  return r;
}

ResidualReport verify_solution(const Field& u, const SemilinearRHS& rhs, const solver::HeatOperator& op) {
  const Grid& g = op.grid();
  ResidualReport rep;
  rep.strong_residual = physical_sup(residual_field(u, rhs, op), 1, g.nt() - 2, 1, g.nx() - 2);
  rep.initial_norm = physical_sup(u, 0, 0, 0, g.nx() - 1);
  return rep;
}

Field scale_forcing(const solver::HeatOperator& op, const Field& ell, double target, const WeightedSpaceSpec& space,
                    const SamplerPolicy& policy) {
  const double n = norm(solver::heat_convolve_weighted(op, ell), space, policy);
  if (!(n > 0.0)) throw DegenerateInputError("forcing has zero heat potential");
  return (target / n) * ell;
}

Calibration calibrate(const geometry::PhiModel& model, const std::function<GridPtr(double)>& make_grid,
                      const SemilinearRHS& rhs, const CalibrationOptions& options) {
  const WeightedSpaceSpec in = lowered(options.space);
  schauder::EnsembleSpec ens = options.ensemble;
  ens.space = in;
  Calibration cal;
  double eta = 1.0;
  double horizon = options.horizon;
  for (int round = 1; round <= options.max_rounds; ++round) {
    const GridPtr grid = make_grid(horizon);
    const solver::HeatOperator op = solver::discretize(model, grid);
    const auto members = schauder::generate_ensemble(grid, ens, options.policy);
    const double opnorm =
        schauder::mapping_bound_check(op, members, in, options.space, options.policy).max_ratio;
    const ConstantEstimate ce =
        estimate_constants(rhs, grid, eta, options.space, options.policy, options.lipschitz_pairs, options.seed);
    const auto [c, c2] = choose_constants(opnorm, ce.C_eta);
    cal = {opnorm, ce.C_eta, ce, eta, grid->horizon(), round, grid};
    if (eta <= c && grid->horizon() <= c2) return cal;
    eta = std::min(eta, c);
    horizon = std::min(horizon, c2);
  }
  throw NumericalError("constants did not settle within the calibration rounds");
}

nlohmann::json result_json(const PicardResult& result) {
  nlohmann::json j;
  j["iterations"] = result.iterations;
  j["converged"] = result.converged;
  j["fixed_point_residual"] = result.fixed_point_residual;
  j["history"] = result.history;
  j["increments"] = result.increments;
  j["contraction_factors"] = result.contraction_factors;
  return j;
}

}  // namespace phiheat::picard
