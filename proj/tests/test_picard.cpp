#include <doctest.h>

#include <cmath>

#include "phiheat/errors.hpp"
#include "phiheat/picard.hpp"

using namespace phiheat;
using namespace phiheat::picard;

namespace {

const geometry::PhiModel kModel = geometry::PhiModel::exact_product(1, 1, 0.05, 1.0);

GridPtr make_grid(double horizon, int nx = 32, int nt = 16) {
  return Grid::make(1, 1, Grid::log_spaced(0.05, 1.0, nx), 1, 1, horizon, nt, 2);
}

SamplerPolicy policy() {
  SamplerPolicy p;
  p.n_pairs = 4000;
  p.seed = 3;
  return p;
}

Field forcing(const GridPtr& g, double gamma = 0.0) {
  Field ell = project(g, [](double x, std::span<const double> y, std::span<const double> z, double t) {
    return x * x * (1.0 + 0.5 * std::cos(y[0]) + 0.3 * std::sin(z[0])) * (1.0 + t);
  });
  return ell.factored(gamma);
}

PicardConfig config_for(double eta, double horizon, double opnorm, double gamma = 0.0) {
  PicardConfig cfg;
  cfg.eta = eta;
  cfg.T_prime = horizon;
  cfg.opnorm = opnorm;
  cfg.space = {2, 0.5, gamma};
  cfg.policy = policy();
  return cfg;
}

double sup_norm(const Field& u) {
  double worst = 0.0;
  for (const cplx& c : u.data()) worst = std::max(worst, std::abs(c));
  return worst;
}

Field times_t(const Field& u) {
  Field out = u;
  for (std::size_t n = 0; n < u.grid().nt(); ++n) {
    for (std::size_t m = 0; m < u.grid().n_modes(); ++m) {
      for (cplx& c : out.profile(n, m)) c *= u.grid().t()[n] / u.grid().horizon();
    }
  }
  return out;
}

struct Calibrated {
  Calibration cal;
  solver::HeatOperator op;
  SemilinearRHS rhs;
  PicardConfig cfg;
};

Calibrated calibrated_combined(double drift, double quadratic, double gamma) {
  CalibrationOptions co;
  co.space = {2, 0.5, gamma};
  co.policy = policy();
  co.lipschitz_pairs = 30;
  const SemilinearRHS shape = SemilinearRHS::combined(std::nullopt, drift, quadratic);
  Calibration cal = calibrate(kModel, [](double T) { return make_grid(T); }, shape, co);
  solver::HeatOperator op = solver::discretize(kModel, cal.grid);
  const Field ell = scale_forcing(op, forcing(cal.grid, gamma), cal.eta / 3, co.space, co.policy);
  SemilinearRHS rhs = SemilinearRHS::combined(ell, drift, quadratic);
  rhs.C_eta = cal.C_eta;
  PicardConfig cfg = config_for(cal.eta, cal.T_prime, cal.opnorm, gamma);
  return {cal, std::move(op), std::move(rhs), cfg};
}

}  // namespace

TEST_CASE("choose_constants") {
  auto [c1, t1] = choose_constants(1.0, 1.0);
  CHECK(c1 == doctest::Approx(1.0 / 3));
  CHECK(t1 == doctest::Approx(1.0 / 9));
  auto [c2, t2] = choose_constants(2.0, 1.0);
  CHECK(c2 == doctest::Approx(1.0 / 6));
  CHECK(t2 == doctest::Approx(1.0 / 36));
  auto [c3, t3] = choose_constants(1.7, 0.4);
  auto [c4, t4] = choose_constants(1.7, 0.8);
  CHECK(c4 == doctest::Approx(c3 / 2));
  CHECK(t4 == doctest::Approx(t3 / 4));
  CHECK_THROWS_AS(choose_constants(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(choose_constants(1.0, -1.0), DomainError);
}

TEST_CASE("config invariants") {
  PicardConfig cfg = config_for(1.0 / 3, 1.0 / 9, 1.0);
  CHECK_NOTHROW(cfg.validate(1.0));
  cfg.eta = 0.34;
  CHECK_THROWS_AS(cfg.validate(1.0), ConfigError);
  cfg.eta = 0.3;
  cfg.T_prime = 0.12;
  CHECK_THROWS_AS(cfg.validate(1.0), ConfigError);
  cfg.T_prime = 0.1;
  cfg.space.k = 1;
  CHECK_THROWS_AS(cfg.validate(1.0), ConfigError);

  const auto g = make_grid(0.1);
  const auto op = solver::discretize(kModel, g);
  SemilinearRHS zero = SemilinearRHS::zero();
  zero.C_eta = 1.0;
  PicardConfig off = config_for(0.3, 0.05, 1.0);
  CHECK_THROWS_AS(picard_solve(op, zero, off), ConfigError);
  PicardConfig ok = config_for(0.3, 0.1, 1.0);
  Field start(g);
  start.at(0, g->zero_mode(), 3) = 1e-3;
  CHECK_THROWS_AS(picard_solve(op, zero, ok, start), ConfigError);
  CHECK(rhs_kind_from_string("combined") == RhsKind::Combined);
  CHECK(to_string(RhsKind::QuadraticZero) == "quadratic_zero");
  CHECK_THROWS_AS(rhs_kind_from_string("yamabe"), ConfigError);
}

TEST_CASE("zero right-hand side stops after one iteration") {
  const auto g = make_grid(0.1);
  const auto op = solver::discretize(kModel, g);
  SemilinearRHS zero = SemilinearRHS::zero();
  zero.C_eta = 1.0;
  const PicardResult r = picard_solve(op, zero, config_for(0.3, 0.1, 1.0));
  CHECK(r.iterations == 1);
  CHECK(r.converged);
  CHECK(sup_norm(r.solution) == 0.0);
  CHECK(r.contraction_factors.empty());
}

TEST_CASE("u-independent forcing is fixed after two iterations") {
  const auto g = make_grid(0.1);
  const auto op = solver::discretize(kModel, g);
  const Field ell = scale_forcing(op, forcing(g), 0.1, {2, 0.5, 0.0}, policy());
  SemilinearRHS rhs = SemilinearRHS::affine_forcing(ell, 0.0);
  rhs.C_eta = 1.0;
  const PicardResult r = picard_solve(op, rhs, config_for(0.3, 0.1, 1.0));
  CHECK(r.iterations == 2);
  CHECK(r.converged);
  CHECK(r.increments[1] == 0.0);
  CHECK(r.history[1] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(r.solution.data() == solver::heat_convolve(op, ell).data());
}

TEST_CASE("ball escape and divergence") {
  const auto g = make_grid(0.1);
  const auto op = solver::discretize(kModel, g);
  SemilinearRHS big = SemilinearRHS::affine_forcing(scale_forcing(op, forcing(g), 0.6, {2, 0.5, 0.0}, policy()), 0.0);
  big.C_eta = 1.0;
  CHECK_THROWS_AS(picard_solve(op, big, config_for(0.3, 0.1, 1.0)), BallEscapeError);

  // Psi(u) = H(200 u) grows every step, far from leaving the ball
  SemilinearRHS grow;
  grow.F1 = [](const Field& u) { return 200.0 * u; };
  grow.C_eta = 1.0;
  const Field start = 1e-12 * times_t(forcing(g));
  PicardConfig strict = config_for(0.3, 0.1, 1.0);
  strict.tol = 1e-30;
  CHECK_THROWS_AS(picard_solve(op, grow, strict, start), DivergenceError);
}

TEST_CASE("empirical constants of the catalog maps") {
  const auto g = make_grid(0.2);
  const WeightedSpaceSpec space{2, 0.5, 0.0};
  const ConstantEstimate affine =
      estimate_constants(SemilinearRHS::affine_forcing(forcing(g), 0.4), g, 0.5, space, policy(), 20, 4);
  CHECK(affine.n_pairs == 20);
  CHECK(affine.C_eta_2 == 0.0);
  CHECK(affine.C_eta == doctest::Approx(affine.C_eta_1).epsilon(1e-9));
  // the alpha-norm of x^2 d_x w is one of the terms of ||w||_{2, alpha}
  CHECK(affine.C_eta > 0.0);
  CHECK(affine.C_eta <= 1.5 * 0.4 * (1 + 1e-12));

  const ConstantEstimate q1 = estimate_constants(SemilinearRHS::quadratic_zero(1.0), g, 0.5, space, policy(), 20, 4);
  const ConstantEstimate q2 = estimate_constants(SemilinearRHS::quadratic_zero(2.0), g, 0.5, space, policy(), 20, 4);
  CHECK(q1.C_eta_1 == 0.0);
  CHECK(q1.C_eta_2 > 0.0);
  CHECK(q2.C_eta_2 == doctest::Approx(2 * q1.C_eta_2).epsilon(1e-9));
  CHECK(q2.C_eta == doctest::Approx(2 * q1.C_eta).epsilon(1e-9));
  const ConstantEstimate q_small = estimate_constants(SemilinearRHS::quadratic_zero(1.0), g, 0.25, space, policy(), 20, 4);
  // u^2 - v^2 scales with the square of the ball radius
  CHECK(q_small.C_eta == doctest::Approx(0.5 * q1.C_eta).epsilon(1e-9));
}

TEST_CASE("combined right-hand side contracts with calibrated constants") {
  for (double gamma : {0.0, 1.0}) {
    CAPTURE(gamma);
    Calibrated c = calibrated_combined(5.0, 20.0, gamma);
    const auto [cc, cc2] = choose_constants(c.cal.opnorm, c.cal.C_eta);
    CHECK(c.cal.eta <= cc);
    CHECK(c.cal.T_prime <= cc2);

    const PicardResult r = picard_solve(c.op, c.rhs, c.cfg);
    CHECK(r.converged);
    CHECK(r.fixed_point_residual < c.cfg.tol);
    REQUIRE(r.contraction_factors.size() >= 2);
    for (std::size_t i = r.contraction_factors.size() - 2; i < r.contraction_factors.size(); ++i) {
      CHECK(r.contraction_factors[i] <= 2.0 / 3 + 0.05);
    }
    for (double h : r.history) CHECK(h <= c.cal.eta);

    // a second admissible start converges to the same fixed point
    schauder::EnsembleSpec es{20, 0.99, 11, {2, 0.5, gamma}};
    Field start = times_t(schauder::generate_ensemble(c.cal.grid, es, policy())[0]);
    start *= 0.5 * c.cal.eta / holder::weighted_holder_norm(start, c.cfg.space, policy()).total;
    const PicardResult r2 = picard_solve(c.op, c.rhs, c.cfg, start);
    CHECK(r2.converged);
    CHECK(holder::weighted_holder_norm(r.solution - r2.solution, c.cfg.space, policy()).total <= 2 * c.cfg.tol);

    const ResidualReport rep = verify_solution(r.solution, c.rhs, c.op);
    CHECK(rep.initial_norm == 0.0);
    CHECK(rep.strong_residual <= 10 * solver::manufactured_error(c.op));
  }
}

TEST_CASE("strong residual") {
  const auto g = make_grid(0.1);
  const auto op = solver::discretize(kModel, g);
  SemilinearRHS zero = SemilinearRHS::zero();
  const ResidualReport z = verify_solution(Field(g), zero, op);
  CHECK(z.strong_residual == 0.0);
  CHECK(z.initial_norm == 0.0);

  SemilinearRHS affine = SemilinearRHS::affine_forcing(scale_forcing(op, forcing(g), 0.05, {2, 0.5, 0.0}, policy()), 0.5);
  affine.C_eta = 0.5;
  const PicardResult r = picard_solve(op, affine, config_for(0.2, 0.1, 1.0));
  REQUIRE(r.converged);
  const ResidualReport rep = verify_solution(r.solution, affine, op);
  CHECK(rep.strong_residual <= 10 * solver::manufactured_error(op));

  // R(u + w) = R(u) + (D_t + L) w - (F(u + w) - F(u)) with D_t w = 0 for w = 0.1 x
  Field w = project(g, [](double x, std::span<const double>, std::span<const double>, double) { return 0.1 * x; });
  Field delta = op.apply(w);
  delta -= affine(r.solution + w) - affine(r.solution);
  const ResidualReport moved = verify_solution(r.solution + w, affine, op);
  const double d = [&] {
    const PhysicalField v = synthesize(delta, holder::default_angle_count(*g));
    double worst = 0.0;
    for (std::size_t n = 1; n + 1 < g->nt(); ++n) {
      for (std::size_t i = 1; i + 1 < g->nx(); ++i) {
        for (std::size_t j = 0; j < v.n_points; ++j) worst = std::max(worst, std::abs(v(n, i, j)));
      }
    }
    return worst;
  }();
  CHECK(d > 0.0);
  CHECK(moved.strong_residual >= d - rep.strong_residual - 1e-12);
  CHECK(moved.strong_residual <= d + rep.strong_residual + 1e-12);
  CHECK(moved.strong_residual > rep.strong_residual);
}

TEST_CASE("result json") {
  const auto g = make_grid(0.1);
  const auto op = solver::discretize(kModel, g);
  SemilinearRHS zero = SemilinearRHS::zero();
  zero.C_eta = 1.0;
  const auto j = result_json(picard_solve(op, zero, config_for(0.3, 0.1, 1.0)));
  CHECK(j["iterations"] == 1);
  CHECK(j["converged"] == true);
  CHECK(j["history"].size() == 2);
}
