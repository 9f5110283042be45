#include <doctest.h>

#include <cmath>
#include <sstream>

#include "phiheat/errors.hpp"
#include "phiheat/schauder.hpp"

using namespace phiheat;
using namespace phiheat::schauder;

namespace {

struct Setup {
  GridPtr grid;
  solver::HeatOperator op;
};

Setup make_setup(int nx = 32, int nt = 16, int kmax = 1) {
  const auto model = geometry::PhiModel::exact_product(1, 1, 0.05, 1.0);
  auto g = Grid::make(1, 1, Grid::log_spaced(0.05, 1.0, nx), kmax, kmax, 0.5, nt, 2);
  return {g, solver::discretize(model, g)};
}

SamplerPolicy small_policy() {
  SamplerPolicy p;
  p.n_pairs = 4000;
  p.seed = 5;
  return p;
}

EnsembleSpec small_spec(double gamma = 0.0) {
  EnsembleSpec s;
  s.n_functions = 20;
  s.seed = 9;
  s.space = {0, 0.5, gamma};
  return s;
}

Field constant(const GridPtr& g, double c) {
  Field u(g);
  for (std::size_t n = 0; n < g->nt(); ++n) {
    for (std::size_t i = 0; i < g->nx(); ++i) u.at(n, g->zero_mode(), i) = c;
  }
  return u;
}

}  // namespace

TEST_CASE("ensemble spec validation") {
  const Setup s = make_setup();
  EnsembleSpec e = small_spec();
  e.n_functions = 19;
  CHECK_THROWS_AS(generate_ensemble(s.grid, e), ConfigError);
  e = small_spec();
  e.roughness = 1.0;
  CHECK_THROWS_AS(generate_ensemble(s.grid, e), ConfigError);
  e.roughness = 0.0;
  CHECK_THROWS_AS(generate_ensemble(s.grid, e), ConfigError);
}

TEST_CASE("ensembles are deterministic, nested and unit-normalized") {
  const Setup s = make_setup();
  const auto a = generate_ensemble(s.grid, small_spec(), small_policy());
  const auto b = generate_ensemble(s.grid, small_spec(), small_policy());
  EnsembleSpec longer = small_spec();
  longer.n_functions = 24;
  const auto c = generate_ensemble(s.grid, longer, small_policy());
  REQUIRE(a.size() == 20);
  REQUIRE(c.size() == 24);
  for (std::size_t f = 0; f < a.size(); ++f) {
    CHECK(a[f].data() == b[f].data());
    CHECK(a[f].data() == c[f].data());
    CHECK(a[f].hermitian_defect() < 1e-15);
    CHECK(holder::weighted_holder_norm(a[f], {0, 0.5, 0.0}, small_policy()).total ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("weighted ensembles differ exactly by the factor x") {
  const Setup s = make_setup();
  const auto e0 = generate_ensemble(s.grid, small_spec(0.0), small_policy());
  const auto e1 = generate_ensemble(s.grid, small_spec(1.0), small_policy());
  for (std::size_t f = 0; f < e0.size(); ++f) {
    CHECK(e0[f].gamma() == 0.0);
    CHECK(e1[f].gamma() == 1.0);
    CHECK(e1[f].data() == e0[f].data());
    CHECK(e1[f].materialized().data() == multiply_by_power(e0[f], 1.0).data());
    CHECK(holder::weighted_holder_norm(e1[f], {0, 0.5, 1.0}, small_policy()).total ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("alpha-norm estimates of the ensemble settle under sample refinement") {
  const Setup s = make_setup();
  for (double r : {0.5, 0.99}) {
    EnsembleSpec e = small_spec();
    e.roughness = r;
    const auto ens = generate_ensemble(s.grid, e, small_policy());
    SamplerPolicy dense = small_policy();
    dense.n_pairs *= 4;
    for (const Field& u : ens) {
      const double fine = holder::weighted_holder_norm(u, e.space, dense).total;
      CHECK(std::isfinite(fine));
      CHECK(fine >= 1.0 - 1e-12);
      if (r > 0.9) CHECK(fine <= 2.0);
    }
  }
}

TEST_CASE("zero members are excluded") {
  const Setup s = make_setup();
  std::vector<Field> ens{Field(s.grid), constant(s.grid, 1.0)};
  const MappingReport r = mapping_bound_check(s.op, ens, {0, 0.5, 0.0}, {2, 0.5, 0.0}, small_policy());
  CHECK(r.excluded == std::vector<std::size_t>{0});
  CHECK(r.members == std::vector<std::size_t>{1});
  REQUIRE(r.notes.size() == 1);
  CHECK(r.notes[0].find("member 0") != std::string::npos);
  CHECK_THROWS_AS(mapping_bound_check(s.op, ens, {0, 0.5, 0.0}, {2, 0.5, 1.0}), ConfigError);
}

TEST_CASE("constant input maps to t with a computable ratio") {
  const Setup s = make_setup();
  const std::vector<Field> ens{constant(s.grid, 1.0)};
  const MappingReport r = mapping_bound_check(s.op, ens, {0, 0.5, 0.0}, {2, 0.5, 0.0}, small_policy());
  REQUIRE(r.ratios.size() == 1);
  // H1 = t: sup terms |t| <= 0.5 and |d_t t| = 1, one time quotient
  // bounded by 0.5^{1 - alpha/2}; spatial derivatives vanish
  const double sups = 0.5 + 1.0;
  CHECK(r.sup_quotients[0] == doctest::Approx(sups).epsilon(1e-9));
  CHECK(r.ratios[0] >= sups);
  CHECK(r.ratios[0] <= sups + std::pow(0.5, 0.75) + 1e-9);
  CHECK(r.space_quotients[0] < 1e-9);
}

TEST_CASE("mapping report invariants on a rough ensemble") {
  const Setup s = make_setup();
  EnsembleSpec spec = small_spec(1.0);
  spec.n_functions = 24;
  const auto ens = generate_ensemble(s.grid, spec, small_policy());
  const MappingReport full = mapping_bound_check(s.op, ens, {0, 0.5, 1.0}, {2, 0.5, 1.0}, small_policy());
  CHECK(full.weight_invariance_defect == 0.0);
  CHECK(full.ratios.size() == 24);
  for (std::size_t i = 0; i < full.ratios.size(); ++i) {
    CHECK(std::isfinite(full.ratios[i]));
    CHECK(full.ratios[i] > 0.0);
    CHECK(full.mixed_quotients[i] <= full.space_quotients[i] + full.time_quotients[i] + 1e-12);
  }
  const std::vector<Field> prefix(ens.begin(), ens.begin() + 20);
  const MappingReport part = mapping_bound_check(s.op, prefix, {0, 0.5, 1.0}, {2, 0.5, 1.0}, small_policy());
  CHECK(part.max_ratio <= full.max_ratio);
  for (std::size_t i = 0; i < part.ratios.size(); ++i) CHECK(part.ratios[i] == full.ratios[i]);
}

TEST_CASE("time ladder") {
  const Setup s = make_setup(32, 64);
  const auto nodes = time_ladder(s.op.grid(), 10 * s.op.dt());
  CHECK(nodes.size() >= 3);
  CHECK(nodes.size() <= 8);
  CHECK(nodes.back() == s.op.grid().nt() - 1);
  for (std::size_t i = 1; i < nodes.size(); ++i) CHECK(nodes[i] > nodes[i - 1]);
  CHECK(s.op.grid().t()[nodes.front()] == doctest::Approx(10 * s.op.dt()).epsilon(0.3));
  CHECK_THROWS_AS(time_ladder(s.op.grid(), 1.0), ConfigError);
  CHECK(loglog_slope({1, 2, 4}, {3, 3 * std::pow(2, 0.7), 3 * std::pow(4, 0.7)}) == doctest::Approx(0.7));
}

TEST_CASE("sqrt-t weight of H1") {
  const Setup s = make_setup(32, 64);
  const std::vector<Field> ens{constant(s.grid, 1.0)};
  const MappingReport r =
      time_weight_check(s.op, ens, TimeWeightVariant::SqrtT_kPlus1, {0, 0.5, 0.0}, small_policy());
  // t^{-1/2} ||t||_{1, alpha} = t^{1/2}
  for (std::size_t l = 0; l < r.t_ladder.size(); ++l) {
    CHECK(r.ladder_values[l] == doctest::Approx(std::sqrt(r.t_ladder[l])).epsilon(1e-10));
  }
  CHECK(r.t_scaling_slope == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(r.max_ratio == doctest::Approx(std::sqrt(0.5)).epsilon(1e-10));
}

TEST_CASE("t^{alpha/2} scaling of the C2 norm") {
  const SamplerPolicy pol = small_policy();
  const Setup coarse = make_setup(32, 32);
  const Setup fine = make_setup(64, 64);
  const double t_min = 10 * coarse.op.dt();

  EnsembleSpec rough = small_spec();
  const MappingReport rc = time_weight_check(coarse.op, generate_ensemble(coarse.grid, rough, pol),
                                             TimeWeightVariant::TalphaHalf_C2, rough.space, pol, t_min);
  const MappingReport rf = time_weight_check(fine.op, generate_ensemble(fine.grid, rough, pol),
                                             TimeWeightVariant::TalphaHalf_C2, rough.space, pol, t_min);
  MESSAGE("slopes " << rc.t_scaling_slope << " " << rf.t_scaling_slope);
  CHECK(rc.t_scaling_slope >= 0.25 - 0.1);
  CHECK(rf.t_scaling_slope >= 0.25 - 0.1);
  CHECK(std::abs(rc.t_scaling_slope - rf.t_scaling_slope) <= 0.1);

  EnsembleSpec smooth = small_spec();
  smooth.roughness = 0.99;
  const MappingReport sc = time_weight_check(coarse.op, generate_ensemble(coarse.grid, smooth, pol),
                                             TimeWeightVariant::TalphaHalf_C2, smooth.space, pol, t_min);
  MESSAGE("smooth slope " << sc.t_scaling_slope);
  CHECK(sc.t_scaling_slope >= rc.t_scaling_slope);
}

TEST_CASE("report serialization") {
  MappingReport r;
  r.members = {0, 2};
  r.ratios = {1.5, 2.5};
  r.space_quotients = {0.1, 0.2};
  r.time_quotients = {0.3, 0.4};
  r.sup_quotients = {0.5, 0.6};
  r.max_ratio = 2.5;
  const auto j = report_json(r);
  CHECK(j["max_ratio"] == 2.5);
  CHECK(j["ratios"].size() == 2);
  CHECK(j["t_scaling_slope"].is_null());
  std::ostringstream os;
  write_ratios_csv(r, os);
  CHECK(os.str() == "member,ratio,space,time,sup\n0,1.5,0.10000000000000001,0.29999999999999999,0.5\n"
                    "2,2.5,0.20000000000000001,0.40000000000000002,0.59999999999999998\n");
  CHECK(time_weight_variant_from_string("sqrt_t") == TimeWeightVariant::SqrtT_kPlus1);
  CHECK(to_string(TimeWeightVariant::TalphaHalf_C2) == "t_alpha_half");
  CHECK_THROWS_AS(time_weight_variant_from_string("x"), ConfigError);
}
