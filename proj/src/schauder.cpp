#include "phiheat/schauder.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "phiheat/errors.hpp"
#include "phiheat/parallel.hpp"

namespace phiheat::schauder {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int finest_level(std::size_t intervals) {
  int j = 0;
  while ((std::size_t{4} << (j + 1)) <= intervals) ++j;
  return j;
}

// Angular factor: random trigonometric polynomial with coefficients decaying
// like 1 / (1 + |k|^2 + |l|^2).
std::vector<cplx> random_angular(const Grid& g, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::vector<cplx> a(g.n_modes(), cplx{});
  for (std::size_t m = 0; m < g.n_modes(); ++m) {
    const std::size_t mn = g.negated(m);
    if (mn < m) continue;
    double k2 = 0.0;
    for (int k : g.modes()[m].k) k2 += k * k;
    for (int l : g.modes()[m].l) k2 += l * l;
    const double scale = 1.0 / (1.0 + k2);
    if (mn == m) {
      a[m] = scale * normal(rng);
    } else {
      const double re = normal(rng), im = normal(rng);
      a[m] = 0.5 * scale * cplx(re, im);
      a[mn] = std::conj(a[m]);
    }
  }
  return a;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// Per multi-index, per time node: max over x-nodes and angle lattice of the
// spatial Phi-derivative.
std::vector<std::vector<double>> derivative_time_sups(const Field& v, int k, std::size_t n_angles) {
  const Grid& g = v.grid();
  std::vector<std::vector<double>> out;
  for (const auto& idx : holder::multi_indices(k, g.b(), g.f(), false)) {
    const PhysicalField pv = synthesize(holder::phi_derivative(v, idx), n_angles);
    std::vector<double> s(g.nt(), 0.0);
    for (std::size_t n = 0; n < g.nt(); ++n) {
      for (std::size_t i = 0; i < pv.nx; ++i) {
        for (std::size_t j = 0; j < pv.n_points; ++j) s[n] = std::max(s[n], std::abs(pv(n, i, j)));
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

void EnsembleSpec::validate() const {
  if (n_functions < 20) throw ConfigError("ensemble needs at least 20 functions");
  if (!(roughness > 0.0 && roughness < 1.0)) throw ConfigError("roughness must lie in (0, 1)");
  space.validate();
}

std::vector<Field> generate_ensemble(const GridPtr& grid, const EnsembleSpec& spec,
                                     const SamplerPolicy& policy) {
  spec.validate();
  const Grid& g = *grid;
  const std::size_t nx = g.nx(), nt = g.nt();
  const double r = spec.roughness;
  const int jx = finest_level(nx - 1);
  const int jt = finest_level(nt - 1);
  const double span = std::log(g.x().back() / g.x().front());
  std::vector<double> sigma(nx);
  for (std::size_t i = 0; i < nx; ++i) sigma[i] = std::log(g.x()[i] / g.x().front()) / span;

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  std::vector<Field> members;
  members.reserve(spec.n_functions);
  for (int f = 0; f < spec.n_functions; ++f) {
    std::vector<double> tf(nt, 0.0);
    double wsum = 0.0;
    for (int i = 0; i <= jt; ++i) {
      const double amp = std::pow(2.0, -i * r / 2);
      const double eta = unit(rng);
      const double ph = phase(rng);
      wsum += amp;
      for (std::size_t n = 0; n < nt; ++n) {
        tf[n] += amp * eta * std::cos(std::ldexp(kTwoPi, i) * g.t()[n] / g.horizon() + ph);
      }
    }
    for (double& v : tf) v = 1.0 + 0.5 * v / wsum;

    Field v(grid);
    std::vector<double> xf(nx);
    for (int j = 0; j <= jx; ++j) {
      const double amp = std::pow(2.0, -j * r) * normal(rng);
      const double ph = phase(rng);
      for (std::size_t i = 0; i < nx; ++i) xf[i] = amp * std::cos(std::ldexp(kTwoPi, j) * sigma[i] + ph);
      const std::vector<cplx> a = random_angular(g, rng);
      for (std::size_t n = 0; n < nt; ++n) {
        for (std::size_t m = 0; m < g.n_modes(); ++m) {
          if (a[m] == cplx{}) continue;
          auto prof = v.profile(n, m);
          for (std::size_t i = 0; i < nx; ++i) prof[i] += tf[n] * xf[i] * a[m];
        }
      }
    }
    members.push_back(std::move(v));
  }

  WeightedSpaceSpec plain = spec.space;
  plain.gamma = 0.0;
  parallel_for(members.size(), [&](std::size_t f) {
    const double norm = holder::weighted_holder_norm(members[f], plain, policy).total;
    if (norm > 0.0) members[f] *= 1.0 / norm;
    members[f].set_gamma(spec.space.gamma);
  });
  return members;
}

MappingReport mapping_bound_check(const solver::HeatOperator& op, const std::vector<Field>& ensemble,
                                  const WeightedSpaceSpec& in_spec, const WeightedSpaceSpec& out_spec,
                                  const SamplerPolicy& policy) {
  in_spec.validate();
  out_spec.validate();
  if (in_spec.gamma != out_spec.gamma) throw ConfigError("input and output weights must agree");

  struct Row {
    double in = 0.0, ratio = 0.0, stripped = 0.0;
    holder::HolderEstimate out;
  };
  std::vector<Row> rows(ensemble.size());
  const bool weighted = in_spec.gamma != 0.0;
  WeightedSpaceSpec in0 = in_spec, out0 = out_spec;
  in0.gamma = out0.gamma = 0.0;

  parallel_for(ensemble.size(), [&](std::size_t f) {
    const Field& u = ensemble[f];
    Row& row = rows[f];
    row.in = holder::weighted_holder_norm(u, in_spec, policy).total;
    if (!(row.in > 0.0)) return;
    const Field hu = solver::heat_convolve_weighted(op, u);
    row.out = holder::weighted_holder_norm(hu, out_spec, policy);
    row.ratio = row.out.total / row.in;
    if (weighted) {
      Field v = u.factored(in_spec.gamma);
      v.set_gamma(0.0);
      const Field hv = solver::heat_convolve(op, v, in_spec.gamma);
      row.stripped = holder::weighted_holder_norm(hv, out0, policy).total /
                     holder::weighted_holder_norm(v, in0, policy).total;
    }
  });

  MappingReport rep;
  for (std::size_t f = 0; f < rows.size(); ++f) {
    const Row& row = rows[f];
    if (!(row.in > 0.0)) {
      rep.excluded.push_back(f);
      rep.notes.push_back("member " + std::to_string(f) + " has zero input norm and was excluded");
      continue;
    }
    rep.members.push_back(f);
    rep.ratios.push_back(row.ratio);
    rep.max_ratio = std::max(rep.max_ratio, row.ratio);
    rep.space_quotients.push_back(row.out.space_seminorm / row.in);
    rep.time_quotients.push_back(row.out.time_seminorm / row.in);
    rep.sup_quotients.push_back(row.out.sup_norm / row.in);
    rep.mixed_quotients.push_back(row.out.seminorm / row.in);
    if (weighted) rep.weight_invariance_defect = std::max(rep.weight_invariance_defect, std::abs(row.ratio - row.stripped));
  }
  return rep;
}

std::string to_string(TimeWeightVariant v) {
  return v == TimeWeightVariant::SqrtT_kPlus1 ? "sqrt_t" : "t_alpha_half";
}

TimeWeightVariant time_weight_variant_from_string(const std::string& name) {
  if (name == "sqrt_t") return TimeWeightVariant::SqrtT_kPlus1;
  if (name == "t_alpha_half") return TimeWeightVariant::TalphaHalf_C2;
  throw ConfigError("unknown time-weight variant '" + name + "' (sqrt_t, t_alpha_half)");
}

std::vector<std::size_t> time_ladder(const Grid& g, double t_min) {
  const double lo = t_min, hi = g.horizon();
  if (!(lo > 0.0 && lo < hi)) throw ConfigError("time ladder needs 0 < t_min < T");
  std::vector<std::size_t> nodes;
  for (int s = 0; s < 8; ++s) {
    const double t = lo * std::pow(hi / lo, s / 7.0);
    auto n = static_cast<std::size_t>(std::llround(t / g.output_dt()));
    n = std::clamp<std::size_t>(n, 1, g.nt() - 1);
    if (nodes.empty() || nodes.back() != n) nodes.push_back(n);
  }
  if (nodes.size() < 3) throw ResolutionError("time ladder has fewer than three distinct output nodes");
  return nodes;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) continue;
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

MappingReport time_weight_check(const solver::HeatOperator& op, const std::vector<Field>& ensemble,
                                TimeWeightVariant variant, const WeightedSpaceSpec& in_spec,
                                const SamplerPolicy& policy, double t_min) {
  in_spec.validate();
  const Grid& g = op.grid();
  const std::vector<std::size_t> ladder = time_ladder(g, t_min > 0.0 ? t_min : 10.0 * op.dt());
  const std::size_t n_angles = policy.n_angles ? policy.n_angles : holder::default_angle_count(g);
  const double alpha = in_spec.alpha;

  std::vector<double> in(ensemble.size(), 0.0);
  std::vector<std::vector<double>> values(ensemble.size());
  parallel_for(ensemble.size(), [&](std::size_t f) {
    const Field& u = ensemble[f];
    in[f] = holder::weighted_holder_norm(u, in_spec, policy).total;
    if (!(in[f] > 0.0)) return;
    const Field hu = solver::heat_convolve_weighted(op, u);
    std::vector<double>& val = values[f];
    if (variant == TimeWeightVariant::SqrtT_kPlus1) {
      const WeightedSpaceSpec spec{in_spec.k + 1, alpha, in_spec.gamma};
      for (std::size_t n : ladder) {
        SamplerPolicy p = policy;
        p.t_first = p.t_last = n;
        const double norm = holder::weighted_holder_norm(hu, spec, p, false).total;
        val.push_back(norm / std::sqrt(g.t()[n]) / in[f]);
      }
    } else {
      Field v = hu;
      v.set_gamma(0.0);
      const auto sups = derivative_time_sups(v, 2, n_angles);
      for (std::size_t n : ladder) {
        double total = 0.0;
        for (const auto& s : sups) total += *std::max_element(s.begin(), s.begin() + n + 1);
        val.push_back(total / in[f]);
      }
    }
  });

  MappingReport rep;
  for (std::size_t n : ladder) rep.t_ladder.push_back(g.t()[n]);
  rep.ladder_values.assign(ladder.size(), 0.0);
  for (std::size_t f = 0; f < ensemble.size(); ++f) {
    if (!(in[f] > 0.0)) {
      rep.excluded.push_back(f);
      rep.notes.push_back("member " + std::to_string(f) + " has zero input norm and was excluded");
      continue;
    }
    rep.members.push_back(f);
    double worst = 0.0;
    for (std::size_t l = 0; l < ladder.size(); ++l) {
      rep.ladder_values[l] = std::max(rep.ladder_values[l], values[f][l]);
      const double weighted = variant == TimeWeightVariant::SqrtT_kPlus1
                                  ? values[f][l]
                                  : values[f][l] / std::pow(rep.t_ladder[l], 0.5 * alpha);
      worst = std::max(worst, weighted);
    }
    rep.ratios.push_back(worst);
    rep.max_ratio = std::max(rep.max_ratio, worst);
    rep.member_slopes.push_back(loglog_slope(rep.t_ladder, values[f]));
  }
  rep.t_scaling_slope = loglog_slope(rep.t_ladder, rep.ladder_values);
  if (!rep.member_slopes.empty()) {
    rep.notes.push_back("median member slope " + std::to_string(median(rep.member_slopes)));
  }
  return rep;
}

nlohmann::json report_json(const MappingReport& r) {
  nlohmann::json j;
  j["members"] = r.members;
  j["excluded"] = r.excluded;
  j["ratios"] = r.ratios;
  j["max_ratio"] = r.max_ratio;
  j["refinement_trend"] = r.refinement_trend;
  j["space_quotients"] = r.space_quotients;
  j["time_quotients"] = r.time_quotients;
  j["sup_quotients"] = r.sup_quotients;
  j["mixed_quotients"] = r.mixed_quotients;
  j["weight_invariance_defect"] = r.weight_invariance_defect;
  j["t_ladder"] = r.t_ladder;
  j["ladder_values"] = r.ladder_values;
  j["member_slopes"] = r.member_slopes;
  if (std::isfinite(r.t_scaling_slope)) {
    j["t_scaling_slope"] = r.t_scaling_slope;
  } else {
    j["t_scaling_slope"] = nullptr;
  }
  j["notes"] = r.notes;
  return j;
}

void write_ratios_csv(const MappingReport& r, std::ostream& os) {
  os << "member,ratio,space,time,sup\n";
  char buf[128];
  for (std::size_t i = 0; i < r.members.size(); ++i) {
    auto at = [&](const std::vector<double>& v) { return i < v.size() ? v[i] : 0.0; };
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g", r.ratios[i], at(r.space_quotients),
                  at(r.time_quotients), at(r.sup_quotients));
    os << r.members[i] << ',' << buf << '\n';
  }
}

}  // namespace phiheat::schauder
