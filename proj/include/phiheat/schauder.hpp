#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "phiheat/field.hpp"
#include "phiheat/holder.hpp"
#include "phiheat/solver.hpp"

namespace phiheat::schauder {

using holder::SamplerPolicy;
using holder::WeightedSpaceSpec;

struct EnsembleSpec {
  int n_functions = 50;
  /// Hoelder exponent of the generated functions, in (0, 1).
  double roughness = 0.5;
  std::uint64_t seed = 1;
  /// Members are normalized to unit estimated norm in this space; its gamma
  /// is the weight label of the members.
  WeightedSpaceSpec space{0, 0.5, 0.0};

  void validate() const;
};

/// Random multiscale fields
///   v = [sum_j 2^{-j r} xi_j cos(2^j 2pi sigma(x) + phi_j) A_j(y, z)]
///       * [1 + (1/2) sum_i w_i eta_i cos(2^i 2pi t / T + psi_i) / sum_i w_i]
/// with w_i = 2^{-i r/2}, eta_i uniform in [-1, 1], xi_j standard normal
/// with sigma = log(x / x_min) / log(x_max / x_min), A_j random trigonometric
/// polynomials within the grid's modes, and scales down to four grid cells in
/// sigma and t. Each member is normalized to unit estimated (k, alpha) norm and
/// carries the weight label gamma, so it represents x^gamma v.
std::vector<Field> generate_ensemble(const GridPtr& grid, const EnsembleSpec& spec,
                                     const SamplerPolicy& policy = {});

struct MappingReport {
  /// Ensemble indices of the members that entered the statistics.
  std::vector<std::size_t> members;
  std::vector<std::size_t> excluded;
  std::vector<double> ratios;
  double max_ratio = 0.0;
  /// max_ratio at successive grid levels, filled by refinement studies.
  std::vector<double> refinement_trend;

  /// Output-norm parts relative to the input norm, per member: equal-time
  /// quotients, equal-point quotients, sup terms, mixed quotients.
  std::vector<double> space_quotients;
  std::vector<double> time_quotients;
  std::vector<double> sup_quotients;
  std::vector<double> mixed_quotients;

  /// max |ratio - ratio of the stripped field under H_gamma with gamma = 0
  /// norms|; only computed for weighted inputs.
  double weight_invariance_defect = 0.0;

  std::vector<double> t_ladder;
  /// Ensemble maximum of the normalized time-weight quantity per ladder time.
  std::vector<double> ladder_values;
  std::vector<double> member_slopes;
  double t_scaling_slope = std::numeric_limits<double>::quiet_NaN();

  std::vector<std::string> notes;
};

/// Ratios ||H u||_out / ||u||_in over the ensemble, with H acting on the
/// represented functions (H_gamma on the stripped data). Zero-norm members
/// are excluded with a note.
MappingReport mapping_bound_check(const solver::HeatOperator& op, const std::vector<Field>& ensemble,
                                  const WeightedSpaceSpec& in_spec, const WeightedSpaceSpec& out_spec,
                                  const SamplerPolicy& policy = {});

enum class TimeWeightVariant { SqrtT_kPlus1, TalphaHalf_C2 };
std::string to_string(TimeWeightVariant v);
TimeWeightVariant time_weight_variant_from_string(const std::string& name);

/// Eight log-spaced times in [t_min, T] snapped to distinct output nodes.
std::vector<std::size_t> time_ladder(const Grid& grid, double t_min);

/// SqrtT_kPlus1: t^{-1/2} ||H u(t)||_{k+1, alpha, gamma} on single time
/// slices. TalphaHalf_C2: sup over [0, t] of the spatial Phi-derivatives of
/// x^{-gamma} H u up to order 2. Both are divided by ||u||_in; slopes are
/// least-squares fits of log value against log t over the ladder starting
/// at t_min (0 picks 10 dt; refinement studies pass the coarse level's).
MappingReport time_weight_check(const solver::HeatOperator& op, const std::vector<Field>& ensemble,
                                TimeWeightVariant variant, const WeightedSpaceSpec& in_spec,
                                const SamplerPolicy& policy = {}, double t_min = 0.0);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Ratios, quotients, slopes, ladder and notes as one JSON object.
nlohmann::json report_json(const MappingReport& report);

/// CSV with columns member,ratio,space,time,sup.
void write_ratios_csv(const MappingReport& report, std::ostream& os);

}  // namespace phiheat::schauder
