#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "phiheat/field.hpp"
#include "phiheat/holder.hpp"
#include "phiheat/schauder.hpp"
#include "phiheat/solver.hpp"

namespace phiheat::picard {

using holder::SamplerPolicy;
using holder::WeightedSpaceSpec;

enum class RhsKind { AffineForcing, QuadraticZero, Combined, Custom };
std::string to_string(RhsKind kind);
RhsKind rhs_kind_from_string(const std::string& name);

using FieldMap = std::function<Field(const Field&)>;

/// F = F1 + F2 acting on represented functions; results carry the weight
/// label of the argument. The catalog members are
///   F1(u) = ell + drift x^2 d_x u,   F2(u) = quadratic u^2.
struct SemilinearRHS {
  RhsKind kind = RhsKind::Custom;
  FieldMap F1;
  FieldMap F2;
  /// Empirical constants, see estimate_constants.
  double C_eta_1 = 0.0;
  double C_eta_2 = 0.0;
  double C_eta = 0.0;

  Field operator()(const Field& u) const;

  static SemilinearRHS affine_forcing(std::optional<Field> ell, double drift);
  static SemilinearRHS quadratic_zero(double quadratic);
  static SemilinearRHS combined(std::optional<Field> ell, double drift, double quadratic);
  static SemilinearRHS zero();
};

struct ConstantEstimate {
  double C_eta_1 = 0.0;
  double C_eta_2 = 0.0;
  double C_eta = 0.0;
  double max_quotient = 0.0;
  std::size_t n_pairs = 0;
};

/// 1.5 times the largest observed quotients over random pairs u, u' with
/// ||u||, ||u'|| <= eta in the solution space (k + 2, alpha, gamma):
///   C_eta_1 from ||F1 u - F1 u'||_k / ||u - u'||_{k+2},
///   C_eta_2 from ||F2 u||_k / ||u||_{k+2}^2,
///   C_eta   from ||F u - F u'||_k / ||u - u'||_{k+2}.
/// The pairs are built from a smooth ensemble scaled to random radii.
ConstantEstimate estimate_constants(const SemilinearRHS& rhs, const GridPtr& grid, double eta,
                                    const WeightedSpaceSpec& solution_space,
                                    const SamplerPolicy& policy = {}, int n_pairs = 100,
                                    std::uint64_t seed = 1);

/// (C, C^2) with C = 1 / (3 opnorm C_eta).
std::pair<double, double> choose_constants(double opnorm, double C_eta);

struct PicardConfig {
  double eta = 0.0;
  double T_prime = 0.0;
  double tol = 1e-6;
  int max_iter = 50;
  double opnorm = 0.0;
  /// The iteration space (k + 2, alpha, gamma); F maps it to (k, alpha, gamma).
  WeightedSpaceSpec space{2, 0.5, 0.0};
  SamplerPolicy policy{};

  /// eta <= C and T_prime <= C^2 for the given C_eta.
  void validate(double C_eta) const;
};

struct PicardResult {
  Field solution;
  /// ||u_n|| for n = 0, 1, ...
  std::vector<double> history;
  /// ||u_{n+1} - u_n|| for every iteration.
  std::vector<double> increments;
  std::vector<double> contraction_factors;
  int iterations = 0;
  bool converged = false;
  double fixed_point_residual = 0.0;
};

/// u_{n+1} = H(F(u_n)) from u0 (zero when absent) on the operator's grid,
/// whose horizon must be T_prime. Throws BallEscapeError when an iterate
/// leaves the eta-ball and DivergenceError after three consecutive
/// contraction factors >= 1.
PicardResult picard_solve(const solver::HeatOperator& op, const SemilinearRHS& rhs,
                          const PicardConfig& cfg, const std::optional<Field>& u0 = std::nullopt);

struct ResidualReport {
  double strong_residual = 0.0;
  double initial_norm = 0.0;
};

/// (D_t + L) u - F(u) with central differences in t (one-sided at the ends).
Field residual_field(const Field& u, const SemilinearRHS& rhs, const solver::HeatOperator& op);

/// Sup of the residual over interior x-nodes and interior times on the
/// physical lattice, and sup |u(0)|.
ResidualReport verify_solution(const Field& u, const SemilinearRHS& rhs, const solver::HeatOperator& op);

/// ell rescaled so that ||H ell|| in the given space equals target.
Field scale_forcing(const solver::HeatOperator& op, const Field& ell, double target,
                    const WeightedSpaceSpec& space, const SamplerPolicy& policy = {});

struct CalibrationOptions {
  double horizon = 0.5;
  WeightedSpaceSpec space{2, 0.5, 0.0};
  SamplerPolicy policy{};
  schauder::EnsembleSpec ensemble{20, 0.5, 1, {0, 0.5, 0.0}};
  int lipschitz_pairs = 100;
  std::uint64_t seed = 1;
  int max_rounds = 6;
};

struct Calibration {
  double opnorm = 0.0;
  double C_eta = 0.0;
  ConstantEstimate constants;
  double eta = 0.0;
  double T_prime = 0.0;
  int rounds = 0;
  GridPtr grid;
};

/// Alternates operator-norm and constant estimates, shrinking the horizon
/// to C^2 and the ball to C until both invariants hold on the final grid.
/// make_grid builds the grid for a given horizon.
Calibration calibrate(const geometry::PhiModel& model, const std::function<GridPtr(double)>& make_grid,
                      const SemilinearRHS& rhs, const CalibrationOptions& options = {});

nlohmann::json result_json(const PicardResult& result);

}  // namespace phiheat::picard
