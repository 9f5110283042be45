#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "phiheat/field.hpp"

namespace phiheat::holder {

/// (x^2 d_x)^q (x d_y)^beta d_z^a d_t^t_order.
struct PhiMultiIndex {
  int q = 0;
  std::vector<int> beta;
  std::vector<int> a;
  int t_order = 0;

  /// Parabolic order: time derivatives count twice.
  int order() const;
  std::string label() const;
};

/// Every multi-index of parabolic order <= k for b base and f fiber angles,
/// ordered by increasing order.
std::vector<PhiMultiIndex> multi_indices(int k, int b, int f, bool with_time = true);

/// Names x^gamma C^{k,alpha}.
struct WeightedSpaceSpec {
  int k = 0;
  double alpha = 0.5;
  double gamma = 0.0;
  void validate() const;
  std::string label() const;
};

inline constexpr std::size_t kLastNode = std::numeric_limits<std::size_t>::max();

/// Stratified pair sampling on the physical lattice (x-nodes x angle lattice
/// x time nodes). Pair p belongs to stratum p % 4: strata 0 and 1 are
/// near-diagonal (every lattice index moved by at most near_offset), 2 pairs
/// the lower half of the x-nodes with the upper half, 3 is uniform. Pairs are
/// drawn sequentially from one generator, so a smaller n_pairs yields a prefix
/// of a larger one.
struct SamplerPolicy {
  std::size_t n_pairs = 20000;
  std::uint64_t seed = 1;
  /// Angle lattice points per circle; 0 picks max(16, 4 h + 4).
  std::size_t n_angles = 0;
  int near_offset = 8;
  /// Inclusive window of time nodes; a single node gives a spatial estimate.
  std::size_t t_first = 0;
  std::size_t t_last = kLastNode;
};

/// max(16, 4 h + 4) with h the largest Fourier half-width.
std::size_t default_angle_count(const Grid& g);

struct SamplePoint {
  std::size_t n = 0, i = 0, j = 0;
};

struct SamplePair {
  SamplePoint a, b;
};

struct HolderEstimate {
  double sup_norm = 0.0;
  /// Mixed space-time quotient |u(p,t) - u(p',t')| / (d^alpha + |t-t'|^{alpha/2}).
  double seminorm = 0.0;
  double total = 0.0;
  std::size_t n_pairs = 0;
  SamplePair max_pair;
  /// Equal-time and equal-point quotients of the same pairs; their sum bounds
  /// the mixed quotient pairwise.
  double space_seminorm = 0.0;
  double time_seminorm = 0.0;
};

/// Applies the Phi-derivative to the represented function: exact factors per
/// Fourier mode for the angles, 5-point (fourth-order, one-sided at the ends)
/// differences for x^2 d_x, second-order differences in t.
Field phi_derivative(const Field& u, const PhiMultiIndex& idx);

HolderEstimate alpha_norm_estimate(const Field& u, double alpha, const SamplerPolicy& policy = {});

/// Sum over multi-indices of order <= k of the alpha-norm estimates of the
/// Phi-derivatives of x^{-gamma} u. Throws WeightMismatchError when
/// x^{-gamma} u blows up toward x_min on the samples.
HolderEstimate weighted_holder_norm(const Field& u, const WeightedSpaceSpec& spec,
                                    const SamplerPolicy& policy = {}, bool with_time = true);

/// Largest |Phi-derivative| over the window, summed over multi-indices of
/// order <= k (spatial derivatives only when with_time is false).
double derivative_sup_norm(const Field& u, int k, const SamplerPolicy& policy = {},
                           bool with_time = true);

/// Finite-difference weights for the first derivative at x0 on the stencil.
std::vector<double> first_derivative_weights(double x0, const std::vector<double>& stencil);

struct EstimateRow {
  std::string spec;
  double value = 0.0;
  std::size_t n_pairs = 0;
};

/// CSV with columns spec,value,n_pairs.
void write_estimates_csv(const std::vector<EstimateRow>& rows, std::ostream& os);

}  // namespace phiheat::holder
