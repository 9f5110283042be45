#pragma once

#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace phiheat::geometry {

/// Period of every circle factor of the base and fiber tori.
inline constexpr double kPeriod = 2.0 * std::numbers::pi;

enum class ModelKind { EuclideanRadial, ExactProduct, PerturbedProduct };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// One monomial of the perturbation tensor, h_{row,col}(x) = coeff * x^power.
/// Coordinate indices: 0 is x, 1..b are the base angles, b+1..b+f the fiber
/// angles. Off-diagonal terms are mirrored automatically.
struct PerturbationTerm {
  int row = 0;
  int col = 0;
  double coeff = 0.0;
  double power = 1.0;
};

/// A model manifold with fibered boundary restricted to its collar
/// (x_min, x_max] x T^b x T^f. The exact metric is
///   dx^2/x^4 + |dy|^2/x^2 + |dz|^2
/// and PerturbedProduct adds sum of the perturbation terms.
struct PhiModel {
  ModelKind kind = ModelKind::ExactProduct;
  int b = 1;
  int f = 1;
  double x_min = 0.01;
  double x_max = 1.0;
  std::vector<PerturbationTerm> perturbation;

  int m() const { return 1 + b + f; }

  static PhiModel euclidean_radial(int m, double x_min = 0.01, double x_max = 1.0);
  static PhiModel exact_product(int b, int f, double x_min = 0.01, double x_max = 1.0);
  static PhiModel perturbed_product(int b, int f, std::vector<PerturbationTerm> terms,
                                    double x_min = 0.01, double x_max = 1.0);

  /// Throws DomainError on violated invariants (dimension split, collar
  /// interval, perturbation decay order below one).
  void validate() const;

  /// Smallest exponent e with |h|_ghat = O(x^e), computed from the monomials.
  double perturbation_decay_order() const;

  bool perturbation_is_diagonal() const;
};

struct Point {
  double x = 1.0;
  std::vector<double> y;
  std::vector<double> z;
};

/// Builds a point with angles reduced to [0, 2pi).
Point make_point(double x, std::vector<double> y = {}, std::vector<double> z = {});

/// Difference a - b reduced to [-pi, pi).
double periodic_difference(double a, double b);
/// Reduces an angle to [0, 2pi).
double wrap_angle(double a);

struct MetricAtPoint {
  Eigen::MatrixXd g;
  Eigen::MatrixXd g_inv;
  double sqrt_det = 0.0;
};

/// Coefficients of the positive Laplacian written as
///   Delta u = second(i,j) d_i d_j u + first(i) d_i u.
struct LaplacianCoeffs {
  Eigen::MatrixXd second;
  Eigen::VectorXd first;
};

MetricAtPoint metric_eval(const PhiModel& model, const Point& p);
LaplacianCoeffs laplacian_coeffs(const PhiModel& model, const Point& p);
double volume_element(const PhiModel& model, const Point& p);

/// |h|_ghat at collar position x.
double perturbation_norm(const PhiModel& model, double x);

namespace detail {
// Metric data at x without the collar check. Model formulas are defined on
// all of (0, 1]; volume and heat-space computations evaluate beyond the
// configured collar.
MetricAtPoint metric_at(const PhiModel& model, double x);
double volume_density(const PhiModel& model, double x);
// x-derivative of sqrt|g| g^{x i}, one entry per coordinate i.
Eigen::VectorXd flux_derivative(const PhiModel& model, double x);
}  // namespace detail

enum class Verdict { Complete, Inconclusive };
std::string to_string(Verdict v);

struct GrigoryanResult {
  Verdict verdict = Verdict::Inconclusive;
  double growth_exponent = 0.0;
  std::vector<double> radii;
  std::vector<double> volumes;
  std::vector<double> partial_integrals;
  /// Increment of the partial integral over the last decade of R.
  double last_decade_increment = 0.0;
};

/// Volume-growth test for stochastic completeness on the truncated sets
/// {r <= R}, r = 1/x, with the compact piece counted as volume 1.
GrigoryanResult grigoryan_test(const PhiModel& model, double r_max, int n_samples);

/// Same test for an arbitrary volume law R -> vol(M_R), used to inject
/// synthetic growth.
GrigoryanResult grigoryan_test(const std::function<double(double)>& volume, double r_max,
                               int n_samples);

/// vol{r <= R} for the model (compact piece counted as 1).
double truncated_volume(const PhiModel& model, double r);

/// Distance of the conformal metric x^4 g_Phi near the boundary.
double phi_distance(const Point& p, const Point& q);
/// Distance induced by g_Phi near the boundary.
double phi_distance_classical(const Point& p, const Point& q);

/// Flat key-value form: kind, b, f, x_min, x_max and h_<a>_<b> = "coeff power"
/// with a, b in {x, y1.., z1..}.
std::map<std::string, std::string> to_key_values(const PhiModel& model);
PhiModel model_from_key_values(const std::map<std::string, std::string>& kv);

}  // namespace phiheat::geometry
