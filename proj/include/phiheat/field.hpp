#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace phiheat {

using cplx = std::complex<double>;

/// Fourier index of one mode: k over the base circles, l over the fiber circles.
struct Mode {
  std::vector<int> k;
  std::vector<int> l;
};

/// Tensor grid: x-nodes x Fourier modes x output times.
///
/// Output times are uniform with spacing output_dt(); the time stepper takes
/// `substeps` steps of size dt() between consecutive output nodes.
class Grid {
public:
  static std::shared_ptr<const Grid> make(int b, int f, std::vector<double> x_nodes, int k_max,
                                          int l_max, double horizon, int n_intervals,
                                          int substeps = 1);

  /// n nodes in [x_min, x_max], geometric (log-spaced) so that steps shrink
  /// toward x_min with a constant ratio.
  static std::vector<double> log_spaced(double x_min, double x_max, int n);

  /// Smallest node count for which log_spaced has step ratio <= max_ratio.
  static int min_log_nodes(double x_min, double x_max, double max_ratio = 1.05);

  int b() const { return b_; }
  int f() const { return f_; }
  int k_max() const { return k_max_; }
  int l_max() const { return l_max_; }
  const std::vector<double>& x() const { return x_; }
  const std::vector<Mode>& modes() const { return modes_; }
  const std::vector<double>& t() const { return t_; }
  std::size_t nx() const { return x_.size(); }
  std::size_t n_modes() const { return modes_.size(); }
  std::size_t nt() const { return t_.size(); }
  double horizon() const { return t_.back(); }
  double output_dt() const { return t_[1] - t_[0]; }
  double dt() const { return output_dt() / substeps_; }
  int substeps() const { return substeps_; }

  /// Index of the mode with negated (k, l).
  std::size_t negated(std::size_t m) const { return negated_[m]; }
  std::size_t zero_mode() const { return zero_mode_; }
  /// Index of a mode, or n_modes() when it is outside the truncation.
  std::size_t find_mode(const std::vector<int>& k, const std::vector<int>& l) const;
  /// Half-width per periodic dimension (K repeated b times, then L f times).
  std::vector<int> half_widths() const;

  /// Same x-nodes and modes, different time axis.
  std::shared_ptr<const Grid> with_time(double horizon, int n_intervals, int substeps) const;
  /// Same layout restricted to the first n_out output nodes.
  std::shared_ptr<const Grid> truncated_time(std::size_t n_out) const;

private:
  Grid() = default;
  int b_ = 0, f_ = 0, k_max_ = 0, l_max_ = 0, substeps_ = 1;
  std::vector<double> x_;
  std::vector<Mode> modes_;
  std::vector<double> t_;
  std::vector<std::size_t> negated_;
  std::size_t zero_mode_ = 0;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Complex mode coefficients per (time node, mode, x-node).
///
/// A nonzero weight gamma means the represented function is x^gamma times the
/// stored data; weighted norms strip it without touching the data.
class Field {
public:
  explicit Field(GridPtr grid, double gamma = 0.0);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  double gamma() const { return gamma_; }
  void set_gamma(double gamma) { gamma_ = gamma; }

  cplx& at(std::size_t n, std::size_t m, std::size_t i) { return data_[offset(n, m) + i]; }
  const cplx& at(std::size_t n, std::size_t m, std::size_t i) const {
    return data_[offset(n, m) + i];
  }
  std::span<cplx> profile(std::size_t n, std::size_t m) {
    return {data_.data() + offset(n, m), grid_->nx()};
  }
  std::span<const cplx> profile(std::size_t n, std::size_t m) const {
    return {data_.data() + offset(n, m), grid_->nx()};
  }
  std::vector<cplx>& data() { return data_; }
  const std::vector<cplx>& data() const { return data_; }

  /// Same function with weight folded into the data (gamma becomes 0).
  Field materialized() const;
  /// Data times x^{-gamma}, weight label gamma: same function, factored.
  Field factored(double gamma) const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }

  /// Largest violation of c(-k,-l) = conj(c(k,l)).
  double hermitian_defect() const;
  void enforce_hermitian();
  bool all_finite() const;

private:
  std::size_t offset(std::size_t n, std::size_t m) const {
    return (n * grid_->n_modes() + m) * grid_->nx();
  }
  GridPtr grid_;
  double gamma_ = 0.0;
  std::vector<cplx> data_;
};

/// Physical samples of a field on x-nodes x angle lattice x time nodes.
/// Layout: ((n * nx + i) * n_points + j) with j the flattened angle index
/// (first angle slowest).
struct PhysicalField {
  std::size_t nt = 0, nx = 0, n_angles = 0, n_points = 0;
  int dims = 0;
  std::vector<double> values;
  double operator()(std::size_t n, std::size_t i, std::size_t j) const {
    return values[(n * nx + i) * n_points + j];
  }
};

/// Angle of lattice index j on a circle with n points.
double lattice_angle(std::size_t j, std::size_t n);

/// Evaluates the stored data (weight ignored) on n_angles points per circle.
PhysicalField synthesize(const Field& u, std::size_t n_angles);

/// Mode projection of physical values given on n_angles points per circle.
/// Exact for band-limited data when n_angles > 2 * max half-width.
Field analyze(const GridPtr& grid, const PhysicalField& values);

/// Field from a real function f(x, y, z, t) by mode projection on an
/// oversampled angle lattice.
using ScalarFunction =
    std::function<double(double x, std::span<const double> y, std::span<const double> z,
                         double t)>;
Field project(const GridPtr& grid, const ScalarFunction& fn, std::size_t n_angles = 0);

/// Pointwise product of the stored data, dealiased.
Field product(const Field& a, const Field& b);

/// Multiplies every x-profile by w(x_i) pointwise.
Field multiply_by(const Field& u, const std::function<double(double)>& w);

/// u times x^gamma, pointwise in the data.
Field multiply_by_power(const Field& u, double gamma);

}  // namespace phiheat
