#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "phiheat/geometry.hpp"

namespace phiheat::heatspace {

using geometry::PhiModel;
using geometry::Point;

enum class Face { lf, rf, tb, ff, fd, td };
enum class Regime { R1, R2, R3, R4, R5, Interior };

std::string to_string(Face f);
std::string to_string(Regime r);
Regime regime_from_string(const std::string& name);

/// Exponent/log-power pairs of one boundary hypersurface.
struct IndexSet {
  struct Entry {
    double exponent = 0.0;
    int log_power = 0;
  };
  std::vector<Entry> entries;
  /// Entries with exponent above this are dropped by closure.
  double truncation = std::numeric_limits<double>::infinity();

  /// Throws ConfigError on negative log powers or non-finite exponents.
  void validate() const;
  /// Adds (e + n, p) for every entry and integer n while e + n <= truncation.
  IndexSet closed() const;
};

using IndexFamily = std::map<Face, IndexSet>;
/// Coefficients aligned with the entries of each face's index set.
using CoefficientTable = std::map<Face, std::vector<double>>;

/// (t, p, q) in the base space; q is the tilde variable.
struct HeatTriple {
  double t = 0.0;
  Point p;
  Point q;
};

/// Coordinates of one projective chart. The anchor carries the untouched
/// point coordinates, radial/u/w the resolved ones:
///   R1:  anchor p,  radial s~ = x~/x,             u = y~,  w = z~
///   R2:  anchor q,  radial s = x/x~,              u = y,   w = z
///   R3:  anchor p,  radial S' = (x~-x)/x^2,       u = (y-y~)/x,   w = z - z~
///   R4:  anchor q,  radial S~' = (x-x~)/x~^2,     u = (y-y~)/x~,  w = z - z~
///   R5:  anchor p,  radial S = (x~-x)/(tau x^2),  u = (y-y~)/(tau x), w = (z-z~)/tau
///   Interior: anchor p, radial x~, u = y~, w = z~
/// with tau = sqrt(t) in every chart.
struct ProjectiveChart {
  Regime regime = Regime::Interior;
  double tau = 0.0;
  Point anchor;
  double radial = 0.0;
  std::vector<double> u;
  std::vector<double> w;
  std::map<Face, double> bdfs;

  /// |(radial, u, w)|, the distance to the outer face in R3, R4, R5.
  double resolved_norm() const;
  /// name=value pairs in chart order.
  std::vector<std::pair<std::string, double>> named_coordinates() const;
};

/// Throws ChartDomainError when the chart divides by zero at h.
ProjectiveChart lift(const HeatTriple& h, Regime regime);
HeatTriple blowdown(const ProjectiveChart& chart);

struct RegimeThresholds {
  double cutoff = 0.1;
  /// Bound on |(S, U, Z)| and |(S', U', Z')| inside R5 and R3/R4.
  double ball_radius = 10.0;
};

/// Angle differences are taken modulo the period before the charts are
/// compared. Priority R5 > R3 > R4 > R1 > R2 > Interior.
Regime classify_regime(const HeatTriple& h, const RegimeThresholds& thresholds = {});

/// Truncated expansion sum a rho^e (log rho)^p per face, multiplied across
/// the faces whose defining functions the chart carries. Faces of the family
/// missing from the chart contribute 1.
double phg_eval(const IndexFamily& family, const CoefficientTable& coeffs,
                const ProjectiveChart& chart);

/// Models infinite-order vanishing at a face.
struct DecayModel {
  enum class Kind { Exponential, Power };
  Kind kind = Kind::Exponential;
  int power = 20;

  /// exp(1 - 1/rho) or rho^power on (0, 1], 0 at rho <= 0, 1 beyond 1.
  double operator()(double rho) const;
};

/// exp(-|v|^2 / 4).
double gaussian_profile(double s, const std::vector<double>& u, const std::vector<double>& w);

/// Leading-order magnitude of the lifted heat kernel in the chart.
double hk_asymptotic_model(const ProjectiveChart& chart, int m, const DecayModel& decay = {});

/// Density of the lifted dvol dt~ with respect to the chart's resolved
/// coordinates and dtau. Throws DomainError for Interior and
/// ChartDomainError when the blown-down radial coordinate is not positive.
double volume_lift(const ProjectiveChart& chart, const PhiModel& model);

/// Bounded factor of the volume form: sqrt|g| x^{2+b}.
double volume_factor(const PhiModel& model, double x);

/// (1/tau) times the integral of kernel model x volume density over the
/// R5 box |S|, |U_i|, |Z_j| <= half_width at fixed (tau, x), by a tensor
/// 20-point Gauss-Legendre rule on `panels` panels per axis.
double td_slice_integral(const PhiModel& model, double x, double tau, const DecayModel& decay = {},
                         double half_width = 10.0, int panels = 4);

struct ChartSample {
  ProjectiveChart chart;
  double magnitude = 0.0;
};

/// per_regime random triples for each regime, drawn from a mixture that
/// concentrates near the faces and kept by classify_regime, lifted into
/// their regime with the kernel model magnitude for m = 1 + b + f.
std::vector<ChartSample> sample_charts(int b, int f, int per_regime, std::uint64_t seed,
                                       const DecayModel& decay = {}, const RegimeThresholds& thresholds = {});

/// CSV with columns regime,coordinates,bdfs,magnitude; coordinates and bdfs
/// are ';'-separated name=value lists.
void write_charts_csv(const std::vector<ChartSample>& rows, std::ostream& os);

}  // namespace phiheat::heatspace
