#include "phiheat/heatspace.hpp"

#include <cmath>
#include <map>
#include <random>
#include <ostream>

#include <boost/math/quadrature/gauss.hpp>

#include "phiheat/errors.hpp"

namespace phiheat::heatspace {

namespace {

using Gauss = boost::math::quadrature::gauss<double, 20>;

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw ChartDomainError(std::string(what) + " vanishes on this chart's blown-up locus");
}

double sum_squares(const std::vector<double>& v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return s;
}

// Full-interval Gauss rule on [-1, 1].
void gauss_rule(std::vector<double>& nodes, std::vector<double>& weights) {
  const auto& a = Gauss::abscissa();
  const auto& wt = Gauss::weights();
  nodes.clear();
  weights.clear();
  for (std::size_t i = 0; i < a.size(); ++i) {
    nodes.push_back(a[i]);
    weights.push_back(wt[i]);
    if (a[i] != 0.0) {
      nodes.push_back(-a[i]);
      weights.push_back(wt[i]);
    }
  }
}

double angle_near(double target, double a) { return target + geometry::periodic_difference(a, target); }

}  // namespace

std::string to_string(Face f) {
  switch (f) {
    case Face::lf: return "lf";
    case Face::rf: return "rf";
    case Face::tb: return "tb";
    case Face::ff: return "ff";
    case Face::fd: return "fd";
    case Face::td: return "td";
  }
  return "?";
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::R1: return "R1";
    case Regime::R2: return "R2";
    case Regime::R3: return "R3";
    case Regime::R4: return "R4";
    case Regime::R5: return "R5";
    case Regime::Interior: return "Interior";
  }
  return "?";
}

Regime regime_from_string(const std::string& name) {
  for (Regime r : {Regime::R1, Regime::R2, Regime::R3, Regime::R4, Regime::R5, Regime::Interior}) {
    if (to_string(r) == name) return r;
  }
  throw ConfigError("unknown regime '" + name + "'");
}

void IndexSet::validate() const {
  for (const Entry& e : entries) {
    if (!std::isfinite(e.exponent)) throw ConfigError("index set exponents must be finite");
    if (e.log_power < 0) throw ConfigError("index set log powers must be nonnegative");
  }
}

IndexSet IndexSet::closed() const {
  validate();
  IndexSet out;
  out.truncation = truncation;
  for (const Entry& e : entries) {
    if (!std::isfinite(truncation)) throw ConfigError("closure needs a finite truncation order");
    for (int n = 0; e.exponent + n <= truncation; ++n) {
      bool present = false;
      for (const Entry& o : out.entries) {
        present = present || (o.exponent == e.exponent + n && o.log_power == e.log_power);
      }
      if (!present) out.entries.push_back({e.exponent + n, e.log_power});
    }
  }
  return out;
}

double ProjectiveChart::resolved_norm() const {
  return std::sqrt(radial * radial + sum_squares(u) + sum_squares(w));
}

std::vector<std::pair<std::string, double>> ProjectiveChart::named_coordinates() const {
  std::vector<std::pair<std::string, double>> out;
  const bool tilde_anchor = regime == Regime::R2 || regime == Regime::R4;
  const std::string at = tilde_anchor ? "~" : "";
  std::string rname, uname, wname;
  switch (regime) {
    case Regime::R1: rname = "s~"; uname = "y~"; wname = "z~"; break;
    case Regime::R2: rname = "s"; uname = "y"; wname = "z"; break;
    case Regime::R3: rname = "S'"; uname = "U'"; wname = "Z'"; break;
    case Regime::R4: rname = "S~'"; uname = "U~'"; wname = "Z~'"; break;
    case Regime::R5: rname = "S"; uname = "U"; wname = "Z"; break;
    case Regime::Interior: rname = "x~"; uname = "y~"; wname = "z~"; break;
  }
  out.emplace_back("tau", tau);
  out.emplace_back("x" + at, anchor.x);
  for (std::size_t i = 0; i < anchor.y.size(); ++i) out.emplace_back("y" + at + std::to_string(i + 1), anchor.y[i]);
  for (std::size_t i = 0; i < anchor.z.size(); ++i) out.emplace_back("z" + at + std::to_string(i + 1), anchor.z[i]);
  out.emplace_back(rname, radial);
  for (std::size_t i = 0; i < u.size(); ++i) out.emplace_back(uname + std::to_string(i + 1), u[i]);
  for (std::size_t i = 0; i < w.size(); ++i) out.emplace_back(wname + std::to_string(i + 1), w[i]);
  return out;
}

ProjectiveChart lift(const HeatTriple& h, Regime regime) {
  if (!(h.t >= 0.0)) throw DomainError("heat triple needs t >= 0");
  if (h.p.y.size() != h.q.y.size() || h.p.z.size() != h.q.z.size()) {
    throw DomainError("heat triple points have different dimensions");
  }
  const Point& p = h.p;
  const Point& q = h.q;
  const std::size_t nb = p.y.size(), nf = p.z.size();
  ProjectiveChart c;
  c.regime = regime;
  c.tau = std::sqrt(h.t);
  c.u.resize(nb);
  c.w.resize(nf);
  switch (regime) {
    case Regime::R1:
      require_positive(p.x, "x");
      c.anchor = p;
      c.radial = q.x / p.x;
      c.u = q.y;
      c.w = q.z;
      c.bdfs = {{Face::ff, p.x}, {Face::lf, c.radial}, {Face::tb, c.tau}};
      break;
    case Regime::R2:
      require_positive(q.x, "x~");
      c.anchor = q;
      c.radial = p.x / q.x;
      c.u = p.y;
      c.w = p.z;
      c.bdfs = {{Face::ff, q.x}, {Face::rf, c.radial}, {Face::tb, c.tau}};
      break;
    case Regime::R3:
      require_positive(p.x, "x");
      c.anchor = p;
      c.radial = (q.x - p.x) / (p.x * p.x);
      for (std::size_t i = 0; i < nb; ++i) c.u[i] = (p.y[i] - q.y[i]) / p.x;
      for (std::size_t i = 0; i < nf; ++i) c.w[i] = p.z[i] - q.z[i];
      c.bdfs = {{Face::fd, p.x}, {Face::tb, c.tau}};
      break;
    case Regime::R4:
      require_positive(q.x, "x~");
      c.anchor = q;
      c.radial = (p.x - q.x) / (q.x * q.x);
      for (std::size_t i = 0; i < nb; ++i) c.u[i] = (p.y[i] - q.y[i]) / q.x;
      for (std::size_t i = 0; i < nf; ++i) c.w[i] = p.z[i] - q.z[i];
      c.bdfs = {{Face::fd, q.x}, {Face::tb, c.tau}};
      break;
    case Regime::R5:
      require_positive(p.x, "x");
      require_positive(c.tau, "tau");
      c.anchor = p;
      c.radial = (q.x - p.x) / (c.tau * p.x * p.x);
      for (std::size_t i = 0; i < nb; ++i) c.u[i] = (p.y[i] - q.y[i]) / (c.tau * p.x);
      for (std::size_t i = 0; i < nf; ++i) c.w[i] = (p.z[i] - q.z[i]) / c.tau;
      c.bdfs = {{Face::fd, p.x}, {Face::td, c.tau}};
      break;
    case Regime::Interior:
      c.anchor = p;
      c.radial = q.x;
      c.u = q.y;
      c.w = q.z;
      break;
  }
  return c;
}

HeatTriple blowdown(const ProjectiveChart& c) {
  HeatTriple h;
  h.t = c.tau * c.tau;
  const Point& a = c.anchor;
  const std::size_t nb = a.y.size(), nf = a.z.size();
  if (c.u.size() != nb || c.w.size() != nf) throw DomainError("chart coordinates have inconsistent dimensions");
  Point other;
  other.y.resize(nb);
  other.z.resize(nf);
  switch (c.regime) {
    case Regime::R1:
      // (beta_1)|_1 (tau, x, y, z, s~, y~, z~) = (tau, x, y, z, x s~, y~, z~)
      other = Point{a.x * c.radial, c.u, c.w};
      h.p = a;
      h.q = other;
      break;
    case Regime::R2:
      other = Point{a.x * c.radial, c.u, c.w};
      h.p = other;
      h.q = a;
      break;
    case Regime::R3:
      other.x = a.x + a.x * a.x * c.radial;
      for (std::size_t i = 0; i < nb; ++i) other.y[i] = a.y[i] - a.x * c.u[i];
      for (std::size_t i = 0; i < nf; ++i) other.z[i] = a.z[i] - c.w[i];
      h.p = a;
      h.q = other;
      break;
    case Regime::R4:
      other.x = a.x + a.x * a.x * c.radial;
      for (std::size_t i = 0; i < nb; ++i) other.y[i] = a.y[i] + a.x * c.u[i];
      for (std::size_t i = 0; i < nf; ++i) other.z[i] = a.z[i] + c.w[i];
      h.p = other;
      h.q = a;
      break;
    case Regime::R5:
      other.x = a.x + c.tau * a.x * a.x * c.radial;
      for (std::size_t i = 0; i < nb; ++i) other.y[i] = a.y[i] - c.tau * a.x * c.u[i];
      for (std::size_t i = 0; i < nf; ++i) other.z[i] = a.z[i] - c.tau * c.w[i];
      h.p = a;
      h.q = other;
      break;
    case Regime::Interior:
      h.p = a;
      h.q = Point{c.radial, c.u, c.w};
      break;
  }
  return h;
}

Regime classify_regime(const HeatTriple& h, const RegimeThresholds& th) {
  HeatTriple near = h;
  for (std::size_t i = 0; i < near.q.y.size() && i < near.p.y.size(); ++i) near.q.y[i] = angle_near(h.p.y[i], h.q.y[i]);
  for (std::size_t i = 0; i < near.q.z.size() && i < near.p.z.size(); ++i) near.q.z[i] = angle_near(h.p.z[i], h.q.z[i]);

  const double c = th.cutoff;
  auto accepts = [&](Regime r) {
    ProjectiveChart ch;
    try {
      ch = lift(near, r);
    } catch (const ChartDomainError&) {
      return false;
    }
    for (const auto& [face, rho] : ch.bdfs) {
      if (rho > c) return false;
    }
    if (r == Regime::R3 || r == Regime::R4 || r == Regime::R5) return ch.resolved_norm() <= th.ball_radius;
    return true;
  };
  for (Regime r : {Regime::R5, Regime::R3, Regime::R4, Regime::R1, Regime::R2}) {
    if (accepts(r)) return r;
  }
  return Regime::Interior;
}

double phg_eval(const IndexFamily& family, const CoefficientTable& coeffs, const ProjectiveChart& chart) {
  double value = 1.0;
  for (const auto& [face, set] : family) {
    set.validate();
    const auto bdf = chart.bdfs.find(face);
    if (bdf == chart.bdfs.end()) continue;
    const auto ct = coeffs.find(face);
    if (ct == coeffs.end() || ct->second.size() != set.entries.size()) {
      throw ConfigError("coefficient table does not match the index set at " + to_string(face));
    }
    const double rho = bdf->second;
    double sum = 0.0;
    for (std::size_t e = 0; e < set.entries.size(); ++e) {
      const auto [ex, lp] = set.entries[e];
      const double a = ct->second[e];
      if (ex > set.truncation || a == 0.0) continue;
      if (rho > 0.0) {
        sum += a * std::pow(rho, ex) * std::pow(std::log(rho), lp);
      } else if (ex > 0.0) {
        // rho^e log^p rho -> 0
      } else if (ex == 0.0 && lp == 0) {
        sum += a;
      } else {
        throw SingularExpansionError("expansion at " + to_string(face) + " is singular at rho = 0");
      }
    }
    value *= sum;
  }
  return value;
}

double DecayModel::operator()(double rho) const {
  if (!(rho > 0.0)) return 0.0;
  if (rho >= 1.0) return 1.0;
  if (kind == Kind::Power) return std::pow(rho, power);
  return std::exp(1.0 - 1.0 / rho);
}

double gaussian_profile(double s, const std::vector<double>& u, const std::vector<double>& w) {
  return std::exp(-(s * s + sum_squares(u) + sum_squares(w)) / 4.0);
}

double hk_asymptotic_model(const ProjectiveChart& c, int m, const DecayModel& decay) {
  switch (c.regime) {
    case Regime::R1:
      return decay(c.bdfs.at(Face::lf)) * decay(c.bdfs.at(Face::ff)) * decay(c.bdfs.at(Face::tb));
    case Regime::R2:
      return decay(c.bdfs.at(Face::rf)) * decay(c.bdfs.at(Face::ff)) * decay(c.bdfs.at(Face::tb));
    case Regime::R3:
    case Regime::R4:
      return decay(c.bdfs.at(Face::tb)) * gaussian_profile(c.radial, c.u, c.w);
    case Regime::R5: {
      const double g = gaussian_profile(c.radial, c.u, c.w);
      if (g == 0.0) return 0.0;
      return std::pow(c.tau, -m) * g;
    }
    case Regime::Interior:
      return 1.0;
  }
  return 0.0;
}

double volume_factor(const PhiModel& model, double x) {
  return geometry::detail::volume_density(model, x) * std::pow(x, 2.0 + model.b);
}

double volume_lift(const ProjectiveChart& c, const PhiModel& model) {
  if (c.anchor.y.size() != static_cast<std::size_t>(model.b) ||
      c.anchor.z.size() != static_cast<std::size_t>(model.f)) {
    throw ConfigError("chart dimensions do not match the model");
  }
  const double e = -2.0 - model.b;
  const double x = c.anchor.x;
  switch (c.regime) {
    case Regime::R1: {
      const double xt = c.radial * x;
      require_positive(xt, "s~ x");
      return 2.0 * std::pow(xt, e) * c.tau * x * volume_factor(model, xt);
    }
    case Regime::R2:
      require_positive(x, "x~");
      return 2.0 * std::pow(x, e) * c.tau * volume_factor(model, x);
    case Regime::R3:
    case Regime::R4: {
      const double pre = 1.0 + c.radial * x;
      require_positive(pre, "1 + S' x");
      return 2.0 * std::pow(pre, e) * c.tau * volume_factor(model, x * pre);
    }
    case Regime::R5: {
      const double pre = 1.0 + c.radial * c.tau * x;
      require_positive(pre, "1 + S tau x");
      return 2.0 * std::pow(pre, e) * std::pow(c.tau, model.m() + 1) * volume_factor(model, x * pre);
    }
    case Regime::Interior:
      break;
  }
  throw DomainError("volume_lift is defined on the corner charts only");
}

double td_slice_integral(const PhiModel& model, double x, double tau, const DecayModel& decay,
                         double half_width, int panels) {
  if (!(tau > 0.0) || !(x > 0.0) || !(half_width > 0.0) || panels < 1) {
    throw DomainError("td_slice_integral needs positive tau, x, width and panel count");
  }
  std::vector<double> ref_n, ref_w;
  gauss_rule(ref_n, ref_w);
  std::vector<double> nodes, weights;
  const double h = 2.0 * half_width / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = -half_width + (p + 0.5) * h;
    for (std::size_t i = 0; i < ref_n.size(); ++i) {
      nodes.push_back(mid + 0.5 * h * ref_n[i]);
      weights.push_back(0.5 * h * ref_w[i]);
    }
  }

  ProjectiveChart c;
  c.regime = Regime::R5;
  c.tau = tau;
  c.anchor = Point{x, std::vector<double>(model.b, 0.0), std::vector<double>(model.f, 0.0)};
  c.u.assign(model.b, 0.0);
  c.w.assign(model.f, 0.0);
  c.bdfs = {{Face::fd, x}, {Face::td, tau}};

  const int m = model.m();
  const std::size_t n = nodes.size();
  std::vector<std::size_t> idx(m, 0);
  double total = 0.0;
  while (true) {
    double wt = 1.0;
    for (int d = 0; d < m; ++d) wt *= weights[idx[d]];
    c.radial = nodes[idx[0]];
    for (int d = 0; d < model.b; ++d) c.u[d] = nodes[idx[1 + d]];
    for (int d = 0; d < model.f; ++d) c.w[d] = nodes[idx[1 + model.b + d]];
    total += wt * hk_asymptotic_model(c, m, decay) * volume_lift(c, model);
    int d = 0;
    while (d < m && ++idx[d] == n) idx[d++] = 0;
    if (d == m) break;
  }
  return total / tau;
}

std::vector<ChartSample> sample_charts(int b, int f, int per_regime, std::uint64_t seed, const DecayModel& decay,
                                       const RegimeThresholds& thresholds) {
  if (per_regime < 1) throw ConfigError("per_regime must be at least 1");
  if (b < 0 || f < 0) throw ConfigError("negative dimensions");
  const int m = 1 + b + f;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  auto logu = [&](double lo, double hi) { return std::pow(10.0, uni(lo, hi)); };

  std::map<Regime, std::vector<ChartSample>> kept;
  const std::size_t want = static_cast<std::size_t>(per_regime) * 6;
  std::size_t total = 0;
  const long max_draws = 2000L * per_regime + 100000;
  for (long draw = 0; draw < max_draws && total < want; ++draw) {
    HeatTriple h;
    h.t = unit(rng) < 0.2 ? uni(0.0, 1.0) : logu(-8, 0);
    const double tau = std::sqrt(h.t);
    const double x = unit(rng) < 0.3 ? uni(0.1, 1.0) : logu(-4, 0);
    // near the td face (scale tau), the fd face (scale 1) or anywhere
    const int shape = static_cast<int>(unit(rng) * 3);
    const double scale = shape == 0 ? tau : 1.0;
    double xt = shape == 2 ? (unit(rng) < 0.5 ? uni(0.1, 1.0) : logu(-4, 0)) : x + scale * x * x * uni(-10, 10);
    if (!(xt > 0.0) || xt > 1.0) continue;
    h.p.x = x;
    h.q.x = xt;
    for (int d = 0; d < b; ++d) {
      const double y = uni(0.0, geometry::kPeriod);
      h.p.y.push_back(y);
      h.q.y.push_back(shape == 2 ? uni(0.0, geometry::kPeriod) : y + scale * x * uni(-5, 5));
    }
    for (int d = 0; d < f; ++d) {
      const double z = uni(0.0, geometry::kPeriod);
      h.p.z.push_back(z);
      h.q.z.push_back(shape == 2 ? uni(0.0, geometry::kPeriod) : z + scale * uni(-5, 5));
    }
    const Regime r = classify_regime(h, thresholds);
    auto& bucket = kept[r];
    if (bucket.size() >= static_cast<std::size_t>(per_regime)) continue;
    ChartSample s{lift(h, r), 0.0};
    s.magnitude = hk_asymptotic_model(s.chart, m, decay);
    bucket.push_back(std::move(s));
    ++total;
  }
  if (total < want) throw NumericalError("regime sampling did not fill every regime");
  std::vector<ChartSample> out;
  for (Regime r : {Regime::R1, Regime::R2, Regime::R3, Regime::R4, Regime::R5, Regime::Interior}) {
    for (auto& s : kept[r]) out.push_back(std::move(s));
  }
  return out;
}

void write_charts_csv(const std::vector<ChartSample>& rows, std::ostream& os) {
  os << "regime,coordinates,bdfs,magnitude\n";
  os.precision(17);
  for (const ChartSample& r : rows) {
    os << to_string(r.chart.regime) << ',';
    bool first = true;
    for (const auto& [name, v] : r.chart.named_coordinates()) {
      os << (first ? "" : ";") << name << '=' << v;
      first = false;
    }
    os << ',';
    first = true;
    for (const auto& [face, v] : r.chart.bdfs) {
      os << (first ? "" : ";") << to_string(face) << '=' << v;
      first = false;
    }
    os << ',' << r.magnitude << '\n';
  }
}

}  // namespace phiheat::heatspace
