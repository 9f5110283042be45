#include "phiheat/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "phiheat/errors.hpp"

namespace phiheat::geometry {

namespace {

using Gauss = boost::math::quadrature::gauss<double, 20>;

// Exponent of x in the ghat-norm scaling of coordinate direction i.
int ghat_exponent(const PhiModel& model, int i) {
  if (i == 0) return 2;
  if (i <= model.b) return 1;
  return 0;
}

std::string coordinate_name(const PhiModel& model, int i) {
  if (i == 0) return "x";
  if (i <= model.b) return "y" + std::to_string(i);
  return "z" + std::to_string(i - model.b);
}

int coordinate_index(const PhiModel& model, const std::string& name) {
  if (name == "x") return 0;
  if (name.size() >= 2 && (name[0] == 'y' || name[0] == 'z')) {
    int idx = 0;
    try {
      idx = std::stoi(name.substr(1));
    } catch (const std::exception&) {
      throw ConfigError("bad coordinate name '" + name + "'");
    }
    if (name[0] == 'y' && idx >= 1 && idx <= model.b) return idx;
    if (name[0] == 'z' && idx >= 1 && idx <= model.f) return model.b + idx;
  }
  throw ConfigError("bad coordinate name '" + name + "'");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_collar(const PhiModel& model, double x) {
  const double slack = 1e-12 * model.x_max;
  if (!(x >= model.x_min - slack && x <= model.x_max + slack)) {
    throw DomainError("x = " + format_double(x) + " outside collar [" + format_double(model.x_min) +
                      ", " + format_double(model.x_max) + "]");
  }
}

void check_point_shape(const PhiModel& model, const Point& p) {
  if (static_cast<int>(p.y.size()) != model.b || static_cast<int>(p.z.size()) != model.f) {
    throw DomainError("point dimension does not match model (b, f)");
  }
}

bool is_exact(const PhiModel& model) {
  return model.kind != ModelKind::PerturbedProduct || model.perturbation.empty();
}

// sqrt|g| g^{x i} for every coordinate i.
Eigen::VectorXd flux_coefficients(const PhiModel& model, double x) {
  const MetricAtPoint mp = detail::metric_at(model, x);
  return mp.sqrt_det * mp.g_inv.row(0).transpose();
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::EuclideanRadial: return "EuclideanRadial";
    case ModelKind::ExactProduct: return "ExactProduct";
    case ModelKind::PerturbedProduct: return "PerturbedProduct";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "EuclideanRadial") return ModelKind::EuclideanRadial;
  if (name == "ExactProduct") return ModelKind::ExactProduct;
  if (name == "PerturbedProduct") return ModelKind::PerturbedProduct;
  throw ConfigError("unknown model kind '" + name + "'");
}

std::string to_string(Verdict v) { return v == Verdict::Complete ? "Complete" : "Inconclusive"; }

PhiModel PhiModel::euclidean_radial(int m, double x_min, double x_max) {
  PhiModel model;
  model.kind = ModelKind::EuclideanRadial;
  model.b = m - 1;
  model.f = 0;
  model.x_min = x_min;
  model.x_max = x_max;
  model.validate();
  return model;
}

PhiModel PhiModel::exact_product(int b, int f, double x_min, double x_max) {
  PhiModel model;
  model.kind = ModelKind::ExactProduct;
  model.b = b;
  model.f = f;
  model.x_min = x_min;
  model.x_max = x_max;
  model.validate();
  return model;
}

PhiModel PhiModel::perturbed_product(int b, int f, std::vector<PerturbationTerm> terms,
                                     double x_min, double x_max) {
  PhiModel model;
  model.kind = ModelKind::PerturbedProduct;
  model.b = b;
  model.f = f;
  model.x_min = x_min;
  model.x_max = x_max;
  model.perturbation = std::move(terms);
  model.validate();
  return model;
}

void PhiModel::validate() const {
  if (b < 0 || f < 0) throw DomainError("b and f must be nonnegative");
  if (kind == ModelKind::EuclideanRadial && (f != 0 || b < 1)) {
    throw DomainError("EuclideanRadial requires f = 0 and b = m - 1 >= 1");
  }
  if (!(x_min > 0.0 && x_min < x_max && x_max <= 1.0)) {
    throw DomainError("collar must satisfy 0 < x_min < x_max <= 1");
  }
  if (kind != ModelKind::PerturbedProduct && !perturbation.empty()) {
    throw DomainError("only PerturbedProduct models carry a perturbation");
  }
  for (const auto& t : perturbation) {
    if (t.row < 0 || t.col < 0 || t.row >= m() || t.col >= m()) {
      throw DomainError("perturbation index out of range");
    }
    if (!std::isfinite(t.coeff) || !std::isfinite(t.power)) {
      throw DomainError("perturbation coefficients must be finite");
    }
  }
  if (!perturbation.empty() && perturbation_decay_order() < 1.0) {
    throw DomainError("perturbation must satisfy |h|_ghat = O(x)");
  }
}

double PhiModel::perturbation_decay_order() const {
  double order = std::numeric_limits<double>::infinity();
  for (const auto& t : perturbation) {
    if (t.coeff == 0.0) continue;
    order = std::min(order, t.power + ghat_exponent(*this, t.row) + ghat_exponent(*this, t.col));
  }
  return order;
}

bool PhiModel::perturbation_is_diagonal() const {
  return std::all_of(perturbation.begin(), perturbation.end(),
                     [](const PerturbationTerm& t) { return t.row == t.col || t.coeff == 0.0; });
}

Point make_point(double x, std::vector<double> y, std::vector<double> z) {
  for (double& a : y) a = wrap_angle(a);
  for (double& a : z) a = wrap_angle(a);
  return Point{x, std::move(y), std::move(z)};
}

double wrap_angle(double a) {
  double r = std::fmod(a, kPeriod);
  if (r < 0.0) r += kPeriod;
  if (r >= kPeriod) r -= kPeriod;
  return r;
}

double periodic_difference(double a, double b) {
  double d = std::fmod(a - b, kPeriod);
  if (d >= 0.5 * kPeriod) d -= kPeriod;
  if (d < -0.5 * kPeriod) d += kPeriod;
  return d;
}

namespace detail {

MetricAtPoint metric_at(const PhiModel& model, double x) {
  if (!(x > 0.0)) throw DomainError("x must be positive");
  const int m = model.m();
  MetricAtPoint out;
  out.g = Eigen::MatrixXd::Zero(m, m);
  out.g(0, 0) = std::pow(x, -4);
  for (int i = 1; i <= model.b; ++i) out.g(i, i) = 1.0 / (x * x);
  for (int i = model.b + 1; i < m; ++i) out.g(i, i) = 1.0;

  if (is_exact(model)) {
    out.g_inv = out.g.diagonal().cwiseInverse().asDiagonal();
    out.sqrt_det = std::pow(x, -2.0 - model.b);
    return out;
  }

  for (const auto& t : model.perturbation) {
    const double v = t.coeff * std::pow(x, t.power);
    out.g(t.row, t.col) += v;
    if (t.row != t.col) out.g(t.col, t.row) += v;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(out.g);
  if (llt.info() != Eigen::Success) {
    throw MetricDegeneracyError("metric is not positive definite at x = " + format_double(x));
  }
  out.g_inv = llt.solve(Eigen::MatrixXd::Identity(m, m));
  const Eigen::MatrixXd l = llt.matrixL();
  out.sqrt_det = l.diagonal().prod();
  if (!(out.sqrt_det > 0.0) || !std::isfinite(out.sqrt_det)) {
    throw MetricDegeneracyError("degenerate volume density at x = " + format_double(x));
  }
  return out;
}

double volume_density(const PhiModel& model, double x) { return metric_at(model, x).sqrt_det; }

Eigen::VectorXd flux_derivative(const PhiModel& model, double x) {
  const int m = model.m();
  if (is_exact(model)) {
    // sqrt|g| g^{xx} = x^{-2-b} x^4 = x^{2-b}
    Eigen::VectorXd d = Eigen::VectorXd::Zero(m);
    d(0) = (2.0 - model.b) * std::pow(x, 1.0 - model.b);
    return d;
  }
  const double s = 1e-4 * x;
  return (-flux_coefficients(model, x + 2 * s) + 8.0 * flux_coefficients(model, x + s) -
          8.0 * flux_coefficients(model, x - s) + flux_coefficients(model, x - 2 * s)) /
         (12.0 * s);
}

}  // namespace detail

MetricAtPoint metric_eval(const PhiModel& model, const Point& p) {
  check_point_shape(model, p);
  check_collar(model, p.x);
  return detail::metric_at(model, p.x);
}

LaplacianCoeffs laplacian_coeffs(const PhiModel& model, const Point& p) {
  const MetricAtPoint mp = metric_eval(model, p);
  LaplacianCoeffs c;
  c.second = -mp.g_inv;
  c.first = -detail::flux_derivative(model, p.x) / mp.sqrt_det;
  return c;
}

double volume_element(const PhiModel& model, const Point& p) { return metric_eval(model, p).sqrt_det; }

double perturbation_norm(const PhiModel& model, double x) {
  if (model.perturbation.empty()) return 0.0;
  const int m = model.m();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, m);
  for (const auto& t : model.perturbation) {
    const double v = t.coeff * std::pow(x, t.power);
    h(t.row, t.col) += v;
    if (t.row != t.col) h(t.col, t.row) += v;
  }
  // ghat is diagonal; |h|^2 = sum_ij ghat^{ii} ghat^{jj} h_ij^2
  double sum = 0.0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double scale = std::pow(x, ghat_exponent(model, i) + ghat_exponent(model, j));
      sum += scale * scale * h(i, j) * h(i, j);
    }
  }
  return std::sqrt(sum);
}

double truncated_volume(const PhiModel& model, double r) {
  const double r0 = 1.0 / model.x_max;
  if (r <= r0) return 1.0;
  const double torus = std::pow(kPeriod, model.b + model.f);
  auto density = [&](double rr) { return detail::volume_density(model, 1.0 / rr) / (rr * rr); };
  double total = 0.0;
  double a = r0;
  while (a < r) {
    const double bnd = std::min(r, 1.5 * a);
    total += Gauss::integrate(density, a, bnd);
    a = bnd;
  }
  return 1.0 + torus * total;
}

GrigoryanResult grigoryan_test(const std::function<double(double)>& volume, double r_max,
                               int n_samples) {
  if (!(r_max > 1.0)) throw DomainError("grigoryan_test requires R_max > 1");
  if (n_samples < 4) throw DomainError("grigoryan_test requires at least 4 samples");

  GrigoryanResult res;
  const int n = n_samples;
  res.radii.resize(n);
  res.volumes.resize(n);
  for (int j = 0; j < n; ++j) {
    res.radii[j] = std::pow(r_max, static_cast<double>(j + 1) / n);
    res.volumes[j] = volume(res.radii[j]);
  }

  auto fbar = [&](double r) {
    const double lv = std::log(volume(r));
    if (!(lv > 0.0)) throw DomainError("log volume must be positive on the ladder");
    return r / lv;
  };
  auto integrate = [&](double a, double b) {
    double total = 0.0;
    while (a < b) {
      const double bnd = std::min(b, 1.25 * a);
      total += Gauss::integrate(fbar, a, bnd);
      a = bnd;
    }
    return total;
  };

  res.partial_integrals.assign(n, 0.0);
  bool monotone = true;
  for (int j = 1; j < n; ++j) {
    const double inc = integrate(res.radii[j - 1], res.radii[j]);
    if (!(inc > 0.0)) monotone = false;
    res.partial_integrals[j] = res.partial_integrals[j - 1] + inc;
  }

  // log-log regression over the upper half of the ladder
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int j = n / 2; j < n; ++j) {
    const double lx = std::log(res.radii[j]);
    const double ly = std::log(res.volumes[j]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++cnt;
  }
  res.growth_exponent = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);

  const double decade_start = std::max(res.radii.front(), r_max / 10.0);
  res.last_decade_increment = integrate(decade_start, r_max);
  const double total = res.partial_integrals.back();
  res.verdict = (monotone && res.last_decade_increment > 0.1 * total) ? Verdict::Complete
                                                                       : Verdict::Inconclusive;
  return res;
}

GrigoryanResult grigoryan_test(const PhiModel& model, double r_max, int n_samples) {
  model.validate();
  return grigoryan_test([&](double r) { return truncated_volume(model, r); }, r_max, n_samples);
}

namespace {

struct SquaredParts {
  double dx2, dy2, dz2, sum_x;
};

SquaredParts squared_parts(const Point& p, const Point& q) {
  if (p.y.size() != q.y.size() || p.z.size() != q.z.size()) {
    throw DomainError("points have different dimensions");
  }
  SquaredParts s{};
  s.dx2 = (p.x - q.x) * (p.x - q.x);
  for (std::size_t i = 0; i < p.y.size(); ++i) {
    const double d = periodic_difference(p.y[i], q.y[i]);
    s.dy2 += d * d;
  }
  for (std::size_t i = 0; i < p.z.size(); ++i) {
    const double d = periodic_difference(p.z[i], q.z[i]);
    s.dz2 += d * d;
  }
  s.sum_x = p.x + q.x;
  return s;
}

}  // namespace

double phi_distance(const Point& p, const Point& q) {
  const SquaredParts s = squared_parts(p, q);
  const double w2 = s.sum_x * s.sum_x;
  return std::sqrt(s.dx2 + w2 * s.dy2 + w2 * w2 * s.dz2);
}

double phi_distance_classical(const Point& p, const Point& q) {
  const SquaredParts s = squared_parts(p, q);
  const double w2 = s.sum_x * s.sum_x;
  return std::sqrt(s.dx2 / (w2 * w2) + s.dy2 / w2 + s.dz2);
}

std::map<std::string, std::string> to_key_values(const PhiModel& model) {
  std::map<std::string, std::string> kv;
  kv["kind"] = to_string(model.kind);
  kv["b"] = std::to_string(model.b);
  kv["f"] = std::to_string(model.f);
  kv["x_min"] = format_double(model.x_min);
  kv["x_max"] = format_double(model.x_max);
  for (const auto& t : model.perturbation) {
    const int r = std::min(t.row, t.col);
    const int c = std::max(t.row, t.col);
    kv["h_" + coordinate_name(model, r) + "_" + coordinate_name(model, c)] =
        format_double(t.coeff) + " " + format_double(t.power);
  }
  return kv;
}

PhiModel model_from_key_values(const std::map<std::string, std::string>& kv) {
  auto get = [&](const std::string& key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  auto to_int = [](const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const int out = std::stoi(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw ConfigError("model." + key + ": expected an integer, got '" + v + "'");
    }
  };
  auto to_double = [](const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const double out = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw ConfigError("model." + key + ": expected a number, got '" + v + "'");
    }
  };

  const std::string* kind = get("kind");
  if (!kind) throw ConfigError("missing key model.kind");

  PhiModel model;
  model.kind = model_kind_from_string(*kind);
  for (const auto& [key, value] : kv) {
    if (key == "kind" || key.rfind("h_", 0) == 0) continue;
    if (key == "b") {
      model.b = to_int(key, value);
    } else if (key == "f") {
      model.f = to_int(key, value);
    } else if (key == "m") {
      const int m = to_int(key, value);
      if (model.kind != ModelKind::EuclideanRadial) {
        throw ConfigError("model.m is only accepted for EuclideanRadial (use b and f)");
      }
      model.b = m - 1;
      model.f = 0;
    } else if (key == "x_min") {
      model.x_min = to_double(key, value);
    } else if (key == "x_max") {
      model.x_max = to_double(key, value);
    } else {
      throw ConfigError("unknown key model." + key);
    }
  }
  if (model.kind == ModelKind::EuclideanRadial && !get("m")) {
    model.f = 0;
    if (!get("b")) model.b = 1;
  }
  for (const auto& [key, value] : kv) {
    if (key.rfind("h_", 0) != 0) continue;
    const std::string rest = key.substr(2);
    const auto sep = rest.find('_');
    if (sep == std::string::npos) throw ConfigError("bad perturbation key model." + key);
    PerturbationTerm t;
    t.row = coordinate_index(model, rest.substr(0, sep));
    t.col = coordinate_index(model, rest.substr(sep + 1));
    std::istringstream is(value);
    if (!(is >> t.coeff >> t.power)) {
      throw ConfigError("model." + key + ": expected 'coeff power'");
    }
    model.perturbation.push_back(t);
  }
  try {
    model.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return model;
}

}  // namespace phiheat::geometry
