#include "phiheat/solver.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

#include <boost/math/quadrature/gauss.hpp>

#include "phiheat/errors.hpp"
#include "phiheat/holder.hpp"
#include "phiheat/parallel.hpp"

namespace phiheat::solver {

namespace {

using Gauss = boost::math::quadrature::gauss<double, 10>;

void check_compatible(const geometry::PhiModel& model, const Grid& grid) {
  if (grid.b() != model.b || grid.f() != model.f) {
    throw ConfigError("grid dimensions (b, f) do not match the model");
  }
  const auto& x = grid.x();
  const double slack = 1e-12 * model.x_max;
  if (x.front() < model.x_min - slack || x.back() > model.x_max + slack) {
    throw ConfigError("grid x-nodes leave the model collar");
  }
  if (grid.nt() < 2) throw ConfigError("grid needs at least two time nodes");
}

void require_same_layout(const Grid& a, const Grid& b, const char* what) {
  if (a.nx() != b.nx() || a.n_modes() != b.n_modes() || a.nt() != b.nt()) {
    throw DomainError(std::string(what) + ": field layout does not match the operator grid");
  }
}

}  // namespace

HeatOperator discretize(const geometry::PhiModel& model, GridPtr grid, StepperOptions options) {
  model.validate();
  check_compatible(model, *grid);
  if (model.kind == geometry::ModelKind::PerturbedProduct && !model.perturbation_is_diagonal()) {
    throw ConfigError("off-diagonal perturbations couple Fourier modes; only diagonal terms are supported");
  }
  if (options.euler_startup_steps < 0) throw ConfigError("euler_startup_steps must be nonnegative");

  HeatOperator op;
  op.model_ = model;
  op.grid_ = grid;
  op.dt_ = grid->dt();
  op.options_ = options;

  const auto& x = grid->x();
  const std::size_t nx = x.size();
  const std::size_t nm = grid->n_modes();

  std::vector<double> face(nx + 1);
  face[0] = x.front();
  face[nx] = x.back();
  for (std::size_t i = 1; i < nx; ++i) face[i] = 0.5 * (x[i - 1] + x[i]);

  auto density = [&](double xx) { return geometry::detail::volume_density(model, xx); };
  op.volumes_.resize(nx);
  op.density_.resize(nx);
  std::vector<std::vector<double>> ginv_diag(nx);
  for (std::size_t i = 0; i < nx; ++i) {
    op.volumes_[i] = Gauss::integrate(density, face[i], face[i + 1]);
    const auto mp = geometry::detail::metric_at(model, x[i]);
    op.density_[i] = mp.sqrt_det;
    ginv_diag[i].resize(model.m());
    for (int d = 0; d < model.m(); ++d) ginv_diag[i][d] = mp.g_inv(d, d);
  }
  // conductance of interior faces: a(x_{i+1/2}) / (x_{i+1} - x_i)
  std::vector<double> cond(nx + 1, 0.0);
  for (std::size_t i = 1; i < nx; ++i) {
    const auto mp = geometry::detail::metric_at(model, face[i]);
    cond[i] = mp.sqrt_det * mp.g_inv(0, 0) / (x[i] - x[i - 1]);
  }

  op.masses_.resize(nm);
  op.matrices_.resize(nm);
  op.sweep_upper_.resize(nm);
  op.inv_pivot_.resize(nm);
  const double half = 0.5 * op.dt_;
  for (std::size_t m = 0; m < nm; ++m) {
    const Mode& mode = grid->modes()[m];
    auto& mass = op.masses_[m];
    mass.assign(nx, 0.0);
    for (std::size_t i = 0; i < nx; ++i) {
      for (int d = 0; d < model.b; ++d) mass[i] += ginv_diag[i][1 + d] * mode.k[d] * mode.k[d];
      for (int d = 0; d < model.f; ++d) {
        mass[i] += ginv_diag[i][1 + model.b + d] * mode.l[d] * mode.l[d];
      }
    }
    Tridiagonal& a = op.matrices_[m];
    a.lower.assign(nx, 0.0);
    a.diag.assign(nx, 0.0);
    a.upper.assign(nx, 0.0);
    for (std::size_t i = 0; i < nx; ++i) {
      const double cm = cond[i] / op.volumes_[i];
      const double cp = cond[i + 1] / op.volumes_[i];
      a.lower[i] = -cm;
      a.upper[i] = -cp;
      a.diag[i] = cm + cp + mass[i];
    }

    auto& c = op.sweep_upper_[m];
    auto& p = op.inv_pivot_[m];
    c.assign(nx, 0.0);
    p.assign(nx, 0.0);
    double prev_c = 0.0;
    for (std::size_t i = 0; i < nx; ++i) {
      const double lo = half * a.lower[i];
      const double piv = 1.0 + half * a.diag[i] - (i > 0 ? lo * prev_c : 0.0);
      if (!(std::abs(piv) > 1e-300) || !std::isfinite(piv)) {
        throw NumericalError("singular Crank-Nicolson factorization at mode " + mode_label(mode) +
                             ", node " + std::to_string(i));
      }
      p[i] = 1.0 / piv;
      c[i] = half * a.upper[i] * p[i];
      prev_c = c[i];
    }
  }
  return op;
}

void HeatOperator::apply(std::size_t mode, std::span<const cplx> u, std::span<cplx> out) const {
  const Tridiagonal& a = matrices_[mode];
  const std::size_t nx = u.size();
  for (std::size_t i = 0; i < nx; ++i) {
    cplx v = a.diag[i] * u[i];
    if (i > 0) v += a.lower[i] * u[i - 1];
    if (i + 1 < nx) v += a.upper[i] * u[i + 1];
    out[i] = v;
  }
}

void HeatOperator::apply_explicit(std::size_t mode, std::span<const cplx> u,
                                  std::span<cplx> out) const {
  apply(mode, u, out);
  const double half = 0.5 * dt_;
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] - half * out[i];
}

void HeatOperator::solve_implicit(std::size_t mode, std::span<cplx> rhs) const {
  const auto& lower = matrices_[mode].lower;
  const auto& c = sweep_upper_[mode];
  const auto& p = inv_pivot_[mode];
  const double half = 0.5 * dt_;
  const std::size_t nx = rhs.size();
  rhs[0] *= p[0];
  for (std::size_t i = 1; i < nx; ++i) rhs[i] = (rhs[i] - half * lower[i] * rhs[i - 1]) * p[i];
  for (std::size_t i = nx - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
}

Field HeatOperator::apply(const Field& u) const {
  const Field v = u.materialized();
  if (v.grid().nx() != grid_->nx() || v.grid().n_modes() != grid_->n_modes()) {
    throw DomainError("apply: field layout does not match the operator grid");
  }
  Field out(v.grid_ptr());
  const std::size_t nm = grid_->n_modes();
  parallel_for(nm, [&](std::size_t m) {
    for (std::size_t n = 0; n < v.grid().nt(); ++n) apply(m, v.profile(n, m), out.profile(n, m));
  });
  return out;
}

Field evolve(const HeatOperator& op, const Field& u0) {
  const Grid& g = op.grid();
  const Field start = u0.materialized();
  if (start.grid().nx() != g.nx() || start.grid().n_modes() != g.n_modes()) {
    throw DomainError("evolve: initial data layout does not match the operator grid");
  }
  Field out(op.grid_ptr());
  const std::size_t nx = g.nx();
  const int substeps = g.substeps();
  const int startup = op.options().euler_startup_steps;

  parallel_for(g.n_modes(), [&](std::size_t m) {
    std::vector<cplx> u(start.profile(0, m).begin(), start.profile(0, m).end());
    std::vector<cplx> work(nx);
    std::copy(u.begin(), u.end(), out.profile(0, m).begin());
    int step = 0;
    for (std::size_t n = 1; n < g.nt(); ++n) {
      for (int s = 0; s < substeps; ++s, ++step) {
        if (step < startup) {
          op.solve_implicit(m, u);
          op.solve_implicit(m, u);
        } else {
          op.apply_explicit(m, u, work);
          op.solve_implicit(m, work);
          u.swap(work);
        }
      }
      std::copy(u.begin(), u.end(), out.profile(n, m).begin());
    }
  });
  if (!out.all_finite()) throw NumericalError("evolve produced non-finite values");
  return out;
}

Field heat_convolve(const HeatOperator& op, const Field& ell, double gamma) {
  const Grid& g = op.grid();
  require_same_layout(ell.grid(), g, "heat_convolve");
  Field src = ell.materialized();
  if (gamma != 0.0) src = multiply_by_power(src, gamma);

  Field out(op.grid_ptr());
  const std::size_t nx = g.nx();
  const int substeps = g.substeps();
  const double half = 0.5 * op.dt();

  parallel_for(g.n_modes(), [&](std::size_t m) {
    std::vector<cplx> u(nx, cplx{}), work(nx), l0(nx), l1(nx);
    for (std::size_t n = 1; n < g.nt(); ++n) {
      const auto a = src.profile(n - 1, m);
      const auto b = src.profile(n, m);
      for (int s = 0; s < substeps; ++s) {
        const double w0 = static_cast<double>(s) / substeps;
        const double w1 = static_cast<double>(s + 1) / substeps;
        for (std::size_t i = 0; i < nx; ++i) {
          l0[i] = a[i] + w0 * (b[i] - a[i]);
          l1[i] = a[i] + w1 * (b[i] - a[i]);
        }
        op.apply_explicit(m, u, work);
        for (std::size_t i = 0; i < nx; ++i) work[i] += half * (l0[i] + l1[i]);
        op.solve_implicit(m, work);
        u.swap(work);
      }
      std::copy(u.begin(), u.end(), out.profile(n, m).begin());
    }
  });
  if (gamma != 0.0) out = multiply_by_power(out, -gamma);
  if (!out.all_finite()) throw NumericalError("heat_convolve produced non-finite values");
  return out;
}

Field heat_convolve_weighted(const HeatOperator& op, const Field& u) {
  Field data = u;
  data.set_gamma(0.0);
  Field out = heat_convolve(op, data, u.gamma());
  out.set_gamma(u.gamma());
  return out;
}

ManufacturedCase manufactured_case(const HeatOperator& op, double center, double width) {
  const Grid& g = op.grid();
  if (g.b() < 1 || g.k_max() < 1) throw ConfigError("manufactured case needs a resolved base circle");
  if (!(width > 0.0)) throw DomainError("manufactured case needs width > 0");
  const geometry::PhiModel& model = op.model();
  const double s2 = width * width;
  auto phi = [&](double x) { return std::exp(-(x - center) * (x - center) / (2 * s2)); };

  // Static parts on a two-node time axis, then assembled linearly in t.
  const GridPtr still = g.with_time(g.horizon(), 1, 1);
  const Field a = project(still, [&](double x, std::span<const double> y, std::span<const double>, double) {
    return phi(x) * std::sin(y[0]);
  });
  const Field lap = project(still, [&](double x, std::span<const double> y, std::span<const double> z,
                                      double) {
    const auto c = geometry::laplacian_coeffs(
        model, geometry::make_point(x, {y.begin(), y.end()}, {z.begin(), z.end()}));
    const double p = phi(x);
    const double dp = -(x - center) / s2 * p;
    const double ddp = ((x - center) * (x - center) / (s2 * s2) - 1.0 / s2) * p;
    const double sy = std::sin(y[0]), cy = std::cos(y[0]);
    return c.second(0, 0) * ddp * sy + 2 * c.second(0, 1) * dp * cy - c.second(1, 1) * p * sy +
           c.first(0) * dp * sy + c.first(1) * p * cy;
  });

  ManufacturedCase mc{Field(op.grid_ptr()), Field(op.grid_ptr())};
  for (std::size_t n = 0; n < g.nt(); ++n) {
    const double t = g.t()[n];
    for (std::size_t m = 0; m < g.n_modes(); ++m) {
      const auto pa = a.profile(0, m);
      const auto pl = lap.profile(0, m);
      auto ell = mc.ell.profile(n, m);
      auto ex = mc.exact.profile(n, m);
      for (std::size_t i = 0; i < g.nx(); ++i) {
        ell[i] = pa[i] + t * pl[i];
        ex[i] = t * pa[i];
      }
    }
  }
  return mc;
}

double manufactured_error(const HeatOperator& op, double center, double width) {
  const ManufacturedCase mc = manufactured_case(op, center, width);
  Field err = heat_convolve(op, mc.ell);
  err -= mc.exact;
  const PhysicalField v = synthesize(err, holder::default_angle_count(op.grid()));
  double worst = 0.0;
  for (double e : v.values) worst = std::max(worst, std::abs(e));
  return worst;
}

double integrate(const HeatOperator& op, const Field& u, std::size_t n) {
  const Field v = u.materialized();
  const auto& x = op.grid().x();
  const auto w = op.node_density();
  const auto c = v.profile(n, op.grid().zero_mode());
  double total = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    total += 0.5 * (x[i] - x[i - 1]) * (w[i] * c[i].real() + w[i - 1] * c[i - 1].real());
  }
  return total * std::pow(geometry::kPeriod, op.grid().b() + op.grid().f());
}

double scheme_mass(const HeatOperator& op, const Field& u, std::size_t n) {
  const Field v = u.materialized();
  const auto vol = op.cell_volumes();
  const auto c = v.profile(n, op.grid().zero_mode());
  double total = 0.0;
  for (std::size_t i = 0; i < vol.size(); ++i) total += vol[i] * c[i].real();
  return total * std::pow(geometry::kPeriod, op.grid().b() + op.grid().f());
}

double energy(const HeatOperator& op, const Field& u, std::size_t n) {
  const Field v = u.materialized();
  const auto vol = op.cell_volumes();
  double total = 0.0;
  for (std::size_t m = 0; m < op.grid().n_modes(); ++m) {
    const auto c = v.profile(n, m);
    for (std::size_t i = 0; i < vol.size(); ++i) total += vol[i] * std::norm(c[i]);
  }
  return total;
}

MassReport mass_conservation_check(const HeatOperator& op, const Field& u0) {
  const Field start = u0.materialized();
  const Grid& g = op.grid();
  double peak = 0.0, near_edge = 0.0;
  const std::size_t edge = std::min<std::size_t>(10, g.nx());
  for (std::size_t m = 0; m < g.n_modes(); ++m) {
    const auto c = start.profile(0, m);
    for (std::size_t i = 0; i < c.size(); ++i) {
      peak = std::max(peak, std::abs(c[i]));
      if (i < edge) near_edge = std::max(near_edge, std::abs(c[i]));
    }
  }
  const bool constant_data = [&] {
    for (std::size_t m = 0; m < g.n_modes(); ++m) {
      const auto c = start.profile(0, m);
      for (std::size_t i = 0; i < c.size(); ++i) {
        const cplx ref = m == g.zero_mode() ? c[0] : cplx{};
        if (std::abs(c[i] - ref) > 1e-14 * std::max(peak, 1e-300)) return false;
      }
    }
    return true;
  }();
  if (!constant_data && near_edge > 1e-8 * peak) {
    throw DomainError("mass check needs initial data supported at least 10 cells away from x_min");
  }

  MassReport rep;
  const Field traj = evolve(op, start);
  const double q0 = integrate(op, traj, 0);
  const double s0 = scheme_mass(op, traj, 0);
  double scale = 0.0;
  for (std::size_t i = 0; i < g.nx(); ++i) {
    double c = 0.0;
    for (std::size_t m = 0; m < g.n_modes(); ++m) c = std::max(c, std::abs(start.at(0, m, i)));
    scale += op.cell_volumes()[i] * c;
  }
  if (!(std::abs(s0) > 1e-12 * scale) || !(std::abs(q0) > 0.0)) {
    throw DegenerateInputError("initial data has zero total mass");
  }
  for (std::size_t n = 0; n < g.nt(); ++n) {
    const double q = integrate(op, traj, n);
    rep.integrals.push_back(q);
    rep.max_drift = std::max(rep.max_drift, std::abs(q - q0) / std::abs(q0));
    rep.scheme_drift =
        std::max(rep.scheme_drift, std::abs(scheme_mass(op, traj, n) - s0) / std::abs(s0));
  }
  return rep;
}

std::string mode_label(const Mode& mode) {
  std::string s;
  for (int v : mode.k) s += (s.empty() ? "" : ":") + std::to_string(v);
  for (int v : mode.l) s += (s.empty() ? "" : ":") + std::to_string(v);
  return s.empty() ? "0" : s;
}

void write_csv(const Field& u, std::ostream& os) {
  const Grid& g = u.grid();
  const Field v = u.materialized();
  char buf[160];
  os << "t,x,mode,re,im\n";
  for (std::size_t n = 0; n < g.nt(); ++n) {
    for (std::size_t m = 0; m < g.n_modes(); ++m) {
      const std::string label = mode_label(g.modes()[m]);
      for (std::size_t i = 0; i < g.nx(); ++i) {
        const cplx c = v.at(n, m, i);
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%s,%.17g,%.17g\n", g.t()[n], g.x()[i],
                      label.c_str(), c.real(), c.imag());
        os << buf;
      }
    }
  }
}

namespace {

constexpr char kMagic[8] = {'P', 'H', 'I', 'F', 'L', 'D', '0', '1'};

template <class T>
void put(std::ostream& os, T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    os.write(bytes.data(), sizeof(T));
  } else {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
}

template <class T>
T get(std::istream& is) {
  std::array<char, sizeof(T)> bytes{};
  if (!is.read(bytes.data(), sizeof(T))) throw ConfigError("truncated field dump");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

}  // namespace

void write_binary(const Field& u, std::ostream& os) {
  const Grid& g = u.grid();
  os.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(os, g.b());
  put<std::uint32_t>(os, g.f());
  put<std::uint32_t>(os, g.k_max());
  put<std::uint32_t>(os, g.l_max());
  put<std::uint32_t>(os, g.substeps());
  put<std::uint64_t>(os, g.nx());
  put<std::uint64_t>(os, g.n_modes());
  put<std::uint64_t>(os, g.nt());
  put<double>(os, u.gamma());
  for (double x : g.x()) put<double>(os, x);
  for (double t : g.t()) put<double>(os, t);
  for (const cplx& c : u.data()) {
    put<double>(os, c.real());
    put<double>(os, c.imag());
  }
}

Field read_binary(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw ConfigError("not a field dump (bad magic)");
  }
  const int b = static_cast<int>(get<std::uint32_t>(is));
  const int f = static_cast<int>(get<std::uint32_t>(is));
  const int k = static_cast<int>(get<std::uint32_t>(is));
  const int l = static_cast<int>(get<std::uint32_t>(is));
  const int substeps = static_cast<int>(get<std::uint32_t>(is));
  const auto nx = get<std::uint64_t>(is);
  const auto nm = get<std::uint64_t>(is);
  const auto nt = get<std::uint64_t>(is);
  const double gamma = get<double>(is);
  if (nt < 2 || nx > (1u << 26) || nt > (1u << 26)) throw ConfigError("implausible field dump header");
  std::vector<double> x(nx), t(nt);
  for (auto& v : x) v = get<double>(is);
  for (auto& v : t) v = get<double>(is);
  auto grid = Grid::make(b, f, std::move(x), k, l, t.back(), static_cast<int>(nt - 1), substeps);
  if (grid->n_modes() != nm) throw ConfigError("field dump mode count does not match header");
  Field u(grid, gamma);
  for (auto& c : u.data()) {
    const double re = get<double>(is);
    const double im = get<double>(is);
    c = {re, im};
  }
  return u;
}

}  // namespace phiheat::solver
