#include "phiheat/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "phiheat/errors.hpp"
#include "phiheat/parallel.hpp"

namespace phiheat {

namespace {

// Separable transform between mode tensors (extent 2h+1 per dim, -h first)
// and angle lattices (n points per dim). Last dimension varies fastest.
class SeparableTransform {
public:
  SeparableTransform(std::vector<int> half_widths, std::size_t n_angles)
      : h_(std::move(half_widths)), n_(n_angles) {
    for (int h : h_) {
      const std::size_t e = 2 * h + 1;
      std::vector<cplx> tw(n_ * e);
      for (std::size_t j = 0; j < n_; ++j) {
        const double theta = lattice_angle(j, n_);
        for (std::size_t k = 0; k < e; ++k) {
          const double kk = static_cast<double>(k) - h;
          tw[j * e + k] = std::polar(1.0, kk * theta);
        }
      }
      twiddles_.push_back(std::move(tw));
    }
  }

  std::size_t n_modes() const {
    std::size_t s = 1;
    for (int h : h_) s *= 2 * h + 1;
    return s;
  }
  std::size_t n_points() const {
    std::size_t s = 1;
    for (std::size_t d = 0; d < h_.size(); ++d) s *= n_;
    return s;
  }

  // modes -> lattice values. `work` is scratch.
  void synthesize(std::vector<cplx>& data, std::vector<cplx>& work) const {
    std::vector<std::size_t> ext;
    for (int h : h_) ext.push_back(2 * h + 1);
    for (std::size_t d = 0; d < h_.size(); ++d) {
      apply_axis(data, work, ext, d, n_, [&](std::size_t j, std::size_t k) {
        return twiddles_[d][j * ext[d] + k];
      });
      ext[d] = n_;
      data.swap(work);
    }
  }

  // lattice values -> modes (truncated projection).
  void analyze(std::vector<cplx>& data, std::vector<cplx>& work) const {
    std::vector<std::size_t> ext(h_.size(), n_);
    const double inv = 1.0 / static_cast<double>(n_);
    for (std::size_t d = 0; d < h_.size(); ++d) {
      const std::size_t e = 2 * h_[d] + 1;
      apply_axis(data, work, ext, d, e, [&](std::size_t k, std::size_t j) {
        return std::conj(twiddles_[d][j * e + k]) * inv;
      });
      ext[d] = e;
      data.swap(work);
    }
  }

private:
  template <class Kernel>
  static void apply_axis(const std::vector<cplx>& in, std::vector<cplx>& out,
                         const std::vector<std::size_t>& ext, std::size_t d, std::size_t new_extent,
                         Kernel kernel) {
    std::size_t pre = 1, post = 1;
    for (std::size_t a = 0; a < d; ++a) pre *= ext[a];
    for (std::size_t a = d + 1; a < ext.size(); ++a) post *= ext[a];
    const std::size_t old_extent = ext[d];
    out.assign(pre * new_extent * post, cplx{});
    for (std::size_t p = 0; p < pre; ++p) {
      for (std::size_t j = 0; j < new_extent; ++j) {
        cplx* dst = &out[(p * new_extent + j) * post];
        for (std::size_t k = 0; k < old_extent; ++k) {
          const cplx w = kernel(j, k);
          const double wr = w.real(), wi = w.imag();
          const cplx* src = &in[(p * old_extent + k) * post];
          for (std::size_t q = 0; q < post; ++q) {
            const double sr = src[q].real(), si = src[q].imag();
            dst[q] = cplx(dst[q].real() + wr * sr - wi * si, dst[q].imag() + wr * si + wi * sr);
          }
        }
      }
    }
  }

  std::vector<int> h_;
  std::size_t n_;
  std::vector<std::vector<cplx>> twiddles_;
};

std::size_t max_half_width(const Grid& g) {
  const auto h = g.half_widths();
  return h.empty() ? 0 : static_cast<std::size_t>(*std::max_element(h.begin(), h.end()));
}

}  // namespace

double lattice_angle(std::size_t j, std::size_t n) {
  return 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
}

std::shared_ptr<const Grid> Grid::make(int b, int f, std::vector<double> x_nodes, int k_max,
                                       int l_max, double horizon, int n_intervals, int substeps) {
  if (b < 0 || f < 0) throw ConfigError("grid: b and f must be nonnegative");
  if (x_nodes.size() < 32) throw ConfigError("grid: at least 32 x-nodes required");
  for (std::size_t i = 1; i < x_nodes.size(); ++i) {
    if (!(x_nodes[i] > x_nodes[i - 1])) throw ConfigError("grid: x-nodes must increase strictly");
  }
  if (!(x_nodes.front() > 0.0)) throw ConfigError("grid: x-nodes must be positive");
  if (k_max < 0 || l_max < 0) throw ConfigError("grid: mode bounds must be nonnegative");
  if (!(horizon > 0.0) || n_intervals < 1 || substeps < 1) {
    throw ConfigError("grid: time axis needs T > 0, at least one interval and substep");
  }

  std::shared_ptr<Grid> g(new Grid());
  g->b_ = b;
  g->f_ = f;
  g->k_max_ = b > 0 ? k_max : 0;
  g->l_max_ = f > 0 ? l_max : 0;
  g->substeps_ = substeps;
  g->x_ = std::move(x_nodes);

  const auto hw = g->half_widths();
  std::size_t count = 1;
  for (int h : hw) count *= 2 * h + 1;
  g->modes_.reserve(count);
  std::vector<int> idx(hw.size());
  for (std::size_t d = 0; d < hw.size(); ++d) idx[d] = -hw[d];
  for (std::size_t c = 0; c < count; ++c) {
    Mode mode;
    mode.k.assign(idx.begin(), idx.begin() + b);
    mode.l.assign(idx.begin() + b, idx.end());
    g->modes_.push_back(std::move(mode));
    for (int d = static_cast<int>(hw.size()) - 1; d >= 0; --d) {
      if (++idx[d] <= hw[d]) break;
      idx[d] = -hw[d];
    }
  }
  // lexicographic order from -h to h: negation reverses the index
  g->negated_.resize(count);
  for (std::size_t m = 0; m < count; ++m) g->negated_[m] = count - 1 - m;
  g->zero_mode_ = (count - 1) / 2;

  g->t_.resize(n_intervals + 1);
  for (int n = 0; n <= n_intervals; ++n) g->t_[n] = horizon * n / n_intervals;
  return g;
}

std::vector<double> Grid::log_spaced(double x_min, double x_max, int n) {
  if (!(x_min > 0.0 && x_max > x_min) || n < 2) throw ConfigError("log_spaced: bad arguments");
  std::vector<double> x(n);
  const double lmin = std::log(x_min), lmax = std::log(x_max);
  for (int i = 0; i < n; ++i) x[i] = std::exp(lmin + (lmax - lmin) * i / (n - 1));
  x.front() = x_min;
  x.back() = x_max;
  return x;
}

int Grid::min_log_nodes(double x_min, double x_max, double max_ratio) {
  return static_cast<int>(std::ceil(std::log(x_max / x_min) / std::log(max_ratio))) + 1;
}

std::size_t Grid::find_mode(const std::vector<int>& k, const std::vector<int>& l) const {
  if (static_cast<int>(k.size()) != b_ || static_cast<int>(l.size()) != f_) return modes_.size();
  std::size_t idx = 0;
  const auto hw = half_widths();
  for (std::size_t d = 0; d < hw.size(); ++d) {
    const int v = d < k.size() ? k[d] : l[d - k.size()];
    if (std::abs(v) > hw[d]) return modes_.size();
    idx = idx * (2 * hw[d] + 1) + (v + hw[d]);
  }
  return idx;
}

std::vector<int> Grid::half_widths() const {
  std::vector<int> hw(b_, k_max_);
  hw.insert(hw.end(), f_, l_max_);
  return hw;
}

std::shared_ptr<const Grid> Grid::with_time(double horizon, int n_intervals, int substeps) const {
  return make(b_, f_, x_, k_max_, l_max_, horizon, n_intervals, substeps);
}

std::shared_ptr<const Grid> Grid::truncated_time(std::size_t n_out) const {
  if (n_out < 2 || n_out > t_.size()) throw ConfigError("truncated_time: bad node count");
  return make(b_, f_, x_, k_max_, l_max_, t_[n_out - 1], static_cast<int>(n_out - 1), substeps_);
}

Field::Field(GridPtr grid, double gamma)
    : grid_(std::move(grid)), gamma_(gamma),
      data_(grid_->nt() * grid_->n_modes() * grid_->nx()) {}

Field Field::materialized() const { return factored(0.0); }

Field Field::factored(double gamma) const {
  Field out = *this;
  out.gamma_ = gamma;
  const double shift = gamma_ - gamma;
  if (shift == 0.0) return out;
  const auto& x = grid_->x();
  std::vector<double> w(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) w[i] = std::pow(x[i], shift);
  const std::size_t nx = x.size();
  for (std::size_t s = 0; s < out.data_.size(); ++s) out.data_[s] *= w[s % nx];
  return out;
}

Field& Field::operator+=(const Field& other) {
  if (other.grid_.get() != grid_.get() && other.data_.size() != data_.size()) {
    throw DomainError("field shapes differ");
  }
  if (other.gamma_ != gamma_) return *this += other.factored(gamma_);
  for (std::size_t s = 0; s < data_.size(); ++s) data_[s] += other.data_[s];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  if (other.grid_.get() != grid_.get() && other.data_.size() != data_.size()) {
    throw DomainError("field shapes differ");
  }
  if (other.gamma_ != gamma_) return *this -= other.factored(gamma_);
  for (std::size_t s = 0; s < data_.size(); ++s) data_[s] -= other.data_[s];
  return *this;
}

Field& Field::operator*=(double s) {
  for (auto& v : data_) v *= s;
  return *this;
}

double Field::hermitian_defect() const {
  double worst = 0.0;
  const std::size_t nm = grid_->n_modes();
  for (std::size_t n = 0; n < grid_->nt(); ++n) {
    for (std::size_t m = 0; m < nm; ++m) {
      const auto a = profile(n, m);
      const auto b = profile(n, grid_->negated(m));
      for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - std::conj(b[i])));
    }
  }
  return worst;
}

void Field::enforce_hermitian() {
  const std::size_t nm = grid_->n_modes();
  for (std::size_t n = 0; n < grid_->nt(); ++n) {
    for (std::size_t m = 0; m < nm; ++m) {
      const std::size_t mn = grid_->negated(m);
      if (mn < m) continue;
      auto a = profile(n, m);
      auto b = profile(n, mn);
      for (std::size_t i = 0; i < a.size(); ++i) {
        const cplx avg = 0.5 * (a[i] + std::conj(b[i]));
        a[i] = avg;
        b[i] = std::conj(avg);
      }
    }
  }
}

bool Field::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](const cplx& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

PhysicalField synthesize(const Field& u, std::size_t n_angles) {
  const Grid& g = u.grid();
  const auto hw = g.half_widths();
  PhysicalField out;
  out.nt = g.nt();
  out.nx = g.nx();
  out.dims = static_cast<int>(hw.size());
  out.n_angles = hw.empty() ? 1 : n_angles;
  if (!hw.empty() && n_angles < 1) throw ResolutionError("synthesize: need angle samples");
  const SeparableTransform tr(hw, out.n_angles);
  out.n_points = tr.n_points();
  out.values.resize(out.nt * out.nx * out.n_points);
  const std::size_t nm = g.n_modes();

  parallel_for(out.nt, [&](std::size_t n) {
    std::vector<cplx> buf, work;
    for (std::size_t i = 0; i < out.nx; ++i) {
      buf.resize(nm);
      for (std::size_t m = 0; m < nm; ++m) buf[m] = u.at(n, m, i);
      tr.synthesize(buf, work);
      double* dst = &out.values[(n * out.nx + i) * out.n_points];
      for (std::size_t j = 0; j < out.n_points; ++j) dst[j] = buf[j].real();
    }
  });
  return out;
}

Field analyze(const GridPtr& grid, const PhysicalField& values) {
  const auto hw = grid->half_widths();
  if (values.nt != grid->nt() || values.nx != grid->nx() ||
      values.dims != static_cast<int>(hw.size())) {
    throw DomainError("analyze: physical samples do not match grid");
  }
  const SeparableTransform tr(hw, values.n_angles);
  if (tr.n_points() != values.n_points) throw DomainError("analyze: lattice size mismatch");
  Field out(grid);
  const std::size_t nm = grid->n_modes();
  parallel_for(values.nt, [&](std::size_t n) {
    std::vector<cplx> buf, work;
    for (std::size_t i = 0; i < values.nx; ++i) {
      const double* src = &values.values[(n * values.nx + i) * values.n_points];
      buf.assign(src, src + values.n_points);
      tr.analyze(buf, work);
      for (std::size_t m = 0; m < nm; ++m) out.at(n, m, i) = buf[m];
    }
  });
  out.enforce_hermitian();
  return out;
}

Field project(const GridPtr& grid, const ScalarFunction& fn, std::size_t n_angles) {
  const auto hw = grid->half_widths();
  if (n_angles == 0) n_angles = std::max<std::size_t>(16, 4 * max_half_width(*grid) + 4);
  PhysicalField pv;
  pv.nt = grid->nt();
  pv.nx = grid->nx();
  pv.dims = static_cast<int>(hw.size());
  pv.n_angles = hw.empty() ? 1 : n_angles;
  pv.n_points = 1;
  for (int d = 0; d < pv.dims; ++d) pv.n_points *= pv.n_angles;
  pv.values.resize(pv.nt * pv.nx * pv.n_points);
  const int b = grid->b(), f = grid->f();
  parallel_for(pv.nt, [&](std::size_t n) {
    std::vector<double> y(b), z(f);
    std::vector<std::size_t> idx(pv.dims);
    for (std::size_t i = 0; i < pv.nx; ++i) {
      for (std::size_t j = 0; j < pv.n_points; ++j) {
        std::size_t r = j;
        for (int d = pv.dims - 1; d >= 0; --d) {
          idx[d] = r % pv.n_angles;
          r /= pv.n_angles;
        }
        for (int d = 0; d < b; ++d) y[d] = lattice_angle(idx[d], pv.n_angles);
        for (int d = 0; d < f; ++d) z[d] = lattice_angle(idx[b + d], pv.n_angles);
        pv.values[(n * pv.nx + i) * pv.n_points + j] = fn(grid->x()[i], y, z, grid->t()[n]);
      }
    }
  });
  return analyze(grid, pv);
}

Field product(const Field& a, const Field& b) {
  if (a.data().size() != b.data().size()) throw DomainError("product: field shapes differ");
  const std::size_t n_angles = std::max<std::size_t>(4, 3 * max_half_width(a.grid()) + 2);
  PhysicalField pa = synthesize(a, n_angles);
  const PhysicalField pb = synthesize(b, n_angles);
  for (std::size_t s = 0; s < pa.values.size(); ++s) pa.values[s] *= pb.values[s];
  Field out = analyze(a.grid_ptr(), pa);
  out.set_gamma(a.gamma() + b.gamma());
  return out;
}

Field multiply_by(const Field& u, const std::function<double(double)>& w) {
  Field out = u;
  const auto& x = u.grid().x();
  std::vector<double> wx(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) wx[i] = w(x[i]);
  const std::size_t nx = x.size();
  auto& d = out.data();
  for (std::size_t s = 0; s < d.size(); ++s) d[s] *= wx[s % nx];
  return out;
}

Field multiply_by_power(const Field& u, double gamma) {
  if (gamma == 0.0) return u;
  return multiply_by(u, [gamma](double x) { return std::pow(x, gamma); });
}

}  // namespace phiheat
