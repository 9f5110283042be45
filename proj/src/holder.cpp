#include "phiheat/holder.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "phiheat/errors.hpp"
#include "phiheat/geometry.hpp"
#include "phiheat/parallel.hpp"

namespace phiheat::holder {

int PhiMultiIndex::order() const {
  int s = q + 2 * t_order;
  for (int v : beta) s += v;
  for (int v : a) s += v;
  return s;
}

std::string PhiMultiIndex::label() const {
  std::string s = "q" + std::to_string(q);
  for (int v : beta) s += ".b" + std::to_string(v);
  for (int v : a) s += ".a" + std::to_string(v);
  return s + ".t" + std::to_string(t_order);
}

std::vector<PhiMultiIndex> multi_indices(int k, int b, int f, bool with_time) {
  std::vector<PhiMultiIndex> out;
  const int dims = b + f;
  // enumerate angle orders with total <= k by odometer
  std::vector<int> ang(dims, 0);
  std::vector<std::vector<int>> angle_sets;
  while (true) {
    int s = 0;
    for (int v : ang) s += v;
    if (s <= k) angle_sets.push_back(ang);
    int d = dims - 1;
    while (d >= 0 && ++ang[d] > k) ang[d--] = 0;
    if (d < 0) break;
  }
  for (int t = 0; with_time ? 2 * t <= k : t == 0; ++t) {
    for (int q = 0; q + 2 * t <= k; ++q) {
      for (const auto& set : angle_sets) {
        PhiMultiIndex idx;
        idx.q = q;
        idx.t_order = t;
        idx.beta.assign(set.begin(), set.begin() + b);
        idx.a.assign(set.begin() + b, set.end());
        if (idx.order() <= k) out.push_back(std::move(idx));
      }
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const PhiMultiIndex& l, const PhiMultiIndex& r) { return l.order() < r.order(); });
  return out;
}

void WeightedSpaceSpec::validate() const {
  if (k < 0) throw DomainError("space spec needs k >= 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("space spec needs 0 < alpha < 1");
  if (!std::isfinite(gamma)) throw DomainError("space spec needs a finite weight");
}

std::string WeightedSpaceSpec::label() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "k=%d;alpha=%g;gamma=%g", k, alpha, gamma);
  return buf;
}

std::vector<double> first_derivative_weights(double x0, const std::vector<double>& s) {
  const std::size_t n = s.size();
  std::vector<double> w(n, 0.0);
  // derivative of the Lagrange basis polynomial L_k at x0
  for (std::size_t k = 0; k < n; ++k) {
    double total = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      if (m == k) continue;
      double term = 1.0 / (s[k] - s[m]);
      for (std::size_t l = 0; l < n; ++l) {
        if (l == k || l == m) continue;
        term *= (x0 - s[l]) / (s[k] - s[l]);
      }
      total += term;
    }
    w[k] = total;
  }
  return w;
}

namespace {

constexpr std::size_t kStencil = 5;

struct XStencil {
  std::vector<std::size_t> start;
  std::vector<std::array<double, kStencil>> weights;
};

XStencil x_stencil(const std::vector<double>& x) {
  const std::size_t nx = x.size();
  XStencil st;
  st.start.resize(nx);
  st.weights.resize(nx);
  for (std::size_t i = 0; i < nx; ++i) {
    const std::size_t s = std::min(i >= 2 ? i - 2 : 0, nx - kStencil);
    st.start[i] = s;
    const auto w = first_derivative_weights(x[i], std::vector<double>(x.begin() + s, x.begin() + s + kStencil));
    std::copy(w.begin(), w.end(), st.weights[i].begin());
  }
  return st;
}

void apply_x(Field& u) {
  const auto& x = u.grid().x();
  const XStencil st = x_stencil(x);
  const std::size_t nx = x.size();
  const std::size_t nm = u.grid().n_modes();
  parallel_for(u.grid().nt(), [&](std::size_t n) {
    std::vector<cplx> tmp(nx);
    for (std::size_t m = 0; m < nm; ++m) {
      auto p = u.profile(n, m);
      for (std::size_t i = 0; i < nx; ++i) {
        cplx d{};
        for (std::size_t r = 0; r < kStencil; ++r) d += st.weights[i][r] * p[st.start[i] + r];
        tmp[i] = x[i] * x[i] * d;
      }
      std::copy(tmp.begin(), tmp.end(), p.begin());
    }
  });
}

void apply_t(Field& u) {
  const Grid& g = u.grid();
  const std::size_t nt = g.nt();
  const double h = g.output_dt();
  const std::size_t nm = g.n_modes(), nx = g.nx();
  Field src = u;
  for (std::size_t n = 0; n < nt; ++n) {
    for (std::size_t m = 0; m < nm; ++m) {
      for (std::size_t i = 0; i < nx; ++i) {
        cplx d;
        if (n == 0) {
          d = (-3.0 * src.at(0, m, i) + 4.0 * src.at(1, m, i) - src.at(2, m, i)) / (2 * h);
        } else if (n + 1 == nt) {
          d = (3.0 * src.at(n, m, i) - 4.0 * src.at(n - 1, m, i) + src.at(n - 2, m, i)) / (2 * h);
        } else {
          d = (src.at(n + 1, m, i) - src.at(n - 1, m, i)) / (2 * h);
        }
        u.at(n, m, i) = d;
      }
    }
  }
}


// Pairs and their geometric data for one lattice and policy.
class PairSet {
public:
  PairSet(const Grid& g, const SamplerPolicy& policy) {
    n_angles_ = policy.n_angles ? policy.n_angles : default_angle_count(g);
    const auto hw = g.half_widths();
    dims_ = static_cast<int>(hw.size());
    if (dims_ == 0) n_angles_ = 1;
    n_points_ = 1;
    for (int d = 0; d < dims_; ++d) n_points_ *= n_angles_;
    nx_ = g.nx();
    t_first_ = policy.t_first;
    t_last_ = std::min(policy.t_last, g.nt() - 1);
    if (t_first_ > t_last_) throw DomainError("empty time window for Hoelder sampling");
    if (policy.n_pairs == 0) throw DomainError("Hoelder estimate needs at least one sample pair");

    const std::size_t nwin = t_last_ - t_first_ + 1;
    std::mt19937_64 rng(policy.seed);
    auto uniform = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
    std::uniform_int_distribution<int> off(-policy.near_offset, policy.near_offset);
    auto random_point = [&] { return SamplePoint{t_first_ + uniform(nwin), uniform(nx_), uniform(n_points_)}; };
    auto shift_angle = [&](std::size_t j) {
      // move each lattice angle by a small periodic offset
      std::size_t out = 0, stride = 1;
      std::vector<std::size_t> idx(dims_);
      for (int d = dims_ - 1; d >= 0; --d) {
        idx[d] = j % n_angles_;
        j /= n_angles_;
      }
      for (int d = dims_ - 1; d >= 0; --d) {
        const long v = (static_cast<long>(idx[d]) + off(rng)) % static_cast<long>(n_angles_);
        out += static_cast<std::size_t>(v < 0 ? v + n_angles_ : v) * stride;
        stride *= n_angles_;
      }
      return out;
    };
    auto shift_clamped = [&](std::size_t v, std::size_t lo, std::size_t hi) {
      const long s = static_cast<long>(v) + off(rng);
      return static_cast<std::size_t>(std::clamp<long>(s, static_cast<long>(lo), static_cast<long>(hi)));
    };

    pairs_.reserve(policy.n_pairs);
    std::size_t guard = 0;
    while (pairs_.size() < policy.n_pairs) {
      if (++guard > 64 * policy.n_pairs + 1024) throw DomainError("lattice too small to draw distinct pairs");
      SamplePair pr;
      switch (pairs_.size() % 4) {
        case 0:
        case 1:
          pr.a = random_point();
          pr.b.n = shift_clamped(pr.a.n, t_first_, t_last_);
          pr.b.i = shift_clamped(pr.a.i, 0, nx_ - 1);
          pr.b.j = shift_angle(pr.a.j);
          break;
        case 2:
          pr.a = random_point();
          pr.b = random_point();
          pr.a.i = uniform(std::max<std::size_t>(1, nx_ / 2));
          pr.b.i = nx_ / 2 + uniform(nx_ - nx_ / 2);
          break;
        default:
          pr.a = random_point();
          pr.b = random_point();
      }
      if (pr.a.n == pr.b.n && pr.a.i == pr.b.i && pr.a.j == pr.b.j) continue;
      pairs_.push_back(pr);
    }

    // geometry per pair
    const auto& x = g.x();
    const auto& t = g.t();
    const int b = g.b();
    auto point = [&](std::size_t i, std::size_t j) {
      std::vector<double> ang(dims_);
      for (int d = dims_ - 1; d >= 0; --d) {
        ang[d] = lattice_angle(j % n_angles_, n_angles_);
        j /= n_angles_;
      }
      return geometry::Point{x[i], std::vector<double>(ang.begin(), ang.begin() + b),
                             std::vector<double>(ang.begin() + b, ang.end())};
    };
    dist_.resize(pairs_.size());
    dt_.resize(pairs_.size());
    for (std::size_t p = 0; p < pairs_.size(); ++p) {
      const auto& pr = pairs_[p];
      dist_[p] = geometry::phi_distance(point(pr.a.i, pr.a.j), point(pr.b.i, pr.b.j));
      dt_[p] = std::abs(t[pr.a.n] - t[pr.b.n]);
    }
  }

  std::size_t n_angles() const { return n_angles_; }
  std::size_t t_first() const { return t_first_; }
  std::size_t t_last() const { return t_last_; }
  const std::vector<SamplePair>& pairs() const { return pairs_; }
  double dist(std::size_t p) const { return dist_[p]; }
  double dt(std::size_t p) const { return dt_[p]; }

private:
  std::size_t n_angles_ = 1, n_points_ = 1, nx_ = 0, t_first_ = 0, t_last_ = 0;
  int dims_ = 0;
  std::vector<SamplePair> pairs_;
  std::vector<double> dist_, dt_;
};

struct Best {
  double value = -1.0;
  std::size_t index = 0;
};

HolderEstimate estimate_samples(const PhysicalField& pv, const PairSet& ps, double alpha) {
  HolderEstimate est;
  for (std::size_t n = ps.t_first(); n <= ps.t_last(); ++n) {
    for (std::size_t i = 0; i < pv.nx; ++i) {
      for (std::size_t j = 0; j < pv.n_points; ++j) est.sup_norm = std::max(est.sup_norm, std::abs(pv(n, i, j)));
    }
  }
  const auto& pairs = ps.pairs();
  const std::size_t chunk = 4096;
  const std::size_t n_chunks = (pairs.size() + chunk - 1) / chunk;
  std::vector<Best> mixed(n_chunks);
  std::vector<double> space(n_chunks, 0.0), time(n_chunks, 0.0);
  parallel_for(n_chunks, [&](std::size_t c) {
    const std::size_t end = std::min(pairs.size(), (c + 1) * chunk);
    for (std::size_t p = c * chunk; p < end; ++p) {
      const auto& pr = pairs[p];
      const double ua = pv(pr.a.n, pr.a.i, pr.a.j);
      const double ub = pv(pr.b.n, pr.b.i, pr.b.j);
      const double dist = ps.dist(p), dt = ps.dt(p);
      const double den = std::pow(dist, alpha) + std::pow(dt, 0.5 * alpha);
      const double qv = std::abs(ua - ub) / den;
      if (qv > mixed[c].value) mixed[c] = {qv, p};
      // split through the intermediate sample (p', t)
      const double um = pv(pr.a.n, pr.b.i, pr.b.j);
      if (dist > 0.0) space[c] = std::max(space[c], std::abs(ua - um) / std::pow(dist, alpha));
      if (dt > 0.0) time[c] = std::max(time[c], std::abs(um - ub) / std::pow(dt, 0.5 * alpha));
    }
  });
  Best best;
  for (std::size_t c = 0; c < n_chunks; ++c) {
    if (mixed[c].value > best.value) best = mixed[c];
    est.space_seminorm = std::max(est.space_seminorm, space[c]);
    est.time_seminorm = std::max(est.time_seminorm, time[c]);
  }
  est.seminorm = std::max(best.value, 0.0);
  est.max_pair = pairs[best.index];
  est.n_pairs = pairs.size();
  est.total = est.sup_norm + est.seminorm;
  return est;
}

void check_weight(const PhysicalField& pv, const Grid& g, const PairSet& ps, double gamma) {
  const std::size_t nx = pv.nx;
  std::vector<double> layer(nx, 0.0);
  for (std::size_t n = ps.t_first(); n <= ps.t_last(); ++n) {
    for (std::size_t i = 0; i < nx; ++i) {
      for (std::size_t j = 0; j < pv.n_points; ++j) layer[i] = std::max(layer[i], std::abs(pv(n, i, j)));
    }
  }
  const std::size_t low = std::max<std::size_t>(4, nx / 4);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < low; ++i) {
    const double lx = std::log(g.x()[i]);
    const double ly = std::log(std::max(layer[i], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double nl = static_cast<double>(low);
  const double slope = (nl * sxy - sx * sy) / (nl * sxx - sx * sx);
  std::vector<double> sorted = layer;
  std::nth_element(sorted.begin(), sorted.begin() + nx / 2, sorted.end());
  const double median = sorted[nx / 2];
  const double peak = *std::max_element(layer.begin(), layer.end());
  if (slope <= -0.9 && layer[0] >= peak && layer[0] > 3.0 * median) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "x^{-gamma} u grows like x^%.2f toward x_min (gamma = %g); the weight does not match",
                  slope, gamma);
    throw WeightMismatchError(buf);
  }
}

}  // namespace

Field phi_derivative(const Field& u, const PhiMultiIndex& idx) {
  const Grid& g = u.grid();
  if (static_cast<int>(idx.beta.size()) != g.b() || static_cast<int>(idx.a.size()) != g.f()) {
    throw DomainError("multi-index dimensions do not match the field");
  }
  if (idx.q < 0 || idx.t_order < 0) throw DomainError("negative derivative order");
  if (g.nx() < kStencil) throw ResolutionError("x-derivatives need at least 5 x-nodes");
  if (idx.t_order > 0 && g.nt() < 5) throw ResolutionError("t-derivatives need at least 5 time nodes");

  Field v = u.materialized();
  const auto& x = g.x();
  const std::size_t nx = g.nx();
  int ang_order = 0;
  for (int o : idx.beta) ang_order += o;
  for (int o : idx.a) ang_order += o;
  if (ang_order > 0) {
    for (std::size_t m = 0; m < g.n_modes(); ++m) {
      const Mode& mode = g.modes()[m];
      cplx factor = 1.0;
      int xpow = 0;
      for (int d = 0; d < g.b(); ++d) {
        factor *= std::pow(cplx(0.0, mode.k[d]), idx.beta[d]);
        xpow += idx.beta[d];
      }
      for (int d = 0; d < g.f(); ++d) factor *= std::pow(cplx(0.0, mode.l[d]), idx.a[d]);
      for (std::size_t n = 0; n < g.nt(); ++n) {
        auto p = v.profile(n, m);
        for (std::size_t i = 0; i < nx; ++i) p[i] *= factor * std::pow(x[i], xpow);
      }
    }
  }
  for (int r = 0; r < idx.q; ++r) apply_x(v);
  for (int r = 0; r < idx.t_order; ++r) apply_t(v);
  return v;
}

std::size_t default_angle_count(const Grid& g) {
  const auto hw = g.half_widths();
  const int h = hw.empty() ? 0 : *std::max_element(hw.begin(), hw.end());
  return std::max<std::size_t>(16, 4 * h + 4);
}

HolderEstimate alpha_norm_estimate(const Field& u, double alpha, const SamplerPolicy& policy) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  const PairSet ps(u.grid(), policy);
  return estimate_samples(synthesize(u.materialized(), ps.n_angles()), ps, alpha);
}

HolderEstimate weighted_holder_norm(const Field& u, const WeightedSpaceSpec& spec,
                                    const SamplerPolicy& policy, bool with_time) {
  spec.validate();
  const Grid& g = u.grid();
  const PairSet ps(g, policy);
  Field v = u.factored(spec.gamma);
  v.set_gamma(0.0);
  HolderEstimate total;
  double best_term = -1.0;
  bool first = true;
  for (const auto& idx : multi_indices(spec.k, g.b(), g.f(), with_time)) {
    const PhysicalField pv = synthesize(first ? v : phi_derivative(v, idx), ps.n_angles());
    if (first) check_weight(pv, g, ps, spec.gamma);
    first = false;
    const HolderEstimate e = estimate_samples(pv, ps, spec.alpha);
    total.sup_norm += e.sup_norm;
    total.seminorm += e.seminorm;
    total.space_seminorm += e.space_seminorm;
    total.time_seminorm += e.time_seminorm;
    if (e.seminorm > best_term) {
      best_term = e.seminorm;
      total.max_pair = e.max_pair;
    }
    total.n_pairs = e.n_pairs;
  }
  total.total = total.sup_norm + total.seminorm;
  return total;
}

double derivative_sup_norm(const Field& u, int k, const SamplerPolicy& policy, bool with_time) {
  const Grid& g = u.grid();
  const Field v = u.materialized();
  const std::size_t n_angles = policy.n_angles ? policy.n_angles : default_angle_count(g);
  const std::size_t t_last = std::min(policy.t_last, g.nt() - 1);
  double total = 0.0;
  for (const auto& idx : multi_indices(k, g.b(), g.f(), with_time)) {
    const PhysicalField pv = synthesize(phi_derivative(v, idx), n_angles);
    double s = 0.0;
    for (std::size_t n = policy.t_first; n <= t_last; ++n) {
      for (std::size_t i = 0; i < pv.nx; ++i) {
        for (std::size_t j = 0; j < pv.n_points; ++j) s = std::max(s, std::abs(pv(n, i, j)));
      }
    }
    total += s;
  }
  return total;
}

void write_estimates_csv(const std::vector<EstimateRow>& rows, std::ostream& os) {
  os << "spec,value,n_pairs\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.value);
    os << r.spec << ',' << buf << ',' << r.n_pairs << '\n';
  }
}

}  // namespace phiheat::holder
