#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "phiheat/errors.hpp"
#include "phiheat/geometry.hpp"

using namespace phiheat;
using namespace phiheat::geometry;

namespace {

constexpr double kPi = std::numbers::pi;

Point pt(double x, std::vector<double> y, std::vector<double> z) {
  return make_point(x, std::move(y), std::move(z));
}

}  // namespace

TEST_CASE("exact metric at x = 1 is the identity") {
  const auto model = PhiModel::exact_product(1, 1);
  const auto mp = metric_eval(model, pt(1.0, {0.3}, {2.0}));
  CHECK((mp.g - Eigen::MatrixXd::Identity(3, 3)).norm() == doctest::Approx(0.0));
  CHECK(mp.sqrt_det == doctest::Approx(1.0));
}

TEST_CASE("euclidean radial metric at x = 0.5") {
  const auto model = PhiModel::euclidean_radial(2);
  const auto mp = metric_eval(model, pt(0.5, {1.0}, {}));
  CHECK(mp.g(0, 0) == doctest::Approx(16.0));
  CHECK(mp.g(1, 1) == doctest::Approx(4.0));
  CHECK(mp.g(0, 1) == 0.0);
}

TEST_CASE("zero perturbation reproduces the exact product") {
  const auto exact = PhiModel::exact_product(2, 1);
  const auto pert = PhiModel::perturbed_product(2, 1, {{0, 0, 0.0, 1.0}, {1, 3, 0.0, 2.0}});
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(0.01, 1.0), ua(0.0, 2 * kPi);
  for (int s = 0; s < 200; ++s) {
    const auto p = pt(ux(rng), {ua(rng), ua(rng)}, {ua(rng)});
    const auto a = metric_eval(exact, p);
    const auto b = metric_eval(pert, p);
    CHECK((a.g - b.g).norm() <= 1e-14 * a.g.norm());
    CHECK(b.sqrt_det == doctest::Approx(a.sqrt_det).epsilon(1e-12));
  }
}

TEST_CASE("metric data is consistent and positive on random collar points") {
  std::vector<PhiModel> catalog = {
      PhiModel::euclidean_radial(2), PhiModel::euclidean_radial(3), PhiModel::exact_product(1, 1),
      PhiModel::exact_product(2, 1),
      PhiModel::perturbed_product(1, 1, {{0, 0, 0.5, -3.0}, {1, 1, 0.2, -1.0}, {0, 2, 0.1, 0.0}}),
      PhiModel::perturbed_product(2, 1, {{1, 2, 0.3, -1.0}, {3, 3, 0.4, 1.0}})};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ua(0.0, 2 * kPi);
  for (const auto& model : catalog) {
    std::uniform_real_distribution<double> ux(model.x_min, model.x_max);
    double worst_inv = 0.0, worst_det = 0.0, min_eig = 1.0;
    for (int s = 0; s < 10000; ++s) {
      Point p;
      p.x = ux(rng);
      for (int i = 0; i < model.b; ++i) p.y.push_back(ua(rng));
      for (int i = 0; i < model.f; ++i) p.z.push_back(ua(rng));
      const auto mp = metric_eval(model, p);
      const int m = model.m();
      // normalize by ghat so the check is scale-free across the collar
      Eigen::VectorXd scale(m);
      for (int i = 0; i < m; ++i) scale(i) = std::sqrt(mp.g(i, i));
      const Eigen::MatrixXd gn = scale.cwiseInverse().asDiagonal() * mp.g * scale.cwiseInverse().asDiagonal();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gn);
      min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
      const Eigen::MatrixXd id = mp.g * mp.g_inv;
      worst_inv = std::max(worst_inv, (id - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff());
      worst_det = std::max(worst_det, std::abs(mp.sqrt_det * mp.sqrt_det / mp.g.determinant() - 1.0));
    }
    CHECK(min_eig > 0.0);
    CHECK(worst_inv <= 1e-12);
    CHECK(worst_det <= 1e-10);
  }
}

TEST_CASE("metric_eval rejects points outside the collar") {
  const auto model = PhiModel::exact_product(1, 1, 0.1, 0.9);
  CHECK_THROWS_AS(metric_eval(model, pt(0.05, {0.0}, {0.0})), DomainError);
  CHECK_THROWS_AS(metric_eval(model, pt(0.95, {0.0}, {0.0})), DomainError);
  CHECK_NOTHROW(metric_eval(model, pt(0.1, {0.0}, {0.0})));
}

TEST_CASE("non-definite perturbation is reported as degeneracy") {
  const auto model = PhiModel::perturbed_product(1, 1, {{2, 2, -2.0, 1.0}});
  CHECK_THROWS_AS(metric_eval(model, pt(0.9, {0.0}, {0.0})), MetricDegeneracyError);
}

TEST_CASE("perturbation decay order and validation") {
  const auto model = PhiModel::perturbed_product(1, 1, {{0, 0, 1.0, -3.0}, {2, 2, 1.0, 1.0}});
  CHECK(model.perturbation_decay_order() == doctest::Approx(1.0));
  CHECK_THROWS_AS(PhiModel::perturbed_product(1, 1, {{2, 2, 1.0, 0.5}}), DomainError);
  // sup |h|/x finite on samples
  double sup = 0.0;
  for (double x = 0.01; x <= 1.0; x *= 1.1) sup = std::max(sup, perturbation_norm(model, x) / x);
  CHECK(sup < 10.0);
  CHECK_THROWS_AS(PhiModel::exact_product(1, 1, 0.5, 0.2), DomainError);
  CHECK_THROWS_AS(PhiModel::euclidean_radial(1), DomainError);
}

TEST_CASE("laplacian coefficients of the b = f = 1 exact product") {
  const auto model = PhiModel::exact_product(1, 1);
  for (double x : {0.03, 0.2, 0.7}) {
    const auto c = laplacian_coeffs(model, pt(x, {0.4}, {1.1}));
    CHECK(c.second(0, 0) == doctest::Approx(-std::pow(x, 4)));
    CHECK(c.second(1, 1) == doctest::Approx(-x * x));
    CHECK(c.second(2, 2) == doctest::Approx(-1.0));
    CHECK(c.second(0, 1) == 0.0);
    CHECK(c.first(0) == doctest::Approx(-std::pow(x, 3)));
    CHECK(c.first(1) == 0.0);
    CHECK(c.first(2) == 0.0);
  }
}

namespace {

// Divergence form -w^{-1} d_i (w g^{ij} d_j u) by nested central differences,
// using only metric_eval.
double divergence_laplacian(const PhiModel& model, const std::function<double(const Eigen::VectorXd&)>& u,
                            const Eigen::VectorXd& p) {
  const int m = model.m();
  const double h = 1e-4 * p(0);
  auto flux = [&](const Eigen::VectorXd& q, int i) {
    const Point qq{q(0), std::vector<double>(q.data() + 1, q.data() + 1 + model.b),
                   std::vector<double>(q.data() + 1 + model.b, q.data() + m)};
    const auto mp = metric_eval(model, qq);
    double s = 0.0;
    for (int j = 0; j < m; ++j) {
      Eigen::VectorXd a = q, b = q;
      a(j) += h;
      b(j) -= h;
      s += mp.g_inv(i, j) * (u(a) - u(b)) / (2 * h);
    }
    return mp.sqrt_det * s;
  };
  double div = 0.0;
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd a = p, b = p;
    a(i) += h;
    b(i) -= h;
    div += (flux(a, i) - flux(b, i)) / (2 * h);
  }
  const Point pp{p(0), std::vector<double>(p.data() + 1, p.data() + 1 + model.b),
                 std::vector<double>(p.data() + 1 + model.b, p.data() + m)};
  return -div / volume_element(model, pp);
}

}  // namespace

TEST_CASE("laplacian coefficients agree with the divergence form on smooth functions") {
  const std::vector<PhiModel> models = {
      PhiModel::exact_product(1, 1), PhiModel::exact_product(2, 1),
      PhiModel::perturbed_product(1, 1, {{0, 0, 0.5, -3.0}, {1, 1, 0.2, -1.0}, {2, 2, 0.3, 1.0}})};
  // u = exp(a x) * cos(y1 + 2 y2 ...) * sin(z + 0.3)
  for (const auto& model : models) {
    const int m = model.m();
    const double a = 1.7;
    auto u = [&](const Eigen::VectorXd& q) {
      double ang = 0.0;
      for (int i = 1; i <= model.b; ++i) ang += i * q(i);
      double fz = 1.0;
      for (int i = model.b + 1; i < m; ++i) fz *= std::sin(q(i) + 0.3);
      return std::exp(a * q(0)) * std::cos(ang) * fz;
    };
    for (double x : {0.3, 0.5, 0.8}) {
      Eigen::VectorXd p(m);
      p(0) = x;
      for (int i = 1; i < m; ++i) p(i) = 0.4 + 0.3 * i;
      // analytic derivatives of u
      Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(m, m);
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(m);
      const double h = 1e-3;
      for (int i = 0; i < m; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
        e(i) = h;
        grad(i) = (u(p + e) - u(p - e)) / (2 * h);
        for (int j = 0; j < m; ++j) {
          Eigen::VectorXd f = Eigen::VectorXd::Zero(m);
          f(j) = h;
          hess(i, j) = (u(p + e + f) - u(p + e - f) - u(p - e + f) + u(p - e - f)) / (4 * h * h);
        }
      }
      const Point pp{x, std::vector<double>(p.data() + 1, p.data() + 1 + model.b),
                     std::vector<double>(p.data() + 1 + model.b, p.data() + m)};
      const auto c = laplacian_coeffs(model, pp);
      const double from_coeffs = (c.second.cwiseProduct(hess)).sum() + c.first.dot(grad);
      const double from_div = divergence_laplacian(model, u, p);
      CHECK(from_coeffs == doctest::Approx(from_div).epsilon(1e-4));
    }
  }
}

TEST_CASE("perturbed first-order coefficient matches the closed form") {
  const double c = 0.5;
  const auto model = PhiModel::perturbed_product(1, 1, {{0, 0, c, -3.0}});
  for (double x : {0.05, 0.2, 0.6}) {
    const double G = std::pow(x, -4) + c * std::pow(x, -3);
    const double dG = -4 * std::pow(x, -5) - 3 * c * std::pow(x, -4);
    const double w = std::sqrt(G) / x;
    const double da = -std::pow(x, -2) / std::sqrt(G) - 0.5 / x * std::pow(G, -1.5) * dG;
    const auto lc = laplacian_coeffs(model, pt(x, {0.0}, {0.0}));
    CHECK(lc.first(0) == doctest::Approx(-da / w).epsilon(1e-8));
    CHECK(lc.second(0, 0) == doctest::Approx(-1.0 / G).epsilon(1e-12));
  }
}

TEST_CASE("mode reduction of the b = f = 1 product") {
  // L_{k,l} phi = -x^4 phi'' - x^3 phi' + x^2 k^2 phi + l^2 phi for u = phi(x) e^{i(ky+lz)}
  const auto model = PhiModel::exact_product(1, 1);
  const int k = 3, l = 2;
  for (double x : {0.1, 0.4, 0.9}) {
    const double phi = std::sin(2 * x), dphi = 2 * std::cos(2 * x), ddphi = -4 * std::sin(2 * x);
    const auto c = laplacian_coeffs(model, pt(x, {0.0}, {0.0}));
    // second/first applied to phi e^{i(ky+lz)}, divided by the exponential
    const double reduced = c.second(0, 0) * ddphi + c.first(0) * dphi -
                           c.second(1, 1) * k * k * phi - c.second(2, 2) * l * l * phi;
    const double expected = -std::pow(x, 4) * ddphi - std::pow(x, 3) * dphi + x * x * k * k * phi + l * l * phi;
    CHECK(reduced == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("euclidean radial laplacian is the polar laplacian in r = 1/x") {
  // -(u_rr + u_r / r + u_thth / r^2) for u = r^2 cos(th) ... checked on u(r) = r^3
  const auto model = PhiModel::euclidean_radial(2);
  for (double x : {0.1, 0.5}) {
    const double r = 1.0 / x;
    // u = r^3 = x^{-3}: du/dx = -3 x^{-4}, d2u/dx2 = 12 x^{-5}
    const auto c = laplacian_coeffs(model, pt(x, {0.0}, {}));
    const double lap = c.second(0, 0) * 12 * std::pow(x, -5) + c.first(0) * (-3 * std::pow(x, -4));
    const double polar = -(6 * r + 3 * r);
    CHECK(lap == doctest::Approx(polar).epsilon(1e-12));
    CHECK(c.second(1, 1) == doctest::Approx(-1.0 / (r * r)));
  }
}

TEST_CASE("volume element values") {
  CHECK(volume_element(PhiModel::exact_product(1, 1), pt(0.5, {0.0}, {0.0})) == doctest::Approx(8.0));
  CHECK(volume_element(PhiModel::exact_product(1, 1), pt(1.0, {0.0}, {0.0})) == doctest::Approx(1.0));
  const auto e2 = PhiModel::euclidean_radial(2);
  const auto p = pt(0.1, {0.0}, {});
  CHECK(volume_element(e2, p) == doctest::Approx(1000.0));
  CHECK(volume_element(e2, p) == doctest::Approx(std::sqrt(metric_eval(e2, p).g.determinant())));
}

TEST_CASE("grigoryan test on exact products") {
  for (auto [b, f] : {std::pair{1, 1}, std::pair{2, 1}}) {
    const auto res = grigoryan_test(PhiModel::exact_product(b, f), 1e4, 40);
    CHECK(res.growth_exponent == doctest::Approx(b + 1).epsilon(0.05));
    CHECK(res.verdict == Verdict::Complete);
    for (std::size_t j = 1; j < res.partial_integrals.size(); ++j) {
      CHECK(res.partial_integrals[j] > res.partial_integrals[j - 1]);
    }
  }
}

TEST_CASE("euclidean plane volume matches the disc area") {
  const auto model = PhiModel::euclidean_radial(2);
  for (double r : {2.0, 10.0, 300.0}) {
    // compact piece of volume 1 plus the annulus 1 <= |p| <= r
    const double closed = 1.0 + kPi * (r * r - 1.0);
    CHECK(truncated_volume(model, r) == doctest::Approx(closed).epsilon(0.01));
  }
  const auto res = grigoryan_test(model, 1e4, 40);
  CHECK(res.growth_exponent == doctest::Approx(2.0).epsilon(0.05));
  CHECK(res.verdict == Verdict::Complete);
}

TEST_CASE("super-gaussian volume growth is inconclusive") {
  const auto res = grigoryan_test([](double r) { return std::exp(r * r * r); }, 1e3, 30);
  CHECK(res.verdict == Verdict::Inconclusive);
  CHECK_THROWS_AS(grigoryan_test(PhiModel::exact_product(1, 1), 1.0, 10), DomainError);
  CHECK_THROWS_AS(grigoryan_test(PhiModel::exact_product(1, 1), 0.5, 10), DomainError);
}

TEST_CASE("phi distance examples") {
  const auto p = pt(0.1, {0.0}, {0.0});
  CHECK(phi_distance(p, p) == 0.0);
  CHECK(phi_distance(p, pt(0.2, {0.0}, {0.0})) == doctest::Approx(0.1));
  CHECK(phi_distance(pt(0.1, {1.0}, {0.0}), p) == doctest::Approx(0.2));
  // periodic difference: 2pi - 0.5 is 0.5 away from 0
  CHECK(phi_distance(pt(0.1, {2 * kPi - 0.5}, {0.0}), p) == doctest::Approx(0.1));
  CHECK(phi_distance_classical(pt(0.2, {0.0}, {0.0}), p) == doctest::Approx(0.1 / 0.09));
}

TEST_CASE("phi distances are symmetric, definite and mutually equivalent") {
  std::mt19937_64 rng(3);
  const double x_min = 0.05;
  std::uniform_real_distribution<double> ux(x_min, 1.0), ua(0.0, 2 * kPi);
  double lo = 1e300, hi = 0.0;
  for (int s = 0; s < 5000; ++s) {
    const auto p = pt(ux(rng), {ua(rng), ua(rng)}, {ua(rng)});
    const auto q = pt(ux(rng), {ua(rng), ua(rng)}, {ua(rng)});
    CHECK(phi_distance(p, q) == phi_distance(q, p));
    CHECK(phi_distance_classical(p, q) == phi_distance_classical(q, p));
    CHECK(phi_distance(p, q) > 0.0);
    const double ratio = phi_distance(p, q) / phi_distance_classical(p, q);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  CHECK(lo >= std::pow(x_min, 4));
  CHECK(hi <= std::pow(x_min, -4));
}

TEST_CASE("triangle inequality on radial and common-level triples") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(0.01, 1.0), ua(0.0, 2 * kPi);
  for (int s = 0; s < 20000; ++s) {
    // pure radial separation
    const double y = ua(rng), z = ua(rng);
    const auto a = pt(ux(rng), {y}, {z}), b = pt(ux(rng), {y}, {z}), c = pt(ux(rng), {y}, {z});
    CHECK(phi_distance(a, c) <= phi_distance(a, b) + phi_distance(b, c) + 1e-12);
    // common level x
    const double x = ux(rng);
    const auto d = pt(x, {ua(rng)}, {ua(rng)}), e = pt(x, {ua(rng)}, {ua(rng)}), f = pt(x, {ua(rng)}, {ua(rng)});
    CHECK(phi_distance(d, f) <= phi_distance(d, e) + phi_distance(e, f) + 1e-12);
    CHECK(phi_distance_classical(d, f) <= phi_distance_classical(d, e) + phi_distance_classical(e, f) + 1e-12);
  }
}

TEST_CASE("triangle inequality fails across the boundary at large angular separation") {
  // routing through a point close to x = 0 shortcuts the angular term
  const auto p = pt(0.1, {0.0}, {});
  const auto q = pt(0.1, {kPi - 1e-9}, {});
  const auto r = pt(1e-6, {kPi / 2}, {});
  CHECK(phi_distance(p, q) > phi_distance(p, r) + phi_distance(r, q));

  // the classical form shortcuts through the interior instead
  const auto a = pt(0.04, {0.0}, {}), b = pt(0.96, {0.0}, {}), c = pt(0.011, {0.0}, {});
  CHECK(phi_distance_classical(a, c) > phi_distance_classical(a, b) + phi_distance_classical(b, c));
}

TEST_CASE("model key-value round trip") {
  const auto model = PhiModel::perturbed_product(2, 1, {{0, 0, 0.25, -2.0}, {1, 3, 0.125, 1.0}}, 0.02, 0.9);
  const auto kv = to_key_values(model);
  CHECK(kv.at("kind") == "PerturbedProduct");
  CHECK(kv.count("h_y1_z1") == 1);
  const auto back = model_from_key_values(kv);
  CHECK(back.kind == model.kind);
  CHECK(back.b == 2);
  CHECK(back.f == 1);
  CHECK(back.x_min == model.x_min);
  CHECK(back.perturbation.size() == 2);
  CHECK(to_key_values(back) == kv);

  auto bad = kv;
  bad["colour"] = "blue";
  CHECK_THROWS_WITH_AS(model_from_key_values(bad), "unknown key model.colour", ConfigError);
  CHECK_THROWS_AS(model_from_key_values({{"kind", "Sphere"}}), ConfigError);
  CHECK_THROWS_AS(model_from_key_values({{"kind", "ExactProduct"}, {"b", "two"}}), ConfigError);
  const auto radial = model_from_key_values({{"kind", "EuclideanRadial"}, {"m", "3"}});
  CHECK(radial.b == 2);
  CHECK(radial.f == 0);
}
