#include <doctest.h>

#include <cmath>
#include <random>

#include "kt/kernels.hpp"
#include "kt/serialize.hpp"
#include "test_util.hpp"

using namespace kt;
using kt::testing::point_eval;

namespace {

std::vector<KernelSpec> zoo() {
  return {
      KernelSpec(Gauss{1.3}),        KernelSpec(Laplace{0.8}),          KernelSpec(Matern{2.5, 1.1}),
      KernelSpec(Matern{3.3, 0.7}),  KernelSpec(Imq{0.5, 1.5}),         KernelSpec(Sinc{1.7}),
      KernelSpec(BSpline{1, 0.9}),   KernelSpec(BSpline{2, 0.6}, 2.5),  KernelSpec(BSpline{0, 1.0}),
  };
}

// Independent route to K_a: K_a(x) = int_0^inf exp(-x cosh t) cosh(a t) dt.
double bessel_k_quadrature(double a, double x) {
  kt::testing::GaussLegendre gl(20);
  return gl.integrate([&](double t) { return std::exp(-x * std::cosh(t)) * std::cosh(a * t); }, 0.0, 12.0, 120);
}

}  // namespace

TEST_CASE("table kernels match their closed forms") {
  CHECK(point_eval(KernelSpec(Gauss{1.0}), {0.3, -2.0}, {0.3, -2.0}) == 1.0);
  CHECK(point_eval(KernelSpec(Gauss{1.0}), {0.0}, {std::sqrt(2.0)}) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(std::abs(point_eval(KernelSpec(Sinc{1.0}), {0.0, 0.0}, {0.0, M_PI})) < 1e-15);
  CHECK(point_eval(KernelSpec(Laplace{2.0}), {0.0, 0.0}, {3.0, 4.0}) == doctest::Approx(std::exp(-2.5)));
  CHECK(point_eval(KernelSpec(Imq{0.5, 1.0}), {0.0}, {1.0}) == doctest::Approx(1.0 / std::sqrt(2.0)));
  // Matern with a = 3/2 in d = 1 is (1 + r + r^2/3) e^{-r}.
  CHECK(point_eval(KernelSpec(Matern{3.0, 1.0}), {0.0}, {2.0}) ==
        doctest::Approx((1.0 + 2.0 + 4.0 / 3.0) * std::exp(-2.0)).epsilon(1e-14));
  CHECK(point_eval(KernelSpec(Gauss{1.0}, 3.0), {1.0}, {1.0}) == 3.0);
}

TEST_CASE("matern with nu = (d+1)/2 is the laplace kernel") {
  std::mt19937_64 gen(7);
  for (std::size_t d = 1; d <= 4; ++d) {
    const double sigma = 0.7 + 0.3 * d;
    KernelSpec lap(Laplace{sigma});
    KernelSpec mat(Matern{(d + 1) / 2.0, 1.0 / sigma});
    PointSet p = kt::testing::random_points(30, d, gen, 2.0);
    for (Index i = 0; i < p.size(); ++i)
      for (Index j = 0; j < p.size(); ++j) CHECK(mat(p[i], p[j]) == doctest::Approx(lap(p[i], p[j])).epsilon(1e-13));
  }
}

TEST_CASE("general-order matern profile agrees with a quadrature bessel oracle") {
  for (double a : {0.3, 0.8, 1.3, 2.2, 3.7}) {
    for (double r : {0.05, 0.4, 1.0, 2.5, 7.0}) {
      double expected = std::pow(2.0, 1.0 - a) / std::tgamma(a) * std::pow(r, a) * bessel_k_quadrature(a, r);
      CHECK(matern_profile(a, r) == doctest::Approx(expected).epsilon(1e-10));
    }
  }
  // The half-integer closed form and the bessel route meet continuously.
  CHECK(matern_profile(1.5 + 1e-9, 0.9) == doctest::Approx(matern_profile(1.5, 0.9)).epsilon(1e-7));
}

TEST_CASE("matern evaluates to its limit next to the diagonal") {
  for (double nu : {1.0, 1.8, 2.5, 4.1}) {
    KernelSpec k(Matern{nu, 1.0});
    CHECK(point_eval(k, {0.0}, {0.0}) == 1.0);
    CHECK(std::abs(point_eval(k, {0.0}, {1e-8}) - 1.0) < 1e-6);
  }
}

TEST_CASE("bspline univariate profile") {
  // Frozen from the exact fourfold convolution of the unit indicator.
  CHECK(bspline_univariate(1, 0.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(bspline_univariate(1, 0.5) == doctest::Approx(23.0 / 48.0).epsilon(1e-15));
  CHECK(bspline_univariate(1, 1.0) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(bspline_univariate(1, -1.5) == doctest::Approx(1.0 / 48.0).epsilon(1e-14));
  CHECK(bspline_univariate(0, 0.5) == doctest::Approx(0.5));

  for (unsigned beta = 0; beta <= 4; ++beta) {
    CHECK(bspline_univariate(beta, beta + 1.0) == 0.0);
    CHECK(bspline_univariate(beta, -(beta + 1.0) - 0.1) == 0.0);
    CHECK(bspline_center(beta) == doctest::Approx(bspline_univariate(beta, 0.0)).epsilon(1e-14));
    for (double t = 0.0; t < beta + 1.5; t += 0.137) {
      CHECK(bspline_univariate(beta, t) == bspline_univariate(beta, -t));
    }
  }
}

TEST_CASE("bspline profile matches repeated numerical convolution") {
  // h_{k+1}(t) = int_{t-1/2}^{t+1/2} h_k(u) du on a fine grid.
  const double step = 1.0 / 2000.0;
  const int half_width = 4 * 2000;
  std::vector<double> h(2 * half_width + 1, 0.0);
  auto at = [&](int i) { return (i - half_width) * step; };
  for (int i = 0; i < static_cast<int>(h.size()); ++i) h[i] = std::abs(at(i)) <= 0.5 ? 1.0 : 0.0;
  for (int copies = 2; copies <= 6; ++copies) {
    std::vector<double> prefix(h.size() + 1, 0.0);
    for (std::size_t i = 0; i < h.size(); ++i) prefix[i + 1] = prefix[i] + h[i] * step;
    std::vector<double> next(h.size(), 0.0);
    const int w = 1000;
    for (int i = w; i + w < static_cast<int>(h.size()); ++i) {
      next[i] = prefix[i + w] - prefix[i - w] + 0.5 * step * (h[i + w] - h[i - w]);
    }
    h = next;
    if (copies % 2 == 0) {
      unsigned beta = copies / 2 - 1;
      for (int i = 0; i < static_cast<int>(h.size()); i += 377) {
        CHECK(bspline_univariate(beta, at(i)) == doctest::Approx(h[i]).epsilon(1e-3).scale(1.0));
      }
    }
  }
}

TEST_CASE("gram matrices are symmetric and positive semi-definite") {
  std::mt19937_64 gen(11);
  for (const auto& k : zoo()) {
    for (std::size_t d = 1; d <= 3; ++d) {
      if (const auto* m = std::get_if<Matern>(&k.family()); m && !(m->nu > d / 2.0)) continue;
      PointSet p = kt::testing::random_points(40, d, gen, 1.5);
      Eigen::MatrixXd g = kt::testing::gram(k, p);
      CHECK((g - g.transpose()).cwiseAbs().maxCoeff() == 0.0);
      CHECK(kt::testing::min_eigenvalue(g) >= -1e-8 * g.trace());
      for (Index i = 0; i < p.size(); ++i) CHECK(g(i, i) == doctest::Approx(k.scale()));
    }
  }
}

TEST_CASE("kernels are shift invariant") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> normal;
  for (const auto& k : zoo()) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> x(2), y(2), xs(2), ys(2);
      for (int j = 0; j < 2; ++j) {
        x[j] = normal(gen);
        y[j] = normal(gen);
        double c = 3.0 * normal(gen);
        xs[j] = x[j] + c;
        ys[j] = y[j] + c;
      }
      CHECK(std::abs(point_eval(k, xs, ys) - point_eval(k, x, y)) < 1e-12);
    }
  }
}

TEST_CASE("invalid kernels and evaluations are rejected") {
  CHECK_THROWS_AS(KernelSpec(Gauss{0.0}), ConstraintError);
  CHECK_THROWS_AS(KernelSpec(Laplace{-1.0}), ConstraintError);
  CHECK_THROWS_AS(KernelSpec(Sinc{0.0}), ConstraintError);
  CHECK_THROWS_AS(KernelSpec(Gauss{1.0}, 0.0), ConstraintError);
  CHECK_THROWS_AS(point_eval(KernelSpec(Gauss{1.0}), {0.0}, {0.0, 1.0}), DataError);
  CHECK_THROWS_AS(point_eval(KernelSpec(Matern{1.0, 1.0}), {0.0, 0.0}, {1.0, 1.0}), ConstraintError);
  PointSet p(2, {0.0, 0.0, 1.0, 1.0});
  CHECK_THROWS_AS(BoundKernel(KernelSpec(Matern{1.0, 1.0}), p), ConstraintError);
}

TEST_CASE("power kernels") {
  SUBCASE("closed forms") {
    auto g = power_kernel(KernelSpec(Gauss{2.0}), 0.5, 1);
    CHECK(std::get<Gauss>(g.power.family()).sigma == doctest::Approx(std::sqrt(2.0)));
    CHECK(g.closed_form);

    auto m = power_kernel(KernelSpec(Matern{3.0, 1.0}), 0.5, 2);
    CHECK(std::get<Matern>(m.power.family()).nu == doctest::Approx(1.5));
    CHECK(std::get<Matern>(m.power.family()).gamma == 1.0);

    auto b = power_kernel(KernelSpec(BSpline{1, 1.0}), 0.5, 1);
    CHECK(std::get<BSpline>(b.power.family()).beta == 0);

    // Even beta needs alpha = (beta + 2) / (2 beta + 2).
    auto b2 = power_kernel(KernelSpec(BSpline{2, 0.5}), 4.0 / 6.0, 3);
    CHECK(std::get<BSpline>(b2.power.family()).beta == 1);
    CHECK(std::get<BSpline>(b2.power.family()).gamma == 0.5);

    auto s = power_kernel(KernelSpec(Sinc{2.0}), 0.7, 2);
    CHECK(s.power == KernelSpec(Sinc{2.0}));

    auto l = power_kernel(KernelSpec(Laplace{2.0}), 0.7, 1);
    CHECK(std::get<Matern>(l.power.family()).nu == doctest::Approx(0.7));
    CHECK(std::get<Matern>(l.power.family()).gamma == 0.5);
  }

  SUBCASE("alpha = 1 returns the kernel itself") {
    for (const auto& k : zoo()) CHECK(power_kernel(k, 1.0, 1).power == k);
    CHECK(power_kernel(KernelSpec(Imq{1.0, 1.0}), 1.0, 2).power == KernelSpec(Imq{1.0, 1.0}));
  }

  SUBCASE("unsupported combinations name the failed constraint") {
    CHECK_THROWS_AS(power_kernel(KernelSpec(Imq{1.0, 1.0}), 0.5, 1), NoClosedFormPowerKernel);
    CHECK_THROWS_AS(power_kernel(KernelSpec(BSpline{2, 1.0}), 0.5, 1), NoClosedFormPowerKernel);
    CHECK_THROWS_AS(power_kernel(KernelSpec(Gauss{1.0}), 0.4, 1), NoClosedFormPowerKernel);
    try {
      power_kernel(KernelSpec(Laplace{1.0}), 0.7, 4);
      FAIL("expected a constraint failure");
    } catch (const NoClosedFormPowerKernel& e) {
      CHECK(e.constraint().find("alpha*nu > d/2") != std::string::npos);
    }
  }

  SUBCASE("gaussian convolution identity by quadrature") {
    // (2 pi)^{-1/2} int k_half(x, z) k_half(z, y) dz = c k(x, y) for one c.
    KernelSpec k(Gauss{2.0});
    KernelSpec half = power_kernel(k, 0.5, 1).power;
    kt::testing::GaussLegendre gl(16);
    double ratio0 = 0.0;
    for (double x : {-2.0, -1.0, 0.0, 0.5, 3.0}) {
      for (double y : {-1.5, 0.0, 1.0, 2.0, 4.0}) {
        double conv = gl.integrate([&](double z) { return point_eval(half, {x}, {z}) * point_eval(half, {z}, {y}); },
                                   -40.0, 40.0, 400) /
                      std::sqrt(2.0 * M_PI);
        double ratio = conv / point_eval(k, {x}, {y});
        if (ratio0 == 0.0) ratio0 = ratio;
        CHECK(ratio == doctest::Approx(ratio0).epsilon(1e-6));
      }
    }
  }

  SUBCASE("bspline convolution identity by quadrature") {
    // Grid and panel edges sit on multiples of 1/4, so every kink of the
    // piecewise-linear square root falls on a panel boundary.
    KernelSpec k(BSpline{1, 1.0});
    KernelSpec half = power_kernel(k, 0.5, 1).power;
    kt::testing::GaussLegendre gl(4);
    double ratio0 = 0.0;
    for (double x : {-1.0, -0.5, 0.0, 0.75, 1.5}) {
      for (double y : {-1.25, -0.25, 0.0, 0.5, 1.0}) {
        double conv = gl.integrate([&](double z) { return point_eval(half, {x}, {z}) * point_eval(half, {z}, {y}); },
                                   -4.0, 4.0, 32);
        double target = point_eval(k, {x}, {y});
        if (ratio0 == 0.0) ratio0 = conv / target;
        CHECK(conv == doctest::Approx(ratio0 * target).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("kt+ kernel") {
  KernelSpec k(Gauss{1.0});
  KernelSpec ka(Gauss{1.0 / std::sqrt(2.0)});
  KernelSpec plus = ktplus_kernel(k, ka);
  CHECK(point_eval(plus, {0.4}, {0.4}) == doctest::Approx(2.0));
  CHECK(plus.sup_norm() == doctest::Approx(2.0));

  double prev = 3.0;
  for (double r = 0.0; r < 30.0; r += 0.5) {
    double v = point_eval(plus, {0.0, 0.0}, {r, r});
    if (r < 15.0) CHECK(v < prev);
    else CHECK(v <= prev);
    prev = v;
  }
  CHECK(prev < 1e-300);

  std::mt19937_64 gen(3);
  PointSet p = kt::testing::random_points(50, 2, gen);
  KernelSpec scaled_plus = ktplus_kernel(KernelSpec(Laplace{1.0}, 4.0), KernelSpec(Matern{1.2, 1.0}, 0.3));
  for (Index i = 0; i < p.size(); ++i) {
    for (Index j = 0; j < p.size(); ++j) {
      CHECK(plus(p[i], p[j]) <= 2.0 + 1e-15);
      CHECK(scaled_plus(p[i], p[j]) <= 2.0 + 1e-15);
      CHECK(plus(p[i], p[j]) == doctest::Approx(k(p[i], p[j]) + ka(p[i], p[j])));
    }
  }
}

TEST_CASE("identity-perturbed kernel") {
  KernelSpec k = identity_perturbed(KernelSpec(Gauss{1.0}));
  PointSet p(1, {0.0, std::sqrt(2.0), 0.0});
  PointSet other(1, {0.0});
  CHECK(eval(k, IndexedPoint{&p, 0}, IndexedPoint{&p, 0}) == doctest::Approx(2.0));
  CHECK(eval(k, IndexedPoint{&p, 0}, IndexedPoint{&p, 1}) == doctest::Approx(std::exp(-1.0)));
  // Coincident coordinates at different indices are different extended points.
  CHECK(eval(k, IndexedPoint{&p, 0}, IndexedPoint{&p, 2}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(eval(k, IndexedPoint{&p, 0}, IndexedPoint{&other, 0}), DataError);
  CHECK_THROWS_AS(k(p[0], p[1]), ConstraintError);

  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 10; ++trial) {
    PointSet q = kt::testing::random_points(10, 2, gen);
    KernelSpec base(Laplace{0.5}, 3.0);
    Eigen::MatrixXd g = kt::testing::gram(identity_perturbed(base), q);
    Eigen::MatrixXd expected = kt::testing::gram(base, q) / 3.0 + Eigen::MatrixXd::Identity(10, 10);
    CHECK((g - expected).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(kt::testing::min_eigenvalue(g) >= 1.0 - 1e-8);
  }
}

TEST_CASE("kernel JSON round trip") {
  std::vector<KernelSpec> all = zoo();
  all.push_back(ktplus_kernel(KernelSpec(Gauss{1.0}), KernelSpec(Gauss{0.5})));
  all.push_back(identity_perturbed(KernelSpec(Imq{1.0, 2.0}), 0.25));
  for (const auto& k : all) {
    Json j = kernel_to_json(k);
    CHECK(kernel_from_json(Json::parse(j.dump())) == k);
  }
  CHECK(kernel_from_json(Json::parse(R"({"family":"gauss","params":{"sigma":2}})")) == KernelSpec(Gauss{2.0}));
  CHECK_THROWS_AS(kernel_from_json(Json::parse(R"({"family":"cauchy","params":{}})")), DataError);
  CHECK_THROWS_AS(kernel_from_json(Json::parse(R"({"family":"gauss","params":{}})")), DataError);
}
