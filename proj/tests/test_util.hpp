#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "kt/kernels.hpp"
#include "kt/point_set.hpp"

namespace kt::testing {

inline PointSet random_points(std::size_t n, std::size_t d, std::mt19937_64& gen, double spread = 1.0) {
  std::normal_distribution<double> normal(0.0, spread);
  std::vector<double> data(n * d);
  for (double& v : data) v = normal(gen);
  return PointSet(d, std::move(data));
}

inline Eigen::MatrixXd gram(const KernelSpec& k, const PointSet& p) {
  const BoundKernel bk(k, p);
  Eigen::MatrixXd g(p.size(), p.size());
  for (Index i = 0; i < p.size(); ++i)
    for (Index j = 0; j < p.size(); ++j) g(i, j) = bk(i, j);
  return g;
}

inline double min_eigenvalue(const Eigen::MatrixXd& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(int n) : nodes(n), weights(n) {
    for (int i = 0; i < n; ++i) {
      double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      nodes[i] = x;
      weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }

  // Composite rule over [a, b] with `panels` equal panels.
  double integrate(const std::function<double(double)>& f, double a, double b, int panels) const {
    double h = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
      double lo = a + p * h;
      double s = 0.0;
      for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(lo + 0.5 * h * (nodes[i] + 1.0));
      total += 0.5 * h * s;
    }
    return total;
  }
};

inline double point_eval(const KernelSpec& k, std::vector<double> x, std::vector<double> y) {
  return k(Point(x), Point(y));
}

}  // namespace kt::testing
