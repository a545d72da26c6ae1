#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "kt/point_set.hpp"

namespace kt {

// Shift-invariant kernel families k(x, y) = kappa(x - y) on R^d. Every
// family is normalized so that kappa(0) = 1.

struct Gauss {
  double sigma;  // exp(-|z|^2 / (2 sigma^2))
};

struct Laplace {
  double sigma;  // exp(-|z| / sigma)
};

// c_a (gamma |z|)^a K_a(gamma |z|) with a = nu - d/2 and c_a = 2^(1-a) / Gamma(a).
struct Matern {
  double nu;
  double gamma;
};

struct Imq {
  double nu;  // (1 + |z|^2 / gamma^2)^(-nu)
  double gamma;
};

struct Sinc {
  double theta;  // prod_j sin(theta z_j) / (theta z_j)
};

// prod_j h_beta(gamma z_j) / h_beta(0), h_beta the (2 beta + 2)-fold
// self-convolution of the indicator of [-1/2, 1/2]. beta = 0 is the hat
// function; it only arises as a power kernel of beta = 1.
struct BSpline {
  unsigned beta;
  double gamma;
};

using Family = std::variant<Gauss, Laplace, Matern, Imq, Sinc, BSpline>;

std::string family_name(const Family& family);

struct KernelTerm {
  Family family;
  double scale = 1.0;
};

// A non-negative combination of scaled families, optionally perturbed by an
// identity term w [i == j] over the indices of the input sequence. A plain
// kernel is the single-term case.
class KernelSpec {
 public:
  explicit KernelSpec(Family family, double scale = 1.0);

  static KernelSpec sum(std::vector<KernelTerm> terms, double identity_weight = 0.0);

  const std::vector<KernelTerm>& terms() const noexcept { return terms_; }
  bool is_single() const noexcept { return terms_.size() == 1 && identity_weight_ == 0.0; }

  // Only meaningful for single-term kernels; throws otherwise.
  const Family& family() const;
  double scale() const;

  double identity_weight() const noexcept { return identity_weight_; }
  bool perturbed() const noexcept { return identity_weight_ != 0.0; }

  // sup |k|; attained on the diagonal for every family.
  double sup_norm() const noexcept;

  KernelSpec scaled(double c) const;

  // Throws ConstraintError when a family cannot be used in dimension d.
  void validate_dim(std::size_t dim) const;

  // Evaluation on raw points; rejected for perturbed kernels, which need
  // point indices (see IndexedPoint and BoundKernel).
  double operator()(Point x, Point y) const;

  // Sum of the family terms only, ignoring any identity perturbation.
  double smooth_part(Point x, Point y) const noexcept;

  friend bool operator==(const KernelSpec&, const KernelSpec&);

 private:
  KernelSpec() = default;

  std::vector<KernelTerm> terms_;
  double identity_weight_ = 0.0;
};

double eval(const KernelSpec& k, Point x, Point y);

// kappa(z) for a single unscaled family.
double eval_family(const Family& family, Point x, Point y) noexcept;

// h_beta(t), the centered cardinal B-spline of order 2 beta + 2.
double bspline_univariate(unsigned beta, double t);

// h_beta(0) via the closed-form alternating sum over the left half.
double bspline_center(unsigned beta);

// c_a r^a K_a(r), the radial Matern profile with kappa(0) = 1.
double matern_profile(double a, double r);

struct PowerKernelPair {
  KernelSpec target;
  KernelSpec power;
  double alpha;
  bool closed_form;
};

// The alpha-power kernel of k, up to a positive constant factor. Throws
// NoClosedFormPowerKernel naming the failed constraint.
PowerKernelPair power_kernel(const KernelSpec& k, double alpha, std::size_t dim);

// k / |k|_inf + k_alpha / |k_alpha|_inf.
KernelSpec ktplus_kernel(const KernelSpec& k, const KernelSpec& k_alpha);

// k / |k|_inf + weight [i == j]: the kernel on points extended by the
// standard basis vector of their input index.
KernelSpec identity_perturbed(const KernelSpec& k, double weight = 1.0);

struct IndexedPoint {
  const PointSet* set;
  Index index;
};

// Throws DataError when the two points come from different indexed sets.
double eval(const KernelSpec& k, IndexedPoint x, IndexedPoint y);

// A kernel bound to one point sequence and evaluated by index.
class BoundKernel {
 public:
  BoundKernel(const KernelSpec& k, const PointSet& points);

  double operator()(Index i, Index j) const noexcept {
    double v = kernel_.smooth_part(points_[i], points_[j]);
    return i == j ? v + kernel_.identity_weight() : v;
  }

  const KernelSpec& kernel() const noexcept { return kernel_; }
  const PointSet& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }

 private:
  KernelSpec kernel_;
  const PointSet& points_;
};

}  // namespace kt
