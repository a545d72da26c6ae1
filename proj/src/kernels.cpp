#include "kt/kernels.hpp"

#include <cmath>
#include <fmt/core.h>

namespace kt {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double squared_distance(Point x, Point y) noexcept {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    double diff = x[j] - y[j];
    s += diff * diff;
  }
  return s;
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConstraintError(fmt::format("{} must be positive and finite, got {}", what, v));
  }
}

void validate_family(const Family& family) {
  std::visit(Overloaded{
                 [](const Gauss& g) { require_positive(g.sigma, "gauss sigma"); },
                 [](const Laplace& l) { require_positive(l.sigma, "laplace sigma"); },
                 [](const Matern& m) {
                   require_positive(m.nu, "matern nu");
                   require_positive(m.gamma, "matern gamma");
                 },
                 [](const Imq& q) {
                   require_positive(q.nu, "imq nu");
                   require_positive(q.gamma, "imq gamma");
                 },
                 [](const Sinc& s) {
                   if (s.theta == 0.0 || !std::isfinite(s.theta)) {
                     throw ConstraintError("sinc theta must be non-zero and finite");
                   }
                 },
                 [](const BSpline& b) {
                   require_positive(b.gamma, "bspline gamma");
                   if (b.beta > 20) throw ConstraintError("bspline beta above 20 is not supported");
                 },
             },
             family);
}

double sinc_factor(double t) noexcept {
  if (std::abs(t) < 1e-8) {
    double t2 = t * t;
    return 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
  }
  return std::sin(t) / t;
}

// e^{-r} times the polynomial part of the half-integer Matern profile,
// a = n + 1/2:  n!/(2n)! sum_k (2n-k)! / (k! (n-k)!) (2r)^k.
double matern_half_integer(unsigned n, double r) noexcept {
  double poly = 0.0;
  double term = 1.0;
  for (unsigned k = 0; k <= n; ++k) {
    poly += term;
    if (k < n) term *= 2.0 * r * (n - k) / ((2.0 * n - k) * (k + 1.0));
  }
  return poly * std::exp(-r);
}

bool is_half_integer(double a, unsigned& n) noexcept {
  double shifted = a - 0.5;
  double rounded = std::round(shifted);
  if (rounded >= 0.0 && std::abs(shifted - rounded) < 1e-12 && rounded < 64) {
    n = static_cast<unsigned>(rounded);
    return true;
  }
  return false;
}

bool is_close_to_integer(double v, double& rounded) noexcept {
  rounded = std::round(v);
  return std::abs(v - rounded) < 1e-9;
}

}  // namespace

std::string family_name(const Family& family) {
  return std::visit(Overloaded{
                        [](const Gauss&) { return "gauss"; },
                        [](const Laplace&) { return "laplace"; },
                        [](const Matern&) { return "matern"; },
                        [](const Imq&) { return "imq"; },
                        [](const Sinc&) { return "sinc"; },
                        [](const BSpline&) { return "bspline"; },
                    },
                    family);
}

double matern_profile(double a, double r) {
  if (r == 0.0) return 1.0;
  unsigned n = 0;
  if (is_half_integer(a, n)) return matern_half_integer(n, r);
  if (r < 1e-12) {
    // Leading small-argument behaviour of the profile; the correction
    // vanishes to double precision for a >= 1.
    if (a < 1.0) return 1.0 - std::tgamma(1.0 - a) / std::tgamma(1.0 + a) * std::pow(r / 2.0, 2.0 * a);
    return 1.0;
  }
  if (r > 700.0) return 0.0;
  double log_prefactor = (1.0 - a) * std::log(2.0) - std::lgamma(a) + a * std::log(r);
  return std::exp(log_prefactor) * std::cyl_bessel_k(a, r);
}

double bspline_univariate(unsigned beta, double t) {
  const unsigned order = 2 * beta + 2;
  const double half = order / 2.0;
  double u = -std::abs(t);
  if (u <= -half) return 0.0;
  // Alternating sum over the truncated powers left of u; evaluating at the
  // mirrored point keeps the number of terms and the cancellation small.
  double sum = 0.0;
  double binom = 1.0;
  for (unsigned k = 0; k <= order; ++k) {
    double base = u + half - k;
    if (base <= 0.0) break;
    double term = binom * std::pow(base, order - 1);
    sum += (k % 2 == 0) ? term : -term;
    binom = binom * (order - k) / (k + 1);
  }
  return sum / std::tgamma(order);
}

double bspline_center(unsigned beta) {
  const unsigned order = 2 * beta + 2;
  double sum = 0.0;
  double binom = 1.0;
  for (unsigned j = 0; j <= order / 2; ++j) {
    double term = binom * std::pow(order / 2.0 - j, order - 1);
    sum += (j % 2 == 0) ? term : -term;
    binom = binom * (order - j) / (j + 1);
  }
  return sum / std::tgamma(order);
}

double eval_family(const Family& family, Point x, Point y) noexcept {
  return std::visit(
      Overloaded{
          [&](const Gauss& g) { return std::exp(-squared_distance(x, y) / (2.0 * g.sigma * g.sigma)); },
          [&](const Laplace& l) { return std::exp(-std::sqrt(squared_distance(x, y)) / l.sigma); },
          [&](const Matern& m) {
            double a = m.nu - x.size() / 2.0;
            return matern_profile(a, m.gamma * std::sqrt(squared_distance(x, y)));
          },
          [&](const Imq& q) {
            return std::pow(1.0 + squared_distance(x, y) / (q.gamma * q.gamma), -q.nu);
          },
          [&](const Sinc& s) {
            double v = 1.0;
            for (std::size_t j = 0; j < x.size(); ++j) v *= sinc_factor(s.theta * (x[j] - y[j]));
            return v;
          },
          [&](const BSpline& b) {
            double norm = bspline_center(b.beta);
            double v = 1.0;
            for (std::size_t j = 0; j < x.size(); ++j) {
              v *= bspline_univariate(b.beta, b.gamma * (x[j] - y[j])) / norm;
            }
            return v;
          },
      },
      family);
}

KernelSpec::KernelSpec(Family family, double scale) {
  validate_family(family);
  require_positive(scale, "kernel scale");
  terms_.push_back({std::move(family), scale});
}

KernelSpec KernelSpec::sum(std::vector<KernelTerm> terms, double identity_weight) {
  if (terms.empty()) throw ConstraintError("a kernel needs at least one family term");
  if (identity_weight < 0.0 || !std::isfinite(identity_weight)) {
    throw ConstraintError("identity weight must be non-negative");
  }
  for (const auto& t : terms) {
    validate_family(t.family);
    require_positive(t.scale, "kernel scale");
  }
  KernelSpec k;
  k.terms_ = std::move(terms);
  k.identity_weight_ = identity_weight;
  return k;
}

const Family& KernelSpec::family() const {
  if (!is_single()) throw ConstraintError("kernel is a composite, not a single family");
  return terms_.front().family;
}

double KernelSpec::scale() const {
  if (!is_single()) throw ConstraintError("kernel is a composite, not a single family");
  return terms_.front().scale;
}

double KernelSpec::sup_norm() const noexcept {
  double s = identity_weight_;
  for (const auto& t : terms_) s += t.scale;
  return s;
}

KernelSpec KernelSpec::scaled(double c) const {
  require_positive(c, "kernel scale factor");
  KernelSpec k = *this;
  for (auto& t : k.terms_) t.scale *= c;
  k.identity_weight_ *= c;
  return k;
}

void KernelSpec::validate_dim(std::size_t dim) const {
  if (dim == 0) throw DataError("points must have dimension at least 1");
  for (const auto& t : terms_) {
    if (const auto* m = std::get_if<Matern>(&t.family); m && !(m->nu > dim / 2.0)) {
      throw ConstraintError(fmt::format("matern requires nu > d/2 (nu = {}, d = {})", m->nu, dim));
    }
  }
}

double KernelSpec::smooth_part(Point x, Point y) const noexcept {
  if (terms_.size() == 1) return terms_.front().scale * eval_family(terms_.front().family, x, y);
  double v = 0.0;
  for (const auto& t : terms_) v += t.scale * eval_family(t.family, x, y);
  return v;
}

double KernelSpec::operator()(Point x, Point y) const {
  if (x.size() != y.size()) {
    throw DataError(fmt::format("dimension mismatch: {} vs {}", x.size(), y.size()));
  }
  if (perturbed()) {
    throw ConstraintError("identity-perturbed kernels are evaluated on indexed points only");
  }
  validate_dim(x.size());
  return smooth_part(x, y);
}

bool operator==(const KernelSpec& a, const KernelSpec& b) {
  if (a.identity_weight_ != b.identity_weight_ || a.terms_.size() != b.terms_.size()) return false;
  for (std::size_t i = 0; i < a.terms_.size(); ++i) {
    const auto& ta = a.terms_[i];
    const auto& tb = b.terms_[i];
    if (ta.scale != tb.scale || ta.family.index() != tb.family.index()) return false;
    bool same = std::visit(
        Overloaded{
            [&](const Gauss& g) { return g.sigma == std::get<Gauss>(tb.family).sigma; },
            [&](const Laplace& l) { return l.sigma == std::get<Laplace>(tb.family).sigma; },
            [&](const Matern& m) {
              const auto& o = std::get<Matern>(tb.family);
              return m.nu == o.nu && m.gamma == o.gamma;
            },
            [&](const Imq& q) {
              const auto& o = std::get<Imq>(tb.family);
              return q.nu == o.nu && q.gamma == o.gamma;
            },
            [&](const Sinc& s) { return s.theta == std::get<Sinc>(tb.family).theta; },
            [&](const BSpline& s) {
              const auto& o = std::get<BSpline>(tb.family);
              return s.beta == o.beta && s.gamma == o.gamma;
            },
        },
        ta.family);
    if (!same) return false;
  }
  return true;
}

double eval(const KernelSpec& k, Point x, Point y) { return k(x, y); }

double eval(const KernelSpec& k, IndexedPoint x, IndexedPoint y) {
  if (x.set == nullptr || x.set != y.set) {
    throw DataError("indexed kernel evaluation requires both points from the same indexed set");
  }
  if (x.index >= x.set->size() || y.index >= y.set->size()) throw DataError("point index out of range");
  k.validate_dim(x.set->dim());
  double v = k.smooth_part((*x.set)[x.index], (*y.set)[y.index]);
  return x.index == y.index ? v + k.identity_weight() : v;
}

PowerKernelPair power_kernel(const KernelSpec& k, double alpha, std::size_t dim) {
  if (!(alpha >= 0.5 && alpha <= 1.0)) {
    throw NoClosedFormPowerKernel(fmt::format("alpha must lie in [1/2, 1], got {}", alpha));
  }
  if (alpha == 1.0) return {k, k, 1.0, true};
  if (!k.is_single()) {
    throw NoClosedFormPowerKernel("power kernels are only defined for a single kernel family");
  }
  const double scale = k.scale();
  auto matern_power = [&](double nu, double gamma) {
    if (!(alpha * nu > dim / 2.0)) {
      throw NoClosedFormPowerKernel(fmt::format(
          "matern power requires alpha*nu > d/2 (alpha*nu = {}, d/2 = {})", alpha * nu, dim / 2.0));
    }
    return KernelSpec(Matern{alpha * nu, gamma}, scale);
  };
  KernelSpec power = std::visit(
      Overloaded{
          [&](const Gauss& g) { return KernelSpec(Gauss{g.sigma * std::sqrt(alpha)}, scale); },
          [&](const Laplace& l) { return matern_power((dim + 1) / 2.0, 1.0 / l.sigma); },
          [&](const Matern& m) { return matern_power(m.nu, m.gamma); },
          [&](const Imq&) -> KernelSpec {
            throw NoClosedFormPowerKernel("imq has no closed-form power kernel; supply a split kernel");
          },
          [&](const Sinc& s) { return KernelSpec(s, scale); },
          [&](const BSpline& b) {
            double a = 2.0 * alpha * b.beta + 2.0 * alpha - 2.0;
            double rounded = 0.0;
            if (!is_close_to_integer(a, rounded) || rounded < 0.0 ||
                static_cast<long>(rounded) % 2 != 0) {
              throw NoClosedFormPowerKernel(fmt::format(
                  "bspline power requires A = 2*alpha*beta + 2*alpha - 2 to be an even "
                  "non-negative integer (A = {})",
                  a));
            }
            return KernelSpec(BSpline{static_cast<unsigned>(rounded) / 2, b.gamma}, scale);
          },
      },
      k.family());
  return {k, power, alpha, true};
}

KernelSpec ktplus_kernel(const KernelSpec& k, const KernelSpec& k_alpha) {
  std::vector<KernelTerm> terms;
  const double sk = k.sup_norm();
  const double sa = k_alpha.sup_norm();
  for (const auto& t : k.terms()) terms.push_back({t.family, t.scale / sk});
  for (const auto& t : k_alpha.terms()) terms.push_back({t.family, t.scale / sa});
  return KernelSpec::sum(std::move(terms), k.identity_weight() / sk + k_alpha.identity_weight() / sa);
}

KernelSpec identity_perturbed(const KernelSpec& k, double weight) {
  std::vector<KernelTerm> terms;
  const double s = k.sup_norm();
  for (const auto& t : k.terms()) terms.push_back({t.family, t.scale / s});
  return KernelSpec::sum(std::move(terms), k.identity_weight() / s + weight);
}

BoundKernel::BoundKernel(const KernelSpec& k, const PointSet& points) : kernel_(k), points_(points) {
  kernel_.validate_dim(points.dim());
}

}  // namespace kt
