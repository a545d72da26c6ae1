#include "kt/discrepancy.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/core.h>

#include "kt/parallel.hpp"

namespace kt {
namespace {

constexpr std::size_t kPairwiseBlock = 128;

// Rows of a double sum are accumulated independently and combined in index
// order; above this many rows the combination switches to pairwise summation.
constexpr std::size_t kPairwiseThreshold = 4096;

double ordered_sum(std::span<const double> values) noexcept {
  if (values.size() > kPairwiseThreshold) return pairwise_sum(values);
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

}  // namespace

DiscreteMeasure::DiscreteMeasure(const PointSet& points) : points_(&points) {
  if (points.empty()) throw DataError("a discrete measure needs at least one point");
}

DiscreteMeasure::DiscreteMeasure(const PointSet& points, std::vector<Index> indices)
    : points_(&points), indices_(std::move(indices)) {
  if (indices_.empty()) throw DataError("a discrete measure needs at least one point");
  for (Index i : indices_) {
    if (i >= points.size()) throw DataError(fmt::format("measure index {} out of range", i));
  }
}

DiscreteMeasure::DiscreteMeasure(const PointSet& points, std::vector<Index> indices,
                                 std::vector<double> weights)
    : DiscreteMeasure(points, std::move(indices)) {
  if (weights.size() != size()) throw DataError("one weight per support point is required");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw DataError("measure weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw DataError(fmt::format("measure weights sum to {}, not 1", total));
  }
  weights_ = std::move(weights);
}

double pairwise_sum(std::span<const double> values) noexcept {
  if (values.size() <= kPairwiseBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double kernel_cross_sum(const KernelSpec& k, const DiscreteMeasure& p, const DiscreteMeasure& q) {
  if (p.dim() != q.dim()) {
    throw DataError(fmt::format("dimension mismatch: {} vs {}", p.dim(), q.dim()));
  }
  if (k.perturbed()) throw ConstraintError("MMD is evaluated with unperturbed kernels");
  k.validate_dim(p.dim());
  std::vector<double> rows(p.size());
  for (std::size_t a = 0; a < p.size(); ++a) {
    Point x = p.point(a);
    double s = 0.0;
    for (std::size_t b = 0; b < q.size(); ++b) s += q.weight(b) * k.smooth_part(x, q.point(b));
    rows[a] = p.weight(a) * s;
  }
  return ordered_sum(rows);
}

double kernel_self_sum(const KernelSpec& k, const DiscreteMeasure& p) {
  return kernel_cross_sum(k, p, p);
}

double mmd_squared(const KernelSpec& k, const DiscreteMeasure& p, const DiscreteMeasure& q) {
  return kernel_self_sum(k, p) + kernel_self_sum(k, q) - 2.0 * kernel_cross_sum(k, p, q);
}

double mmd(const KernelSpec& k, const DiscreteMeasure& p, const DiscreteMeasure& q) {
  return std::sqrt(std::max(0.0, mmd_squared(k, p, q)));
}

MmdReference::MmdReference(KernelSpec k, const PointSet& reference, std::size_t threads)
    : kernel_(std::move(k)), reference_(&reference) {
  if (reference.empty()) throw DataError("reference sample is empty");
  kernel_.validate_dim(reference.dim());
  const std::size_t n = reference.size();
  std::vector<double> rows(n);
  parallel_for(
      n,
      [&](std::size_t a) {
        // Row a holds the diagonal plus twice the strict upper triangle, so
        // each row is self-contained and the total is schedule-independent.
        Point x = reference[a];
        double s = 0.0;
        for (std::size_t b = a + 1; b < n; ++b) s += kernel_.smooth_part(x, reference[b]);
        rows[a] = kernel_.smooth_part(x, x) + 2.0 * s;
      },
      threads);
  self_ = ordered_sum(rows) / (static_cast<double>(n) * static_cast<double>(n));
}

double MmdReference::mmd_to(const DiscreteMeasure& q) const {
  DiscreteMeasure ref(*reference_);
  double m2 = self_ + kernel_self_sum(kernel_, q) - 2.0 * kernel_cross_sum(kernel_, q, ref);
  return std::sqrt(std::max(0.0, m2));
}

std::vector<double> kernel_row_means(const BoundKernel& k) {
  const std::size_t n = k.size();
  std::vector<double> means(n);
  std::vector<double> row(n);
  for (Index z = 0; z < n; ++z) {
    for (Index y = 0; y < n; ++y) row[y] = k(z, y);
    means[z] = ordered_sum(row) / static_cast<double>(n);
  }
  return means;
}

SwapCache::SwapCache(const BoundKernel& k, std::vector<Index> coreset)
    : SwapCache(k, kernel_row_means(k), std::move(coreset)) {}

SwapCache::SwapCache(const BoundKernel& k, std::vector<double> row_means, std::vector<Index> coreset)
    : kernel_(k), row_means_(std::move(row_means)), coreset_(std::move(coreset)) {
  const std::size_t n = k.size();
  if (row_means_.size() != n) throw DataError("row means do not match the input size");
  if (coreset_.empty()) throw DataError("coreset is empty");
  for (Index c : coreset_) {
    if (c >= n) throw DataError(fmt::format("coreset index {} out of range", c));
  }
  diag_.resize(n);
  cross_.assign(n, 0.0);
  for (Index z = 0; z < n; ++z) {
    diag_[z] = k(z, z);
    for (Index c : coreset_) cross_[z] += k(z, c);
  }
  input_self_ = ordered_sum(row_means_) / static_cast<double>(n);
  for (Index c : coreset_) coreset_self_ += cross_[c];
}

double SwapCache::mmd_squared() const noexcept {
  const double m = static_cast<double>(coreset_.size());
  double mean_cross = 0.0;
  for (Index c : coreset_) mean_cross += row_means_[c];
  return input_self_ + coreset_self_ / (m * m) - 2.0 * mean_cross / m;
}

SwapCache::PositionView SwapCache::view(Index position) const {
  if (position >= coreset_.size()) throw DataError("coreset position out of range");
  PositionView v{position, coreset_[position], std::vector<double>(kernel_.size()), generation_};
  for (Index z = 0; z < kernel_.size(); ++z) v.row[z] = kernel_(z, v.incumbent);
  return v;
}

void SwapCache::check(const PositionView& view) const {
  if (view.generation != generation_) {
    throw StaleCache(fmt::format("swap view from generation {} used at generation {}",
                                 view.generation, generation_));
  }
}

double SwapCache::delta(const PositionView& view, Index z) const {
  check(view);
  const Index s = view.incumbent;
  if (z == s) return 0.0;
  const double m = static_cast<double>(coreset_.size());
  double self_change = 2.0 * (cross_[z] - view.row[z]) + diag_[z] - 2.0 * cross_[s] + diag_[s];
  return self_change / (m * m) - 2.0 * (row_means_[z] - row_means_[s]) / m;
}

void SwapCache::apply(const PositionView& view, Index z) {
  check(view);
  const Index s = view.incumbent;
  ++generation_;
  if (z == s) return;
  double self_change = 2.0 * (cross_[z] - view.row[z]) + diag_[z] - 2.0 * cross_[s] + diag_[s];
  for (Index w = 0; w < kernel_.size(); ++w) cross_[w] += kernel_(w, z) - view.row[w];
  coreset_self_ += self_change;
  coreset_[view.position] = z;
}

double mmd_swap_delta(const SwapCache& cache, const SwapCache::PositionView& view, Index z) {
  return cache.delta(view, z);
}

double integration_error(const TestFn& f, const DiscreteMeasure& p, const DiscreteMeasure& q) {
  double pf = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) pf += p.weight(a) * f(p.point(a));
  double qf = 0.0;
  for (std::size_t b = 0; b < q.size(); ++b) qf += q.weight(b) * f(q.point(b));
  return std::abs(pf - qf);
}

InterpolationCheck check_interpolation(const KernelSpec& k, const KernelSpec& k_alpha,
                                       const KernelSpec& k_2alpha, const DiscreteMeasure& p,
                                       const DiscreteMeasure& q, double alpha) {
  if (!(alpha >= 0.5 && alpha <= 1.0)) throw ConstraintError("alpha must lie in [1/2, 1]");
  double lhs = mmd(k, p, q);
  double first = mmd(k_alpha, p, q);
  double second = mmd(k_2alpha, p, q);
  double e1 = 2.0 - 1.0 / alpha;
  double e2 = 1.0 / alpha - 1.0;
  // 0^0 = 1 keeps the alpha = 1/2 and alpha = 1 endpoints exact.
  double rhs = (e1 == 0.0 ? 1.0 : std::pow(first, e1)) * (e2 == 0.0 ? 1.0 : std::pow(second, e2));
  return {lhs, rhs, lhs <= rhs + 1e-10};
}

KernelSpec gauss_power_exact(const KernelSpec& k, double p, std::size_t dim) {
  const auto* g = k.is_single() ? std::get_if<Gauss>(&k.family()) : nullptr;
  if (g == nullptr) throw ConstraintError("exact power constants are only available for gauss");
  if (!(p > 0.0)) throw ConstraintError("power exponent must be positive");
  // With the unitary transform f^(w) = (2 pi)^{-d/2} int f(x) e^{-i<w,x>} dx,
  // c exp(-|z|^2 / (2 s^2)) has transform c s^d exp(-s^2 |w|^2 / 2). Raising
  // to the power p gives c^p s^{pd} exp(-p s^2 |w|^2 / 2), which is the
  // transform of the bandwidth s sqrt(p) Gaussian times c^p s^{(p-1)d} p^{-d/2}.
  const double d = static_cast<double>(dim);
  const double s = g->sigma;
  double scale = std::pow(k.scale(), p) * std::pow(s, (p - 1.0) * d) * std::pow(p, -d / 2.0);
  return KernelSpec(Gauss{s * std::sqrt(p)}, scale);
}

}  // namespace kt
