#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "kt/kernels.hpp"
#include "kt/point_set.hpp"

namespace kt {

// A finitely supported probability measure over (a subset of) a point set.
// Empty `indices` means every point; empty `weights` means uniform weights.
class DiscreteMeasure {
 public:
  explicit DiscreteMeasure(const PointSet& points);
  DiscreteMeasure(const PointSet& points, std::vector<Index> indices);
  DiscreteMeasure(const PointSet& points, std::vector<Index> indices, std::vector<double> weights);

  std::size_t size() const noexcept { return indices_.empty() ? points_->size() : indices_.size(); }
  std::size_t dim() const noexcept { return points_->dim(); }
  Point point(std::size_t k) const noexcept { return (*points_)[indices_.empty() ? k : indices_[k]]; }
  double weight(std::size_t k) const noexcept {
    return weights_.empty() ? 1.0 / static_cast<double>(size()) : weights_[k];
  }

 private:
  const PointSet* points_;
  std::vector<Index> indices_;
  std::vector<double> weights_;
};

// Sum of values with pairwise (cascade) summation.
double pairwise_sum(std::span<const double> values) noexcept;

// sum_ij w_i w_j k(x_i, x_j).
double kernel_self_sum(const KernelSpec& k, const DiscreteMeasure& p);

// sum_ij w_i v_j k(x_i, y_j).
double kernel_cross_sum(const KernelSpec& k, const DiscreteMeasure& p, const DiscreteMeasure& q);

double mmd_squared(const KernelSpec& k, const DiscreteMeasure& p, const DiscreteMeasure& q);

// MMD_k(P, Q) = |(P - Q) k|_k, with negative rounding dust clamped to zero.
double mmd(const KernelSpec& k, const DiscreteMeasure& p, const DiscreteMeasure& q);

// MMD against one fixed reference measure, caching the reference self-term.
class MmdReference {
 public:
  MmdReference(KernelSpec k, const PointSet& reference, std::size_t threads = 0);

  double mmd_to(const DiscreteMeasure& q) const;
  double self_term() const noexcept { return self_; }

 private:
  KernelSpec kernel_;
  const PointSet* reference_;
  double self_;
};

// (1/n) sum_y k(z, y) for every z in the bound point set.
std::vector<double> kernel_row_means(const BoundKernel& k);

// Incremental MMD^2(S_in, S) bookkeeping for single-position replacements
// in a coreset S drawn (with repetition) from the bound input S_in.
//
// Caches r(z) = (1/n) sum_y k(z, y) and C(z) = sum_{w in S} k(z, w), so the
// change in MMD^2 from setting S[i] = z costs O(1) once the row k(., S[i])
// is available, and applying a replacement costs O(n).
class SwapCache {
 public:
  // A snapshot tied to one coreset position and cache generation.
  struct PositionView {
    Index position;
    Index incumbent;
    std::vector<double> row;  // k(., incumbent)
    std::uint64_t generation;
  };

  SwapCache(const BoundKernel& k, std::vector<double> row_means, std::vector<Index> coreset);
  SwapCache(const BoundKernel& k, std::vector<Index> coreset);

  const std::vector<Index>& coreset() const noexcept { return coreset_; }
  std::uint64_t generation() const noexcept { return generation_; }

  // MMD^2(S_in, S) from the cached sums.
  double mmd_squared() const noexcept;

  PositionView view(Index position) const;

  // MMD^2 after S[position] = z minus MMD^2 now. Throws StaleCache when the
  // view predates the last apply().
  double delta(const PositionView& view, Index z) const;

  void apply(const PositionView& view, Index z);

 private:
  void check(const PositionView& view) const;

  const BoundKernel& kernel_;
  std::vector<double> row_means_;
  std::vector<double> diag_;
  std::vector<double> cross_;
  std::vector<Index> coreset_;
  double input_self_ = 0.0;  // (1/n^2) sum_ij k(x_i, x_j)
  double coreset_self_ = 0.0;  // sum_{a, b in S} k(a, b)
  std::uint64_t generation_ = 0;
};

double mmd_swap_delta(const SwapCache& cache, const SwapCache::PositionView& view, Index z);

using TestFn = std::function<double(Point)>;

// |P f - Q f|.
double integration_error(const TestFn& f, const DiscreteMeasure& p, const DiscreteMeasure& q);

struct InterpolationCheck {
  double lhs;
  double rhs;
  bool holds;
};

// MMD_k <= MMD_{k_alpha}^(2 - 1/alpha) * MMD_{k_2alpha}^(1/alpha - 1), with 1e-10 slack.
InterpolationCheck check_interpolation(const KernelSpec& k, const KernelSpec& k_alpha,
                                       const KernelSpec& k_2alpha, const DiscreteMeasure& p,
                                       const DiscreteMeasure& q, double alpha);

// The exact p-power of a Gaussian kernel in dimension d: the kernel whose
// Fourier transform is the p-th power of the transform of k. Unlike
// power_kernel() the constant factor is not dropped.
KernelSpec gauss_power_exact(const KernelSpec& k, double p, std::size_t dim);

}  // namespace kt
