#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kt/kernels.hpp"
#include "kt/point_set.hpp"

namespace kt {

// Failure-probability schedule (delta_i) for i = 1..floor(n/2).
struct DeltaSchedule {
  enum class Kind {
    KnownN,     // delta_i = delta / n
    Oblivious,  // delta_i = m delta / (2^{m+2} (i+1) log^2(i+1))
  };
  Kind kind = Kind::KnownN;
  double delta = 0.5;

  double at(std::size_t i, std::size_t n, unsigned m) const;
};

enum class BaselineRule {
  Standard,  // every 2^m-th point, keeping the last
  Random,    // uniform subsample without replacement, seeded from the config seed
};

struct ThinningConfig {
  unsigned m = 1;
  DeltaSchedule delta;
  std::uint64_t seed = 0;
  BaselineRule baseline = BaselineRule::Standard;
  // Greedy refinement sweeps over the selected coreset. One sweep is the
  // reference procedure; more are optional.
  unsigned refine_sweeps = 1;

  void validate(std::size_t n) const;
};

struct Provenance {
  std::string algorithm;
  // 0 is the baseline coreset; l >= 1 is the l-th split candidate.
  std::size_t chosen_candidate = 0;
  std::size_t accepted_swaps = 0;
  // Largest final sub-Gaussian parameter at level m. Diagnostic only.
  double sigma_m = 0.0;
};

struct Coreset {
  std::vector<Index> indices;
  Provenance provenance;
};

struct SplitResult {
  std::vector<Coreset> candidates;  // 2^m coresets
  std::vector<double> sigma_m;      // final sigma_{m, l}, l = 1..2^{m-1}
};

// Inspectable state of the split recursion; exposed for tests.
struct SplitState {
  std::vector<std::vector<std::vector<Index>>> coresets;  // [j][l]
  std::vector<std::vector<double>> sigma;                 // [j][l], j >= 1
};

// Per-pair randomized swap rule shared by every level of the split.
struct SwapParams {
  double threshold;  // a
  double sigma;      // updated sub-Gaussian parameter
};

// get_swap_params(sigma, b, delta).
SwapParams swap_params(double sigma, double b, double delta) noexcept;

// min(1, 1/2 (1 - alpha / a)_+).
double swap_probability(double inner, double threshold) noexcept;

SplitResult kt_split(const KernelSpec& k_split, const PointSet& input, const ThinningConfig& cfg,
                     SplitState* state = nullptr);

Coreset baseline_thin(std::size_t n, unsigned m);

Coreset kt_swap(const KernelSpec& k, const PointSet& input, const std::vector<Coreset>& candidates,
                const ThinningConfig& cfg);

Coreset generalized_kt(const KernelSpec& k_split, const KernelSpec& k_target, const PointSet& input,
                       const ThinningConfig& cfg);

Coreset target_kt(const KernelSpec& k, const PointSet& input, const ThinningConfig& cfg);
Coreset power_kt(const KernelSpec& k, double alpha, const PointSet& input, const ThinningConfig& cfg);
Coreset kt_plus(const KernelSpec& k, double alpha, const PointSet& input, const ThinningConfig& cfg);

// Split kernels used by the front-ends.
KernelSpec power_split_kernel(const KernelSpec& k, double alpha, std::size_t dim);
KernelSpec ktplus_split_kernel(const KernelSpec& k, double alpha, std::size_t dim);

}  // namespace kt
