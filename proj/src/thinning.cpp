#include "kt/thinning.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/core.h>
#include <numeric>
#include <random>

#include "kt/discrepancy.hpp"
#include "kt/rng.hpp"

namespace kt {
namespace {

constexpr std::uint64_t kBaselineStream = 0xba5e11e;

std::size_t pow2(unsigned e) { return std::size_t{1} << e; }

#ifndef NDEBUG
void check_split_invariants(const SplitState& state, std::size_t round, unsigned m) {
  for (unsigned j = 0; j <= m; ++j) {
    // Level j receives one point per child every 2^{j-1} rounds (two per
    // round at level 0), so each slot holds floor(2i / 2^j) points.
    const std::size_t expected = (2 * round) >> j;
    for (const auto& slot : state.coresets[j]) {
      if (slot.size() != expected) throw Error("kt_split size invariant violated");
    }
  }
}
#endif

std::vector<Index> random_baseline(std::size_t n, std::size_t size, std::uint64_t seed) {
  std::vector<Index> all(n);
  std::iota(all.begin(), all.end(), Index{0});
  std::vector<Index> out;
  out.reserve(size);
  std::mt19937_64 gen(stream_key(seed, {kBaselineStream}));
  std::sample(all.begin(), all.end(), std::back_inserter(out), size, gen);
  return out;
}

}  // namespace

double DeltaSchedule::at(std::size_t i, std::size_t n, unsigned m) const {
  switch (kind) {
    case Kind::KnownN:
      return delta / static_cast<double>(n);
    case Kind::Oblivious: {
      double ip1 = static_cast<double>(i) + 1.0;
      double lg = std::log(ip1);
      return m * delta / (std::ldexp(1.0, static_cast<int>(m) + 2) * ip1 * lg * lg);
    }
  }
  return delta;
}

void ThinningConfig::validate(std::size_t n) const {
  if (n < 2) throw DataError("thinning needs at least two input points");
  if (m < 1) throw ConstraintError("thinning depth m must be at least 1");
  if (m >= 63 || (n >> m) < 1) {
    throw ConstraintError(fmt::format("m = {} is too large for n = {} points", m, n));
  }
  if (!(delta.delta > 0.0 && delta.delta < 1.0)) {
    throw ConstraintError(fmt::format("delta must lie in (0, 1), got {}", delta.delta));
  }
  if (refine_sweeps > 1000) throw ConstraintError("refine_sweeps is unreasonably large");
}

SwapParams swap_params(double sigma, double b, double delta) noexcept {
  double log_term = std::max(0.0, 2.0 * std::log(2.0 / delta));
  double b2 = b * b;
  double a = std::max(b * sigma * std::sqrt(log_term), b2);
  double s2 = sigma * sigma;
  s2 += b2 * std::max(0.0, 1.0 + (b2 - 2.0 * a) * s2 / (a * a));
  return {a, std::sqrt(s2)};
}

double swap_probability(double inner, double threshold) noexcept {
  return std::min(1.0, 0.5 * std::max(0.0, 1.0 - inner / threshold));
}

SplitResult kt_split(const KernelSpec& k_split, const PointSet& input, const ThinningConfig& cfg,
                     SplitState* state_out) {
  const std::size_t n = input.size();
  if (n == 0) throw DataError("input point set is empty");
  cfg.validate(n);
  const unsigned m = cfg.m;
  const BoundKernel k(k_split, input);

  SplitState state;
  state.coresets.resize(m + 1);
  state.sigma.resize(m + 1);
  for (unsigned j = 0; j <= m; ++j) {
    state.coresets[j].resize(pow2(j));
    for (auto& slot : state.coresets[j]) slot.reserve((n >> j) + 1);
    if (j >= 1) state.sigma[j].assign(pow2(j - 1), 0.0);
  }

  const std::size_t rounds = n / 2;
  for (std::size_t i = 1; i <= rounds; ++i) {
    state.coresets[0][0].push_back(2 * i - 2);
    state.coresets[0][0].push_back(2 * i - 1);
    for (unsigned j = 1; j <= m && i % pow2(j - 1) == 0; ++j) {
      for (std::size_t l = 0; l < pow2(j - 1); ++l) {
        const auto& parent = state.coresets[j - 1][l];
        auto& left = state.coresets[j][2 * l];
        auto& right = state.coresets[j][2 * l + 1];
        Index x = parent[parent.size() - 2];
        Index xt = parent[parent.size() - 1];

        const double kxx = k(x, x);
        const double ktt = k(xt, xt);
        const double b2 = kxx + ktt - 2.0 * k(x, xt);
        if (b2 > 0.0) {
          const double delta_hat =
              cfg.delta.at(parent.size() / 2, n, m) * static_cast<double>(pow2(j - 1)) / m;
          const SwapParams params = swap_params(state.sigma[j][l], std::sqrt(b2), delta_hat);
          state.sigma[j][l] = params.sigma;

          double inner = ktt - kxx;
          for (Index y : parent) inner += k(y, x) - k(y, xt);
          double child_sum = 0.0;
          for (Index z : left) child_sum += k(z, x) - k(z, xt);
          inner -= 2.0 * child_sum;

          const double p = swap_probability(inner, params.threshold);
          if (counter_uniform(cfg.seed, {i, j, l}) < p) std::swap(x, xt);
        }
        // b2 <= 0 only for coincident points under the split kernel: the
        // assignment is immaterial, so the swap and sigma update are skipped.
        left.push_back(x);
        right.push_back(xt);
      }
    }
#ifndef NDEBUG
    check_split_invariants(state, i, m);
#endif
  }

  SplitResult result;
  result.sigma_m = state.sigma[m];
  const double sigma_max =
      result.sigma_m.empty() ? 0.0 : *std::max_element(result.sigma_m.begin(), result.sigma_m.end());
  for (auto& slot : state.coresets[m]) {
    Provenance prov{"kt-split", 0, 0, sigma_max};
    result.candidates.push_back({slot, prov});
  }
  if (state_out != nullptr) *state_out = std::move(state);
  return result;
}

Coreset baseline_thin(std::size_t n, unsigned m) {
  if (m >= 63 || (n >> m) < 1) {
    throw ConstraintError(fmt::format("m = {} is too large for n = {} points", m, n));
  }
  const std::size_t step = pow2(m);
  const std::size_t size = n >> m;
  Coreset out;
  out.indices.resize(size);
  for (std::size_t c = 0; c < size; ++c) out.indices[c] = n - 1 - step * (size - 1 - c);
  out.provenance.algorithm = "standard-thinning";
  return out;
}

Coreset kt_swap(const KernelSpec& k_target, const PointSet& input, const std::vector<Coreset>& candidates,
                const ThinningConfig& cfg) {
  if (candidates.empty()) throw DataError("kt_swap needs at least one candidate coreset");
  const std::size_t n = input.size();
  const std::size_t n_out = candidates.front().indices.size();
  if (n_out == 0) throw DataError("candidate coresets are empty");
  if (cfg.m >= 63 || n_out != (n >> cfg.m)) {
    throw DataError(fmt::format("candidate size {} does not match floor(n / 2^m) = {}", n_out,
                                cfg.m >= 63 ? 0 : n >> cfg.m));
  }
  for (const auto& c : candidates) {
    if (c.indices.size() != n_out) throw DataError("candidate coresets differ in size");
    for (Index i : c.indices) {
      if (i >= n) throw DataError(fmt::format("candidate index {} out of range", i));
    }
  }

  const BoundKernel k(k_target, input);
  std::vector<double> row_means = kernel_row_means(k);

  std::vector<Index> baseline;
  switch (cfg.baseline) {
    case BaselineRule::Standard:
      baseline = baseline_thin(n, cfg.m).indices;
      break;
    case BaselineRule::Random:
      baseline = random_baseline(n, n_out, cfg.seed);
      break;
  }

  double input_self = 0.0;
  for (double r : row_means) input_self += r;
  input_self /= static_cast<double>(n);
  const double mo = static_cast<double>(n_out);
  auto candidate_mmd2 = [&](const std::vector<Index>& s) {
    double self = 0.0;
    double cross = 0.0;
    for (Index a : s) {
      cross += row_means[a];
      for (Index b : s) self += k(a, b);
    }
    return input_self + self / (mo * mo) - 2.0 * cross / mo;
  };

  std::size_t best = 0;
  double best_mmd2 = candidate_mmd2(baseline);
  for (std::size_t l = 0; l < candidates.size(); ++l) {
    double v = candidate_mmd2(candidates[l].indices);
    if (v < best_mmd2) {
      best_mmd2 = v;
      best = l + 1;
    }
  }

  SwapCache cache(k, std::move(row_means), best == 0 ? baseline : candidates[best - 1].indices);
  std::size_t accepted = 0;
  for (unsigned sweep = 0; sweep < cfg.refine_sweeps; ++sweep) {
    for (Index pos = 0; pos < n_out; ++pos) {
      const auto view = cache.view(pos);
      Index best_z = 0;
      double best_delta = cache.delta(view, 0);
      for (Index z = 1; z < n; ++z) {
        double d = cache.delta(view, z);
        if (d < best_delta) {
          best_delta = d;
          best_z = z;
        }
      }
      if (best_z != view.incumbent) ++accepted;
      cache.apply(view, best_z);
    }
  }

  Coreset out;
  out.indices = cache.coreset();
  out.provenance.algorithm = "kt-swap";
  out.provenance.chosen_candidate = best;
  out.provenance.accepted_swaps = accepted;
  if (best > 0) out.provenance.sigma_m = candidates[best - 1].provenance.sigma_m;
  return out;
}

Coreset generalized_kt(const KernelSpec& k_split, const KernelSpec& k_target, const PointSet& input,
                       const ThinningConfig& cfg) {
  SplitResult split = kt_split(k_split, input, cfg);
  Coreset out = kt_swap(k_target, input, split.candidates, cfg);
  out.provenance.algorithm = "generalized-kt";
  return out;
}

Coreset target_kt(const KernelSpec& k, const PointSet& input, const ThinningConfig& cfg) {
  Coreset out = generalized_kt(k, k, input, cfg);
  out.provenance.algorithm = "target-kt";
  return out;
}

KernelSpec power_split_kernel(const KernelSpec& k, double alpha, std::size_t dim) {
  try {
    return power_kernel(k, alpha, dim).power;
  } catch (const NoClosedFormPowerKernel& e) {
    throw NoClosedFormPowerKernel(e.constraint() +
                                  " (run generalized KT with an explicit split kernel instead)");
  }
}

KernelSpec ktplus_split_kernel(const KernelSpec& k, double alpha, std::size_t dim) {
  return ktplus_kernel(k, power_split_kernel(k, alpha, dim));
}

Coreset power_kt(const KernelSpec& k, double alpha, const PointSet& input, const ThinningConfig& cfg) {
  Coreset out = generalized_kt(power_split_kernel(k, alpha, input.dim()), k, input, cfg);
  out.provenance.algorithm = alpha == 0.5 ? "root-kt" : fmt::format("power-kt({})", alpha);
  return out;
}

Coreset kt_plus(const KernelSpec& k, double alpha, const PointSet& input, const ThinningConfig& cfg) {
  Coreset out = generalized_kt(ktplus_split_kernel(k, alpha, input.dim()), k, input, cfg);
  out.provenance.algorithm = fmt::format("kt+({})", alpha);
  return out;
}

}  // namespace kt
