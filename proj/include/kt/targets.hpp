#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>

#include "kt/kernels.hpp"
#include "kt/point_set.hpp"

namespace kt {

struct GaussTarget {
  std::size_t dim;
};

// (1/M) sum_j N(mu_j, I_2) over the first M entries of kMogMeans.
struct MogTarget {
  unsigned components;
};

// Samples read from disk. The leading (1 - holdout) fraction after burn-in
// is the input pool; the remainder is held out for reference purposes.
struct ExternalTarget {
  std::filesystem::path path;
  double holdout = 0.5;
  std::size_t burn_in = 0;
};

using TargetSpec = std::variant<GaussTarget, MogTarget, ExternalTarget>;

// mu_1 is [3, 3] rather than a second copy of [-3, 3], giving the
// four-fold symmetric layout.
inline constexpr std::array<std::array<double, 2>, 8> kMogMeans{{
    {3.0, 3.0},
    {-3.0, 3.0},
    {-3.0, -3.0},
    {3.0, -3.0},
    {0.0, 6.0},
    {-6.0, 0.0},
    {6.0, 0.0},
    {0.0, -6.0},
}};

std::size_t target_dim(const TargetSpec& target);
bool is_synthetic(const TargetSpec& target);

// n i.i.d. draws, deterministic in seed. For an external target the input
// pool is standard-thinned down to n points.
PointSet sample(const TargetSpec& target, std::size_t n, std::uint64_t seed);

// Mixture component labels drawn alongside sample() for MoG targets.
std::vector<unsigned> sample_mog_labels(const MogTarget& target, std::size_t n, std::uint64_t seed);

enum class SampleFormat {
  Csv,     // headerless numeric rows
  Binary,  // "KTPS", u32 n, u32 d, little-endian f64 row-major
};

struct IngestOptions {
  std::size_t burn_in = 0;
  // Standard-thin the post burn-in rows down to this many points.
  std::optional<std::size_t> thin_to;
};

SampleFormat detect_format(const std::filesystem::path& path);
PointSet ingest(const std::filesystem::path& path, SampleFormat format, const IngestOptions& options = {});
PointSet ingest(const std::filesystem::path& path, const IngestOptions& options = {});
PointSet parse_csv(const std::string& text, const IngestOptions& options = {});

void write_csv(const PointSet& points, const std::filesystem::path& path);
void write_binary(const PointSet& points, const std::filesystem::path& path);

// Standard thinning down to `size` points, anchored at the final row.
PointSet standard_thin_to(const PointSet& points, std::size_t size);

struct RkhsWitness {
  KernelSpec kernel;
  std::vector<double> anchor;  // X' = 2X for X ~ P, frozen per experiment
};
struct Moment1 {};
struct Moment2 {};
struct Cif {
  std::vector<double> u;  // u_j ~ U[0, 1], frozen per experiment
};

using TestFunction = std::variant<RkhsWitness, Moment1, Moment2, Cif>;

std::string test_function_name(const TestFunction& f);

double eval_test_function(const TestFunction& f, Point x);

// Median pairwise Euclidean distance; exact up to 4096 points, otherwise
// estimated from 2^20 uniformly drawn pairs.
double median_heuristic_bandwidth(const PointSet& points, std::uint64_t seed = 0);

}  // namespace kt
