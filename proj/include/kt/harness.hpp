#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kt/kernels.hpp"
#include "kt/serialize.hpp"
#include "kt/targets.hpp"

namespace kt {

struct Variant {
  enum class Kind { StandardThinning, TargetKt, RootKt, PowerKt, KtPlus };
  Kind kind = Kind::TargetKt;
  double alpha = 1.0;

  // "st", "targetkt", "rootkt", "powerkt:<alpha>", "ktplus:<alpha>".
  std::string tag() const;
  static Variant parse(const std::string& tag);
};

enum class BandwidthRule {
  Fixed,   // kernel parameters as given
  Sqrt2d,  // sigma = 1 / gamma = sqrt(2 d)
  Median,  // sigma = median pairwise distance of the largest input
};

enum class Aggregate { Mean, Median };

struct ExperimentPlan {
  TargetSpec target = MogTarget{8};
  KernelSpec kernel = KernelSpec(Gauss{1.0});
  BandwidthRule bandwidth = BandwidthRule::Fixed;
  std::vector<Variant> variants;
  std::vector<std::size_t> sizes{16, 64, 256, 1024, 4096};
  std::size_t replicates = 10;
  double delta = 0.5;  // delta_i = delta / n
  std::uint64_t seed = 0;
  std::vector<std::string> test_functions{"rkhs", "moment1", "moment2", "cif"};
  // Size of the independent reference sample for synthetic targets; 0 disables.
  std::size_t surrogate_size = std::size_t{1} << 15;
  Aggregate aggregate = Aggregate::Mean;
  std::size_t threads = 0;

  void validate() const;
};

ExperimentPlan plan_from_json(const Json& j);
Json plan_to_json(const ExperimentPlan& plan);

// Kernel with the bandwidth rule applied for data of dimension d.
KernelSpec resolve_bandwidth(const KernelSpec& k, BandwidthRule rule, std::size_t dim, double median = 0.0);

struct RawRow {
  std::string variant;
  std::size_t n;
  std::size_t n_out;
  std::size_t replicate;
  std::string metric;
  double value;
};

struct SummaryRow {
  std::string variant;
  std::string metric;
  std::size_t n;
  std::size_t n_out;
  double mean;
  double std_error;
  double median;
  std::size_t count;
};

struct LineFit {
  double slope;
  double intercept;
  double residual_rms;
};

// Ordinary least squares y = slope x + intercept.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct RateFit {
  std::string variant;
  std::string metric;
  // log(aggregate error) regressed on log(n_out) and on log(n).
  LineFit vs_output_size;
  LineFit vs_input_size;
  std::size_t points;
};

struct RateReport {
  Aggregate aggregate = Aggregate::Mean;
  std::vector<SummaryRow> rows;
  std::vector<RateFit> fits;
  std::vector<std::string> warnings;

  const SummaryRow* row(const std::string& variant, const std::string& metric, std::size_t n) const;
  const RateFit* fit(const std::string& variant, const std::string& metric) const;
};

struct ExperimentResult {
  std::vector<RawRow> raw;
  RateReport report;
  KernelSpec kernel;  // after the bandwidth rule
};

// Aggregates raw rows per (variant, metric, n) and fits log-log slopes.
RateReport summarize(const std::vector<RawRow>& raw, Aggregate aggregate);

ExperimentResult run_experiment(const ExperimentPlan& plan);

// variant,n,n_out,replicate,metric,value with 17 significant digits.
std::string raw_csv(const std::vector<RawRow>& raw);
std::vector<RawRow> parse_raw_csv(const std::string& text);
Json report_to_json(const RateReport& report);

// Writes raw.csv and report.json into dir.
void write_experiment(const ExperimentResult& result, const std::filesystem::path& dir);

}  // namespace kt
