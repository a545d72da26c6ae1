#include "kt/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/core.h>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "kt/discrepancy.hpp"
#include "kt/parallel.hpp"
#include "kt/rng.hpp"
#include "kt/thinning.hpp"

namespace kt {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Stream tags for the plan's derived randomness.
constexpr std::uint64_t kInputStream = 1;
constexpr std::uint64_t kThinStream = 2;
constexpr std::uint64_t kSurrogateStream = 3;
constexpr std::uint64_t kTestFnStream = 4;
constexpr std::uint64_t kMedianStream = 5;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

unsigned depth_for(std::size_t n) {
  unsigned log2n = 0;
  while ((std::size_t{1} << (log2n + 1)) <= n) ++log2n;
  return log2n / 2;
}

std::string aggregate_name(Aggregate a) { return a == Aggregate::Mean ? "mean" : "median"; }

std::string bandwidth_name(BandwidthRule r) {
  switch (r) {
    case BandwidthRule::Fixed:
      return "fixed";
    case BandwidthRule::Sqrt2d:
      return "sqrt2d";
    case BandwidthRule::Median:
      return "median";
  }
  return "fixed";
}

Family with_length(const Family& f, double length) {
  return std::visit(Overloaded{
                        [&](const Gauss&) -> Family { return Gauss{length}; },
                        [&](const Laplace&) -> Family { return Laplace{length}; },
                        [&](const Matern& m) -> Family { return Matern{m.nu, 1.0 / length}; },
                        [&](const Imq& q) -> Family { return Imq{q.nu, 1.0 / length}; },
                        [&](const Sinc&) -> Family { return Sinc{1.0 / length}; },
                        [&](const BSpline& b) -> Family { return BSpline{b.beta, 1.0 / length}; },
                    },
                    f);
}

struct ResolvedVariant {
  Variant variant;
  std::optional<KernelSpec> split;  // empty for standard thinning
};

struct CellOutput {
  std::vector<RawRow> rows;
};

}  // namespace

std::string Variant::tag() const {
  switch (kind) {
    case Kind::StandardThinning:
      return "st";
    case Kind::TargetKt:
      return "targetkt";
    case Kind::RootKt:
      return "rootkt";
    case Kind::PowerKt:
      return fmt::format("powerkt:{}", alpha);
    case Kind::KtPlus:
      return fmt::format("ktplus:{}", alpha);
  }
  return "unknown";
}

Variant Variant::parse(const std::string& tag) {
  auto colon = tag.find(':');
  std::string head = tag.substr(0, colon);
  auto alpha = [&]() {
    if (colon == std::string::npos) throw DataError(fmt::format("variant '{}' needs ':<alpha>'", tag));
    try {
      return std::stod(tag.substr(colon + 1));
    } catch (const std::exception&) {
      throw DataError(fmt::format("variant '{}' has a malformed alpha", tag));
    }
  };
  if (head == "st" || head == "iid") return {Kind::StandardThinning, 1.0};
  if (head == "targetkt") return {Kind::TargetKt, 1.0};
  if (head == "rootkt") return {Kind::RootKt, 0.5};
  if (head == "powerkt") return {Kind::PowerKt, alpha()};
  if (head == "ktplus") return {Kind::KtPlus, alpha()};
  throw DataError(fmt::format("unknown variant '{}'", tag));
}

void ExperimentPlan::validate() const {
  if (variants.empty()) throw DataError("plan lists no variants");
  if (sizes.empty()) throw DataError("plan lists no sizes");
  if (replicates < 1) throw DataError("plan needs at least one replicate");
  if (!(delta > 0.0 && delta < 1.0)) throw DataError("plan delta must lie in (0, 1)");
  for (std::size_t n : sizes) {
    unsigned m = depth_for(n);
    if (n < 4 || (std::size_t{1} << (2 * m)) != n) {
      throw DataError(fmt::format("size {} is not a power of 4 (>= 4)", n));
    }
  }
  for (const auto& name : test_functions) {
    if (name != "rkhs" && name != "moment1" && name != "moment2" && name != "cif") {
      throw DataError(fmt::format("unknown test function '{}'", name));
    }
  }
}

ExperimentPlan plan_from_json(const Json& j) {
  ExperimentPlan plan;
  try {
    plan.target = target_from_json(j.at("target"));
    plan.kernel = kernel_from_json(j.at("kernel"));
    std::string bw = j.value("bandwidth", std::string{"fixed"});
    if (bw == "fixed") {
      plan.bandwidth = BandwidthRule::Fixed;
    } else if (bw == "sqrt2d") {
      plan.bandwidth = BandwidthRule::Sqrt2d;
    } else if (bw == "median") {
      plan.bandwidth = BandwidthRule::Median;
    } else {
      throw DataError(fmt::format("unknown bandwidth rule '{}'", bw));
    }
    plan.variants.clear();
    for (const auto& v : j.at("variants")) plan.variants.push_back(Variant::parse(v.get<std::string>()));
    if (j.contains("sizes")) plan.sizes = j["sizes"].get<std::vector<std::size_t>>();
    plan.replicates = j.value("replicates", plan.replicates);
    plan.delta = j.value("delta", plan.delta);
    plan.seed = j.value("seed", plan.seed);
    if (j.contains("test_functions")) plan.test_functions = j["test_functions"].get<std::vector<std::string>>();
    plan.surrogate_size = j.value("surrogate_size", plan.surrogate_size);
    std::string agg = j.value("aggregate", std::string{"mean"});
    if (agg == "mean") {
      plan.aggregate = Aggregate::Mean;
    } else if (agg == "median") {
      plan.aggregate = Aggregate::Median;
    } else {
      throw DataError(fmt::format("unknown aggregate '{}'", agg));
    }
    plan.threads = j.value("threads", plan.threads);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("invalid plan: {}", e.what()));
  }
  plan.validate();
  return plan;
}

Json plan_to_json(const ExperimentPlan& plan) {
  Json variants = Json::array();
  for (const auto& v : plan.variants) variants.push_back(v.tag());
  return Json{
      {"target", target_to_json(plan.target)},
      {"kernel", kernel_to_json(plan.kernel)},
      {"bandwidth", bandwidth_name(plan.bandwidth)},
      {"variants", variants},
      {"sizes", plan.sizes},
      {"replicates", plan.replicates},
      {"delta", plan.delta},
      {"seed", plan.seed},
      {"test_functions", plan.test_functions},
      {"surrogate_size", plan.surrogate_size},
      {"aggregate", aggregate_name(plan.aggregate)},
      {"threads", plan.threads},
  };
}

KernelSpec resolve_bandwidth(const KernelSpec& k, BandwidthRule rule, std::size_t dim, double median) {
  if (rule == BandwidthRule::Fixed) return k;
  double length = rule == BandwidthRule::Sqrt2d ? std::sqrt(2.0 * static_cast<double>(dim)) : median;
  if (!(length > 0.0)) throw DataError("bandwidth rule produced a non-positive length");
  std::vector<KernelTerm> terms;
  for (const auto& t : k.terms()) terms.push_back({with_length(t.family, length), t.scale});
  if (terms.size() == 1 && !k.perturbed()) return KernelSpec(terms.front().family, terms.front().scale);
  return KernelSpec::sum(std::move(terms), k.identity_weight());
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DataError("line fit needs at least two (x, y) pairs");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw DataError("line fit needs at least two distinct x values");
  LineFit fit{sxy / sxx, 0.0, 0.0};
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - (fit.slope * x[i] + fit.intercept);
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / n);
  return fit;
}

const SummaryRow* RateReport::row(const std::string& variant, const std::string& metric, std::size_t n) const {
  for (const auto& r : rows) {
    if (r.variant == variant && r.metric == metric && r.n == n) return &r;
  }
  return nullptr;
}

const RateFit* RateReport::fit(const std::string& variant, const std::string& metric) const {
  for (const auto& f : fits) {
    if (f.variant == variant && f.metric == metric) return &f;
  }
  return nullptr;
}

RateReport summarize(const std::vector<RawRow>& raw, Aggregate aggregate) {
  RateReport report;
  report.aggregate = aggregate;
  // Keyed by first appearance so the report follows the raw row order.
  std::vector<std::pair<std::string, std::string>> series;
  std::map<std::pair<std::string, std::string>, std::map<std::size_t, std::vector<const RawRow*>>> groups;
  for (const auto& r : raw) {
    auto key = std::make_pair(r.variant, r.metric);
    if (!groups.contains(key)) series.push_back(key);
    groups[key][r.n].push_back(&r);
  }
  for (const auto& key : series) {
    std::vector<double> log_out, log_in, log_err;
    for (const auto& [n, rows] : groups[key]) {
      std::vector<double> values;
      for (const RawRow* r : rows) values.push_back(r->value);
      const double count = static_cast<double>(values.size());
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= count;
      double var = 0.0;
      for (double v : values) var += (v - mean) * (v - mean);
      double se = values.size() > 1 ? std::sqrt(var / (count - 1.0) / count) : 0.0;
      std::vector<double> sorted = values;
      std::sort(sorted.begin(), sorted.end());
      std::size_t mid = sorted.size() / 2;
      double median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
      SummaryRow row{key.first, key.second, n, rows.front()->n_out, mean, se, median, values.size()};
      report.rows.push_back(row);
      double level = aggregate == Aggregate::Mean ? mean : median;
      if (level > 0.0) {
        log_out.push_back(std::log(static_cast<double>(row.n_out)));
        log_in.push_back(std::log(static_cast<double>(n)));
        log_err.push_back(std::log(level));
      }
    }
    if (log_err.size() >= 2) {
      report.fits.push_back(
          {key.first, key.second, fit_line(log_out, log_err), fit_line(log_in, log_err), log_err.size()});
    }
  }
  return report;
}

ExperimentResult run_experiment(const ExperimentPlan& plan) {
  plan.validate();
  const std::size_t dim = target_dim(plan.target);
  const std::size_t max_n = *std::max_element(plan.sizes.begin(), plan.sizes.end());
  auto input_for = [&](std::size_t n, std::size_t replicate) {
    return sample(plan.target, n, stream_key(plan.seed, {kInputStream, n, replicate}));
  };

  double median = 0.0;
  if (plan.bandwidth == BandwidthRule::Median) {
    median = median_heuristic_bandwidth(input_for(max_n, 0), stream_key(plan.seed, {kMedianStream}));
  }
  const KernelSpec kernel = resolve_bandwidth(plan.kernel, plan.bandwidth, dim, median);

  ExperimentResult result{{}, {}, kernel};
  std::vector<std::string>& warnings = result.report.warnings;

  // Variants whose split kernel cannot be formed are dropped up front.
  std::vector<ResolvedVariant> variants;
  for (const auto& v : plan.variants) {
    try {
      switch (v.kind) {
        case Variant::Kind::StandardThinning:
          variants.push_back({v, std::nullopt});
          break;
        case Variant::Kind::TargetKt:
          variants.push_back({v, kernel});
          break;
        case Variant::Kind::RootKt:
        case Variant::Kind::PowerKt:
          variants.push_back({v, power_split_kernel(kernel, v.alpha, dim)});
          break;
        case Variant::Kind::KtPlus:
          variants.push_back({v, ktplus_split_kernel(kernel, v.alpha, dim)});
          break;
      }
    } catch (const NoClosedFormPowerKernel& e) {
      warnings.push_back(fmt::format("variant {} skipped: {}", v.tag(), e.what()));
    }
  }

  // Frozen randomness shared by every size and replicate.
  std::optional<PointSet> holdout;
  if (const auto* ext = std::get_if<ExternalTarget>(&plan.target)) {
    PointSet all = ingest(ext->path, IngestOptions{ext->burn_in, std::nullopt});
    auto keep = static_cast<std::size_t>(std::floor((1.0 - ext->holdout) * static_cast<double>(all.size())));
    std::vector<Index> idx;
    for (Index i = keep; i < all.size(); ++i) idx.push_back(i);
    if (!idx.empty()) holdout = all.subset(idx);
  }
  std::mt19937_64 frozen(stream_key(plan.seed, {kTestFnStream}));
  std::vector<double> anchor(dim);
  if (is_synthetic(plan.target)) {
    PointSet x = sample(plan.target, 1, frozen());
    for (std::size_t j = 0; j < dim; ++j) anchor[j] = 2.0 * x[0][j];
  } else if (holdout) {
    std::uniform_int_distribution<Index> pick(0, holdout->size() - 1);
    Point x = (*holdout)[pick(frozen)];
    anchor.assign(x.begin(), x.end());
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> u(dim);
  for (double& v : u) v = unit(frozen);

  std::vector<TestFunction> functions;
  for (const auto& name : plan.test_functions) {
    if (name == "rkhs") {
      if (!is_synthetic(plan.target) && !holdout) {
        warnings.push_back("rkhs test function skipped: no held-out point available");
        continue;
      }
      functions.push_back(RkhsWitness{kernel.is_single() ? kernel.scaled(1.0 / kernel.scale()) : kernel, anchor});
    } else if (name == "moment1") {
      functions.push_back(Moment1{});
    } else if (name == "moment2") {
      functions.push_back(Moment2{});
    } else {
      functions.push_back(Cif{u});
    }
  }

  std::optional<PointSet> surrogate_points;
  if (is_synthetic(plan.target) && plan.surrogate_size > 0) {
    surrogate_points = sample(plan.target, plan.surrogate_size, stream_key(plan.seed, {kSurrogateStream}));
  } else if (holdout) {
    surrogate_points = holdout;
  }
  std::optional<MmdReference> surrogate;
  if (surrogate_points) surrogate.emplace(kernel, *surrogate_points, plan.threads);

  const std::size_t cells = plan.sizes.size() * plan.replicates;
  std::vector<CellOutput> outputs(cells);
  parallel_for(
      cells,
      [&](std::size_t cell) {
        const std::size_t n = plan.sizes[cell / plan.replicates];
        const std::size_t replicate = cell % plan.replicates;
        const unsigned m = depth_for(n);
        const PointSet input = input_for(n, replicate);
        const DiscreteMeasure input_measure(input);
        auto& rows = outputs[cell].rows;
        for (const auto& rv : variants) {
          const std::string tag = rv.variant.tag();
          Coreset coreset;
          if (!rv.split) {
            coreset = baseline_thin(n, m);
          } else {
            ThinningConfig cfg;
            cfg.m = m;
            cfg.delta = {DeltaSchedule::Kind::KnownN, plan.delta};
            cfg.seed = stream_key(plan.seed, {kThinStream, n, replicate, fnv1a(tag)});
            coreset = generalized_kt(*rv.split, kernel, input, cfg);
          }
          const std::size_t n_out = coreset.indices.size();
          const DiscreteMeasure out(input, coreset.indices);
          rows.push_back({tag, n, n_out, replicate, "mmd_input", mmd(kernel, input_measure, out)});
          if (surrogate) rows.push_back({tag, n, n_out, replicate, "mmd_surrogate", surrogate->mmd_to(out)});
          for (const auto& f : functions) {
            TestFn fn = [&f](Point x) { return eval_test_function(f, x); };
            rows.push_back({tag, n, n_out, replicate, "err_" + test_function_name(f),
                            integration_error(fn, input_measure, out)});
          }
        }
      },
      plan.threads);

  for (auto& c : outputs) {
    for (auto& r : c.rows) result.raw.push_back(std::move(r));
  }
  // Raw rows ordered by (variant, n, replicate); metrics keep their per-cell order.
  std::vector<std::string> variant_order;
  for (const auto& rv : variants) variant_order.push_back(rv.variant.tag());
  auto rank = [&](const std::string& tag) {
    return std::find(variant_order.begin(), variant_order.end(), tag) - variant_order.begin();
  };
  std::stable_sort(result.raw.begin(), result.raw.end(), [&](const RawRow& a, const RawRow& b) {
    if (a.variant != b.variant) return rank(a.variant) < rank(b.variant);
    if (a.n != b.n) return a.n < b.n;
    return a.replicate < b.replicate;
  });

  auto warnings_copy = std::move(warnings);
  result.report = summarize(result.raw, plan.aggregate);
  result.report.warnings = std::move(warnings_copy);
  return result;
}

std::string raw_csv(const std::vector<RawRow>& raw) {
  std::string out = "variant,n,n_out,replicate,metric,value\n";
  for (const auto& r : raw) {
    out += fmt::format("{},{},{},{},{},{}\n", r.variant, r.n, r.n_out, r.replicate, r.metric, format_real(r.value));
  }
  return out;
}

std::vector<RawRow> parse_raw_csv(const std::string& text) {
  std::vector<RawRow> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw DataError(fmt::format("raw CSV line {} has {} fields", lineno, cells.size()));
    try {
      rows.push_back({cells[0], std::stoull(cells[1]), std::stoull(cells[2]), std::stoull(cells[3]), cells[4],
                      std::stod(cells[5])});
    } catch (const std::exception&) {
      throw DataError(fmt::format("raw CSV line {} is malformed", lineno));
    }
  }
  return rows;
}

Json report_to_json(const RateReport& report) {
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"variant", r.variant},
                    {"metric", r.metric},
                    {"n", r.n},
                    {"n_out", r.n_out},
                    {"mean", r.mean},
                    {"std_error", r.std_error},
                    {"median", r.median},
                    {"count", r.count}});
  }
  auto fit_json = [](const LineFit& f) {
    return Json{{"slope", f.slope}, {"intercept", f.intercept}, {"residual_rms", f.residual_rms}};
  };
  Json fits = Json::array();
  for (const auto& f : report.fits) {
    fits.push_back({{"variant", f.variant},
                    {"metric", f.metric},
                    {"vs_output_size", fit_json(f.vs_output_size)},
                    {"vs_input_size", fit_json(f.vs_input_size)},
                    {"points", f.points}});
  }
  return Json{{"aggregate", aggregate_name(report.aggregate)},
              {"rows", rows},
              {"fits", fits},
              {"warnings", report.warnings}};
}

void write_experiment(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "raw.csv", std::ios::binary);
  if (!csv) throw DataError(fmt::format("cannot write {}", (dir / "raw.csv").string()));
  csv << raw_csv(result.raw);
  Json report = report_to_json(result.report);
  report["kernel"] = kernel_to_json(result.kernel);
  std::ofstream js(dir / "report.json");
  if (!js) throw DataError(fmt::format("cannot write {}", (dir / "report.json").string()));
  js << report.dump(2) << '\n';
}

}  // namespace kt
