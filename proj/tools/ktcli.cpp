// ktcli: thin point sets, evaluate MMD, resolve power kernels and run
// decay-rate experiments.
//
// Exit codes: 0 success, 2 usage, 3 data error, 4 constraint error.

#include <CLI11.hpp>
#include <filesystem>
#include <fmt/core.h>
#include <fstream>
#include <iostream>

#include "kt/discrepancy.hpp"
#include "kt/harness.hpp"
#include "kt/serialize.hpp"
#include "kt/targets.hpp"
#include "kt/thinning.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitConstraint = 4;

// A path to a CSV/KTPS file, or an inline target such as
// {"kind": "mog", "components": 8, "n": 1024, "seed": 1}.
kt::PointSet load_input(const std::string& arg, std::size_t burn_in) {
  if (std::filesystem::exists(arg)) return kt::ingest(arg, kt::IngestOptions{burn_in, std::nullopt});
  kt::Json j = kt::parse_json_argument(arg);
  if (!j.is_object() || !j.contains("n")) {
    throw kt::DataError(fmt::format("'{}' is neither a file nor a target spec with 'n'", arg));
  }
  return kt::sample(kt::target_from_json(j), j["n"].get<std::size_t>(), j.value("seed", std::uint64_t{0}));
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw kt::DataError(fmt::format("cannot write {}", path));
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel thinning distribution compression"};
  app.require_subcommand(1);

  struct {
    std::string input, kernel, variant = "targetkt", split_kernel, out, json_out;
    double alpha = 0.5, delta = 0.5;
    unsigned m = 1;
    std::uint64_t seed = 0;
    std::size_t burn_in = 0;
  } thin;
  auto* thin_cmd = app.add_subcommand("thin", "Compress a point sequence with a kernel thinning variant");
  thin_cmd->add_option("--input", thin.input, "Sample file (CSV or KTPS) or inline target JSON")->required();
  thin_cmd->add_option("--kernel", thin.kernel, "Target kernel JSON (or @file)")->required();
  thin_cmd->add_option("--variant", thin.variant, "targetkt | powerkt | ktplus | generalized")
      ->check(CLI::IsMember({"targetkt", "powerkt", "ktplus", "generalized"}));
  thin_cmd->add_option("--alpha", thin.alpha, "Power-kernel exponent in [1/2, 1]");
  thin_cmd->add_option("--split-kernel", thin.split_kernel, "Split kernel JSON for the generalized variant");
  thin_cmd->add_option("-m", thin.m, "Thinning depth; output size floor(n / 2^m)")->required();
  thin_cmd->add_option("--seed", thin.seed, "RNG seed");
  thin_cmd->add_option("--delta", thin.delta, "Failure probability; delta_i = delta / n");
  thin_cmd->add_option("--burn-in", thin.burn_in, "Leading rows to drop from a sample file");
  thin_cmd->add_option("--out", thin.out, "Output CSV of coreset indices")->required();
  thin_cmd->add_option("--json", thin.json_out, "Also write the coreset with provenance as JSON");

  std::string mmd_kernel, mmd_a, mmd_b;
  auto* mmd_cmd = app.add_subcommand("mmd", "MMD between two uniformly weighted samples");
  mmd_cmd->add_option("--kernel", mmd_kernel, "Kernel JSON (or @file)")->required();
  mmd_cmd->add_option("--a", mmd_a, "First sample file")->required();
  mmd_cmd->add_option("--b", mmd_b, "Second sample file")->required();

  std::string plan_path, out_dir;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a decay-rate experiment plan");
  exp_cmd->add_option("--plan", plan_path, "Plan JSON file")->required();
  exp_cmd->add_option("--out-dir", out_dir, "Directory for raw.csv and report.json")->required();

  std::string pk_kernel;
  double pk_alpha = 0.5;
  std::size_t pk_dim = 1;
  auto* pk_cmd = app.add_subcommand("powerkernel", "Resolve the alpha-power kernel of a kernel");
  pk_cmd->add_option("--kernel", pk_kernel, "Kernel JSON (or @file)")->required();
  pk_cmd->add_option("--alpha", pk_alpha, "Exponent in [1/2, 1]")->required();
  pk_cmd->add_option("--dim", pk_dim, "Data dimension d");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*thin_cmd) {
      const kt::KernelSpec k = kt::kernel_from_json(kt::parse_json_argument(thin.kernel));
      const kt::PointSet input = load_input(thin.input, thin.burn_in);
      kt::ThinningConfig cfg;
      cfg.m = thin.m;
      cfg.seed = thin.seed;
      cfg.delta = {kt::DeltaSchedule::Kind::KnownN, thin.delta};
      kt::Coreset coreset;
      if (thin.variant == "targetkt") {
        coreset = kt::target_kt(k, input, cfg);
      } else if (thin.variant == "powerkt") {
        coreset = kt::power_kt(k, thin.alpha, input, cfg);
      } else if (thin.variant == "ktplus") {
        coreset = kt::kt_plus(k, thin.alpha, input, cfg);
      } else {
        if (thin.split_kernel.empty()) {
          std::cerr << "--split-kernel is required for the generalized variant\n";
          return kExitUsage;
        }
        const kt::KernelSpec split = kt::kernel_from_json(kt::parse_json_argument(thin.split_kernel));
        coreset = kt::generalized_kt(split, k, input, cfg);
      }
      write_text(thin.out, kt::coreset_to_csv(coreset));
      if (!thin.json_out.empty()) write_text(thin.json_out, kt::coreset_to_json(coreset).dump(2) + "\n");
    } else if (*mmd_cmd) {
      const kt::KernelSpec k = kt::kernel_from_json(kt::parse_json_argument(mmd_kernel));
      const kt::PointSet a = kt::ingest(mmd_a);
      const kt::PointSet b = kt::ingest(mmd_b);
      fmt::print("{:.12g}\n", kt::mmd(k, kt::DiscreteMeasure(a), kt::DiscreteMeasure(b)));
    } else if (*exp_cmd) {
      const kt::ExperimentPlan plan = kt::plan_from_json(kt::parse_json_argument("@" + plan_path));
      const kt::ExperimentResult result = kt::run_experiment(plan);
      kt::write_experiment(result, out_dir);
      for (const auto& w : result.report.warnings) std::cerr << "warning: " << w << '\n';
      for (const auto& f : result.report.fits) {
        fmt::print("{:<14} {:<16} slope(n_out) {:+.4f}  slope(n) {:+.4f}\n", f.variant, f.metric,
                   f.vs_output_size.slope, f.vs_input_size.slope);
      }
    } else if (*pk_cmd) {
      const kt::KernelSpec k = kt::kernel_from_json(kt::parse_json_argument(pk_kernel));
      const kt::PowerKernelPair pair = kt::power_kernel(k, pk_alpha, pk_dim);
      kt::Json out = kt::kernel_to_json(pair.power);
      fmt::print("{}\n", out.dump());
    }
  } catch (const kt::NoClosedFormPowerKernel& e) {
    std::cerr << e.what() << '\n';
    return kExitConstraint;
  } catch (const kt::ConstraintError& e) {
    std::cerr << "constraint error: " << e.what() << '\n';
    return kExitConstraint;
  } catch (const kt::Error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
