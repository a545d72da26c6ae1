#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "kt/kernels.hpp"
#include "kt/targets.hpp"
#include "kt/thinning.hpp"

namespace kt {

using Json = nlohmann::json;

// {"family": "gauss", "params": {"sigma": 1}, "scale": 1}. Composite kernels
// use {"family": "sum", "terms": [...], "identity_weight": w}.
Json kernel_to_json(const KernelSpec& k);
KernelSpec kernel_from_json(const Json& j);

Json config_to_json(const ThinningConfig& cfg);
ThinningConfig config_from_json(const Json& j);

Json coreset_to_json(const Coreset& c);
Coreset coreset_from_json(const Json& j);

// One index per line, no header.
std::string coreset_to_csv(const Coreset& c);
std::vector<Index> indices_from_csv(const std::string& text);

// {"kind": "gauss", "dim": d} | {"kind": "mog", "components": M} |
// {"kind": "external", "path": p, "holdout": f, "burn_in": b}
Json target_to_json(const TargetSpec& t);
TargetSpec target_from_json(const Json& j);

// Parses inline JSON text, or reads the file named by "@path".
Json parse_json_argument(const std::string& text);

// 17 significant digits, enough to round-trip any double.
std::string format_real(double v);

}  // namespace kt
