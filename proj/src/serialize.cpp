#include "kt/serialize.hpp"

#include <fmt/core.h>
#include <fstream>
#include <sstream>

namespace kt {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double number(const Json& params, const char* key) {
  if (!params.contains(key) || !params[key].is_number()) {
    throw DataError(fmt::format("kernel parameter '{}' is missing or not a number", key));
  }
  return params[key].get<double>();
}

Json family_params(const Family& f) {
  return std::visit(Overloaded{
                        [](const Gauss& g) { return Json{{"sigma", g.sigma}}; },
                        [](const Laplace& l) { return Json{{"sigma", l.sigma}}; },
                        [](const Matern& m) { return Json{{"nu", m.nu}, {"gamma", m.gamma}}; },
                        [](const Imq& q) { return Json{{"nu", q.nu}, {"gamma", q.gamma}}; },
                        [](const Sinc& s) { return Json{{"theta", s.theta}}; },
                        [](const BSpline& b) { return Json{{"beta", b.beta}, {"gamma", b.gamma}}; },
                    },
                    f);
}

KernelTerm term_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("family") || !j["family"].is_string()) {
    throw DataError("kernel JSON needs a string 'family'");
  }
  const std::string name = j["family"];
  const Json params = j.value("params", Json::object());
  const double scale = j.value("scale", 1.0);
  Family f = [&]() -> Family {
    if (name == "gauss") return Gauss{number(params, "sigma")};
    if (name == "laplace") return Laplace{number(params, "sigma")};
    if (name == "matern") return Matern{number(params, "nu"), number(params, "gamma")};
    if (name == "imq") return Imq{number(params, "nu"), number(params, "gamma")};
    if (name == "sinc") return Sinc{number(params, "theta")};
    if (name == "bspline") {
      double beta = number(params, "beta");
      if (beta < 0 || beta != static_cast<double>(static_cast<unsigned>(beta))) {
        throw DataError("bspline beta must be a non-negative integer");
      }
      return BSpline{static_cast<unsigned>(beta), number(params, "gamma")};
    }
    throw DataError(fmt::format("unknown kernel family '{}'", name));
  }();
  return {f, scale};
}

}  // namespace

std::string format_real(double v) { return fmt::format("{:.17g}", v); }

Json kernel_to_json(const KernelSpec& k) {
  if (k.is_single()) {
    return Json{{"family", family_name(k.family())}, {"params", family_params(k.family())}, {"scale", k.scale()}};
  }
  Json terms = Json::array();
  for (const auto& t : k.terms()) {
    terms.push_back(Json{{"family", family_name(t.family)}, {"params", family_params(t.family)}, {"scale", t.scale}});
  }
  return Json{{"family", "sum"}, {"terms", terms}, {"identity_weight", k.identity_weight()}};
}

KernelSpec kernel_from_json(const Json& j) {
  if (j.is_object() && j.value("family", std::string{}) == "sum") {
    if (!j.contains("terms") || !j["terms"].is_array()) throw DataError("sum kernel needs a 'terms' array");
    std::vector<KernelTerm> terms;
    for (const auto& t : j["terms"]) terms.push_back(term_from_json(t));
    return KernelSpec::sum(std::move(terms), j.value("identity_weight", 0.0));
  }
  KernelTerm t = term_from_json(j);
  return KernelSpec(t.family, t.scale);
}

Json config_to_json(const ThinningConfig& cfg) {
  return Json{
      {"m", cfg.m},
      {"delta", {{"schedule", cfg.delta.kind == DeltaSchedule::Kind::KnownN ? "known_n" : "oblivious"},
                 {"delta", cfg.delta.delta}}},
      {"seed", cfg.seed},
      {"baseline", cfg.baseline == BaselineRule::Standard ? "standard" : "random"},
      {"refine_sweeps", cfg.refine_sweeps},
  };
}

ThinningConfig config_from_json(const Json& j) {
  ThinningConfig cfg;
  try {
    cfg.m = j.at("m").get<unsigned>();
    if (j.contains("delta")) {
      const auto& d = j["delta"];
      std::string schedule = d.value("schedule", std::string{"known_n"});
      if (schedule == "known_n") {
        cfg.delta.kind = DeltaSchedule::Kind::KnownN;
      } else if (schedule == "oblivious") {
        cfg.delta.kind = DeltaSchedule::Kind::Oblivious;
      } else {
        throw DataError(fmt::format("unknown delta schedule '{}'", schedule));
      }
      cfg.delta.delta = d.value("delta", 0.5);
    }
    cfg.seed = j.value("seed", std::uint64_t{0});
    std::string baseline = j.value("baseline", std::string{"standard"});
    if (baseline == "standard") {
      cfg.baseline = BaselineRule::Standard;
    } else if (baseline == "random") {
      cfg.baseline = BaselineRule::Random;
    } else {
      throw DataError(fmt::format("unknown baseline rule '{}'", baseline));
    }
    cfg.refine_sweeps = j.value("refine_sweeps", 1u);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("invalid thinning config: {}", e.what()));
  }
  return cfg;
}

Json coreset_to_json(const Coreset& c) {
  return Json{
      {"indices", c.indices},
      {"provenance",
       {{"algorithm", c.provenance.algorithm},
        {"chosen_candidate", c.provenance.chosen_candidate},
        {"accepted_swaps", c.provenance.accepted_swaps},
        {"sigma_m", c.provenance.sigma_m}}},
  };
}

Coreset coreset_from_json(const Json& j) {
  try {
    Coreset c;
    c.indices = j.at("indices").get<std::vector<Index>>();
    if (j.contains("provenance")) {
      const auto& p = j["provenance"];
      c.provenance.algorithm = p.value("algorithm", std::string{});
      c.provenance.chosen_candidate = p.value("chosen_candidate", std::size_t{0});
      c.provenance.accepted_swaps = p.value("accepted_swaps", std::size_t{0});
      c.provenance.sigma_m = p.value("sigma_m", 0.0);
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("invalid coreset JSON: {}", e.what()));
  }
}

std::string coreset_to_csv(const Coreset& c) {
  std::string out;
  for (Index i : c.indices) out += fmt::format("{}\n", i);
  return out;
}

std::vector<Index> indices_from_csv(const std::string& text) {
  std::vector<Index> out;
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(line, &pos);
    } catch (const std::exception&) {
      throw DataError(fmt::format("malformed index at row {}", row));
    }
    if (line.find_first_not_of(" \t\r", pos) != std::string::npos) {
      throw DataError(fmt::format("malformed index at row {}", row));
    }
    out.push_back(static_cast<Index>(v));
  }
  return out;
}

Json target_to_json(const TargetSpec& t) {
  return std::visit(Overloaded{
                        [](const GaussTarget& g) { return Json{{"kind", "gauss"}, {"dim", g.dim}}; },
                        [](const MogTarget& m) { return Json{{"kind", "mog"}, {"components", m.components}}; },
                        [](const ExternalTarget& e) {
                          return Json{{"kind", "external"},
                                      {"path", e.path.string()},
                                      {"holdout", e.holdout},
                                      {"burn_in", e.burn_in}};
                        },
                    },
                    t);
}

TargetSpec target_from_json(const Json& j) {
  try {
    const std::string kind = j.at("kind");
    if (kind == "gauss") return GaussTarget{j.at("dim").get<std::size_t>()};
    if (kind == "mog") return MogTarget{j.value("components", 8u)};
    if (kind == "external") {
      return ExternalTarget{j.at("path").get<std::string>(), j.value("holdout", 0.5),
                            j.value("burn_in", std::size_t{0})};
    }
    throw DataError(fmt::format("unknown target kind '{}'", kind));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("invalid target JSON: {}", e.what()));
  }
}

Json parse_json_argument(const std::string& text) {
  std::string body = text;
  if (!text.empty() && text.front() == '@') {
    std::ifstream in(text.substr(1));
    if (!in) throw DataError(fmt::format("cannot open {}", text.substr(1)));
    std::ostringstream buf;
    buf << in.rdbuf();
    body = buf.str();
  }
  try {
    return Json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(fmt::format("invalid JSON: {}", e.what()));
  }
}

}  // namespace kt
