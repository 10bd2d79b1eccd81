#include "config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace certmf::cli {

namespace {

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

template <class T>
T as(const YAML::Node& node, const std::string& field) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(field, "has the wrong type");
  }
}

double as_double(const YAML::Node& node, const std::string& field) {
  if (node.IsScalar()) {
    const auto s = node.Scalar();
    if (s == "inf" || s == ".inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  }
  return as<double>(node, field);
}

std::vector<double> as_doubles(const YAML::Node& node, const std::string& field) {
  if (!node.IsSequence()) throw ConfigError(field, "must be a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i) {
    out.push_back(as_double(node[i], field + "[" + std::to_string(i) + "]"));
  }
  return out;
}

void reject_unknown(const YAML::Node& block, const std::string& prefix,
                    std::initializer_list<const char*> known) {
  if (!block.IsMap()) throw ConfigError(prefix.empty() ? "config" : prefix, "must be a mapping");
  for (const auto& kv : block) {
    const auto key = kv.first.as<std::string>();
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(join(prefix, key), "unknown field");
  }
}

Box parse_box(const YAML::Node& node, std::size_t dim, const std::string& field) {
  if (!node.IsSequence() || node.size() == 0) throw ConfigError(field, "must be a list");
  Box box;
  if (node[0].IsScalar()) {
    // [lo, hi] repeated on every axis.
    const auto pair = as_doubles(node, field);
    if (pair.size() != 2) throw ConfigError(field, "expected [lo, hi] or a list of [lo, hi]");
    box.lo.assign(dim, pair[0]);
    box.hi.assign(dim, pair[1]);
  } else {
    for (std::size_t j = 0; j < node.size(); ++j) {
      const auto pair = as_doubles(node[j], field + "[" + std::to_string(j) + "]");
      if (pair.size() != 2) throw ConfigError(field, "each axis needs [lo, hi]");
      box.lo.push_back(pair[0]);
      box.hi.push_back(pair[1]);
    }
    if (dim != 0 && box.dim() != dim) throw ConfigError(field, "does not match partition.dim");
  }
  for (std::size_t j = 0; j < box.dim(); ++j) {
    if (!(box.lo[j] < box.hi[j])) throw ConfigError(field, "empty interval on axis " + std::to_string(j));
  }
  return box;
}

Norm parse_norm_field(const YAML::Node& node, const std::string& field) {
  try {
    return parse_norm(as<std::string>(node, field));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(field, e.what());
  }
}

PartitionConfig parse_partition(const YAML::Node& n) {
  const std::string P = "partition";
  if (!n) throw ConfigError(P, "missing block");
  reject_unknown(n, P, {"preset", "dim", "box", "norm", "K", "delta", "R", "nu", "scan_per_axis"});
  PartitionConfig c;
  if (n["preset"]) c.preset = as<std::string>(n["preset"], P + ".preset");
  std::size_t dim = 0;
  if (n["dim"]) {
    const int d = as<int>(n["dim"], P + ".dim");
    if (d < 1) throw ConfigError(P + ".dim", "must be >= 1");
    dim = static_cast<std::size_t>(d);
  }
  auto need = [&](const char* key) {
    if (!n[key]) throw ConfigError(join(P, key), "missing (required without a preset)");
    return n[key];
  };
  if (c.preset == "dyadic-sup") {
    if (dim == 0 && !n["box"]) dim = 1;
    c.box = n["box"] ? parse_box(n["box"], dim, P + ".box")
                     : Box{Point(dim, 0.0), Point(dim, 1.0)};
    c.norm = n["norm"] ? parse_norm_field(n["norm"], P + ".norm") : Norm::sup;
    const auto dc = HierarchicalPartition::dyadic_constants(SearchDomain(c.box, c.norm));
    c.K = dc.arity;
    c.delta = dc.delta;
    c.R = dc.radius;
    c.nu = dc.nu;
  } else if (!c.preset.empty()) {
    throw ConfigError(P + ".preset", "unknown preset '" + c.preset + "' (known: dyadic-sup)");
  } else {
    c.box = parse_box(need("box"), dim, P + ".box");
    c.norm = parse_norm_field(need("norm"), P + ".norm");
    need("K");
    need("delta");
    need("R");
    need("nu");
  }
  if (n["K"]) {
    const auto k = as<long long>(n["K"], P + ".K");
    if (k < 2) throw ConfigError(P + ".K", "must be >= 2");
    c.K = static_cast<std::uint64_t>(k);
  }
  if (n["delta"]) c.delta = as_double(n["delta"], P + ".delta");
  if (n["R"]) c.R = as_double(n["R"], P + ".R");
  if (n["nu"]) c.nu = as_double(n["nu"], P + ".nu");
  if (n["scan_per_axis"]) c.scan_per_axis = as<int>(n["scan_per_axis"], P + ".scan_per_axis");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError(P + ".delta", "must lie in (0,1)");
  if (!(c.R > 0.0)) throw ConfigError(P + ".R", "must be > 0");
  if (!(c.nu > 0.0)) throw ConfigError(P + ".nu", "must be > 0");
  if (c.scan_per_axis < 1) throw ConfigError(P + ".scan_per_axis", "must be >= 1");
  return c;
}

ObjectiveConfig parse_objective(const YAML::Node& n, const std::filesystem::path& base) {
  const std::string P = "objective";
  if (!n) throw ConfigError(P, "missing block");
  reject_unknown(n, P, {"name", "constant", "abs_norm", "power_exponent", "plateau_radius", "L", "file"});
  ObjectiveConfig c;
  if (!n["name"]) throw ConfigError(P + ".name", "missing");
  c.name = as<std::string>(n["name"], P + ".name");
  if (n["constant"]) c.params.constant = as_double(n["constant"], P + ".constant");
  if (n["abs_norm"]) c.params.abs_norm = parse_norm_field(n["abs_norm"], P + ".abs_norm");
  if (n["power_exponent"]) c.params.power_exponent = as_double(n["power_exponent"], P + ".power_exponent");
  if (n["plateau_radius"]) c.params.plateau_radius = as_double(n["plateau_radius"], P + ".plateau_radius");
  if (n["L"]) c.params.lipschitz_bound = as_double(n["L"], P + ".L");
  if (n["file"]) {
    c.file = as<std::string>(n["file"], P + ".file");
    if (c.file.is_relative() && !base.empty()) c.file = base / c.file;
  }
  if (c.name == "tabulated" && c.file.empty()) throw ConfigError(P + ".file", "required for tabulated objectives");
  return c;
}

EnvironmentConfig parse_environment(const YAML::Node& n) {
  const std::string P = "environment";
  EnvironmentConfig c;
  if (!n) return c;
  reject_unknown(n, P, {"kind", "bump", "variance", "noise"});
  if (n["kind"]) c.kind = as<std::string>(n["kind"], P + ".kind");
  if (n["bump"]) {
    const auto& b = n["bump"];
    reject_unknown(b, P + ".bump", {"center", "scale", "sign"});
    BumpConfig bc;
    if (b["center"]) bc.center = as_doubles(b["center"], P + ".bump.center");
    if (!b["scale"]) throw ConfigError(P + ".bump.scale", "missing");
    bc.scale = as_double(b["scale"], P + ".bump.scale");
    if (!(bc.scale > 0.0)) throw ConfigError(P + ".bump.scale", "must be > 0");
    if (b["sign"]) bc.sign = as<int>(b["sign"], P + ".bump.sign");
    if (bc.sign != 1 && bc.sign != -1) throw ConfigError(P + ".bump.sign", "must be +1 or -1");
    c.bump = bc;
  }
  if (n["variance"]) c.variance = as_double(n["variance"], P + ".variance");
  if (!(c.variance >= 0.0)) throw ConfigError(P + ".variance", "must be >= 0");
  if (n["noise"]) {
    try {
      c.noise = parse_noise_kind(as<std::string>(n["noise"], P + ".noise"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(P + ".noise", e.what());
    }
  }
  return c;
}

CostConfig parse_cost(const YAML::Node& n) {
  const std::string P = "cost";
  CostConfig c;
  if (!n) return c;
  reject_unknown(n, P, {"kind", "c0", "p", "alphas", "costs"});
  if (n["kind"]) c.kind = as<std::string>(n["kind"], P + ".kind");
  if (n["c0"]) c.c0 = as_double(n["c0"], P + ".c0");
  if (n["p"]) c.p = as_double(n["p"], P + ".p");
  if (n["alphas"]) c.alphas = as_doubles(n["alphas"], P + ".alphas");
  if (n["costs"]) c.costs = as_doubles(n["costs"], P + ".costs");
  if (c.kind != "constant" && c.kind != "power-law" && c.kind != "tabulated") {
    throw ConfigError(P + ".kind", "unknown cost kind '" + c.kind + "'");
  }
  return c;
}

}  // namespace

ExperimentConfig parse_config(const std::string& yaml_text, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("config", std::string("YAML parse error: ") + e.what());
  }
  reject_unknown(root, "", {"partition", "objective", "environment", "algorithm", "cost", "eps",
                            "eps_sweep", "budget", "max_depth", "seeds", "output",
                            "grid_resolution", "beta", "validate"});
  ExperimentConfig c;
  c.partition = parse_partition(root["partition"]);
  c.objective = parse_objective(root["objective"], base_dir);
  c.environment = parse_environment(root["environment"]);
  c.cost = parse_cost(root["cost"]);

  if (const auto& a = root["algorithm"]) {
    if (a.IsScalar()) {
      c.algorithm = a.Scalar();
    } else {
      reject_unknown(a, "algorithm", {"name", "gamma"});
      if (a["name"]) c.algorithm = as<std::string>(a["name"], "algorithm.name");
      if (a["gamma"]) c.gamma = as_double(a["gamma"], "algorithm.gamma");
    }
  }
  if (c.algorithm != "cmfdoo" && c.algorithm != "cmfstooo") {
    throw ConfigError("algorithm", "must be cmfdoo or cmfstooo");
  }
  if (!(c.gamma > 0.0 && c.gamma < 1.0)) throw ConfigError("algorithm.gamma", "must lie in (0,1)");

  if (root["eps"] && root["eps_sweep"]) throw ConfigError("eps_sweep", "give either eps or eps_sweep");
  if (const auto& e = root["eps"]) {
    c.eps = e.IsSequence() ? as_doubles(e, "eps") : std::vector<double>{as_double(e, "eps")};
  } else if (const auto& s = root["eps_sweep"]) {
    // [a, b]: eps = 2^-a .. 2^-b
    const auto ab = as_doubles(s, "eps_sweep");
    if (ab.size() != 2 || ab[0] != std::floor(ab[0]) || ab[1] != std::floor(ab[1]) || ab[0] > ab[1]) {
      throw ConfigError("eps_sweep", "expected [a, b] with integers a <= b (eps = 2^-a .. 2^-b)");
    }
    for (int k = static_cast<int>(ab[0]); k <= static_cast<int>(ab[1]); ++k) c.eps.push_back(std::ldexp(1.0, -k));
  } else {
    throw ConfigError("eps", "missing");
  }
  if (c.eps.empty()) throw ConfigError("eps", "must not be empty");
  for (double e : c.eps) {
    if (!(e > 0.0)) throw ConfigError("eps", "values must be > 0");
  }

  if (root["budget"]) c.budget = as_double(root["budget"], "budget");
  if (!(c.budget > 0.0)) throw ConfigError("budget", "must be > 0");
  if (root["max_depth"]) c.max_depth = as<int>(root["max_depth"], "max_depth");
  if (c.max_depth < 1) throw ConfigError("max_depth", "must be >= 1");
  if (const auto& s = root["seeds"]) {
    c.seeds.clear();
    if (s.IsSequence()) {
      for (std::size_t i = 0; i < s.size(); ++i) c.seeds.push_back(as<std::uint64_t>(s[i], "seeds"));
    } else {
      try {
        c.seeds = parse_seed_range(as<std::string>(s, "seeds"));
      } catch (const std::invalid_argument& e) {
        throw ConfigError("seeds", e.what());
      }
    }
    if (c.seeds.empty()) throw ConfigError("seeds", "must not be empty");
  }
  if (root["output"]) c.output = as<std::string>(root["output"], "output");
  if (root["grid_resolution"]) {
    c.grid_resolution = as_double(root["grid_resolution"], "grid_resolution");
    if (!(*c.grid_resolution > 0.0)) throw ConfigError("grid_resolution", "must be > 0");
  }
  if (root["beta"]) {
    c.beta = as_double(root["beta"], "beta");
    if (!(*c.beta > 0.0)) throw ConfigError("beta", "must be > 0");
  }
  if (const auto& v = root["validate"]) {
    reject_unknown(v, "validate", {"assumption_depth", "samples_per_cell", "lipschitz_pairs"});
    if (v["assumption_depth"]) c.validate.assumption_depth = as<int>(v["assumption_depth"], "validate.assumption_depth");
    if (v["samples_per_cell"]) c.validate.samples_per_cell = as<int>(v["samples_per_cell"], "validate.samples_per_cell");
    if (v["lipschitz_pairs"]) c.validate.lipschitz_pairs = as<std::size_t>(v["lipschitz_pairs"], "validate.lipschitz_pairs");
    if (c.validate.assumption_depth < 1) throw ConfigError("validate.assumption_depth", "must be >= 1");
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::vector<std::uint64_t> parse_seed_range(const std::string& text) {
  auto to_u64 = [&](const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw std::invalid_argument("bad seed range '" + text + "' (expected a..b)");
    }
    return static_cast<std::uint64_t>(std::stoull(s));
  };
  const auto pos = text.find("..");
  if (pos == std::string::npos) return {to_u64(text)};
  const auto a = to_u64(text.substr(0, pos));
  const auto b = to_u64(text.substr(pos + 2));
  if (a > b) throw std::invalid_argument("bad seed range '" + text + "' (a > b)");
  std::vector<std::uint64_t> out;
  for (auto s = a; s <= b; ++s) out.push_back(s);
  return out;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  using nlohmann::json;
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json("inf"); };
  json j;
  j["partition"] = {{"preset", c.partition.preset},
                    {"lo", c.partition.box.lo},
                    {"hi", c.partition.box.hi},
                    {"norm", std::string(to_string(c.partition.norm))},
                    {"K", c.partition.K},
                    {"delta", c.partition.delta},
                    {"R", c.partition.R},
                    {"nu", c.partition.nu},
                    {"scan_per_axis", c.partition.scan_per_axis}};
  const auto& p = c.objective.params;
  j["objective"] = {{"name", c.objective.name},
                    {"constant", p.constant},
                    {"abs_norm", p.abs_norm ? json(std::string(to_string(*p.abs_norm))) : json()},
                    {"power_exponent", p.power_exponent},
                    {"plateau_radius", p.plateau_radius},
                    {"L", p.lipschitz_bound ? json(*p.lipschitz_bound) : json()},
                    {"file", c.objective.file.string()}};
  json env = {{"kind", c.environment.kind},
              {"variance", c.environment.variance},
              {"noise", std::string(to_string(c.environment.noise))}};
  if (c.environment.bump) {
    const auto& b = *c.environment.bump;
    env["bump"] = {{"center", b.center ? json(*b.center) : json()}, {"scale", b.scale}, {"sign", b.sign}};
  }
  j["environment"] = env;
  j["algorithm"] = {{"name", c.algorithm}, {"gamma", c.gamma}};
  j["cost"] = {{"kind", c.cost.kind}, {"c0", c.cost.c0}, {"p", c.cost.p},
               {"alphas", c.cost.alphas}, {"costs", c.cost.costs}};
  j["eps"] = c.eps;
  j["budget"] = num(c.budget);
  j["max_depth"] = c.max_depth;
  j["seeds"] = c.seeds;
  j["grid_resolution"] = c.grid_resolution ? json(*c.grid_resolution) : json();
  j["beta"] = c.beta ? json(*c.beta) : json();
  j["validate"] = {{"assumption_depth", c.validate.assumption_depth},
                   {"samples_per_cell", c.validate.samples_per_cell},
                   {"lipschitz_pairs", c.validate.lipschitz_pairs}};
  return j;
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double Experiment::grid_for(double eps) const {
  return config.grid_resolution ? *config.grid_resolution : eps / (10.0 * L);
}

namespace {

ObjectiveSpec make_objective(const ExperimentConfig& c, const SearchDomain& domain) {
  const std::string P = "objective";
  if (c.objective.name == "tabulated") {
    std::ifstream in(c.objective.file);
    if (!in) throw ConfigError(P + ".file", "cannot open " + c.objective.file.string());
    try {
      auto spec = load_tabulated(in, domain.norm(), c.objective.params.lipschitz_bound);
      for (std::size_t j = 0; j < domain.dim(); ++j) {
        if (spec.domain.dim() != domain.dim() || spec.domain.box().lo[j] != domain.box().lo[j] ||
            spec.domain.box().hi[j] != domain.box().hi[j]) {
          throw ConfigError(P + ".file", "table grid does not span partition.box");
        }
      }
      return spec;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(P + ".file", e.what());
    }
  }
  try {
    return make_builtin(c.objective.name, c.objective.params, domain);
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    if (msg.find("exponent") != std::string::npos) throw ConfigError(P + ".power_exponent", msg);
    if (msg.find("radius") != std::string::npos) throw ConfigError(P + ".plateau_radius", msg);
    if (msg.find("Lipschitz") != std::string::npos) throw ConfigError(P + ".L", msg);
    throw ConfigError(P + ".name", msg);
  }
}

CostFunction make_cost(const CostConfig& c) {
  try {
    if (c.kind == "constant") return CostFunction::constant(c.c0);
    if (c.kind == "power-law") return CostFunction::power_law(c.c0, c.p);
    return CostFunction::tabulated(c.alphas, c.costs);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("cost", e.what());
  }
}

}  // namespace

Experiment build_experiment(const ExperimentConfig& config) {
  const SearchDomain domain(config.partition.box, config.partition.norm);
  const PartitionConstants pc{config.partition.K, config.partition.delta, config.partition.R,
                              config.partition.nu};
  auto partition = [&] {
    try {
      return HierarchicalPartition(domain, pc, config.partition.scan_per_axis);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("partition.K", e.what());
    }
  }();
  auto objective = make_objective(config, domain);
  const double L = objective.L_declared;
  const bool stochastic = config.algorithm == "cmfstooo";

  EnvironmentKind kind = EnvironmentKind::noiseless;
  std::optional<BumpParams> bump;
  if (stochastic) {
    if (config.environment.kind != "noiseless" && config.environment.kind != "stochastic") {
      throw ConfigError("environment.kind", "cmfstooo runs use the stochastic environment");
    }
  } else {
    try {
      kind = parse_environment_kind(config.environment.kind);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("environment.kind", e.what());
    }
    if (kind == EnvironmentKind::bump) {
      if (!config.environment.bump) throw ConfigError("environment.bump", "required for bump environments");
      const auto& b = *config.environment.bump;
      Point center = b.center ? *b.center
                              : (objective.maximizer_hint ? *objective.maximizer_hint : domain.box().center());
      if (center.size() != domain.dim() || !domain.contains(center)) {
        throw ConfigError("environment.bump.center", "must be a point of the domain");
      }
      try {
        bump = make_bump_params(objective, center, b.scale, b.sign);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("environment.bump", e.what());
      }
    }
  }

  CostFunction cost = stochastic
                          ? c_gamma_cost(BatchCostParams{config.environment.variance, config.gamma,
                                                         pc.arity, L, pc.radius, pc.delta})
                          : make_cost(config.cost);
  const double eps0 = L * domain.diameter();
  for (double e : config.eps) {
    if (!(e < eps0)) {
      throw ConfigError("eps", "values must lie in (0, L*diam) = (0, " + std::to_string(eps0) + ")");
    }
  }
  return Experiment{config,   config_hash(config), std::move(partition), std::move(objective),
                    std::move(cost), L, stochastic, kind, bump};
}

}  // namespace certmf::cli
