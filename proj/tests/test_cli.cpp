#include <doctest.h>

#include <stdexcept>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "commands.hpp"
#include "config.hpp"

using namespace certmf;
using namespace certmf::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = CERTMF_CONFIG_DIR;
const fs::path kScratch = fs::path(CERTMF_TEST_SCRATCH) / "cli";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Invocation {
  int code = -1;
  std::string out;
  std::string err;
};

Invocation certmf_cli(const std::string& args, const std::string& tag) {
  fs::create_directories(kScratch);
  const auto out = kScratch / (tag + ".stdout");
  const auto err = kScratch / (tag + ".stderr");
  const std::string cmd = std::string("\"") + CERTMF_BIN + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Invocation inv;
  inv.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  inv.out = slurp(out);
  inv.err = slurp(err);
  return inv;
}

fs::path write_config(const std::string& name, const std::string& text) {
  fs::create_directories(kScratch);
  const auto p = kScratch / name;
  std::ofstream(p) << text;
  return p;
}

fs::path fresh_dir(const std::string& name) {
  const auto d = kScratch / name;
  fs::remove_all(d);
  return d;
}

const char* kGolden = R"(partition:
  preset: dyadic-sup
  dim: 1
objective:
  name: constant
  constant: 0
  L: 1
environment:
  kind: noiseless
algorithm: cmfdoo
cost:
  kind: constant
  c0: 1
eps: 0.25
)";

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config(kGolden);
  CHECK(c.partition.preset == "dyadic-sup");
  CHECK(c.partition.box.lo == Point{0.0});
  CHECK(c.eps == std::vector<double>{0.25});
  CHECK(c.seeds == std::vector<std::uint64_t>{0});

  const auto sweep = parse_config(std::string(kGolden).replace(std::string(kGolden).find("eps: 0.25"), 9,
                                                               "eps_sweep: [2, 8]"));
  REQUIRE(sweep.eps.size() == 7);
  CHECK(sweep.eps.front() == 0.25);
  CHECK(sweep.eps.back() == std::ldexp(1.0, -8));

  CHECK(parse_seed_range("3..5") == std::vector<std::uint64_t>{3, 4, 5});
  CHECK(parse_seed_range("7") == std::vector<std::uint64_t>{7});
  CHECK_THROWS(parse_seed_range("5..3"));
}

TEST_CASE("config errors name the offending field") {
  auto field_of = [](const std::string& text) {
    try {
      build_experiment(parse_config(text));
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  const std::string base = kGolden;
  CHECK(field_of(base + "budget: -1\n") == "budget");
  CHECK(field_of(base + "bogus: 1\n") == "bogus");
  CHECK(field_of(std::string(kGolden).replace(base.find("eps: 0.25"), 9, "eps: 2")) == "eps");
  CHECK(field_of("partition:\n  box: [[0, 1]]\n  norm: sup\n  K: 2\n  delta: 1.5\n  R: 1\n  nu: 0.5\n"
                 "objective:\n  name: cone\neps: 0.25\n") == "partition.delta");
  CHECK(field_of(std::string(kGolden).replace(base.find("constant\n  c0"), 8, "tabulate")) == "cost.kind");
}

TEST_CASE("config hash is stable and ignores the output location") {
  const auto a = parse_config(kGolden);
  auto b = a;
  b.output = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b.eps = {0.125};
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("in-process run of the golden config") {
  const auto exp = build_experiment(parse_config(kGolden));
  const auto rec = execute(exp, RunJob{0, 0.25, 0});
  CHECK(rec.result.outcome.sigma == 31.0);
  CHECK(rec.contract_violations == 0);
  CHECK(run_stem(RunJob{3, 0.1, 12}) == "run_e03_s12");
}

TEST_CASE("cli run: golden sigma") {
  const auto out = fresh_dir("golden");
  const auto inv = certmf_cli("run --config \"" + (kConfigs / "golden_constant.yaml").string() + "\" --out \"" +
                                  out.string() + "\"",
                              "golden");
  CHECK(inv.code == 0);
  const auto j = nlohmann::json::parse(slurp(out / "run_e00_s0.outcome.json"));
  CHECK(j["sigma"].get<double>() == 31.0);
  CHECK(j["tau"].get<int>() == 31);
  CHECK(j["stop_reason"] == "certified");
  CHECK(j["config_hash"].get<std::string>().size() == 16);
  const auto trace = slurp(out / "run_e00_s0.trace.csv");
  CHECK(trace.rfind("t,h,i,x_1,alpha,y,step_cost,cum_cost,rec_x_1,xi\n", 0) == 0);
  CHECK(fs::exists(out / "summary.csv"));
}

TEST_CASE("cli run: eps sweep writes one outcome per eps") {
  const auto out = fresh_dir("sweep7");
  const auto cfg = write_config("sweep7.yaml", std::string(kGolden).replace(std::string(kGolden).find("eps: 0.25"),
                                                                             9, "eps_sweep: [2, 8]"));
  const auto inv = certmf_cli("run --config \"" + cfg.string() + "\" --out \"" + out.string() + "\"", "sweep7");
  CHECK(inv.code == 0);
  int outcomes = 0;
  for (const auto& e : fs::directory_iterator(out)) outcomes += e.path().string().ends_with(".outcome.json");
  CHECK(outcomes == 7);
  std::istringstream summary(slurp(out / "summary.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(summary, line)) ++rows;
  CHECK(rows == 7);
}

TEST_CASE("cli run: invalid delta exits 2 naming the field") {
  const auto cfg = write_config("bad_delta.yaml", std::string(kGolden).replace(std::string(kGolden).find("  dim: 1"),
                                                                                8, "  dim: 1\n  delta: 1.5"));
  const auto inv = certmf_cli("run --config \"" + cfg.string() + "\" --out \"" + fresh_dir("bad").string() + "\"",
                              "bad_delta");
  CHECK(inv.code == 2);
  CHECK(inv.err.find("partition.delta") != std::string::npos);
  CHECK(certmf_cli("run", "no_config").code == 2);
  CHECK(certmf_cli("run --config /nonexistent.yaml", "missing").code == 2);
}

TEST_CASE("cli run: budget exhaustion exits 3") {
  const auto cfg = write_config("budget.yaml", std::string(kGolden) + "budget: 5\n");
  const auto out = fresh_dir("budget");
  const auto inv = certmf_cli("run --config \"" + cfg.string() + "\" --out \"" + out.string() + "\"", "budget");
  CHECK(inv.code == 3);
  const auto j = nlohmann::json::parse(slurp(out / "run_e00_s0.outcome.json"));
  CHECK(j["stop_reason"] == "budget");
  CHECK(j["sigma"].is_null());
}

TEST_CASE("cli complexity: constant report") {
  const auto out = fresh_dir("complexity");
  const auto inv = certmf_cli("complexity --config \"" + (kConfigs / "golden_constant.yaml").string() +
                                  "\" --out \"" + out.string() + "\" --grid-resolution 0.01",
                              "complexity");
  CHECK(inv.code == 0);
  const auto j = nlohmann::json::parse(slurp(out / "complexity_e00.json"));
  for (const char* key : {"config_hash", "eps", "beta", "grid_resolution", "eps_schedule", "per_layer",
                          "base_packing", "base_term", "S", "upper_pred", "lower_pred", "integral"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["eps_schedule"]["m"] == 2);
  CHECK(j["per_layer"].is_array());
  for (const auto& l : j["per_layer"]) {
    CHECK(l.contains("k"));
    CHECK(l.contains("eps_k"));
    CHECK(l.contains("packing"));
    CHECK(l.contains("cost_term"));
  }
  CHECK(j["S"].get<double>() == 4.0);
  CHECK(j["upper_pred"].get<double>() == doctest::Approx(105.0));
  CHECK(j["integral"].get<double>() == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("cli complexity: cone lists its nonempty layers") {
  const auto cfg = write_config("cone_c.yaml", R"(partition:
  preset: dyadic-sup
  dim: 1
objective:
  name: cone
cost:
  kind: constant
eps: 0.03125
)");
  const auto out = fresh_dir("cone_c");
  CHECK(certmf_cli("complexity --config \"" + cfg.string() + "\" --out \"" + out.string() + "\"", "cone_c").code == 0);
  const auto j = nlohmann::json::parse(slurp(out / "complexity_e00.json"));
  CHECK(j["per_layer"].size() == 5);
  for (const auto& l : j["per_layer"]) CHECK(l["packing"].get<int>() >= 1);
}

TEST_CASE("cli validate: preset passes, mis-declared R fails") {
  const auto out = fresh_dir("validate");
  const auto ok = certmf_cli("validate --config \"" + (kConfigs / "validate_2d.yaml").string() + "\" --out \"" +
                                 out.string() + "\"",
                             "validate_ok");
  CHECK(ok.code == 0);
  const auto j = nlohmann::json::parse(slurp(out / "validation.json"));
  CHECK(j["pass"] == true);

  const auto cfg = write_config("bad_R.yaml", std::string(kGolden).replace(std::string(kGolden).find("  dim: 1"), 8,
                                                                            "  dim: 1\n  R: 0.4"));
  const auto bad = certmf_cli("validate --config \"" + cfg.string() + "\" --out \"" + fresh_dir("bad_R").string() +
                                  "\"",
                              "validate_bad");
  CHECK(bad.code == 1);
  CHECK(bad.out.find("assumptions") != std::string::npos);

  const auto bump_out = fresh_dir("bump");
  const auto bump = certmf_cli("validate --config \"" + (kConfigs / "bump_cone.yaml").string() + "\" --out \"" +
                                   bump_out.string() + "\"",
                               "validate_bump");
  CHECK(bump.code == 0);
  CHECK(bump.out.find("INFO") != std::string::npos);
}

TEST_CASE("cli determinism and parallel equivalence") {
  const auto cfg = write_config("sto.yaml", R"(partition:
  preset: dyadic-sup
  dim: 1
objective:
  name: cone
environment:
  kind: stochastic
  variance: 0.01
algorithm:
  name: cmfstooo
  gamma: 0.1
eps: [0.25, 0.125]
seeds: "0..5"
)");
  const auto a = fresh_dir("det_a"), b = fresh_dir("det_b"), c = fresh_dir("det_c");
  CHECK(certmf_cli("run --config \"" + cfg.string() + "\" --out \"" + a.string() + "\"", "det_a").code == 0);
  CHECK(certmf_cli("run --config \"" + cfg.string() + "\" --out \"" + b.string() + "\"", "det_b").code == 0);
  CHECK(certmf_cli("run --config \"" + cfg.string() + "\" --out \"" + c.string() + "\" --parallel 4", "det_c").code ==
        0);
  int files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    const auto name = e.path().filename();
    CHECK(slurp(e.path()) == slurp(b / name));
    CHECK(slurp(e.path()) == slurp(c / name));
    ++files;
  }
  CHECK(files == 2 * 6 * 2 + 1);
  const auto trace = slurp(a / "run_e00_s0.trace.csv");
  CHECK(trace.find(",m_t,cum_samples\n") != std::string::npos);
  const auto j = nlohmann::json::parse(slurp(a / "run_e00_s0.outcome.json"));
  CHECK(j["total_samples"] == 84);
}

TEST_CASE("cli sweep writes plot csv and monte carlo summary") {
  const auto cfg = write_config("mc.yaml", R"(partition:
  preset: dyadic-sup
  dim: 1
objective:
  name: cone
environment:
  kind: stochastic
  variance: 0.01
algorithm:
  name: cmfstooo
  gamma: 0.1
eps: 0.25
seeds: "0..19"
)");
  const auto out = fresh_dir("mc");
  CHECK(certmf_cli("sweep --config \"" + cfg.string() + "\" --out \"" + out.string() + "\" --parallel 2", "mc").code ==
        0);
  const auto mc = nlohmann::json::parse(slurp(out / "montecarlo_e00.json"));
  CHECK(mc["n_runs"] == 20);
  CHECK(mc["violations"] == 0);
  CHECK(mc.contains("quantiles"));
  CHECK(fs::exists(out / "sweep.csv"));
  CHECK(fs::exists(out / "sweep_summary.json"));
}
