#include <doctest.h>

#include "config.hpp"

#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;
namespace cli = trapscape::cli;

namespace {

struct Run {
  int code = -1;
  std::string err;
};

class Scratch {
 public:
  Scratch() {
    static std::atomic<int> counter{0};
    dir_ = fs::temp_directory_path() / ("trapscape_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(dir_);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }
  Scratch(const Scratch&) = delete;
  Scratch& operator=(const Scratch&) = delete;

  fs::path path(const std::string& name) const { return dir_ / name; }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

 private:
  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Run invoke(const std::string& args, const Scratch& s) {
  const fs::path err = s.path("stderr.txt");
  const std::string cmd = std::string(TRAPSCAPE_EXE) + " " + args + " 2> " + err.string() + " > /dev/null";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err);
  return r;
}

json error_json(const Run& r) {
  std::istringstream in(r.err);
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty() && line.front() == '{') last = line;
  return json::parse(last);
}

json csv_header(const fs::path& p) {
  std::ifstream in(p);
  std::string first;
  std::getline(in, first);
  REQUIRE(first.rfind("# ", 0) == 0);
  return json::parse(first.substr(2));
}

std::string config_dir() { return TRAPSCAPE_CONFIG_DIR; }

}  // namespace

TEST_CASE("unknown command exits 2 with a usage error") {
  Scratch s;
  const Run r = invoke("bogus --out " + s.path("out").string(), s);
  CHECK(r.code == 2);
  const json e = error_json(r);
  CHECK(e["error"]["kind"] == "usage");
  CHECK(e["error"]["exit_code"] == 2);
  CHECK_FALSE(fs::exists(s.path("out")));
}

TEST_CASE("missing config exits 3 and writes nothing") {
  Scratch s;
  const Run r = invoke("nodes --config " + s.path("absent.yaml").string() + " --out " + s.path("out").string(), s);
  CHECK(r.code == 3);
  CHECK(error_json(r)["error"]["kind"] == "config");
  CHECK_FALSE(fs::exists(s.path("out")));
}

TEST_CASE("config diagnostics carry line and column") {
  Scratch s;
  const auto cfg = s.write("bad.yaml", "drive:\n  v_rf: 85\n  bogus_key: 1\n");
  const Run r = invoke("nodes --config " + cfg.string() + " --out " + s.path("out").string(), s);
  CHECK(r.code == 3);
  const json e = error_json(r);
  CHECK(e["error"]["line"] == 3);
  CHECK(e["error"]["column"] == 3);
  CHECK_FALSE(fs::exists(s.path("out")));

  const auto neg = s.write("neg.yaml", "drive:\n  v_rf: -5\n");
  const Run n = invoke("nodes --config " + neg.string() + " --out " + s.path("out").string(), s);
  CHECK(n.code == 3);
  CHECK(error_json(n)["error"]["line"] == 2);
}

TEST_CASE("nodes report embeds tool, version and resolved config") {
  Scratch s;
  const auto cfg = s.write("single.yaml", "drive:\n  v_rf: 85\n  r: 0.9\n");
  const Run r = invoke("nodes --config " + cfg.string() + " --out " + s.path("out").string(), s);
  REQUIRE(r.code == 0);
  const json j = json::parse(slurp(s.path("out/nodes.json")));
  CHECK(j["header"]["tool"] == "trapscape");
  CHECK(j["header"]["version"].is_string());
  CHECK(j["header"]["command"] == "nodes");
  CHECK(j["header"]["config"]["drive"]["r"] == 0.9);
  CHECK(j["topology"] == "horizontal_pair");
}

TEST_CASE("sweep CSV, determinism and thread independence") {
  Scratch s;
  const std::string base = "nodes --sweep 0.8:1.0:0.005 --config " + config_dir() + "/double_well.yaml";
  REQUIRE(invoke(base + " --threads 1 --out " + s.path("a").string(), s).code == 0);
  REQUIRE(invoke(base + " --threads 4 --out " + s.path("b").string(), s).code == 0);
  const std::string a = slurp(s.path("a/nodes_sweep.csv"));
  CHECK(a == slurp(s.path("b/nodes_sweep.csv")));

  std::istringstream in(a);
  std::string line;
  int rows = 0;
  std::getline(in, line);
  std::getline(in, line);
  CHECK(line == "r,topology,separation_um,barrier_meV,x1_um,y1_um,x2_um,y2_um,error");
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 41);
}

TEST_CASE("echoed config reproduces the run bit for bit") {
  Scratch s;
  REQUIRE(invoke("potential-grid --config " + config_dir() + "/double_well.yaml --out " + s.path("a").string(), s)
              .code == 0);
  const json header = csv_header(s.path("a/potential_grid.csv"));
  const auto echo = s.write("echo.json", header["config"].dump());
  REQUIRE(invoke("potential-grid --config " + echo.string() + " --out " + s.path("b").string(), s).code == 0);
  CHECK(slurp(s.path("a/potential_grid.csv")) == slurp(s.path("b/potential_grid.csv")));
  CHECK(slurp(s.path("a/potential_grid_minima.json")) == slurp(s.path("b/potential_grid_minima.json")));

  const json minima = json::parse(slurp(s.path("a/potential_grid_minima.json")));
  CHECK(minima["minima"].size() == 2);
}

TEST_CASE("json format for curves") {
  Scratch s;
  REQUIRE(invoke("nodes --sweep 0.8:0.9:0.05 --format json --out " + s.path("out").string(), s).code == 0);
  const json j = json::parse(slurp(s.path("out/nodes_sweep.json")));
  CHECK(j["header"]["columns"].size() == 9);
  CHECK(j["rows"].size() == 3);
}

TEST_CASE("dc-solve writes voltages; infeasible constraints exit 4") {
  Scratch s;
  REQUIRE(invoke("dc-solve --config " + config_dir() + "/dc_layout_example.yaml --out " + s.path("ok").string(), s)
              .code == 0);
  const json j = json::parse(slurp(s.path("ok/dc_solve.json")));
  CHECK(j["feasible"] == true);
  CHECK(j["voltages"].size() == 9);

  const auto cfg = s.write("bad.yaml",
                           "dc_solve:\n"
                           "  electrodes:\n"
                           "    - {label: a, x_min_um: -40, x_max_um: 40, z_min_um: -40, z_max_um: 40}\n"
                           "  potentials:\n"
                           "    - {x_um: 0, y_um: 30, z_um: 0, value_v: 1}\n"
                           "    - {x_um: 0, y_um: 30, z_um: 0, value_v: 2}\n");
  const Run r = invoke("dc-solve --config " + cfg.string() + " --out " + s.path("bad").string(), s);
  CHECK(r.code == 4);
  CHECK(error_json(r)["error"]["kind"] == "infeasible");
  CHECK(fs::exists(s.path("bad/dc_solve.json")));

  const Run missing = invoke("dc-solve --out " + s.path("none").string(), s);
  CHECK(missing.code == 3);
  CHECK_FALSE(fs::exists(s.path("none")));
}

TEST_CASE("config parsing") {
  const cli::Range r = cli::parse_range("0.8:0.9:0.05");
  CHECK(r.values() == std::vector<double>{0.8, 0.85, 0.9});
  CHECK_THROWS_AS(cli::parse_range("0.8:0.9"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_range("0.9:0.8:0.05"), cli::ConfigError);

  const cli::RunConfig c = cli::parse_config("drive:\n  v_rf: 120\n  r: 0.9\n");
  const json echoed = cli::to_json(c);
  CHECK(echoed["drive"]["v_rf"] == 120.0);
  const cli::RunConfig again = cli::parse_config(echoed.dump());
  CHECK(cli::to_json(again) == echoed);

  try {
    cli::parse_config("species:\n  mass_amu: 40\n  colour: red\n");
    FAIL("expected ConfigError");
  } catch (const cli::ConfigError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(cli::parse_config("drive: [1, 2"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_config("species:\n  mass_amu: 0\n"), cli::ConfigError);
}
