#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <thread>

namespace {

using nlohmann::json;
namespace cli = trapscape::cli;

int emit_error(int code, const std::string& kind, const std::string& message, json extra = json::object()) {
  json e = {{"kind", kind}, {"message", message}, {"exit_code", code}};
  for (auto& [k, v] : extra.items()) e[k] = v;
  std::cerr << json{{"error", e}}.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surface-trap double-well simulator"};
  app.set_version_flag("--version", std::string(trapscape::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  unsigned threads = 0;
  std::string format = "csv";
  std::string sweep;

  app.add_option("--config", config_path, "YAML configuration file (defaults are used when omitted)");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--threads", threads, "Worker threads (0 = all cores)");
  app.add_option("--format", format, "Format for curves and grids")->check(CLI::IsMember({"csv", "json"}));

  const std::vector<std::pair<std::string, std::string>> help = {
      {"potential-grid", "Pseudopotential on an (x, y) grid"},
      {"nodes", "RF nodes, topology and barrier; --sweep a:b:step for a curve over R"},
      {"critical", "Critical voltage ratio for the double well and its sensitivity"},
      {"crystal", "Equilibrium ion crystal and its normal modes"},
      {"modes-sweep", "Axial mode frequencies of a 2x2 crystal versus R"},
      {"corrugation", "Corrugation potential, omega_int, omega_0 and eta"},
      {"slide", "Quasi-static sliding of one string against the other"},
      {"dc-solve", "Minimum-norm DC voltages for null and curvature constraints"},
      {"repro", "Full reference suite into subdirectories of --out"},
  };
  for (const auto& [name, text] : help) {
    CLI::App* sub = app.add_subcommand(name, text);
    sub->fallthrough();
    if (name == "nodes") sub->add_option("--sweep", sweep, "R sweep as start:stop:step");
  }

  // First bare word is the command; report unknown ones before CLI11 does.
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" || arg == "--out" || arg == "--threads" || arg == "--format" || arg == "--sweep") {
      ++i;
      continue;
    }
    if (arg.empty() || arg[0] == '-') continue;
    const auto& names = cli::command_names();
    if (std::find(names.begin(), names.end(), arg) == names.end()) {
      return emit_error(2, "usage", "unknown command '" + arg + "'");
    }
    break;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return emit_error(2, "usage", e.what());
  }

  cli::Context ctx;
  ctx.command = app.get_subcommands().front()->get_name();
  ctx.out = out_dir;
  ctx.threads = trapscape::resolve_threads(threads);
  ctx.format = format == "json" ? cli::Format::json : cli::Format::csv;

  try {
    ctx.config = config_path.empty() ? cli::parse_config("{}") : cli::load_config(config_path);
    if (!sweep.empty()) ctx.sweep = cli::parse_range(sweep);
  } catch (const cli::ConfigError& e) {
    json where = json::object();
    if (e.line() > 0) where = {{"line", e.line()}, {"column", e.column()}};
    return emit_error(3, "config", e.what(), where);
  }

  try {
    return cli::run_command(ctx);
  } catch (const cli::ConfigError& e) {
    return emit_error(3, "config", e.what());
  } catch (const trapscape::DomainError& e) {
    return emit_error(3, "config", e.what());
  } catch (const trapscape::NumericalError& e) {
    return emit_error(4, "numerical", e.what());
  } catch (const trapscape::StateError& e) {
    return emit_error(4, "numerical", e.what());
  } catch (const std::exception& e) {
    return emit_error(1, "internal", e.what());
  }
}
