#pragma once

#include <trapscape/trapscape.hpp>

#include <nlohmann/json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace trapscape::cli {

/// Invalid configuration; `line` and `column` are 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0, int column = 0)
      : std::runtime_error(what), line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Inclusive arithmetic range start, start + step, ... <= stop.
struct Range {
  double start = 0.0;
  double stop = 0.0;
  double step = 1.0;
  std::vector<double> values() const;
};

/// Parses "a:b:step".
Range parse_range(const std::string& text);

struct GeometrySection {
  std::string preset = "canonical";  // canonical | custom
  double scale = 1.0;
  double gap_um = 4.0;
  GapModel gap_model = GapModel::grounded;
  std::vector<StripElectrode> strips;  // custom only, metres
};

struct DriveSection {
  double v_rf = 85.0;
  double r = 0.0;
  double f_rf_mhz = 27.2;
  std::optional<double> separation_um;  // when set, r is solved for this node separation
};

struct SpeciesSection {
  double mass_amu = 40.0;
  double charge_e = 1.0;
};

struct WellSpec {
  double f_z_hz = 0.0;
  double x_um = 0.0;
  double y_um = 0.0;
  double z_um = 0.0;
  double alpha = 0.5;
  double beta = 0.5;
};

struct WellsSection {
  bool at_nodes = true;
  double f_z_hz = 15e3;
  double alpha = 0.5;
  double beta = 0.5;
  std::vector<WellSpec> list;  // used when at_nodes is false
};

struct GridSection {
  double x_min_um = -150.0;
  double x_max_um = 150.0;
  double y_min_um = 2.0;
  double y_max_um = 200.0;
  int nx = 151;
  int ny = 100;
  double clip_ev = 0.1;
};

struct NodesSection {
  std::optional<Range> sweep;
};

struct CriticalSection {
  double tolerance = 1e-4;
  double epsilon = 0.03;
  double reference_r = 0.85;
};

struct CrystalSection {
  int ions = 2;
  std::vector<int> per_well;
  std::string init = "string_seed";  // string_seed | random_restart
  int restarts = 8;
  int seed = 1;
  double force_tolerance_n = 1e-25;
  double stagger = 0.25;
};

struct ModesSection {
  std::optional<Range> r;
  std::vector<double> separations_um;
  double f_z0_hz = 0.19e6;
  int ions_per_string = 2;
};

struct CorrugationSection {
  int target_string = 0;
  int samples = 801;
  int ions_per_string = 7;
  std::optional<Range> sweep;
};

struct SlideSection {
  int moving_well = 1;
  int ions_per_string = 7;
  Range offset_um{0.0, 70.0, 1.0};
  double slip_fraction = 0.1;
  bool hysteresis = true;
};

struct DcNull {
  Vec3 point_um = Vec3::Zero();
  Vec3 gradient_v_per_m = Vec3::Zero();
};
struct DcCurvature {
  Vec3 point_um = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
  double value_v_per_m2 = 0.0;
};
struct DcPotential {
  Vec3 point_um = Vec3::Zero();
  double value_v = 0.0;
};

struct DcSection {
  std::vector<RectElectrode> electrodes;  // metres
  std::vector<DcNull> nulls;
  std::vector<DcCurvature> curvatures;
  std::vector<DcPotential> potentials;
  std::optional<Vec3> stray_field_v_per_m;
};

struct RunConfig {
  GeometrySection geometry;
  DriveSection drive;
  SpeciesSection species;
  WellsSection wells;
  GridSection potential_grid;
  NodesSection nodes;
  CriticalSection critical;
  CrystalSection crystal;
  ModesSection modes_sweep;
  CorrugationSection corrugation;
  SlideSection slide;
  DcSection dc_solve;
};

/// Strict parse: unknown keys, wrong types and out-of-range values are errors.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Resolved configuration in the input schema (feeding it back reproduces the run).
nlohmann::json to_json(const RunConfig& config);

/// Geometry, drive and species; wells are not placed.
TrapModel base_model(const RunConfig& config);
SolveOptions solve_options(const RunConfig& config, unsigned threads);

}  // namespace trapscape::cli
