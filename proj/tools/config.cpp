#include "config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace trapscape::cli {

namespace {

[[noreturn]] void fail(const YAML::Node& node, const std::string& what) {
  const YAML::Mark m = node.Mark();
  if (m.is_null()) throw ConfigError(what);
  throw ConfigError(what, m.line + 1, m.column + 1);
}

// Map with key bookkeeping: every key must be consumed or it is reported.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) fail(node_, "'" + path_ + "' must be a mapping");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return node_ && node_.IsMap() && node_[key] && !node_[key].IsNull();
  }

  YAML::Node raw(const std::string& key) {
    used_.insert(key);
    return (node_ && node_.IsMap()) ? node_[key] : YAML::Node();
  }

  Section child(const std::string& key) { return Section(raw(key), name(key)); }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return convert<T>(node_[key], name(key));
  }

  template <typename T>
  static T convert(const YAML::Node& n, const std::string& what) {
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, "'" + what + "' has the wrong type");
    }
  }

  double positive(const std::string& key, double fallback) {
    const double v = get<double>(key, fallback);
    if (!(v > 0.0) || !std::isfinite(v)) fail(node_[key] ? node_[key] : node_, "'" + name(key) + "' must be positive");
    return v;
  }

  double finite(const std::string& key, double fallback) {
    const double v = get<double>(key, fallback);
    if (!std::isfinite(v)) fail(node_[key], "'" + name(key) + "' must be finite");
    return v;
  }

  int at_least(const std::string& key, int fallback, int lo) {
    const int v = get<int>(key, fallback);
    if (v < lo) fail(node_[key], "'" + name(key) + "' must be at least " + std::to_string(lo));
    return v;
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const YAML::Node& node() const { return node_; }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!used_.count(key)) fail(kv.first, "unknown key '" + name(key) + "'");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

std::vector<Section> items(Section& parent, const std::string& key) {
  std::vector<Section> out;
  const YAML::Node list = parent.raw(key);
  if (!list || list.IsNull()) return out;
  if (!list.IsSequence()) fail(list, "'" + parent.name(key) + "' must be a list");
  for (std::size_t i = 0; i < list.size(); ++i) {
    out.emplace_back(list[i], parent.name(key) + "[" + std::to_string(i) + "]");
  }
  return out;
}

Vec3 vec3(Section& s, const std::string& key, const Vec3& fallback) {
  if (!s.has(key)) return fallback;
  const YAML::Node n = s.raw(key);
  const auto v = Section::convert<std::vector<double>>(n, s.name(key));
  if (v.size() != 3) fail(n, "'" + s.name(key) + "' must have three components");
  return {v[0], v[1], v[2]};
}

Vec3 point_um(Section& s) { return {s.finite("x_um", 0.0), s.finite("y_um", 0.0), s.finite("z_um", 0.0)}; }

Range range(Section s) {
  Range r;
  r.start = s.finite("start", 0.0);
  r.stop = s.finite("stop", 0.0);
  r.step = s.positive("step", 1.0);
  s.finish();
  if (r.stop < r.start) fail(s.node(), "'" + s.name("stop") + "' is below start");
  if ((r.stop - r.start) / r.step > 1e6) fail(s.node(), "range '" + s.name("") + "' has more than 10^6 points");
  return r;
}

template <typename Fn>
auto checked(const YAML::Node& where, Fn&& fn) {
  try {
    return fn();
  } catch (const DomainError& e) {
    fail(where, e.what());
  }
}

}  // namespace

std::vector<double> Range::values() const {
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  for (long i = 0; i <= n; ++i) {
    // Round to 12 significant digits so 0.8 + 10 * 0.005 prints as 0.85.
    const double v = start + static_cast<double>(i) * step;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    out.push_back(std::strtod(buf, nullptr));
  }
  return out;
}

Range parse_range(const std::string& text) {
  Range r;
  char c1 = 0;
  char c2 = 0;
  std::istringstream in(text);
  if (!(in >> r.start >> c1 >> r.stop >> c2 >> r.step) || c1 != ':' || c2 != ':' || !in.eof()) {
    throw ConfigError("sweep must look like start:stop:step, got '" + text + "'");
  }
  if (!(r.step > 0.0) || r.stop < r.start) throw ConfigError("sweep needs step > 0 and stop >= start");
  return r;
}

RunConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("YAML syntax error: " + e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  RunConfig c;
  Section top(root, "");

  {
    Section g = top.child("geometry");
    c.geometry.preset = g.get<std::string>("preset", "canonical");
    if (c.geometry.preset != "canonical" && c.geometry.preset != "custom") {
      fail(g.raw("preset"), "'geometry.preset' must be canonical or custom");
    }
    c.geometry.scale = g.positive("scale", 1.0);
    c.geometry.gap_um = g.get<double>("gap_um", 4.0);
    if (!(c.geometry.gap_um >= 0.0)) fail(g.raw("gap_um"), "'geometry.gap_um' must be non-negative");
    if (g.has("gap_model")) {
      const YAML::Node n = g.raw("gap_model");
      c.geometry.gap_model = checked(n, [&] { return parse_gap_model(Section::convert<std::string>(n, "gap_model")); });
    }
    for (auto& s : items(g, "strips")) {
      StripElectrode e;
      e.x_min = units::um * s.finite("x_min_um", 0.0);
      e.x_max = units::um * s.finite("x_max_um", 0.0);
      const YAML::Node role = s.raw("role");
      if (!role) fail(s.node(), "'" + s.name("role") + "' is required");
      e.role = checked(role, [&] { return parse_electrode_role(Section::convert<std::string>(role, "role")); });
      s.finish();
      c.geometry.strips.push_back(e);
    }
    if (c.geometry.preset == "custom" && c.geometry.strips.empty()) {
      fail(g.node(), "custom geometry needs 'geometry.strips'");
    }
    if (c.geometry.preset == "canonical" && !c.geometry.strips.empty()) {
      fail(g.raw("strips"), "'geometry.strips' is only used with preset: custom");
    }
    g.finish();
  }
  {
    Section d = top.child("drive");
    c.drive.v_rf = d.positive("v_rf", 85.0);
    c.drive.r = d.get<double>("r", 0.0);
    if (!(c.drive.r >= 0.0 && c.drive.r <= 1.5)) fail(d.raw("r"), "'drive.r' must lie in [0, 1.5]");
    c.drive.f_rf_mhz = d.positive("f_rf_mhz", 27.2);
    if (d.has("separation_um")) c.drive.separation_um = d.positive("separation_um", 1.0);
    d.finish();
  }
  {
    Section s = top.child("species");
    c.species.mass_amu = s.positive("mass_amu", 40.0);
    c.species.charge_e = s.get<double>("charge_e", 1.0);
    if (c.species.charge_e == 0.0) fail(s.raw("charge_e"), "'species.charge_e' must be nonzero");
    s.finish();
  }
  {
    Section w = top.child("wells");
    c.wells.at_nodes = w.get<bool>("at_nodes", true);
    c.wells.f_z_hz = w.positive("f_z_hz", 15e3);
    c.wells.alpha = w.get<double>("alpha", 0.5);
    c.wells.beta = w.get<double>("beta", 0.5);
    for (auto& s : items(w, "list")) {
      WellSpec ws;
      ws.f_z_hz = s.positive("f_z_hz", 15e3);
      ws.x_um = s.finite("x_um", 0.0);
      ws.y_um = s.positive("y_um", 1.0);
      ws.z_um = s.finite("z_um", 0.0);
      ws.alpha = s.get<double>("alpha", 0.5);
      ws.beta = s.get<double>("beta", 0.5);
      checked(s.node(), [&] {
        AxialConfinement{units::angular(ws.f_z_hz), 0.0, Vec2::Zero(), ws.alpha, ws.beta}.validate();
        return 0;
      });
      s.finish();
      c.wells.list.push_back(ws);
    }
    checked(w.node(), [&] {
      AxialConfinement{units::angular(c.wells.f_z_hz), 0.0, Vec2::Zero(), c.wells.alpha, c.wells.beta}.validate();
      return 0;
    });
    if (!c.wells.at_nodes && c.wells.list.empty()) fail(w.node(), "'wells.list' is required when at_nodes is false");
    w.finish();
  }
  {
    Section g = top.child("potential_grid");
    auto& p = c.potential_grid;
    p.x_min_um = g.finite("x_min_um", p.x_min_um);
    p.x_max_um = g.finite("x_max_um", p.x_max_um);
    p.y_min_um = g.positive("y_min_um", p.y_min_um);
    p.y_max_um = g.positive("y_max_um", p.y_max_um);
    p.nx = g.at_least("nx", p.nx, 2);
    p.ny = g.at_least("ny", p.ny, 2);
    p.clip_ev = g.positive("clip_ev", p.clip_ev);
    if (!(p.x_max_um > p.x_min_um) || !(p.y_max_um > p.y_min_um)) fail(g.node(), "potential_grid window is empty");
    g.finish();
  }
  {
    Section n = top.child("nodes");
    if (n.has("sweep")) c.nodes.sweep = range(n.child("sweep"));
    n.finish();
  }
  {
    Section s = top.child("critical");
    c.critical.tolerance = s.positive("tolerance", 1e-4);
    c.critical.epsilon = s.get<double>("epsilon", 0.03);
    if (!(c.critical.epsilon >= 0.0 && c.critical.epsilon < 0.5)) {
      fail(s.raw("epsilon"), "'critical.epsilon' must lie in [0, 0.5)");
    }
    c.critical.reference_r = s.positive("reference_r", 0.85);
    s.finish();
  }
  {
    Section s = top.child("crystal");
    auto& k = c.crystal;
    k.ions = s.at_least("ions", k.ions, 1);
    if (s.has("per_well")) {
      k.per_well = Section::convert<std::vector<int>>(s.raw("per_well"), "crystal.per_well");
      int total = 0;
      for (int p : k.per_well) {
        if (p < 0) fail(s.raw("per_well"), "'crystal.per_well' entries must be non-negative");
        total += p;
      }
      if (total != k.ions) fail(s.raw("per_well"), "'crystal.per_well' must add up to crystal.ions");
    }
    k.init = s.get<std::string>("init", k.init);
    if (k.init != "string_seed" && k.init != "random_restart") {
      fail(s.raw("init"), "'crystal.init' must be string_seed or random_restart");
    }
    k.restarts = s.at_least("restarts", k.restarts, 1);
    k.seed = s.at_least("seed", k.seed, 0);
    k.force_tolerance_n = s.positive("force_tolerance_n", k.force_tolerance_n);
    k.stagger = s.get<double>("stagger", k.stagger);
    s.finish();
  }
  {
    Section s = top.child("modes_sweep");
    auto& m = c.modes_sweep;
    if (s.has("r")) m.r = range(s.child("r"));
    if (s.has("separations_um")) {
      m.separations_um = Section::convert<std::vector<double>>(s.raw("separations_um"), "modes_sweep.separations_um");
      for (double d : m.separations_um) {
        if (!(d > 0.0)) fail(s.raw("separations_um"), "'modes_sweep.separations_um' entries must be positive");
      }
    }
    m.f_z0_hz = s.positive("f_z0_hz", m.f_z0_hz);
    m.ions_per_string = s.at_least("ions_per_string", m.ions_per_string, 1);
    s.finish();
  }
  {
    Section s = top.child("corrugation");
    auto& k = c.corrugation;
    k.target_string = s.at_least("target_string", k.target_string, 0);
    if (k.target_string > 1) fail(s.raw("target_string"), "'corrugation.target_string' must be 0 or 1");
    k.samples = s.at_least("samples", k.samples, 3);
    k.ions_per_string = s.at_least("ions_per_string", k.ions_per_string, 2);
    if (s.has("sweep")) k.sweep = range(s.child("sweep"));
    s.finish();
  }
  {
    Section s = top.child("slide");
    auto& k = c.slide;
    k.moving_well = s.at_least("moving_well", k.moving_well, 0);
    if (k.moving_well > 1) fail(s.raw("moving_well"), "'slide.moving_well' must be 0 or 1");
    k.ions_per_string = s.at_least("ions_per_string", k.ions_per_string, 1);
    if (s.has("offset_um")) {
      k.offset_um = range(s.child("offset_um"));
    }
    k.slip_fraction = s.positive("slip_fraction", k.slip_fraction);
    k.hysteresis = s.get<bool>("hysteresis", k.hysteresis);
    s.finish();
  }
  {
    Section s = top.child("dc_solve");
    auto& k = c.dc_solve;
    for (auto& e : items(s, "electrodes")) {
      RectElectrode r;
      r.label = e.get<std::string>("label", "e" + std::to_string(k.electrodes.size()));
      r.x_min = units::um * e.finite("x_min_um", 0.0);
      r.x_max = units::um * e.finite("x_max_um", 0.0);
      r.z_min = units::um * e.finite("z_min_um", 0.0);
      r.z_max = units::um * e.finite("z_max_um", 0.0);
      if (!(r.x_max > r.x_min) || !(r.z_max > r.z_min)) fail(e.node(), "electrode '" + r.label + "' has an empty extent");
      e.finish();
      k.electrodes.push_back(r);
    }
    for (auto& n : items(s, "nulls")) {
      DcNull d;
      d.point_um = point_um(n);
      d.gradient_v_per_m = vec3(n, "gradient_v_per_m", Vec3::Zero());
      n.finish();
      k.nulls.push_back(d);
    }
    for (auto& n : items(s, "curvatures")) {
      DcCurvature d;
      d.point_um = point_um(n);
      d.direction = vec3(n, "direction", Vec3::UnitZ());
      if (!(d.direction.norm() > 0.0)) fail(n.raw("direction"), "curvature direction must be nonzero");
      d.value_v_per_m2 = n.finite("value_v_per_m2", 0.0);
      n.finish();
      k.curvatures.push_back(d);
    }
    for (auto& n : items(s, "potentials")) {
      DcPotential d;
      d.point_um = point_um(n);
      d.value_v = n.finite("value_v", 0.0);
      n.finish();
      k.potentials.push_back(d);
    }
    if (s.has("stray_field_v_per_m")) k.stray_field_v_per_m = vec3(s, "stray_field_v_per_m", Vec3::Zero());
    s.finish();
  }
  top.finish();

  // Whole-model checks that span sections.
  try {
    base_model(c).validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("invalid model: ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config(buffer.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what(), e.line(), e.column());
  }
}

namespace {

nlohmann::json range_json(const Range& r) { return {{"start", r.start}, {"stop", r.stop}, {"step", r.step}}; }
nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

}  // namespace

nlohmann::json to_json(const RunConfig& c) {
  using nlohmann::json;
  json j;
  json& g = j["geometry"];
  g = {{"preset", c.geometry.preset},
       {"scale", c.geometry.scale},
       {"gap_um", c.geometry.gap_um},
       {"gap_model", std::string(to_string(c.geometry.gap_model))}};
  if (!c.geometry.strips.empty()) {
    g["strips"] = json::array();
    for (const auto& s : c.geometry.strips) {
      g["strips"].push_back({{"x_min_um", units::to_um(s.x_min)},
                             {"x_max_um", units::to_um(s.x_max)},
                             {"role", std::string(to_string(s.role))}});
    }
  }
  j["drive"] = {{"v_rf", c.drive.v_rf}, {"r", c.drive.r}, {"f_rf_mhz", c.drive.f_rf_mhz}};
  if (c.drive.separation_um) j["drive"]["separation_um"] = *c.drive.separation_um;
  j["species"] = {{"mass_amu", c.species.mass_amu}, {"charge_e", c.species.charge_e}};
  j["wells"] = {{"at_nodes", c.wells.at_nodes},
                {"f_z_hz", c.wells.f_z_hz},
                {"alpha", c.wells.alpha},
                {"beta", c.wells.beta}};
  if (!c.wells.list.empty()) {
    j["wells"]["list"] = json::array();
    for (const auto& w : c.wells.list) {
      j["wells"]["list"].push_back({{"f_z_hz", w.f_z_hz},
                                    {"x_um", w.x_um},
                                    {"y_um", w.y_um},
                                    {"z_um", w.z_um},
                                    {"alpha", w.alpha},
                                    {"beta", w.beta}});
    }
  }
  const auto& p = c.potential_grid;
  j["potential_grid"] = {{"x_min_um", p.x_min_um}, {"x_max_um", p.x_max_um}, {"y_min_um", p.y_min_um},
                         {"y_max_um", p.y_max_um}, {"nx", p.nx},             {"ny", p.ny},
                         {"clip_ev", p.clip_ev}};
  j["nodes"] = json::object();
  if (c.nodes.sweep) j["nodes"]["sweep"] = range_json(*c.nodes.sweep);
  j["critical"] = {{"tolerance", c.critical.tolerance},
                   {"epsilon", c.critical.epsilon},
                   {"reference_r", c.critical.reference_r}};
  const auto& k = c.crystal;
  j["crystal"] = {{"ions", k.ions},       {"init", k.init},
                  {"restarts", k.restarts}, {"seed", k.seed},
                  {"force_tolerance_n", k.force_tolerance_n}, {"stagger", k.stagger}};
  if (!k.per_well.empty()) j["crystal"]["per_well"] = k.per_well;
  j["modes_sweep"] = {{"f_z0_hz", c.modes_sweep.f_z0_hz}, {"ions_per_string", c.modes_sweep.ions_per_string}};
  if (c.modes_sweep.r) j["modes_sweep"]["r"] = range_json(*c.modes_sweep.r);
  if (!c.modes_sweep.separations_um.empty()) j["modes_sweep"]["separations_um"] = c.modes_sweep.separations_um;
  j["corrugation"] = {{"target_string", c.corrugation.target_string},
                      {"samples", c.corrugation.samples},
                      {"ions_per_string", c.corrugation.ions_per_string}};
  if (c.corrugation.sweep) j["corrugation"]["sweep"] = range_json(*c.corrugation.sweep);
  j["slide"] = {{"moving_well", c.slide.moving_well},
                {"ions_per_string", c.slide.ions_per_string},
                {"offset_um", range_json(c.slide.offset_um)},
                {"slip_fraction", c.slide.slip_fraction},
                {"hysteresis", c.slide.hysteresis}};
  json& dc = j["dc_solve"];
  dc = json::object();
  if (!c.dc_solve.electrodes.empty()) {
    dc["electrodes"] = json::array();
    for (const auto& e : c.dc_solve.electrodes) {
      dc["electrodes"].push_back({{"label", e.label},
                                  {"x_min_um", units::to_um(e.x_min)},
                                  {"x_max_um", units::to_um(e.x_max)},
                                  {"z_min_um", units::to_um(e.z_min)},
                                  {"z_max_um", units::to_um(e.z_max)}});
    }
  }
  const auto point = [](const Vec3& p_um) { return json{{"x_um", p_um.x()}, {"y_um", p_um.y()}, {"z_um", p_um.z()}}; };
  for (const auto& n : c.dc_solve.nulls) {
    json e = point(n.point_um);
    e["gradient_v_per_m"] = vec_json(n.gradient_v_per_m);
    dc["nulls"].push_back(e);
  }
  for (const auto& n : c.dc_solve.curvatures) {
    json e = point(n.point_um);
    e["direction"] = vec_json(n.direction);
    e["value_v_per_m2"] = n.value_v_per_m2;
    dc["curvatures"].push_back(e);
  }
  for (const auto& n : c.dc_solve.potentials) {
    json e = point(n.point_um);
    e["value_v"] = n.value_v;
    dc["potentials"].push_back(e);
  }
  if (c.dc_solve.stray_field_v_per_m) dc["stray_field_v_per_m"] = vec_json(*c.dc_solve.stray_field_v_per_m);
  return j;
}

TrapModel base_model(const RunConfig& c) {
  TrapModel m;
  if (c.geometry.preset == "canonical") {
    m.geometry = canonical_geometry();
    m.geometry.gap = units::um * c.geometry.gap_um;
  } else {
    m.geometry.strips = c.geometry.strips;
    m.geometry.gap = units::um * c.geometry.gap_um;
  }
  m.geometry.gap_model = c.geometry.gap_model;
  if (c.geometry.scale != 1.0) m.geometry = m.geometry.scaled(c.geometry.scale);
  m.drive.v_rf = c.drive.v_rf;
  m.drive.ratio_r = c.drive.r;
  m.drive.omega_rf = units::angular(c.drive.f_rf_mhz * 1e6);
  m.species.mass = c.species.mass_amu * constants::atomic_mass_unit;
  m.species.charge = c.species.charge_e * constants::elementary_charge;
  return m;
}

SolveOptions solve_options(const RunConfig& c, unsigned threads) {
  SolveOptions o;
  o.per_well = c.crystal.per_well;
  o.init = c.crystal.init == "random_restart"
               ? InitStrategy::random_restart(c.crystal.restarts, static_cast<std::uint64_t>(c.crystal.seed))
               : InitStrategy::string_seed();
  o.force_tolerance = c.crystal.force_tolerance_n;
  o.stagger = c.crystal.stagger;
  o.threads = threads;
  return o;
}

}  // namespace trapscape::cli
