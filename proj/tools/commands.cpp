#include "commands.hpp"

#include <cmath>
#include <iostream>
#include <limits>

namespace trapscape::cli {

namespace {

using nlohmann::json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double mev(double joules) { return joules / units::mev; }
double mev(const std::optional<double>& joules) { return joules ? *joules / units::mev : kNan; }
double khz(double omega) { return units::hertz(omega) / 1e3; }

struct Run {
  const Context& ctx;
  json resolved = json::object();

  OutputSet outputs() const {
    json header = {{"tool", "trapscape"},
                   {"version", kVersion},
                   {"command", ctx.command},
                   {"config", to_json(ctx.config)}};
    if (!resolved.empty()) header["resolved"] = resolved;
    return OutputSet(ctx.out, header, ctx.format);
  }

  // Drive with R solved from drive.separation_um when that is given.
  TrapModel model() {
    TrapModel m = base_model(ctx.config);
    if (ctx.config.drive.separation_um) {
      m.drive.ratio_r = ratio_for_separation(m, units::um * *ctx.config.drive.separation_um);
      resolved["r"] = m.drive.ratio_r;
    }
    return m;
  }

  std::vector<AxialConfinement> wells(const TrapModel& m) const {
    const auto& w = ctx.config.wells;
    if (!w.at_nodes) {
      std::vector<AxialConfinement> out;
      for (const auto& s : w.list) {
        out.push_back({units::angular(s.f_z_hz), units::um * s.z_um, Vec2(units::um * s.x_um, units::um * s.y_um),
                       s.alpha, s.beta});
      }
      return out;
    }
    const NodeSet nodes = find_nodes(m);
    if (nodes.nodes.empty()) throw NumericalError("no RF node in the search window to place a well on");
    return wells_at_nodes(nodes, units::angular(w.f_z_hz), 0.0, w.alpha, w.beta);
  }

  EtaSweepOptions eta_options(int ions_per_string) const {
    EtaSweepOptions o;
    o.omega_z = units::angular(ctx.config.wells.f_z_hz);
    o.alpha = ctx.config.wells.alpha;
    o.beta = ctx.config.wells.beta;
    o.ions_per_string = ions_per_string;
    o.target_string = ctx.config.corrugation.target_string;
    o.solve = solve_options(ctx.config, 1);
    o.threads = ctx.threads;
    return o;
  }
};

int finish(const OutputSet& out) {
  out.commit();
  for (const auto& f : out.files()) std::cout << "wrote " << f << "\n";
  return 0;
}

json nodes_json(const TrapModel& m, const NodeSet& nodes) {
  const Pseudopotential pseudo(m);
  json j;
  j["topology"] = std::string(to_string(nodes.topology));
  j["nodes"] = json::array();
  for (const auto& n : nodes.nodes) {
    j["nodes"].push_back({{"x_um", units::to_um(n.x())}, {"y_um", units::to_um(n.y())}, {"q", pseudo.stability_q(n)}});
  }
  if (nodes.topology == NodeTopology::horizontal_pair) j["separation_um"] = units::to_um(node_separation(nodes));
  if (nodes.barrier) {
    j["barrier_meV"] = mev(*nodes.barrier);
    j["barrier_K"] = units::to_kelvin(*nodes.barrier);
  }
  if (nodes.saddle) j["saddle"] = {{"x_um", units::to_um(nodes.saddle->x())}, {"y_um", units::to_um(nodes.saddle->y())}};
  return j;
}

int potential_grid(Run& run) {
  const TrapModel m = run.model();
  const auto& g = run.ctx.config.potential_grid;
  GridSpec spec;
  spec.x_min = units::um * g.x_min_um;
  spec.x_max = units::um * g.x_max_um;
  spec.y_min = units::um * g.y_min_um;
  spec.y_max = units::um * g.y_max_um;
  spec.n_x = static_cast<std::size_t>(g.nx);
  spec.n_y = static_cast<std::size_t>(g.ny);
  spec.clip_threshold = g.clip_ev * units::ev;
  const PotentialGrid grid = pseudopotential_grid(m, spec, run.ctx.threads);

  Table t{{"x_um", "y_um", "phi_meV", "clipped"}, {}};
  for (std::size_t iy = 0; iy < grid.n_y(); ++iy) {
    for (std::size_t ix = 0; ix < grid.n_x(); ++ix) {
      t.add({units::to_um(grid.x[ix]), units::to_um(grid.y[iy]), mev(grid.at(ix, iy)),
             std::int64_t{grid.clipped[iy * grid.n_x() + ix] ? 1 : 0}});
    }
  }
  json minima = json::array();
  for (const auto& [ix, iy] : grid.local_minima()) {
    minima.push_back({{"x_um", units::to_um(grid.x[ix])}, {"y_um", units::to_um(grid.y[iy])}, {"phi_meV", mev(grid.at(ix, iy))}});
  }
  OutputSet out = run.outputs();
  out.table("potential_grid", t);
  out.report("potential_grid_minima", {{"minima", minima}});
  std::cout << "grid minima: " << minima.size() << "\n";
  return finish(out);
}

int nodes(Run& run) {
  const TrapModel m = run.model();
  const auto sweep = run.ctx.sweep ? run.ctx.sweep : run.ctx.config.nodes.sweep;
  OutputSet out = [&] {
    if (run.ctx.sweep) run.resolved["sweep"] = {{"start", sweep->start}, {"stop", sweep->stop}, {"step", sweep->step}};
    return run.outputs();
  }();
  if (!sweep) {
    const NodeSet ns = find_nodes(m);
    const json j = nodes_json(m, ns);
    std::cout << "topology: " << j["topology"].get<std::string>() << "\n";
    out.report("nodes", j);
    return finish(out);
  }
  const auto r = sweep->values();
  const auto points = separation_sweep(m, r, {}, run.ctx.threads);
  Table t{{"r", "topology", "separation_um", "barrier_meV", "x1_um", "y1_um", "x2_um", "y2_um", "error"}, {}};
  for (const auto& p : points) {
    const auto node = [&](std::size_t i, int axis) {
      return i < p.nodes.size() ? units::to_um(p.nodes[i][axis]) : kNan;
    };
    t.add({p.ratio, std::string(to_string(p.topology)), p.separation ? units::to_um(*p.separation) : kNan,
           mev(p.barrier), node(0, 0), node(0, 1), node(1, 0), node(1, 1), p.error});
  }
  out.table("nodes_sweep", t);
  return finish(out);
}

int critical(Run& run) {
  const TrapModel m = base_model(run.ctx.config);
  const auto& c = run.ctx.config.critical;
  const CriticalRatio cr = critical_ratio(m, c.tolerance);
  const double dr = ratio_sensitivity(c.reference_r, c.epsilon);
  std::cout << "R* in [" << format_number(cr.r_lo) << ", " << format_number(cr.r_hi) << "]\n";
  OutputSet out = run.outputs();
  out.report("critical", {{"r_lo", cr.r_lo},
                          {"r_hi", cr.r_hi},
                          {"r_star", cr.mid()},
                          {"width", cr.width()},
                          {"reference_r", c.reference_r},
                          {"epsilon", c.epsilon},
                          {"delta_r", dr}});
  return finish(out);
}

int crystal(Run& run) {
  TrapModel m = run.model();
  m.axial_wells = run.wells(m);
  const auto& c = run.ctx.config.crystal;
  const CrystalState s = solve_equilibrium(m, static_cast<std::size_t>(c.ions), solve_options(run.ctx.config, run.ctx.threads));

  Table ions{{"ion", "string", "x_um", "y_um", "z_um"}, {}};
  for (std::size_t i = 0; i < s.size(); ++i) {
    ions.add({static_cast<std::int64_t>(i), std::int64_t{s.string_labels[i]}, units::to_um(s.positions[i].x()),
              units::to_um(s.positions[i].y()), units::to_um(s.positions[i].z())});
  }
  json summary = {{"energy_meV", mev(s.energy)},
                  {"grad_norm_N", s.grad_norm},
                  {"converged", s.converged},
                  {"saddle", s.saddle},
                  {"evaluations", s.evaluations},
                  {"wells", json::array()}};
  for (const auto& w : m.axial_wells) {
    summary["wells"].push_back({{"f_z_hz", units::hertz(w.omega_z)},
                                {"x_um", units::to_um(w.center_xy.x())},
                                {"y_um", units::to_um(w.center_xy.y())},
                                {"z_um", units::to_um(w.center_z)}});
  }
  OutputSet out = run.outputs();
  out.table("crystal", ions);
  if (!s.saddle) {
    const ModeSpectrum spec = normal_modes(m, s);
    Table modes{{"mode", "frequency_khz", "axis", "pattern", "phase"}, {}};
    for (std::size_t k = 0; k < spec.size(); ++k) {
      const auto& l = spec.labels[k];
      modes.add({static_cast<std::int64_t>(k), khz(spec.frequencies[static_cast<Eigen::Index>(k)]),
                 std::string(to_string(l.axis)), std::string(to_string(l.pattern)), std::string(to_string(l.phase))});
    }
    out.table("crystal_modes", modes);
  }
  out.report("crystal_summary", summary);
  return finish(out);
}

int modes_sweep(Run& run) {
  const TrapModel m = base_model(run.ctx.config);
  const auto& c = run.ctx.config.modes_sweep;
  std::vector<double> r;
  if (c.r) r = c.r->values();
  for (double d : c.separations_um) r.push_back(ratio_for_separation(m, units::um * d));
  if (r.empty()) r = Range{0.862, 1.5, 0.022}.values();
  run.resolved["r_values"] = r;

  DegeneracyOptions o;
  o.omega_z0 = units::angular(c.f_z0_hz);
  o.ions_per_string = c.ions_per_string;
  o.alpha = run.ctx.config.wells.alpha;
  o.beta = run.ctx.config.wells.beta;
  o.solve = solve_options(run.ctx.config, 1);
  o.threads = run.ctx.threads;
  const auto points = degeneracy_sweep(m, r, o);

  Table t{{"r", "d_um", "com_in", "com_out", "stretch_in", "stretch_out", "com_splitting", "stretch_splitting", "error"}, {}};
  for (const auto& p : points) {
    const auto& q = p.normalized;
    if (p.ok()) {
      t.add({p.ratio, units::to_um(p.separation), q.com_in, q.com_out, q.stretch_in, q.stretch_out, q.com_splitting(),
             q.stretch_splitting(), std::string()});
    } else {
      t.add({p.ratio, p.separation > 0 ? units::to_um(p.separation) : kNan, kNan, kNan, kNan, kNan, kNan, kNan, p.error});
    }
  }
  OutputSet out = run.outputs();
  out.table("modes_sweep", t);
  return finish(out);
}

int corrugation(Run& run) {
  const TrapModel base = run.model();
  const auto& c = run.ctx.config.corrugation;
  const EtaSweepOptions o = run.eta_options(c.ions_per_string);
  const PairedCrystal p = paired_crystal(base, base.drive.ratio_r, o);
  const CorrugationReport rep = corrugation_parameter(p.model, p.state, c.target_string);
  const CorrugationProfile prof = corrugation_potential(p.model, p.state, c.target_string, static_cast<std::size_t>(c.samples));

  Table t{{"z_um", "U_meV", "U_coulomb_meV", "U_trap_meV"}, {}};
  for (std::size_t i = 0; i < prof.z.size(); ++i) {
    t.add({units::to_um(prof.z[i]), mev(prof.coulomb[i] + prof.trap[i]), mev(prof.coulomb[i]), mev(prof.trap[i])});
  }
  json report = {{"omega_int_khz", khz(rep.omega_int)},
                 {"omega_zero_khz", khz(rep.omega_zero)},
                 {"omega_zero_coulomb_only_khz",
                  khz(omega_zero(p.model, p.state, c.target_string, OmegaZeroVariant::coulomb_only))},
                 {"eta", rep.eta},
                 {"barrier_meV", mev(rep.barrier)},
                 {"barrier_K", units::to_kelvin(rep.barrier)},
                 {"node_separation_um", units::to_um(rep.node_separation)},
                 {"spacing_um", units::to_um(prof.spacing)},
                 {"r", p.model.drive.ratio_r}};
  std::cout << "eta = " << format_number(rep.eta) << "\n";

  OutputSet out = run.outputs();
  out.report("corrugation", report);
  out.table("corrugation_profile", t);
  if (c.sweep) {
    const auto r = c.sweep->values();
    const auto points = eta_sweep(base_model(run.ctx.config), r, o);
    Table s{{"r", "d_um", "omega_int_khz", "omega_zero_khz", "eta", "barrier_meV", "error"}, {}};
    for (const auto& e : points) {
      if (e.ok()) {
        s.add({e.ratio, units::to_um(e.separation), khz(e.omega_int), khz(e.omega_zero), e.eta, mev(e.barrier), std::string()});
      } else {
        s.add({e.ratio, kNan, kNan, kNan, kNan, kNan, e.error});
      }
    }
    out.table("eta_sweep", s);
    const EtaRange range = eta_range(points);
    out.report("eta_sweep_summary", {{"eta_min", range.min}, {"eta_max", range.max}, {"valid_points", range.valid}});
  }
  return finish(out);
}

Table slide_table(const SlideTrajectory& t) {
  Table out{{"offset_um", "max_disp_um", "slip_flag", "energy_meV"}, {}};
  for (const auto& s : t.steps) {
    out.add({units::to_um(s.offset), units::to_um(s.max_displacement), std::int64_t{s.slip ? 1 : 0}, mev(s.energy)});
  }
  return out;
}

int slide(Run& run) {
  const TrapModel base = run.model();
  const auto& c = run.ctx.config.slide;
  const PairedCrystal p = paired_crystal(base, base.drive.ratio_r, run.eta_options(c.ions_per_string));
  std::vector<double> offsets;
  for (double v : c.offset_um.values()) offsets.push_back(units::um * v);
  SlideOptions so;
  so.moving_well = static_cast<std::size_t>(c.moving_well);
  so.slip_fraction = c.slip_fraction;
  so.solve = solve_options(run.ctx.config, 1);

  OutputSet out = run.outputs();
  json summary;
  bool complete = true;
  if (c.hysteresis) {
    const Hysteresis h = slide_hysteresis(p.model, p.state, offsets, so);
    out.table("slide", slide_table(h.forward));
    out.table("slide_backward", slide_table(h.backward));
    summary = {{"spacing_um", units::to_um(h.forward.spacing)},
               {"slips_forward", h.forward.slip_count()},
               {"slips_backward", h.backward.slip_count()},
               {"max_position_difference_nm", std::isfinite(h.max_position_difference)
                                                   ? json(h.max_position_difference * 1e9)
                                                   : json(nullptr)},
               {"error", h.forward.complete() ? h.backward.error : h.forward.error}};
    complete = h.forward.complete() && h.backward.complete();
  } else {
    const SlideTrajectory t = quasi_static_slide(p.model, p.state, offsets, so);
    out.table("slide", slide_table(t));
    summary = {{"spacing_um", units::to_um(t.spacing)}, {"slips_forward", t.slip_count()}, {"error", t.error}};
    complete = t.complete();
  }
  summary["complete"] = complete;
  out.report("slide_summary", summary);
  finish(out);
  if (!complete) {
    std::cerr << json{{"error", {{"kind", "numerical"}, {"message", summary["error"]}, {"exit_code", 4}}}}.dump() << "\n";
    return 4;
  }
  return 0;
}

int dc_solve(Run& run) {
  const auto& c = run.ctx.config.dc_solve;
  if (c.electrodes.empty()) throw ConfigError("dc-solve needs 'dc_solve.electrodes'");
  const DcBasis basis(c.electrodes);
  DcConstraintSet cs;
  cs.stray_field = c.stray_field_v_per_m;
  std::vector<Vec3> points;
  for (const auto& n : c.nulls) {
    cs.add_null(units::um * n.point_um, n.gradient_v_per_m, "null");
    points.push_back(units::um * n.point_um);
  }
  for (const auto& k : c.curvatures) cs.add_curvature(units::um * k.point_um, k.direction, k.value_v_per_m2, "curvature");
  for (const auto& k : c.potentials) cs.add_potential(units::um * k.point_um, k.value_v, "potential");
  if (cs.size() == 0) throw ConfigError("dc-solve needs at least one constraint (nulls, curvatures or potentials)");

  const DcSolution s = solve_dc_voltages(basis, cs);
  json j;
  j["method"] = s.method;
  j["rank"] = s.rank;
  j["feasible"] = s.feasible;
  j["voltages"] = json::array();
  for (std::size_t k = 0; k < basis.size(); ++k) {
    j["voltages"].push_back({{"label", basis.electrodes()[k].label}, {"volts", s.voltages[k]}});
  }
  j["residuals"] = json::array();
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const auto& row = cs.rows[i];
    j["residuals"].push_back({{"row", i},
                              {"quantity", std::string(to_string(row.quantity))},
                              {"point_um", {units::to_um(row.point.x()), units::to_um(row.point.y()), units::to_um(row.point.z())}},
                              {"residual", s.residuals[i]}});
  }
  j["infeasible_rows"] = s.infeasible;
  j["check"] = json::array();
  for (const auto& r : dc_field_check(basis, s.voltages, points)) {
    j["check"].push_back({{"point_um", {units::to_um(r.point.x()), units::to_um(r.point.y()), units::to_um(r.point.z())}},
                          {"potential_v", r.potential},
                          {"gradient_v_per_m", {r.gradient.x(), r.gradient.y(), r.gradient.z()}},
                          {"d2_dz2_v_per_m2", r.hessian(2, 2)}});
  }
  OutputSet out = run.outputs();
  out.report("dc_solve", j);
  finish(out);
  if (!s.feasible) {
    std::cerr << json{{"error", {{"kind", "infeasible"}, {"message", "DC constraints cannot all be met"},
                                 {"rows", s.infeasible}, {"exit_code", 4}}}}.dump()
              << "\n";
    return 4;
  }
  return 0;
}

int repro(const Context& ctx) {
  struct Item {
    std::string dir;
    std::string command;
    RunConfig config;
  };
  std::vector<Item> items;
  RunConfig base;
  base.species = ctx.config.species;

  RunConfig single = base;
  single.drive.r = 0.0;
  items.push_back({"potential_single_well", "potential-grid", single});
  RunConfig dbl = base;
  dbl.drive.r = 0.9;
  items.push_back({"potential_double_well", "potential-grid", dbl});
  RunConfig bif = base;
  bif.nodes.sweep = Range{0.8, 1.0, 0.005};
  items.push_back({"bifurcation", "nodes", bif});
  items.push_back({"critical_ratio", "critical", base});
  RunConfig two = dbl;
  two.wells.f_z_hz = 0.19e6;
  two.drive.r = 0.0;
  items.push_back({"two_ion_crystal", "crystal", two});
  RunConfig modes = base;
  modes.modes_sweep.r = Range{0.862, 1.5, 0.022};
  items.push_back({"mode_degeneracy", "modes-sweep", modes});
  RunConfig corr = base;
  corr.drive.v_rf = 120.0;
  corr.drive.separation_um = 30.0;
  corr.wells.f_z_hz = 15e3;
  corr.corrugation.sweep = Range{0.862, 0.95, 0.004};
  items.push_back({"corrugation", "corrugation", corr});

  int worst = 0;
  for (const auto& it : items) {
    Context sub = ctx;
    sub.command = it.command;
    sub.config = it.config;
    sub.out = ctx.out / it.dir;
    sub.sweep.reset();
    std::cout << "[" << it.dir << "]\n";
    worst = std::max(worst, run_command(sub));
  }
  return worst;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"potential-grid", "nodes",      "critical", "crystal", "modes-sweep",
                                                 "corrugation",    "slide",      "dc-solve", "repro"};
  return names;
}

int run_command(const Context& ctx) {
  Run run{ctx};
  const std::string& c = ctx.command;
  if (c == "potential-grid") return potential_grid(run);
  if (c == "nodes") return nodes(run);
  if (c == "critical") return critical(run);
  if (c == "crystal") return crystal(run);
  if (c == "modes-sweep") return modes_sweep(run);
  if (c == "corrugation") return corrugation(run);
  if (c == "slide") return slide(run);
  if (c == "dc-solve") return dc_solve(run);
  if (c == "repro") return repro(ctx);
  throw std::invalid_argument("unknown command '" + c + "'");
}

}  // namespace trapscape::cli
