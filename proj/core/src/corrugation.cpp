#include "trapscape/corrugation.hpp"

#include "trapscape/errors.hpp"
#include "trapscape/log.hpp"
#include "trapscape/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

namespace trapscape {

namespace {

void check_target(const CrystalState& state, int target) {
  if (state.string_count() < 2) throw StateError("corrugation analysis needs two labelled strings");
  if (target < 0 || target >= state.string_count()) {
    std::ostringstream msg;
    msg << "target string " << target << " does not exist (strings: " << state.string_count() << ")";
    throw DomainError(msg.str());
  }
}

double string_spacing(const TrapModel& model, const CrystalState& state, int target) {
  const auto members = state.string_members(target);
  if (members.size() >= 2) {
    return (state.positions[members.back()].z() - state.positions[members.front()].z()) /
           static_cast<double>(members.size() - 1);
  }
  return chain_length_scale(model.species, model.axial_wells.at(static_cast<std::size_t>(target)).omega_z);
}

std::pair<double, double> profile_window(const TrapModel& model, const CrystalState& state, int target,
                                         double spacing) {
  const auto members = state.string_members(target);
  if (members.empty()) {
    const double cz = model.axial_wells.at(static_cast<std::size_t>(target)).center_z;
    return {cz - spacing, cz + spacing};
  }
  return {state.positions[members.front()].z() - spacing, state.positions[members.back()].z() + spacing};
}

double coulomb_from_others(const CrystalState& state, int target, const Vec3& p, double k) {
  double u = 0.0;
  for (std::size_t j = 0; j < state.size(); ++j) {
    if (state.string_labels[j] == target) continue;
    u += k / (p - state.positions[j]).norm();
  }
  return u;
}

template <typename Fn>
double golden_minimum(Fn&& f, double a, double b) {
  const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-14 * (std::abs(a) + std::abs(b) + 1e-12); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

std::vector<double> CorrugationProfile::total() const {
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = coulomb[i] + trap[i];
  return out;
}

CorrugationProfile corrugation_potential(const TrapModel& model, const CrystalState& state, int target,
                                         std::size_t n_samples) {
  check_target(state, target);
  if (n_samples < 3) throw DomainError("corrugation profile needs at least 3 samples");
  const TrapPotential trap(model);
  const auto& well = trap.well(static_cast<std::size_t>(target));
  const double k = CrystalEnergy(model).coulomb_constant();

  CorrugationProfile out;
  out.target_string = target;
  out.spacing = string_spacing(model, state, target);
  const auto [lo, hi] = profile_window(model, state, target, out.spacing);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double z = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_samples - 1);
    const Vec3 p(well.center_xy.x(), well.center_xy.y(), z);
    out.z.push_back(z);
    out.coulomb.push_back(coulomb_from_others(state, target, p, k));
    out.trap.push_back(trap.axial_value(p, static_cast<std::size_t>(target)));
  }
  return out;
}

std::function<double(double)> corrugation_function(const TrapModel& model, const CrystalState& state, int target) {
  check_target(state, target);
  auto trap = std::make_shared<TrapPotential>(model);
  const auto& well = trap->well(static_cast<std::size_t>(target));
  const double k = CrystalEnergy(model).coulomb_constant();
  const Vec2 line = well.center_xy;
  return [trap, state, target, k, line](double z) {
    const Vec3 p(line.x(), line.y(), z);
    return coulomb_from_others(state, target, p, k) + trap->axial_value(p, static_cast<std::size_t>(target));
  };
}

double central_well_frequency(const std::function<double(double)>& u, double mass, double z_lo, double z_hi,
                              double z_center, double step, std::size_t n_samples) {
  if (!(z_hi > z_lo) || n_samples < 3) throw DomainError("invalid sampling window");
  if (!(step > 0.0) || !(mass > 0.0)) throw DomainError("step and mass must be positive");
  std::vector<double> z(n_samples);
  std::vector<double> v(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    z[i] = z_lo + (z_hi - z_lo) * static_cast<double>(i) / static_cast<double>(n_samples - 1);
    v[i] = u(z[i]);
  }
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < n_samples; ++i) {
    if (!(v[i] < v[i - 1] && v[i] <= v[i + 1])) continue;
    const double dist = std::abs(z[i] - z_center);
    if (dist < best_dist) {  // strict: ties keep the lower z
      best = i;
      best_dist = dist;
    }
  }
  if (best == 0) throw NumericalError("corrugation potential has no central local minimum (corrugation washed out)");
  const double z0 = golden_minimum(u, z[best - 1], z[best + 1]);
  const double curvature = (u(z0 + step) - 2.0 * u(z0) + u(z0 - step)) / (step * step);
  if (!(curvature > 0.0)) throw NumericalError("non-positive curvature at the central minimum");
  return std::sqrt(curvature / mass);
}

double omega_int(const TrapModel& model, const CrystalState& state, int target) {
  check_target(state, target);
  const double spacing = string_spacing(model, state, target);
  const auto [lo, hi] = profile_window(model, state, target, spacing);
  const double cz = model.axial_wells.at(static_cast<std::size_t>(target)).center_z;
  return central_well_frequency(corrugation_function(model, state, target), model.species.mass, lo, hi, cz,
                                spacing / 100.0);
}

std::size_t center_ion(const TrapModel& model, const CrystalState& state, int target) {
  const auto members = state.string_members(target);
  if (members.size() < 2) throw StateError("the target string needs at least two ions");
  if (members.size() % 2 == 1) return members[members.size() / 2];
  const double cz = model.axial_wells.at(static_cast<std::size_t>(target)).center_z;
  const std::size_t lower = members[members.size() / 2 - 1];
  const std::size_t upper = members[members.size() / 2];
  const double dl = std::abs(state.positions[lower].z() - cz);
  const double du = std::abs(state.positions[upper].z() - cz);
  return du < dl ? upper : lower;
}

double omega_zero(const TrapModel& model, const CrystalState& state, int target, OmegaZeroVariant variant) {
  if (target < 0 || target >= state.string_count()) throw DomainError("target string does not exist");
  const std::size_t c = center_ion(model, state, target);
  const double k = CrystalEnergy(model).coulomb_constant();
  const Vec3& p = state.positions[c];
  double curvature = 0.0;
  for (std::size_t j = 0; j < state.size(); ++j) {
    if (j == c || state.string_labels[j] != target) continue;
    const Vec3 d = p - state.positions[j];
    const double r = d.norm();
    curvature += k * (3.0 * d.z() * d.z() / std::pow(r, 5) - 1.0 / std::pow(r, 3));
  }
  if (variant == OmegaZeroVariant::with_trap) {
    curvature += TrapPotential(model).hessian(p, static_cast<std::size_t>(target))(2, 2);
  }
  if (!(curvature > 0.0)) throw NumericalError("non-positive axial curvature at the centre ion");
  return std::sqrt(curvature / model.species.mass);
}

CorrugationReport corrugation_parameter(const TrapModel& model, const CrystalState& state, int target,
                                        const NodeSearchOptions& node_options) {
  CorrugationReport r;
  r.profile = corrugation_potential(model, state, target);
  r.omega_int = omega_int(model, state, target);
  r.omega_zero = omega_zero(model, state, target);
  const double ratio = r.omega_int / r.omega_zero;
  r.eta = ratio * ratio;
  const NodeSet nodes = find_nodes(model, node_options);
  r.node_separation = node_separation(nodes);
  r.barrier = nodes.barrier.value_or(std::numeric_limits<double>::quiet_NaN());
  return r;
}

PairedCrystal paired_crystal(const TrapModel& model_template, double ratio, const EtaSweepOptions& o) {
  PairedCrystal p{model_template, {}, {}};
  p.model.drive.ratio_r = ratio;
  p.model.drive.validate();
  p.nodes = find_nodes(p.model, o.nodes);
  node_separation(p.nodes);  // throws unless the pair is horizontal
  p.model.axial_wells = wells_at_nodes(p.nodes, o.omega_z, 0.0, o.alpha, o.beta);
  p.state = solve_equilibrium(p.model, static_cast<std::size_t>(2 * o.ions_per_string), o.solve);
  return p;
}

EtaPoint eta_point(const TrapModel& model_template, double ratio, const EtaSweepOptions& o) {
  EtaPoint pt;
  pt.ratio = ratio;
  try {
    const PairedCrystal p = paired_crystal(model_template, ratio, o);
    if (p.state.saddle) throw SaddleError("equilibrium is a saddle point");
    pt.separation = node_separation(p.nodes);
    pt.barrier = p.nodes.barrier.value_or(std::numeric_limits<double>::quiet_NaN());
    pt.omega_int = omega_int(p.model, p.state, o.target_string);
    pt.omega_zero = omega_zero(p.model, p.state, o.target_string);
    const double q = pt.omega_int / pt.omega_zero;
    pt.eta = q * q;
  } catch (const std::exception& e) {
    pt.error = e.what();
  }
  return pt;
}

std::vector<EtaPoint> eta_sweep(const TrapModel& model_template, std::span<const double> r_values,
                                const EtaSweepOptions& o) {
  std::vector<EtaPoint> out(r_values.size());
  parallel_for(r_values.size(), o.threads, [&](std::size_t i) { out[i] = eta_point(model_template, r_values[i], o); });
  return out;
}

EtaRange eta_range(std::span<const EtaPoint> points) {
  EtaRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), 0};
  for (const auto& p : points) {
    if (!p.ok()) continue;
    r.min = std::min(r.min, p.eta);
    r.max = std::max(r.max, p.eta);
    ++r.valid;
  }
  if (r.valid == 0) throw NumericalError("no sweep point produced a corrugation parameter");
  return r;
}

std::size_t SlideTrajectory::slip_count() const {
  return static_cast<std::size_t>(std::count_if(steps.begin(), steps.end(), [](const SlideStep& s) { return s.slip; }));
}

SlideTrajectory quasi_static_slide(const TrapModel& model, const CrystalState& initial,
                                   std::span<const double> offsets, const SlideOptions& o) {
  if (o.moving_well >= model.axial_wells.size()) throw DomainError("moving well index out of range");
  if (!initial.converged) throw StateError("slide needs a converged starting crystal");
  SlideTrajectory t;
  t.spacing = string_spacing(model, initial, static_cast<int>(o.moving_well));
  const double base = model.axial_wells[o.moving_well].center_z;
  for (std::size_t i = 1; i < offsets.size(); ++i) {
    if (std::abs(offsets[i] - offsets[i - 1]) > 0.5 * o.slip_fraction * t.spacing) {
      log::warn("slide offset step exceeds half the slip threshold; smooth motion may be flagged as slips");
      break;
    }
  }

  CrystalState previous = initial;
  TrapModel m = model;
  for (double offset : offsets) {
    m.axial_wells[o.moving_well].center_z = base + offset;
    try {
      CrystalState next = relax(m, previous, o.solve);
      SlideStep step;
      step.offset = offset;
      for (std::size_t j = 0; j < next.size(); ++j) {
        step.max_displacement = std::max(step.max_displacement, (next.positions[j] - previous.positions[j]).norm());
      }
      step.slip = step.max_displacement > o.slip_fraction * t.spacing;
      step.energy = next.energy;
      step.positions = next.positions;
      t.steps.push_back(std::move(step));
      previous = std::move(next);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "equilibrium failed at offset " << units::to_um(offset) << " um: " << e.what();
      t.error = msg.str();
      break;
    }
  }
  return t;
}

SlideTrajectory quasi_static_slide(const TrapModel& model, int per_string, std::span<const double> offsets,
                                   const SlideOptions& o) {
  if (per_string < 1) throw DomainError("need at least one ion per string");
  const CrystalState initial =
      solve_equilibrium(model, static_cast<std::size_t>(per_string) * model.axial_wells.size(), o.solve);
  return quasi_static_slide(model, initial, offsets, o);
}

Hysteresis slide_hysteresis(const TrapModel& model, const CrystalState& initial, std::span<const double> offsets,
                            const SlideOptions& o) {
  Hysteresis h;
  h.forward = quasi_static_slide(model, initial, offsets, o);
  if (!h.forward.complete() || h.forward.steps.empty()) {
    h.max_position_difference = std::numeric_limits<double>::quiet_NaN();
    return h;
  }
  CrystalState end = initial;
  end.positions = h.forward.steps.back().positions;
  const std::vector<double> reversed(offsets.rbegin(), offsets.rend());
  // Warm start from the forward end; its well offset is the first reversed value.
  h.backward = quasi_static_slide(model, end, reversed, o);
  const std::size_t n = std::min(h.forward.steps.size(), h.backward.steps.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& f = h.forward.steps[offsets.size() - 1 - i];
    const auto& b = h.backward.steps[i];
    for (std::size_t j = 0; j < f.positions.size(); ++j) {
      h.max_position_difference = std::max(h.max_position_difference, (f.positions[j] - b.positions[j]).norm());
    }
  }
  return h;
}

}  // namespace trapscape
