#include "trapscape/modes.hpp"

#include "trapscape/errors.hpp"
#include "trapscape/parallel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <sstream>

namespace trapscape {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string_view to_string(ModeAxis a) {
  switch (a) {
    case ModeAxis::x: return "x";
    case ModeAxis::y: return "y";
    case ModeAxis::z: return "z";
  }
  return "x";
}

std::string_view to_string(ModePattern p) {
  switch (p) {
    case ModePattern::com: return "com";
    case ModePattern::stretch: return "stretch";
    case ModePattern::other: return "other";
  }
  return "other";
}

std::string_view to_string(ModePhase p) {
  switch (p) {
    case ModePhase::in: return "in";
    case ModePhase::out: return "out";
    case ModePhase::none: return "n/a";
  }
  return "n/a";
}

MatrixXd hessian(const TrapModel& model, const CrystalState& state) {
  if (!state.converged) throw StateError("Hessian requested for an unconverged crystal");
  return CrystalEnergy(model).hessian(state.positions, state.string_labels);
}

ModeLabel classify_mode(const VectorXd& mode, const CrystalState& state) {
  ModeLabel label;
  const std::size_t n = state.size();
  double weight[3] = {0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) weight[a] += mode[static_cast<Eigen::Index>(3 * i + a)] * mode[static_cast<Eigen::Index>(3 * i + a)];
  }
  const double total = weight[0] + weight[1] + weight[2];
  int axis = 0;
  for (int a = 1; a < 3; ++a) {
    if (weight[a] > weight[axis]) axis = a;
  }
  label.axis = static_cast<ModeAxis>(axis);
  label.axis_fraction = total > 0.0 ? weight[axis] / total : 0.0;
  if (label.axis_fraction < kLabelThreshold) return label;

  // Per string: displacement along the axis, ions ordered by z, projected on a
  // uniform (com) and a centred linear (stretch) template.
  const int strings = state.string_count();
  std::vector<double> com_amp;
  std::vector<double> str_amp;
  double com_weight = 0.0;
  double str_weight = 0.0;
  for (int s = 0; s < strings; ++s) {
    const auto members = state.string_members(s);
    const std::size_t m = members.size();
    if (m == 0) continue;
    double a_com = 0.0;
    double a_str = 0.0;
    double ramp_norm = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double r = static_cast<double>(k) - 0.5 * static_cast<double>(m - 1);
      ramp_norm += r * r;
    }
    ramp_norm = std::sqrt(ramp_norm);
    for (std::size_t k = 0; k < m; ++k) {
      const double u = mode[static_cast<Eigen::Index>(3 * members[k] + axis)];
      a_com += u / std::sqrt(static_cast<double>(m));
      if (ramp_norm > 0.0) a_str += u * (static_cast<double>(k) - 0.5 * static_cast<double>(m - 1)) / ramp_norm;
    }
    com_amp.push_back(a_com);
    str_amp.push_back(a_str);
    com_weight += a_com * a_com;
    str_weight += a_str * a_str;
  }
  const double on_axis = weight[axis];
  const std::vector<double>* amps = nullptr;
  if (com_weight / on_axis > kLabelThreshold) {
    label.pattern = ModePattern::com;
    label.overlap = com_weight / on_axis;
    amps = &com_amp;
  } else if (str_weight / on_axis > kLabelThreshold) {
    label.pattern = ModePattern::stretch;
    label.overlap = str_weight / on_axis;
    amps = &str_amp;
  } else {
    label.overlap = std::max(com_weight, str_weight) / on_axis;
    return label;
  }
  if (amps->size() == 2) {
    const double a = (*amps)[0];
    const double b = (*amps)[1];
    // Both strings must take part; a mode living on one string has no phase.
    if (std::min(std::abs(a), std::abs(b)) > 0.1 * std::max(std::abs(a), std::abs(b))) {
      label.phase = (a * b > 0.0) ? ModePhase::in : ModePhase::out;
    }
  }
  return label;
}

ModeSpectrum normal_modes(const TrapModel& model, const CrystalState& state) {
  const MatrixXd h = hessian(model, state) / model.species.mass;
  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(h);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  ModeSpectrum out;
  out.eigenvalues = eig.eigenvalues();
  out.eigenvectors = eig.eigenvectors();
  const double scale = out.eigenvalues.cwiseAbs().maxCoeff();
  out.frequencies.resize(out.eigenvalues.size());
  for (Eigen::Index k = 0; k < out.eigenvalues.size(); ++k) {
    const double lambda = out.eigenvalues[k];
    if (lambda < -1e-6 * scale) {
      std::ostringstream msg;
      msg << "negative curvature " << lambda << " (rad/s)^2: configuration is a saddle point";
      throw SaddleError(msg.str());
    }
    out.frequencies[k] = std::sqrt(std::max(lambda, 0.0));
  }
  for (Eigen::Index k = 0; k < out.eigenvectors.cols(); ++k) {
    out.labels.push_back(classify_mode(out.eigenvectors.col(k), state));
  }
  return out;
}

AxialQuartet axial_quartet(const ModeSpectrum& spectrum) {
  std::optional<double> slots[2][2];  // [pattern com/stretch][phase in/out]
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    const auto& l = spectrum.labels[k];
    if (l.axis != ModeAxis::z || l.pattern == ModePattern::other || l.phase == ModePhase::none) continue;
    const int p = l.pattern == ModePattern::com ? 0 : 1;
    const int q = l.phase == ModePhase::in ? 0 : 1;
    if (slots[p][q]) throw NumericalError("two axial modes carry the same label");
    slots[p][q] = spectrum.frequencies[static_cast<Eigen::Index>(k)];
  }
  for (auto& row : slots) {
    for (auto& s : row) {
      if (!s) throw NumericalError("axial modes could not all be classified (mode mixing)");
    }
  }
  return {*slots[0][0], *slots[0][1], *slots[1][0], *slots[1][1]};
}

DegeneracyPoint degeneracy_point(const TrapModel& model_template, double ratio, const DegeneracyOptions& o) {
  DegeneracyPoint pt;
  pt.ratio = ratio;
  try {
    TrapModel m = model_template;
    m.drive.ratio_r = ratio;
    m.drive.validate();
    const NodeSet nodes = find_nodes(m, o.nodes);
    pt.separation = node_separation(nodes);
    m.axial_wells = wells_at_nodes(nodes, o.omega_z0, 0.0, o.alpha, o.beta);
    const CrystalState state = solve_equilibrium(m, static_cast<std::size_t>(2 * o.ions_per_string), o.solve);
    const ModeSpectrum spectrum = normal_modes(m, state);
    for (const auto& l : spectrum.labels) {
      if (l.axis == ModeAxis::z) pt.axial_labels.push_back(l);
    }
    const AxialQuartet q = axial_quartet(spectrum);
    pt.normalized = {q.com_in / o.omega_z0, q.com_out / o.omega_z0, q.stretch_in / o.omega_z0,
                     q.stretch_out / o.omega_z0};
  } catch (const std::exception& e) {
    pt.error = e.what();
  }
  return pt;
}

std::vector<DegeneracyPoint> degeneracy_sweep(const TrapModel& model_template, std::span<const double> r_values,
                                              const DegeneracyOptions& o) {
  std::vector<DegeneracyPoint> out(r_values.size());
  parallel_for(r_values.size(), o.threads,
               [&](std::size_t i) { out[i] = degeneracy_point(model_template, r_values[i], o); });
  return out;
}

}  // namespace trapscape
