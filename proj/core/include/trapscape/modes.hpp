#pragma once

#include "trapscape/crystal.hpp"
#include "trapscape/nodes.hpp"

#include <Eigen/Core>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace trapscape {

enum class ModeAxis { x, y, z };
enum class ModePattern { com, stretch, other };
enum class ModePhase { in, out, none };

std::string_view to_string(ModeAxis a);
std::string_view to_string(ModePattern p);
std::string_view to_string(ModePhase p);

struct ModeLabel {
  ModeAxis axis = ModeAxis::x;
  ModePattern pattern = ModePattern::other;
  ModePhase phase = ModePhase::none;
  double axis_fraction = 0.0;  // weight of the mode on its dominant axis
  double overlap = 0.0;        // weight captured by the pattern template
};

struct ModeSpectrum {
  Eigen::VectorXd frequencies;   // rad/s, ascending
  Eigen::VectorXd eigenvalues;   // of H/m, (rad/s)^2
  Eigen::MatrixXd eigenvectors;  // columns, orthonormal, packed (x0, y0, z0, x1, ...)
  std::vector<ModeLabel> labels;

  std::size_t size() const { return static_cast<std::size_t>(frequencies.size()); }
};

/// Overlap a mode must have with its axis and its pattern template to be labelled.
inline constexpr double kLabelThreshold = 0.9;

/// Analytic 3N x 3N Hessian of the total energy; StateError for an unconverged state.
Eigen::MatrixXd hessian(const TrapModel& model, const CrystalState& state);

/// Eigenfrequencies and labelled eigenvectors about a converged equilibrium.
/// SaddleError when an eigenvalue is below -1e-6 of the largest.
ModeSpectrum normal_modes(const TrapModel& model, const CrystalState& state);

/// Per-mode labels from template overlaps (exposed for reuse on arbitrary vectors).
ModeLabel classify_mode(const Eigen::VectorXd& mode, const CrystalState& state);

/// The four axial modes of a two-string crystal.
struct AxialQuartet {
  double com_in = 0.0;
  double com_out = 0.0;
  double stretch_in = 0.0;
  double stretch_out = 0.0;

  double com_splitting() const { return (com_out - com_in) / com_in; }
  double stretch_splitting() const { return (stretch_out - stretch_in) / stretch_in; }
};

/// Picks com/stretch x in/out axial modes; NumericalError if any is missing.
AxialQuartet axial_quartet(const ModeSpectrum& spectrum);

struct DegeneracyOptions {
  double omega_z0 = units::angular(0.19e6);
  int ions_per_string = 2;
  double alpha = 0.5;
  double beta = 0.5;
  NodeSearchOptions nodes;
  SolveOptions solve;
  unsigned threads = 1;
};

struct DegeneracyPoint {
  double ratio = 0.0;
  double separation = 0.0;       // m
  AxialQuartet normalized;       // frequencies / omega_z0
  std::vector<ModeLabel> axial_labels;
  std::string error;

  bool ok() const { return error.empty(); }
};

/// Two-string crystal at one R: nodes, equilibrium, axial modes.
DegeneracyPoint degeneracy_point(const TrapModel& model_template, double ratio, const DegeneracyOptions& options = {});

/// degeneracy_point over R values; failures are recorded per point.
std::vector<DegeneracyPoint> degeneracy_sweep(const TrapModel& model_template, std::span<const double> r_values,
                                              const DegeneracyOptions& options = {});

}  // namespace trapscape
