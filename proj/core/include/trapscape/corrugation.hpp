#pragma once

#include "trapscape/crystal.hpp"
#include "trapscape/nodes.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace trapscape {

/// U(z) along one string's node line, split into its two sources.
struct CorrugationProfile {
  std::vector<double> z;          // m
  std::vector<double> coulomb;    // J, from the other string's ions
  std::vector<double> trap;       // J, axial well of the target string
  std::vector<double> total() const;
  double spacing = 0.0;           // m, mean ion spacing of the target string
  int target_string = 0;
};

struct CorrugationReport {
  CorrugationProfile profile;
  double omega_int = 0.0;         // rad/s
  double omega_zero = 0.0;        // rad/s
  double eta = 0.0;               // (omega_int / omega_zero)^2
  double barrier = 0.0;           // J, pseudopotential barrier between the nodes
  double node_separation = 0.0;   // m
};

enum class OmegaZeroVariant { with_trap, coulomb_only };

/// Potential energy of a test ion on the target node line: Coulomb energy of
/// the other string (frozen at its equilibrium) plus the target axial well.
/// Sampled uniformly over the target string extent widened by one spacing.
CorrugationProfile corrugation_potential(const TrapModel& model, const CrystalState& state, int target_string,
                                         std::size_t n_samples = 801);

/// Continuous form of the same potential.
std::function<double(double)> corrugation_function(const TrapModel& model, const CrystalState& state,
                                                   int target_string);

/// Harmonic frequency of the local minimum of `u` nearest `z_center`: the
/// minimum is bracketed on `n_samples` points in [z_lo, z_hi], refined by
/// golden section, and U'' is taken by central differences with `step`.
/// NumericalError when no interior minimum exists.
double central_well_frequency(const std::function<double(double)>& u, double mass, double z_lo, double z_hi,
                              double z_center, double step, std::size_t n_samples = 801);

/// sqrt(U''/m) at the central minimum of the corrugation potential.
double omega_int(const TrapModel& model, const CrystalState& state, int target_string);

/// Index of the centre ion of a string (odd: middle; even: nearer the well
/// centre, ties to negative z).
std::size_t center_ion(const TrapModel& model, const CrystalState& state, int target_string);

/// Axial curvature at the centre ion from its own string (and, by default, its well).
double omega_zero(const TrapModel& model, const CrystalState& state, int target_string,
                  OmegaZeroVariant variant = OmegaZeroVariant::with_trap);

/// Full report for the target string. The barrier and separation come from a
/// node search on the same model.
CorrugationReport corrugation_parameter(const TrapModel& model, const CrystalState& state, int target_string = 0,
                                        const NodeSearchOptions& nodes = {});

struct EtaSweepOptions {
  double omega_z = units::angular(15e3);
  int ions_per_string = 7;
  double alpha = 0.5;
  double beta = 0.5;
  int target_string = 0;
  NodeSearchOptions nodes;
  SolveOptions solve;
  unsigned threads = 1;
};

struct EtaPoint {
  double ratio = 0.0;
  double separation = 0.0;
  double omega_int = 0.0;
  double omega_zero = 0.0;
  double eta = 0.0;
  double barrier = 0.0;
  std::string error;

  bool ok() const { return error.empty(); }
};

/// Two-string crystal at one R with wells on the nodes.
struct PairedCrystal {
  TrapModel model;      // wells placed on the nodes
  NodeSet nodes;
  CrystalState state;
};
PairedCrystal paired_crystal(const TrapModel& model_template, double ratio, const EtaSweepOptions& options = {});

EtaPoint eta_point(const TrapModel& model_template, double ratio, const EtaSweepOptions& options = {});
std::vector<EtaPoint> eta_sweep(const TrapModel& model_template, std::span<const double> r_values,
                                const EtaSweepOptions& options = {});

struct EtaRange {
  double min = 0.0;
  double max = 0.0;
  std::size_t valid = 0;
};
/// Extremes over the successful points; NumericalError when there are none.
EtaRange eta_range(std::span<const EtaPoint> points);

struct SlideOptions {
  std::size_t moving_well = 1;   // well whose centre_z is displaced
  double slip_fraction = 0.1;    // of the mean ion spacing
  SolveOptions solve;
};

struct SlideStep {
  double offset = 0.0;           // m
  Positions positions;
  double energy = 0.0;           // J
  double max_displacement = 0.0; // m, largest single-ion move since the previous step
  bool slip = false;
};

struct SlideTrajectory {
  std::vector<SlideStep> steps;
  double spacing = 0.0;          // m, slip reference
  std::string error;             // set when the sweep stopped early

  bool complete() const { return error.empty(); }
  std::size_t slip_count() const;
};

/// Quasi-static sweep of one well's axial centre; each offset is relaxed
/// from the previous equilibrium. `initial` is the equilibrium at zero offset.
SlideTrajectory quasi_static_slide(const TrapModel& model, const CrystalState& initial,
                                   std::span<const double> offsets, const SlideOptions& options = {});

/// Same, solving the zero-offset equilibrium with `per_string` ions per well first.
SlideTrajectory quasi_static_slide(const TrapModel& model, int per_string, std::span<const double> offsets,
                                   const SlideOptions& options = {});

struct Hysteresis {
  SlideTrajectory forward;
  SlideTrajectory backward;      // same offsets, visited in reverse
  double max_position_difference = 0.0;  // m, over matching offsets
};

/// Forward sweep then the reverse sweep warm-started from its end.
Hysteresis slide_hysteresis(const TrapModel& model, const CrystalState& initial, std::span<const double> offsets,
                            const SlideOptions& options = {});

}  // namespace trapscape
