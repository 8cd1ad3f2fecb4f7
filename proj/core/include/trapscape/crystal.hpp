#pragma once

#include "trapscape/errors.hpp"
#include "trapscape/fields.hpp"
#include "trapscape/minimize.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace trapscape {

using Positions = std::vector<Vec3>;

struct CrystalState {
  Positions positions;             // m
  std::vector<int> string_labels;  // well / string index per ion, -1 = unassigned
  double energy = 0.0;             // J
  double grad_norm = 0.0;          // N, Euclidean norm over all 3N force components
  bool converged = false;
  bool saddle = false;             // converged, but the Hessian has a negative direction
  std::size_t evaluations = 0;
  int iterations = 0;

  std::size_t size() const { return positions.size(); }
  /// Indices of the ions labelled `label`, ordered by z.
  std::vector<std::size_t> string_members(int label) const;
  int string_count() const;
};

/// Trap + Coulomb energy of N ions, each feeling the axial well of its label.
class CrystalEnergy {
 public:
  explicit CrystalEnergy(const TrapModel& model);

  double energy(std::span<const Vec3> positions, std::span<const int> labels) const;
  /// Gradient packed as (x0, y0, z0, x1, ...).
  Eigen::VectorXd gradient(std::span<const Vec3> positions, std::span<const int> labels) const;
  Eigen::MatrixXd hessian(std::span<const Vec3> positions, std::span<const int> labels) const;

  const TrapPotential& trap() const { return trap_; }
  double coulomb_constant() const { return coulomb_; }

 private:
  TrapPotential trap_;
  double coulomb_;  // q^2 / (4 pi eps0)
};

/// Labels by nearest well centre in the (x, y) plane.
std::vector<int> nearest_well_labels(const TrapModel& model, std::span<const Vec3> positions);

double total_energy(const TrapModel& model, std::span<const Vec3> positions);
double total_energy(const TrapModel& model, std::span<const Vec3> positions, std::span<const int> labels);
Eigen::VectorXd energy_gradient(const TrapModel& model, std::span<const Vec3> positions);
Eigen::VectorXd energy_gradient(const TrapModel& model, std::span<const Vec3> positions, std::span<const int> labels);

/// Characteristic length (q^2 / (4 pi eps0 m omega^2))^(1/3) of a harmonic chain.
double chain_length_scale(const IonSpecies& species, double omega_z);

enum class InitKind { string_seed, random_restart };

struct InitStrategy {
  InitKind kind = InitKind::string_seed;
  int restarts = 8;
  std::uint64_t seed = 1;

  static InitStrategy string_seed() { return {}; }
  static InitStrategy random_restart(int k, std::uint64_t seed) { return {InitKind::random_restart, k, seed}; }
};

struct SolveOptions {
  std::vector<int> per_well;         // ions per well; empty = even split of n_ions
  InitStrategy init;
  double force_tolerance = 1e-25;    // N
  std::size_t max_evaluations = 100000;
  double min_separation = 0.5e-6;    // m
  double stagger = 0.25;             // axial offset of neighbouring strings, in units of the seed spacing
  unsigned threads = 1;              // random restarts only
};

/// Thrown when the minimiser gives up; carries the last iterate.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, CrystalState last)
      : NumericalError(what), last_(std::move(last)) {}
  const CrystalState& last_state() const { return last_; }

 private:
  CrystalState last_;
};

/// Deterministic seed: ions evenly along each node line, neighbouring strings
/// staggered by `stagger` spacings, alternating 10 nm transverse offsets.
CrystalState seed_crystal(const TrapModel& model, std::span<const int> per_well, double stagger = 0.25);

/// Local minimum of the total energy via BFGS. Throws ConvergenceError on failure.
CrystalState solve_equilibrium(const TrapModel& model, std::size_t n_ions, const SolveOptions& options = {});

/// Local minimum starting from `initial` (labels are kept).
CrystalState relax(const TrapModel& model, const CrystalState& initial, const SolveOptions& options = {},
                   std::vector<double>* history = nullptr);

}  // namespace trapscape
