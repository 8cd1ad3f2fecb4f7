#include "trapscape/crystal.hpp"

#include "trapscape/log.hpp"
#include "trapscape/parallel.hpp"
#include "trapscape/units.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace trapscape {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Internal length and energy units for the minimiser.
constexpr double kLength = 1e-6;

void check_sizes(std::span<const Vec3> positions, std::span<const int> labels) {
  if (positions.size() != labels.size()) throw DomainError("positions and labels differ in length");
}

std::string pair_message(std::size_t i, std::size_t j) {
  std::ostringstream msg;
  msg << "ions " << i << " and " << j << " coincide (Coulomb singularity)";
  return msg.str();
}

Positions unpack(const VectorXd& x, double scale) {
  Positions p(static_cast<std::size_t>(x.size() / 3));
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(3 * i);
    p[i] = scale * Vec3(x[k], x[k + 1], x[k + 2]);
  }
  return p;
}

VectorXd pack(std::span<const Vec3> p, double inv_scale) {
  VectorXd x(static_cast<Eigen::Index>(3 * p.size()));
  for (std::size_t i = 0; i < p.size(); ++i) x.segment<3>(static_cast<Eigen::Index>(3 * i)) = inv_scale * p[i];
  return x;
}

double min_pair_distance(std::span<const Vec3> p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) best = std::min(best, (p[i] - p[j]).norm());
  }
  return best;
}

}  // namespace

// ------------------------------------------------------------- CrystalState

std::vector<std::size_t> CrystalState::string_members(int label) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (string_labels[i] == label) idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return positions[a].z() < positions[b].z(); });
  return idx;
}

int CrystalState::string_count() const {
  int n = 0;
  for (int l : string_labels) n = std::max(n, l + 1);
  return n;
}

// ------------------------------------------------------------ CrystalEnergy

CrystalEnergy::CrystalEnergy(const TrapModel& model)
    : trap_(model), coulomb_(constants::coulomb_constant * model.species.charge * model.species.charge) {}

double CrystalEnergy::energy(std::span<const Vec3> p, std::span<const int> labels) const {
  check_sizes(p, labels);
  double e = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) e += trap_.value(p[i], static_cast<std::size_t>(labels[i]));
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      const double r = (p[i] - p[j]).norm();
      if (r == 0.0) throw DomainError(pair_message(i, j));
      e += coulomb_ / r;
    }
  }
  return e;
}

VectorXd CrystalEnergy::gradient(std::span<const Vec3> p, std::span<const int> labels) const {
  check_sizes(p, labels);
  VectorXd g = VectorXd::Zero(static_cast<Eigen::Index>(3 * p.size()));
  for (std::size_t i = 0; i < p.size(); ++i) {
    g.segment<3>(static_cast<Eigen::Index>(3 * i)) = trap_.gradient(p[i], static_cast<std::size_t>(labels[i]));
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      const Vec3 d = p[i] - p[j];
      const double r = d.norm();
      if (r == 0.0) throw DomainError(pair_message(i, j));
      const Vec3 f = -coulomb_ / (r * r * r) * d;
      g.segment<3>(static_cast<Eigen::Index>(3 * i)) += f;
      g.segment<3>(static_cast<Eigen::Index>(3 * j)) -= f;
    }
  }
  return g;
}

MatrixXd CrystalEnergy::hessian(std::span<const Vec3> p, std::span<const int> labels) const {
  check_sizes(p, labels);
  const auto n = static_cast<Eigen::Index>(3 * p.size());
  MatrixXd h = MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(3 * i);
    h.block<3, 3>(k, k) = trap_.hessian(p[i], static_cast<std::size_t>(labels[i]));
  }
  // d^2(1/r)/dr_i dr_i = (3 u u^T - I) / r^3; the cross block is its negative.
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      const Vec3 d = p[i] - p[j];
      const double r = d.norm();
      if (r == 0.0) throw DomainError(pair_message(i, j));
      const Vec3 u = d / r;
      const Mat3 t = coulomb_ / (r * r * r) * (3.0 * u * u.transpose() - Mat3::Identity());
      const auto a = static_cast<Eigen::Index>(3 * i);
      const auto b = static_cast<Eigen::Index>(3 * j);
      h.block<3, 3>(a, a) += t;
      h.block<3, 3>(b, b) += t;
      h.block<3, 3>(a, b) -= t;
      h.block<3, 3>(b, a) -= t;
    }
  }
  return h;
}

std::vector<int> nearest_well_labels(const TrapModel& model, std::span<const Vec3> positions) {
  std::vector<int> labels(positions.size(), -1);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t w = 0; w < model.axial_wells.size(); ++w) {
      const double d = (positions[i].head<2>() - model.axial_wells[w].center_xy).norm();
      if (d < best) {
        best = d;
        labels[i] = static_cast<int>(w);
      }
    }
  }
  return labels;
}

double total_energy(const TrapModel& model, std::span<const Vec3> positions) {
  const auto labels = nearest_well_labels(model, positions);
  return total_energy(model, positions, labels);
}

double total_energy(const TrapModel& model, std::span<const Vec3> positions, std::span<const int> labels) {
  if (model.axial_wells.empty()) throw StateError("model has no axial wells");
  return CrystalEnergy(model).energy(positions, labels);
}

VectorXd energy_gradient(const TrapModel& model, std::span<const Vec3> positions) {
  const auto labels = nearest_well_labels(model, positions);
  return energy_gradient(model, positions, labels);
}

VectorXd energy_gradient(const TrapModel& model, std::span<const Vec3> positions, std::span<const int> labels) {
  if (model.axial_wells.empty()) throw StateError("model has no axial wells");
  return CrystalEnergy(model).gradient(positions, labels);
}

double chain_length_scale(const IonSpecies& species, double omega_z) {
  if (!(omega_z > 0.0)) throw DomainError("chain length scale needs omega_z > 0");
  const double k = constants::coulomb_constant * species.charge * species.charge;
  return std::cbrt(k / (species.mass * omega_z * omega_z));
}

// ------------------------------------------------------------------ solving

CrystalState seed_crystal(const TrapModel& model, std::span<const int> per_well, double stagger) {
  if (per_well.size() != model.axial_wells.size()) throw DomainError("per-well populations must match the wells");
  constexpr double transverse = 10e-9;
  CrystalState s;
  const double nwells = static_cast<double>(per_well.size());
  for (std::size_t w = 0; w < per_well.size(); ++w) {
    const int n = per_well[w];
    if (n < 0) throw DomainError("negative ion count");
    if (n == 0) continue;
    const auto& well = model.axial_wells[w];
    // Minimum spacing of an n-ion harmonic chain is about 2.018 n^-0.559 l.
    const double spacing = n > 1 ? 2.018 * std::pow(n, -0.559) * chain_length_scale(model.species, well.omega_z) : 0.0;
    const double shift = nwells > 1 ? stagger * spacing * (2.0 * static_cast<double>(w) / (nwells - 1.0) - 1.0) : 0.0;
    for (int i = 0; i < n; ++i) {
      const double z = well.center_z + (i - 0.5 * (n - 1)) * spacing + shift;
      const double sx = (i % 2 == 0) ? transverse : -transverse;
      const double sy = ((i / 2) % 2 == 0) ? transverse : -transverse;
      s.positions.emplace_back(well.center_xy.x() + sx, well.center_xy.y() + sy, z);
      s.string_labels.push_back(static_cast<int>(w));
    }
  }
  return s;
}

CrystalState relax(const TrapModel& model, const CrystalState& initial, const SolveOptions& o,
                   std::vector<double>* history) {
  if (model.axial_wells.empty()) throw StateError("solving a crystal needs at least one axial well");
  if (initial.positions.empty()) throw DomainError("crystal has no ions");
  const CrystalEnergy energy(model);
  const std::vector<int>& labels = initial.string_labels;
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= model.axial_wells.size()) {
      throw DomainError("ion label does not name an axial well");
    }
  }

  // Work in um and units of the Coulomb energy at 1 um.
  const double e_unit = energy.coulomb_constant() / kLength;
  const double g_unit = e_unit / kLength;
  const double h_unit = g_unit / kLength;

  const Objective objective = [&](const VectorXd& x, VectorXd& g) {
    const Positions p = unpack(x, kLength);
    try {
      const double e = energy.energy(p, labels);
      g = energy.gradient(p, labels) / g_unit;
      return e / e_unit;
    } catch (const DomainError&) {
      g = VectorXd::Zero(x.size());
      return std::numeric_limits<double>::infinity();
    }
  };
  const HessianFn hess = [&](const VectorXd& x) -> MatrixXd {
    return energy.hessian(unpack(x, kLength), labels) / h_unit;
  };

  MinimizeOptions mo;
  mo.gradient_tolerance = o.force_tolerance / g_unit;
  mo.max_evaluations = o.max_evaluations;
  mo.max_step = 20.0;  // um
  mo.record_history = history != nullptr;
  const MinimizeResult r = minimize_bfgs(objective, pack(initial.positions, 1.0 / kLength), mo, hess);

  CrystalState s;
  // An already converged input is returned bit-for-bit.
  s.positions = r.iterations == 0 ? initial.positions : unpack(r.x, kLength);
  s.string_labels = labels;
  s.energy = r.value * e_unit;
  s.grad_norm = r.gradient_norm * g_unit;
  s.converged = r.converged;
  s.evaluations = r.evaluations;
  s.iterations = r.iterations;
  if (history) {
    history->clear();
    for (double v : r.history) history->push_back(v * e_unit);
  }

  if (!r.converged) {
    std::ostringstream msg;
    msg << "equilibrium solve did not converge (" << r.message << "): |grad| = " << s.grad_norm << " N after "
        << r.evaluations << " evaluations";
    throw ConvergenceError(msg.str(), s);
  }
  const double closest = min_pair_distance(s.positions);
  if (closest < o.min_separation) {
    std::ostringstream msg;
    msg << "ions closer than " << units::to_um(o.min_separation) << " um at equilibrium (" << units::to_um(closest)
        << " um)";
    throw ConvergenceError(msg.str(), s);
  }

  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(energy.hessian(s.positions, labels), Eigen::EigenvaluesOnly);
  const auto& lambda = eig.eigenvalues();
  if (lambda.minCoeff() < -1e-6 * lambda.cwiseAbs().maxCoeff()) {
    s.saddle = true;
    log::warn("converged crystal is a saddle point (negative Hessian eigenvalue)");
  }

  const auto nearest = nearest_well_labels(model, s.positions);
  if (nearest != labels) log::warn("an ion settled closer to another string's node than its own");
  return s;
}

namespace {

std::vector<int> populations(const TrapModel& model, std::size_t n_ions, const SolveOptions& o) {
  if (!o.per_well.empty()) {
    if (o.per_well.size() != model.axial_wells.size()) {
      throw DomainError("per_well must list one population per axial well");
    }
    const auto total = std::accumulate(o.per_well.begin(), o.per_well.end(), 0);
    if (total != static_cast<int>(n_ions)) throw DomainError("per_well populations do not add up to n_ions");
    return o.per_well;
  }
  const std::size_t wells = model.axial_wells.size();
  std::vector<int> out(wells, static_cast<int>(n_ions / wells));
  for (std::size_t i = 0; i < n_ions % wells; ++i) ++out[i];
  return out;
}

}  // namespace

CrystalState solve_equilibrium(const TrapModel& model, std::size_t n_ions, const SolveOptions& o) {
  if (n_ions < 1) throw DomainError("need at least one ion");
  if (model.axial_wells.empty()) throw StateError("solving a crystal needs at least one axial well");
  const std::vector<int> per_well = populations(model, n_ions, o);
  const CrystalState seed = seed_crystal(model, per_well, o.stagger);

  if (o.init.kind == InitKind::string_seed) return relax(model, seed, o);

  if (o.init.restarts < 1) throw DomainError("random_restart needs at least one restart");
  const auto k = static_cast<std::size_t>(o.init.restarts);
  std::vector<std::optional<CrystalState>> results(k);
  std::vector<std::string> errors(k);
  double spacing = 0.0;
  for (std::size_t w = 0; w < per_well.size(); ++w) {
    if (per_well[w] > 1) spacing = std::max(spacing, chain_length_scale(model.species, model.axial_wells[w].omega_z));
  }
  parallel_for(k, o.threads, [&](std::size_t i) {
    std::mt19937_64 rng(o.init.seed + i);
    std::normal_distribution<double> axial(0.0, 0.2 * spacing);
    std::normal_distribution<double> radial(0.0, 0.1e-6);
    CrystalState start = seed;
    for (auto& p : start.positions) p += Vec3(radial(rng), radial(rng), axial(rng));
    try {
      results[i] = relax(model, start, o);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < k; ++i) {
    if (!results[i] || results[i]->saddle) continue;
    if (!best || results[i]->energy < results[*best]->energy) best = i;
  }
  if (!best) {
    for (std::size_t i = 0; i < k && !best; ++i) {
      if (results[i]) best = i;
    }
  }
  if (!best) throw NumericalError("all random restarts failed: " + errors.front());
  return *results[*best];
}

}  // namespace trapscape
