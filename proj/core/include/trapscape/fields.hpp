#pragma once

#include "trapscape/geometry.hpp"
#include "trapscape/units.hpp"

#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

namespace trapscape {

/// RF drive. The centre-RF electrode runs in phase with the outer RF
/// electrodes at amplitude ratio_r * v_rf.
struct DriveConfig {
  double v_rf = 85.0;                        // amplitude, V
  double ratio_r = 0.0;                      // V_cRF / V_RF
  double omega_rf = units::angular(27.2e6);  // rad/s

  void validate() const;
  bool operator==(const DriveConfig&) const = default;
};

struct IonSpecies {
  double mass = 0.0;    // kg
  double charge = 0.0;  // C

  /// 40Ca+ with integer mass number 40.
  static IonSpecies calcium40();
  void validate() const;
  bool operator==(const IonSpecies&) const = default;
};

/// Ideal harmonic DC well around one RF node. The radial part of the DC
/// curvature is removed in the proportions (alpha, beta) so that the DC
/// potential stays Laplace-consistent; (0, 0) gives a pure axial harmonic.
struct AxialConfinement {
  double omega_z = 0.0;  // rad/s
  double center_z = 0.0;
  Vec2 center_xy = Vec2::Zero();
  double alpha = 0.5;
  double beta = 0.5;

  void validate() const;
  bool operator==(const AxialConfinement&) const = default;
};

struct TrapModel {
  TrapGeometry geometry;
  DriveConfig drive;
  IonSpecies species = IonSpecies::calcium40();
  std::vector<AxialConfinement> axial_wells;

  void validate() const;
};

/// Canonical configuration: canonical geometry, 85 V at 27.2 MHz, 40Ca+.
TrapModel canonical_model(double ratio_r, double v_rf = 85.0, double f_rf_hz = 27.2e6);

/// Complex representation of the RF field. With w = x + i y the RF potential is
/// Im F(w); G = F' is a sum of simple poles at the strip edges and
/// E = (-Im G, -Re G). Nodes are the roots of G.
class RfField {
 public:
  struct Sample {
    std::complex<double> g;    // F'
    std::complex<double> dg;   // F''
    std::complex<double> d2g;  // F'''
  };

  RfField(const TrapGeometry& geometry, const DriveConfig& drive);
  explicit RfField(const TrapModel& model) : RfField(model.geometry, model.drive) {}

  std::complex<double> complex_field(const Vec2& p) const;
  Sample sample(const Vec2& p) const;

  Vec2 field(const Vec2& p) const;
  /// J(i, j) = dE_i / dx_j; symmetric and traceless.
  Mat2 jacobian(const Vec2& p) const;
  double magnitude(const Vec2& p) const { return std::abs(complex_field(p)); }

  const std::vector<std::pair<double, double>>& poles() const { return poles_; }

 private:
  std::vector<std::pair<double, double>> poles_;  // (edge position, residue)
};

/// Pseudopotential q^2 |E|^2 / (4 m Omega^2) with analytic derivatives.
class Pseudopotential {
 public:
  explicit Pseudopotential(const TrapModel& model);

  double value(const Vec2& p) const;
  Vec2 gradient(const Vec2& p) const;
  Mat2 hessian(const Vec2& p) const;

  /// Radial Mathieu q estimated from the local field gradient, 2|q||dE/dx|/(m Omega^2).
  double stability_q(const Vec2& p) const;

  const RfField& field() const { return field_; }
  double prefactor() const { return prefactor_; }

 private:
  RfField field_;
  double prefactor_;
  double q_scale_;
};

/// Pseudopotential plus the per-well axial confinement; the energy landscape
/// that a single ion assigned to a given well experiences.
class TrapPotential {
 public:
  explicit TrapPotential(const TrapModel& model);

  double value(const Vec3& p, std::size_t well) const;
  Vec3 gradient(const Vec3& p, std::size_t well) const;
  Mat3 hessian(const Vec3& p, std::size_t well) const;

  /// DC part only (no pseudopotential).
  double axial_value(const Vec3& p, std::size_t well) const;

  const Pseudopotential& pseudo() const { return pseudo_; }
  std::size_t well_count() const { return wells_.size(); }
  const AxialConfinement& well(std::size_t i) const;
  double mass() const { return mass_; }

 private:
  Pseudopotential pseudo_;
  std::vector<AxialConfinement> wells_;
  double mass_;
};

// Free-function forms of the above.
Vec2 rf_field(const TrapModel& model, const Vec2& p);
double pseudopotential(const TrapModel& model, const Vec2& p);
double total_potential(const TrapModel& model, const Vec3& p, std::size_t well_index);

struct PotentialGrid {
  std::vector<double> x;       // m, length n_x
  std::vector<double> y;       // m, length n_y
  std::vector<double> values;  // J, row-major: values[iy * n_x + ix]
  std::vector<bool> clipped;   // value above clip threshold
  double clip_threshold = 0.0; // J

  std::size_t n_x() const { return x.size(); }
  std::size_t n_y() const { return y.size(); }
  double at(std::size_t ix, std::size_t iy) const { return values[iy * x.size() + ix]; }

  /// Interior grid points strictly lower than all 8 neighbours, as (ix, iy).
  std::vector<std::pair<std::size_t, std::size_t>> local_minima() const;
};

struct GridSpec {
  double x_min = -150e-6;
  double x_max = 150e-6;
  double y_min = 2e-6;
  double y_max = 200e-6;
  std::size_t n_x = 151;
  std::size_t n_y = 100;
  double clip_threshold = 0.1 * units::ev;
};

PotentialGrid pseudopotential_grid(const TrapModel& model, const GridSpec& spec, unsigned threads = 1);

}  // namespace trapscape
