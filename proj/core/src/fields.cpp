#include "trapscape/fields.hpp"

#include "trapscape/errors.hpp"
#include "trapscape/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace trapscape {

namespace {

using cplx = std::complex<double>;

void require_above_plane(const Vec2& p) {
  if (!(p.y() > 0.0)) {
    std::ostringstream msg;
    msg << "field is defined above the trap plane only (y = " << p.y() << " m)";
    throw DomainError(msg.str());
  }
}

double rf_voltage(ElectrodeRole role, const DriveConfig& drive) {
  switch (role) {
    case ElectrodeRole::rf: return drive.v_rf;
    case ElectrodeRole::center_rf: return drive.ratio_r * drive.v_rf;
    case ElectrodeRole::side_dc:
    case ElectrodeRole::ground: return 0.0;
  }
  return 0.0;
}

}  // namespace

void DriveConfig::validate() const {
  if (!(v_rf > 0.0)) throw DomainError("v_rf must be positive");
  if (!(omega_rf > 0.0)) throw DomainError("omega_rf must be positive");
  if (!(ratio_r >= 0.0 && ratio_r <= 1.5)) throw DomainError("ratio R must lie in [0, 1.5]");
}

IonSpecies IonSpecies::calcium40() {
  return {40.0 * constants::atomic_mass_unit, constants::elementary_charge};
}

void IonSpecies::validate() const {
  if (!(mass > 0.0)) throw DomainError("ion mass must be positive");
  if (charge == 0.0 || !std::isfinite(charge)) throw DomainError("ion charge must be non-zero");
}

void AxialConfinement::validate() const {
  if (!(omega_z >= 0.0)) throw DomainError("omega_z must be non-negative");
  if (!(alpha >= 0.0 && beta >= 0.0)) throw DomainError("deconfinement split must be non-negative");
  const double s = alpha + beta;
  if (s != 0.0 && std::abs(s - 1.0) > 1e-12) {
    throw DomainError("deconfinement split must sum to 1 (or be (0, 0) to disable)");
  }
}

void TrapModel::validate() const {
  geometry.validate();
  drive.validate();
  species.validate();
  for (const auto& w : axial_wells) w.validate();
}

TrapModel canonical_model(double ratio_r, double v_rf, double f_rf_hz) {
  TrapModel m;
  m.geometry = canonical_geometry();
  m.drive = {v_rf, ratio_r, units::angular(f_rf_hz)};
  m.species = IonSpecies::calcium40();
  return m;
}

// ---------------------------------------------------------------- RfField

RfField::RfField(const TrapGeometry& geometry, const DriveConfig& drive) {
  // Strip [a, b] at voltage v contributes (v/pi) [1/(w - b) - 1/(w - a)] to G.
  for (const auto& s : geometry.effective_strips()) {
    const double v = rf_voltage(s.role, drive);
    if (v == 0.0) continue;
    poles_.emplace_back(s.x_max, v / constants::pi);
    poles_.emplace_back(s.x_min, -v / constants::pi);
  }
  std::sort(poles_.begin(), poles_.end());
  // Shared edges of abutting strips merge into one pole.
  std::vector<std::pair<double, double>> merged;
  for (const auto& p : poles_) {
    if (!merged.empty() && merged.back().first == p.first) {
      merged.back().second += p.second;
    } else {
      merged.push_back(p);
    }
  }
  std::erase_if(merged, [](const auto& p) { return p.second == 0.0; });
  poles_ = std::move(merged);
}

cplx RfField::complex_field(const Vec2& p) const {
  require_above_plane(p);
  const cplx w(p.x(), p.y());
  cplx g = 0.0;
  for (const auto& [edge, residue] : poles_) g += residue / (w - edge);
  return g;
}

RfField::Sample RfField::sample(const Vec2& p) const {
  require_above_plane(p);
  const cplx w(p.x(), p.y());
  Sample s{0.0, 0.0, 0.0};
  for (const auto& [edge, residue] : poles_) {
    const cplx inv = 1.0 / (w - edge);
    const cplx inv2 = inv * inv;
    s.g += residue * inv;
    s.dg -= residue * inv2;
    s.d2g += 2.0 * residue * inv2 * inv;
  }
  return s;
}

Vec2 RfField::field(const Vec2& p) const {
  const cplx g = complex_field(p);
  return {-g.imag(), -g.real()};
}

Mat2 RfField::jacobian(const Vec2& p) const {
  const cplx dg = sample(p).dg;
  Mat2 j;
  j << -dg.imag(), -dg.real(),
       -dg.real(), dg.imag();
  return j;
}

// ---------------------------------------------------------- Pseudopotential

Pseudopotential::Pseudopotential(const TrapModel& model)
    : field_(model.geometry, model.drive),
      prefactor_(model.species.charge * model.species.charge /
                 (4.0 * model.species.mass * model.drive.omega_rf * model.drive.omega_rf)),
      q_scale_(2.0 * std::abs(model.species.charge) /
               (model.species.mass * model.drive.omega_rf * model.drive.omega_rf)) {}

double Pseudopotential::value(const Vec2& p) const {
  return prefactor_ * std::norm(field_.complex_field(p));
}

Vec2 Pseudopotential::gradient(const Vec2& p) const {
  const auto s = field_.sample(p);
  const cplx c = std::conj(s.g) * s.dg;
  return 2.0 * prefactor_ * Vec2(c.real(), -c.imag());
}

Mat2 Pseudopotential::hessian(const Vec2& p) const {
  const auto s = field_.sample(p);
  const double dg2 = std::norm(s.dg);
  const cplx c = std::conj(s.g) * s.d2g;
  Mat2 h;
  h << dg2 + c.real(), -c.imag(),
       -c.imag(), dg2 - c.real();
  return 2.0 * prefactor_ * h;
}

double Pseudopotential::stability_q(const Vec2& p) const {
  return q_scale_ * std::abs(field_.sample(p).dg);
}

// ------------------------------------------------------------ TrapPotential

TrapPotential::TrapPotential(const TrapModel& model)
    : pseudo_(model), wells_(model.axial_wells), mass_(model.species.mass) {}

const AxialConfinement& TrapPotential::well(std::size_t i) const {
  if (i >= wells_.size()) {
    std::ostringstream msg;
    msg << "well index " << i << " out of range (" << wells_.size() << " wells)";
    throw DomainError(msg.str());
  }
  return wells_[i];
}

double TrapPotential::axial_value(const Vec3& p, std::size_t i) const {
  const auto& w = well(i);
  const double dx = p.x() - w.center_xy.x();
  const double dy = p.y() - w.center_xy.y();
  const double dz = p.z() - w.center_z;
  return 0.5 * mass_ * w.omega_z * w.omega_z * (dz * dz - w.alpha * dx * dx - w.beta * dy * dy);
}

double TrapPotential::value(const Vec3& p, std::size_t i) const {
  const double axial = axial_value(p, i);
  return pseudo_.value(p.head<2>()) + axial;
}

Vec3 TrapPotential::gradient(const Vec3& p, std::size_t i) const {
  const auto& w = well(i);
  const double k = mass_ * w.omega_z * w.omega_z;
  const Vec2 gp = pseudo_.gradient(p.head<2>());
  return {gp.x() - k * w.alpha * (p.x() - w.center_xy.x()),
          gp.y() - k * w.beta * (p.y() - w.center_xy.y()),
          k * (p.z() - w.center_z)};
}

Mat3 TrapPotential::hessian(const Vec3& p, std::size_t i) const {
  const auto& w = well(i);
  const double k = mass_ * w.omega_z * w.omega_z;
  Mat3 h = Mat3::Zero();
  h.topLeftCorner<2, 2>() = pseudo_.hessian(p.head<2>());
  h(0, 0) -= k * w.alpha;
  h(1, 1) -= k * w.beta;
  h(2, 2) = k;
  return h;
}

Vec2 rf_field(const TrapModel& model, const Vec2& p) { return RfField(model).field(p); }

double pseudopotential(const TrapModel& model, const Vec2& p) {
  return Pseudopotential(model).value(p);
}

double total_potential(const TrapModel& model, const Vec3& p, std::size_t well_index) {
  return TrapPotential(model).value(p, well_index);
}

// ------------------------------------------------------------------- grid

std::vector<std::pair<std::size_t, std::size_t>> PotentialGrid::local_minima() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t nx = n_x();
  const std::size_t ny = n_y();
  for (std::size_t iy = 1; iy + 1 < ny; ++iy) {
    for (std::size_t ix = 1; ix + 1 < nx; ++ix) {
      const double v = at(ix, iy);
      bool lowest = true;
      for (int dy = -1; dy <= 1 && lowest; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          if (at(ix + dx, iy + dy) <= v) {
            lowest = false;
            break;
          }
        }
      }
      if (lowest) out.emplace_back(ix, iy);
    }
  }
  return out;
}

PotentialGrid pseudopotential_grid(const TrapModel& model, const GridSpec& spec, unsigned threads) {
  if (spec.n_x < 2 || spec.n_y < 2) throw DomainError("grid needs at least 2 points per axis");
  if (!(spec.x_min < spec.x_max) || !(spec.y_min < spec.y_max)) {
    throw DomainError("grid ranges must be increasing");
  }
  if (!(spec.y_min > 0.0)) throw DomainError("grid y range must be strictly positive");

  const Pseudopotential pseudo(model);
  PotentialGrid grid;
  grid.clip_threshold = spec.clip_threshold;
  grid.x.resize(spec.n_x);
  grid.y.resize(spec.n_y);
  for (std::size_t i = 0; i < spec.n_x; ++i) {
    grid.x[i] = spec.x_min + (spec.x_max - spec.x_min) * static_cast<double>(i) / static_cast<double>(spec.n_x - 1);
  }
  for (std::size_t i = 0; i < spec.n_y; ++i) {
    grid.y[i] = spec.y_min + (spec.y_max - spec.y_min) * static_cast<double>(i) / static_cast<double>(spec.n_y - 1);
  }
  grid.values.assign(spec.n_x * spec.n_y, 0.0);
  parallel_for(spec.n_y, threads, [&](std::size_t iy) {
    for (std::size_t ix = 0; ix < spec.n_x; ++ix) {
      grid.values[iy * spec.n_x + ix] = pseudo.value({grid.x[ix], grid.y[iy]});
    }
  });
  grid.clipped.resize(grid.values.size());
  for (std::size_t i = 0; i < grid.values.size(); ++i) grid.clipped[i] = grid.values[i] > spec.clip_threshold;
  return grid;
}

}  // namespace trapscape
