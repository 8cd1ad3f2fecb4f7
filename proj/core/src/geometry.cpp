#include "trapscape/geometry.hpp"

#include "trapscape/errors.hpp"
#include "trapscape/units.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace trapscape {

namespace {

constexpr double kPi = constants::pi;

void require_above_plane(double y) {
  if (!(y > 0.0)) {
    std::ostringstream msg;
    msg << "potential is defined above the trap plane only (y = " << y << " m)";
    throw DomainError(msg.str());
  }
}

}  // namespace

std::string_view to_string(ElectrodeRole role) {
  switch (role) {
    case ElectrodeRole::rf: return "rf";
    case ElectrodeRole::center_rf: return "center_rf";
    case ElectrodeRole::side_dc: return "side_dc";
    case ElectrodeRole::ground: return "ground";
  }
  return "ground";
}

ElectrodeRole parse_electrode_role(std::string_view text) {
  if (text == "rf") return ElectrodeRole::rf;
  if (text == "center_rf") return ElectrodeRole::center_rf;
  if (text == "side_dc") return ElectrodeRole::side_dc;
  if (text == "ground") return ElectrodeRole::ground;
  throw DomainError("unknown electrode role '" + std::string(text) + "'");
}

std::string_view to_string(GapModel model) {
  return model == GapModel::split ? "split" : "grounded";
}

GapModel parse_gap_model(std::string_view text) {
  if (text == "split") return GapModel::split;
  if (text == "grounded") return GapModel::grounded;
  throw DomainError("unknown gap model '" + std::string(text) + "'");
}

void TrapGeometry::validate() const {
  if (!(gap >= 0.0)) throw DomainError("gap must be non-negative");
  const double needed = gap_model == GapModel::split ? gap : 0.0;
  for (std::size_t i = 0; i < strips.size(); ++i) {
    const auto& s = strips[i];
    if (!(s.x_min < s.x_max)) {
      std::ostringstream msg;
      msg << "strip " << i << " has x_min >= x_max";
      throw DomainError(msg.str());
    }
    if (i > 0) {
      const double separation = s.x_min - strips[i - 1].x_max;
      // Relative slack absorbs the rounding of um -> m conversions.
      if (separation < needed - 1e-9 * std::max(1e-6, std::abs(s.x_min))) {
        std::ostringstream msg;
        msg << "strips " << i - 1 << " and " << i << " overlap"
            << (gap_model == GapModel::split ? " after gap expansion" : "");
        throw DomainError(msg.str());
      }
    }
  }
  for (const auto& r : dc_rects) {
    if (!(r.x_min < r.x_max) || !(r.z_min < r.z_max)) {
      throw DomainError("rectangle '" + r.label + "' is degenerate");
    }
  }
}

std::vector<StripElectrode> TrapGeometry::effective_strips() const {
  if (gap_model == GapModel::grounded) return strips;
  std::vector<StripElectrode> out = strips;
  for (auto& s : out) {
    s.x_min -= 0.5 * gap;
    s.x_max += 0.5 * gap;
  }
  return out;
}

TrapGeometry TrapGeometry::mirrored() const {
  TrapGeometry out = *this;
  for (auto& s : out.strips) s = {-s.x_max, -s.x_min, s.role};
  std::sort(out.strips.begin(), out.strips.end(),
            [](const StripElectrode& a, const StripElectrode& b) { return a.x_min < b.x_min; });
  for (auto& r : out.dc_rects) {
    const double lo = -r.x_max;
    r.x_max = -r.x_min;
    r.x_min = lo;
  }
  return out;
}

TrapGeometry TrapGeometry::scaled(double factor) const {
  if (!(factor > 0.0)) throw DomainError("scale factor must be positive");
  TrapGeometry out = *this;
  for (auto& s : out.strips) {
    s.x_min *= factor;
    s.x_max *= factor;
  }
  out.gap *= factor;
  for (auto& r : out.dc_rects) {
    r.x_min *= factor;
    r.x_max *= factor;
    r.z_min *= factor;
    r.z_max *= factor;
  }
  return out;
}

bool TrapGeometry::is_mirror_symmetric(double tol) const {
  const TrapGeometry m = mirrored();
  if (m.strips.size() != strips.size()) return false;
  for (std::size_t i = 0; i < strips.size(); ++i) {
    if (m.strips[i].role != strips[i].role) return false;
    if (std::abs(m.strips[i].x_min - strips[i].x_min) > tol) return false;
    if (std::abs(m.strips[i].x_max - strips[i].x_max) > tol) return false;
  }
  return true;
}

TrapGeometry canonical_geometry() {
  constexpr double um = units::um;
  constexpr double center = 78.0;
  constexpr double side = 26.0;
  constexpr double rf = 409.0;
  constexpr double gap = 4.0;

  const double c = 0.5 * center;
  const double side_lo = c + gap;
  const double side_hi = side_lo + side;
  const double rf_lo = side_hi + gap;
  const double rf_hi = rf_lo + rf;

  TrapGeometry g;
  g.gap = gap * um;
  g.gap_model = GapModel::grounded;
  g.strips = {
      {-rf_hi * um, -rf_lo * um, ElectrodeRole::rf},
      {-side_hi * um, -side_lo * um, ElectrodeRole::side_dc},
      {-c * um, c * um, ElectrodeRole::center_rf},
      {side_lo * um, side_hi * um, ElectrodeRole::side_dc},
      {rf_lo * um, rf_hi * um, ElectrodeRole::rf},
  };
  return g;
}

double strip_potential(const StripElectrode& strip, double v, const Vec2& p) {
  require_above_plane(p.y());
  const double x = p.x();
  const double y = p.y();
  return v / kPi * (std::atan((strip.x_max - x) / y) - std::atan((strip.x_min - x) / y));
}

Vec2 strip_potential_gradient(const StripElectrode& strip, double v, const Vec2& p) {
  require_above_plane(p.y());
  const double y = p.y();
  const double b = strip.x_max - p.x();
  const double a = strip.x_min - p.x();
  const double rb = y * y + b * b;
  const double ra = y * y + a * a;
  return {v / kPi * (-y / rb + y / ra), v / kPi * (-b / rb + a / ra)};
}

// Each corner (X, Z) = (x_i - x, z_j - z) contributes atan(X Z / (y R)),
// R = sqrt(X^2 + y^2 + Z^2), with sign (-1)^(i+j).
namespace {

struct Corner {
  double dx;
  double dz;
  double sign;
};

template <typename Fn>
void for_each_corner(const RectElectrode& r, const Vec3& p, Fn&& fn) {
  const Corner corners[4] = {
      {r.x_max - p.x(), r.z_max - p.z(), +1.0},
      {r.x_min - p.x(), r.z_max - p.z(), -1.0},
      {r.x_max - p.x(), r.z_min - p.z(), -1.0},
      {r.x_min - p.x(), r.z_min - p.z(), +1.0},
  };
  for (const auto& c : corners) fn(c);
}

}  // namespace

double rect_potential(const RectElectrode& rect, double v, const Vec3& p) {
  require_above_plane(p.y());
  const double y = p.y();
  double sum = 0.0;
  for_each_corner(rect, p, [&](const Corner& c) {
    const double r = std::sqrt(c.dx * c.dx + y * y + c.dz * c.dz);
    sum += c.sign * std::atan(c.dx * c.dz / (y * r));
  });
  return v / (2.0 * kPi) * sum;
}

Vec3 rect_potential_gradient(const RectElectrode& rect, double v, const Vec3& p) {
  require_above_plane(p.y());
  const double y = p.y();
  const double y2 = y * y;
  Vec3 g = Vec3::Zero();
  for_each_corner(rect, p, [&](const Corner& c) {
    const double X = c.dx;
    const double Z = c.dz;
    const double r = std::sqrt(X * X + y2 + Z * Z);
    const double px = X * X + y2;
    const double pz = Z * Z + y2;
    // d/dX, d/dZ of the corner term; x = x_i - X so d/dx = -d/dX.
    const double dX = y * Z / (px * r);
    const double dZ = y * X / (pz * r);
    const double dy = -X * Z * (r * r + y2) / (px * pz * r);
    g += c.sign * Vec3(-dX, dy, -dZ);
  });
  return v / (2.0 * kPi) * g;
}

Mat3 rect_potential_hessian(const RectElectrode& rect, double v, const Vec3& p) {
  require_above_plane(p.y());
  const double y = p.y();
  const double y2 = y * y;
  Mat3 h = Mat3::Zero();
  for_each_corner(rect, p, [&](const Corner& c) {
    const double X = c.dx;
    const double Z = c.dz;
    const double r2 = X * X + y2 + Z * Z;
    const double r = std::sqrt(r2);
    const double r3 = r2 * r;
    const double px = X * X + y2;
    const double pz = Z * Z + y2;

    const double aXX = -y * Z * X * (2.0 * r2 + px) / (px * px * r3);
    const double bZZ = -y * X * Z * (2.0 * r2 + pz) / (pz * pz * r3);
    const double aXZ = y / r3;
    const double aXy = Z * (px * r2 - 2.0 * y2 * r2 - px * y2) / (px * px * r3);
    const double bZy = X * (pz * r2 - 2.0 * y2 * r2 - pz * y2) / (pz * pz * r3);

    Mat3 t;
    // Order (x, y, z); each x or z derivative flips sign relative to X or Z.
    t(0, 0) = aXX;
    t(2, 2) = bZZ;
    t(1, 1) = -(aXX + bZZ);
    t(0, 2) = t(2, 0) = aXZ;
    t(0, 1) = t(1, 0) = -aXy;
    t(2, 1) = t(1, 2) = -bZy;
    h += c.sign * t;
  });
  return v / (2.0 * kPi) * h;
}

}  // namespace trapscape
