#pragma once

#include <Eigen/Core>

#include <string>
#include <string_view>
#include <vector>

namespace trapscape {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

enum class ElectrodeRole { rf, center_rf, side_dc, ground };

std::string_view to_string(ElectrodeRole role);
ElectrodeRole parse_electrode_role(std::string_view text);

/// Electrode strip in the trap plane, infinite along z, covering [x_min, x_max].
struct StripElectrode {
  double x_min = 0.0;
  double x_max = 0.0;
  ElectrodeRole role = ElectrodeRole::ground;

  double width() const { return x_max - x_min; }
  bool operator==(const StripElectrode&) const = default;
};

/// Rectangular pad in the trap plane (y = 0).
struct RectElectrode {
  double x_min = 0.0;
  double x_max = 0.0;
  double z_min = 0.0;
  double z_max = 0.0;
  std::string label;

  bool operator==(const RectElectrode&) const = default;
};

// How the insulating gaps between metal strips enter the gapless-plane model.
//   split:    each strip grows by gap/2 on both sides, so neighbours tile the plane.
//   grounded: strips keep their metal extents; gaps belong to the grounded plane.
enum class GapModel { split, grounded };

std::string_view to_string(GapModel model);
GapModel parse_gap_model(std::string_view text);

struct TrapGeometry {
  std::vector<StripElectrode> strips;  // sorted by x, metal extents
  double gap = 4e-6;
  GapModel gap_model = GapModel::grounded;
  std::vector<RectElectrode> dc_rects;

  /// Throws DomainError when strips are unsorted, degenerate, or overlap once expanded.
  void validate() const;

  /// Strips as seen by the field solver (after applying the gap model).
  std::vector<StripElectrode> effective_strips() const;

  /// Reflection x -> -x of every electrode, re-sorted.
  TrapGeometry mirrored() const;

  /// Uniform scaling of every length (strips, gap, rectangles).
  TrapGeometry scaled(double factor) const;

  bool is_mirror_symmetric(double tol = 1e-12) const;

  bool operator==(const TrapGeometry&) const = default;
};

/// The double-well surface trap: 78 um centre-RF strip, 26 um side DC strips
/// and 409 um RF strips, 4 um gaps, symmetric about x = 0.
TrapGeometry canonical_geometry();

/// Unit-free potential of a strip at voltage v, evaluated at (x, y) with y > 0.
double strip_potential(const StripElectrode& strip, double v, const Vec2& p);

/// Gradient of strip_potential with respect to (x, y).
Vec2 strip_potential_gradient(const StripElectrode& strip, double v, const Vec2& p);

/// Potential of a rectangle at voltage v in an otherwise grounded plane, at (x, y, z), y > 0.
double rect_potential(const RectElectrode& rect, double v, const Vec3& p);

/// Gradient of rect_potential with respect to (x, y, z).
Vec3 rect_potential_gradient(const RectElectrode& rect, double v, const Vec3& p);

/// Hessian of rect_potential with respect to (x, y, z).
Mat3 rect_potential_hessian(const RectElectrode& rect, double v, const Vec3& p);

}  // namespace trapscape
