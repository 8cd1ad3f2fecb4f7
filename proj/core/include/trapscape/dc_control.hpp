#pragma once

#include "trapscape/geometry.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace trapscape {

/// Rectangular DC pads, each contributing its 1 V potential.
class DcBasis {
 public:
  DcBasis() = default;
  explicit DcBasis(std::vector<RectElectrode> electrodes);

  std::size_t size() const { return electrodes_.size(); }
  const std::vector<RectElectrode>& electrodes() const { return electrodes_; }

  double potential(std::size_t k, const Vec3& p) const;
  Vec3 gradient(std::size_t k, const Vec3& p) const;
  Mat3 hessian(std::size_t k, const Vec3& p) const;

  /// Sums over the basis with the given voltages.
  double potential(std::span<const double> v, const Vec3& p) const;
  Vec3 gradient(std::span<const double> v, const Vec3& p) const;
  Mat3 hessian(std::span<const double> v, const Vec3& p) const;

 private:
  void check(std::span<const double> v) const;
  std::vector<RectElectrode> electrodes_;
};

enum class DcQuantity { potential, gradient, curvature };
std::string_view to_string(DcQuantity q);

/// One linear row: potential(p), d.grad(p) or d.H(p).d equal to `target`.
struct DcConstraint {
  DcQuantity quantity = DcQuantity::gradient;
  Vec3 point = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();  // unit vector; unused for potential rows
  double target = 0.0;             // V, V/m or V/m^2
  std::string label;
};

struct DcConstraintSet {
  std::vector<DcConstraint> rows;
  /// Uniform stray field (V/m) that the DC field must cancel at the constrained points.
  std::optional<Vec3> stray_field;

  /// Three gradient rows, one per axis, with targets `gradient`.
  void add_null(const Vec3& point, const Vec3& gradient = Vec3::Zero(), const std::string& label = {});
  void add_curvature(const Vec3& point, const Vec3& direction, double value, const std::string& label = {});
  void add_potential(const Vec3& point, double value, const std::string& label = {});
  std::size_t size() const { return rows.size(); }
};

struct DcSolution {
  std::vector<double> voltages;
  std::vector<double> residuals;     // A v - b per row, in the row's units
  std::vector<std::size_t> infeasible;  // rows whose residual exceeds 1e-6 of their scale
  bool feasible = true;
  std::string method;                // "kkt" or "least_squares"
  Eigen::Index rank = 0;             // of the constraint matrix
};

/// Constraint matrix and right-hand side (stray field folded into b).
void dc_system(const DcBasis& basis, const DcConstraintSet& constraints, Eigen::MatrixXd& a, Eigen::VectorXd& b);

/// Minimum-norm voltages meeting the constraints. Uses the KKT system when it
/// is nonsingular, otherwise the minimum-norm least-squares solution, and
/// reports the rows it cannot satisfy.
DcSolution solve_dc_voltages(const DcBasis& basis, const DcConstraintSet& constraints);

struct DcPointReport {
  Vec3 point;
  double potential = 0.0;
  Vec3 gradient = Vec3::Zero();
  Mat3 hessian = Mat3::Zero();
};

/// Potential, gradient and Hessian of the summed basis at each point.
std::vector<DcPointReport> dc_field_check(const DcBasis& basis, std::span<const double> voltages,
                                          std::span<const Vec3> points);

}  // namespace trapscape
