#include "trapscape/dc_control.hpp"

#include "trapscape/errors.hpp"
#include "trapscape/log.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace trapscape {

DcBasis::DcBasis(std::vector<RectElectrode> electrodes) : electrodes_(std::move(electrodes)) {
  for (const auto& e : electrodes_) {
    if (!(e.x_max > e.x_min) || !(e.z_max > e.z_min)) {
      throw DomainError("DC electrode '" + e.label + "' has an empty extent");
    }
  }
}

double DcBasis::potential(std::size_t k, const Vec3& p) const { return rect_potential(electrodes_.at(k), 1.0, p); }
Vec3 DcBasis::gradient(std::size_t k, const Vec3& p) const { return rect_potential_gradient(electrodes_.at(k), 1.0, p); }
Mat3 DcBasis::hessian(std::size_t k, const Vec3& p) const { return rect_potential_hessian(electrodes_.at(k), 1.0, p); }

void DcBasis::check(std::span<const double> v) const {
  if (v.size() != electrodes_.size()) {
    std::ostringstream msg;
    msg << "got " << v.size() << " voltages for " << electrodes_.size() << " electrodes";
    throw DomainError(msg.str());
  }
}

double DcBasis::potential(std::span<const double> v, const Vec3& p) const {
  check(v);
  double s = 0.0;
  for (std::size_t k = 0; k < size(); ++k) s += v[k] * potential(k, p);
  return s;
}

Vec3 DcBasis::gradient(std::span<const double> v, const Vec3& p) const {
  check(v);
  Vec3 s = Vec3::Zero();
  for (std::size_t k = 0; k < size(); ++k) s += v[k] * gradient(k, p);
  return s;
}

Mat3 DcBasis::hessian(std::span<const double> v, const Vec3& p) const {
  check(v);
  Mat3 s = Mat3::Zero();
  for (std::size_t k = 0; k < size(); ++k) s += v[k] * hessian(k, p);
  return s;
}

std::string_view to_string(DcQuantity q) {
  switch (q) {
    case DcQuantity::potential: return "potential";
    case DcQuantity::gradient: return "gradient";
    case DcQuantity::curvature: return "curvature";
  }
  return "potential";
}

void DcConstraintSet::add_null(const Vec3& point, const Vec3& gradient, const std::string& label) {
  for (int a = 0; a < 3; ++a) {
    rows.push_back({DcQuantity::gradient, point, Vec3::Unit(a), gradient[a], label});
  }
}

void DcConstraintSet::add_curvature(const Vec3& point, const Vec3& direction, double value, const std::string& label) {
  if (!(direction.norm() > 0.0)) throw DomainError("curvature direction must be nonzero");
  rows.push_back({DcQuantity::curvature, point, direction.normalized(), value, label});
}

void DcConstraintSet::add_potential(const Vec3& point, double value, const std::string& label) {
  rows.push_back({DcQuantity::potential, point, Vec3::Zero(), value, label});
}

void dc_system(const DcBasis& basis, const DcConstraintSet& c, Eigen::MatrixXd& a, Eigen::VectorXd& b) {
  const auto m = static_cast<Eigen::Index>(c.size());
  const auto n = static_cast<Eigen::Index>(basis.size());
  a.resize(m, n);
  b.resize(m);
  const Vec3 stray = c.stray_field.value_or(Vec3::Zero());
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& row = c.rows[static_cast<std::size_t>(i)];
    b[i] = row.target;
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      switch (row.quantity) {
        case DcQuantity::potential: a(i, k) = basis.potential(kk, row.point); break;
        case DcQuantity::gradient: a(i, k) = row.direction.dot(basis.gradient(kk, row.point)); break;
        case DcQuantity::curvature:
          a(i, k) = row.direction.dot(basis.hessian(kk, row.point) * row.direction);
          break;
      }
    }
    // The stray field adds -E.r to the potential and -E to its gradient.
    if (row.quantity == DcQuantity::potential) b[i] += stray.dot(row.point);
    if (row.quantity == DcQuantity::gradient) b[i] += row.direction.dot(stray);
  }
}

DcSolution solve_dc_voltages(const DcBasis& basis, const DcConstraintSet& constraints) {
  if (basis.size() == 0) throw DomainError("DC basis is empty");
  if (constraints.size() == 0) throw DomainError("no DC constraints given");
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  dc_system(basis, constraints, a, b);
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();

  // Rows carry different units; normalise them before any solve.
  Eigen::VectorXd row_norm = a.rowwise().norm();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (row_norm[i] == 0.0) row_norm[i] = 1.0;
  }
  const Eigen::MatrixXd an = row_norm.cwiseInverse().asDiagonal() * a;
  const Eigen::VectorXd bn = b.cwiseQuotient(row_norm);

  DcSolution s;
  Eigen::VectorXd v;
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
  kkt.topLeftCorner(n, n).setIdentity();
  kkt.topRightCorner(n, m) = an.transpose();
  kkt.bottomLeftCorner(m, n) = an;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
  rhs.tail(m) = bn;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(an);
  s.rank = cod.rank();
  if (lu.isInvertible()) {
    v = lu.solve(rhs).head(n);
    s.method = "kkt";
  } else {
    v = cod.solve(bn);
    s.method = "least_squares";
  }

  const Eigen::VectorXd r = a * v - b;
  const double v_norm = v.norm();
  s.voltages.assign(v.data(), v.data() + n);
  s.residuals.assign(r.data(), r.data() + m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double scale = std::max({std::abs(b[i]), a.row(i).norm() * v_norm, std::numeric_limits<double>::min()});
    if (std::abs(r[i]) > 1e-6 * scale) s.infeasible.push_back(static_cast<std::size_t>(i));
  }
  s.feasible = s.infeasible.empty();
  if (!s.feasible) {
    std::ostringstream msg;
    msg << s.infeasible.size() << " DC constraint(s) cannot be met; returning the minimum-norm least-squares voltages";
    log::warn(msg.str());
  }
  return s;
}

std::vector<DcPointReport> dc_field_check(const DcBasis& basis, std::span<const double> voltages,
                                          std::span<const Vec3> points) {
  std::vector<DcPointReport> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    out.push_back({p, basis.potential(voltages, p), basis.gradient(voltages, p), basis.hessian(voltages, p)});
  }
  return out;
}

}  // namespace trapscape
