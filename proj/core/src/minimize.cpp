#include "trapscape/minimize.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace trapscape {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::optional<MatrixXd> inverse_if_positive(const MatrixXd& h) {
  Eigen::LLT<MatrixXd> llt(h);
  if (llt.info() != Eigen::Success) return std::nullopt;
  return llt.solve(MatrixXd::Identity(h.rows(), h.cols()));
}

}  // namespace

MinimizeResult minimize_bfgs(const Objective& f, VectorXd x0, const MinimizeOptions& o, const HessianFn& hessian) {
  const Eigen::Index n = x0.size();
  MinimizeResult r;
  r.x = std::move(x0);

  VectorXd g(n);
  r.value = f(r.x, g);
  r.evaluations = 1;
  if (o.record_history) r.history.push_back(r.value);

  MatrixXd h_inv = MatrixXd::Identity(n, n);
  bool seeded = false;
  if (hessian) {
    if (auto inv = inverse_if_positive(hessian(r.x))) {
      h_inv = *inv;
      seeded = true;
    }
  }
  if (!seeded && g.norm() > 0.0) h_inv *= 1.0 / g.norm();

  VectorXd g_new(n);
  VectorXd x_new(n);
  bool stalled = false;
  while (true) {
    r.gradient_norm = g.norm();
    if (r.gradient_norm < o.gradient_tolerance) {
      r.converged = true;
      r.message = "gradient tolerance reached";
      return r;
    }
    if (r.evaluations >= o.max_evaluations) break;

    VectorXd dir = -h_inv * g;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      h_inv = MatrixXd::Identity(n, n) / std::max(r.gradient_norm, std::numeric_limits<double>::min());
      dir = -h_inv * g;
      slope = g.dot(dir);
    }
    if (o.max_step > 0.0 && dir.norm() > o.max_step) {
      const double s = o.max_step / dir.norm();
      dir *= s;
      slope *= s;
    }

    double t = 1.0;
    bool accepted = false;
    double f_new = 0.0;
    for (int k = 0; k <= o.max_backtracks && r.evaluations < o.max_evaluations; ++k) {
      x_new = r.x + t * dir;
      f_new = f(x_new, g_new);
      ++r.evaluations;
      if (std::isfinite(f_new) && f_new <= r.value + o.armijo * t * slope) {
        accepted = true;
        break;
      }
      t *= o.backtrack;
    }
    if (!accepted) {
      stalled = true;
      break;
    }

    const VectorXd s = x_new - r.x;
    const VectorXd y = g_new - g;
    r.x = x_new;
    g = g_new;
    r.value = f_new;
    ++r.iterations;
    if (o.record_history) r.history.push_back(r.value);

    const double sy = s.dot(y);
    if (sy > 1e-14 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const VectorXd hy = h_inv * y;
      h_inv += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
    }
  }

  // Roundoff floor of the objective reached before the gradient tolerance:
  // finish with Newton steps on the exact Hessian, accepted while |g| drops.
  if (stalled && hessian) {
    for (int k = 0; k < 20 && r.evaluations < o.max_evaluations; ++k) {
      const MatrixXd h = hessian(r.x);
      Eigen::LLT<MatrixXd> llt(h);
      if (llt.info() != Eigen::Success) break;
      x_new = r.x - llt.solve(g);
      const double f_new = f(x_new, g_new);
      ++r.evaluations;
      const double tiny = 1e-13 * std::abs(r.value);
      if (!(g_new.norm() < r.gradient_norm) || !(f_new <= r.value + tiny)) break;
      r.x = x_new;
      g = g_new;
      r.value = f_new;
      r.gradient_norm = g.norm();
      ++r.iterations;
      if (o.record_history) r.history.push_back(r.value);
      if (r.gradient_norm < o.gradient_tolerance) {
        r.converged = true;
        r.message = "gradient tolerance reached after Newton polish";
        return r;
      }
    }
  }
  r.gradient_norm = g.norm();
  r.message = stalled ? "line search failed to decrease the objective" : "evaluation budget exhausted";
  return r;
}

}  // namespace trapscape
