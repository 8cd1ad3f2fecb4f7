#pragma once

// Independent numerical oracles shared by the test binaries.

#include <trapscape/trapscape.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

using trapscape::Vec2;
using trapscape::Vec3;

inline double rel_err(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

// Relative error of a vector against a reference, normalised by the reference norm.
template <typename A, typename B>
double vec_rel_err(const A& a, const B& b) {
  const double s = b.norm();
  return s == 0.0 ? (a - b).norm() : (a - b).norm() / s;
}

template <int N>
Eigen::Matrix<double, N, 1> fd_gradient(const std::function<double(const Eigen::Matrix<double, N, 1>&)>& f,
                                        const Eigen::Matrix<double, N, 1>& p, double h) {
  Eigen::Matrix<double, N, 1> g;
  for (int i = 0; i < N; ++i) {
    auto a = p, b = p;
    a[i] += h;
    b[i] -= h;
    g[i] = (f(a) - f(b)) / (2 * h);
  }
  return g;
}

inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& p,
                                   double h) {
  Eigen::VectorXd g(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    Eigen::VectorXd a = p, b = p;
    a[i] += h;
    b[i] -= h;
    g[i] = (f(a) - f(b)) / (2 * h);
  }
  return g;
}

// Jacobian of a vector field by central differences, column j = d/dp_j.
inline Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& p, double h) {
  const Eigen::Index n = p.size();
  Eigen::MatrixXd j(f(p).size(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd a = p, b = p;
    a[i] += h;
    b[i] -= h;
    j.col(i) = (f(a) - f(b)) / (2 * h);
  }
  return j;
}

// 7-point Laplacian by central differences.
inline double fd_laplacian(const std::function<double(const Vec3&)>& f, const Vec3& p, double h) {
  double s = -6.0 * f(p);
  for (int i = 0; i < 3; ++i) {
    Vec3 a = p, b = p;
    a[i] += h;
    b[i] -= h;
    s += f(a) + f(b);
  }
  return s / (h * h);
}

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    x[i] = t;
    w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
  return {x, w};
}

// Dirichlet problem on the half space: potential of a held rectangle from the
// Poisson kernel y / (2 pi r^3), integrated by composite Gauss-Legendre.
inline double rect_potential_quadrature(double x0, double x1, double z0, double z1, double v, const Vec3& p,
                                        int panels = 24, int order = 16) {
  const auto [gx, gw] = gauss_legendre(order);
  const double hx = (x1 - x0) / panels;
  const double hz = (z1 - z0) / panels;
  const double y2 = p.y() * p.y();
  double sum = 0.0;
  for (int a = 0; a < panels; ++a) {
    for (int i = 0; i < order; ++i) {
      const double xs = x0 + hx * (a + 0.5 * (gx[i] + 1.0));
      const double dx2 = (p.x() - xs) * (p.x() - xs);
      for (int b = 0; b < panels; ++b) {
        for (int j = 0; j < order; ++j) {
          const double zs = z0 + hz * (b + 0.5 * (gx[j] + 1.0));
          const double r2 = dx2 + y2 + (p.z() - zs) * (p.z() - zs);
          sum += gw[i] * gw[j] / (r2 * std::sqrt(r2));
        }
      }
    }
  }
  return v * p.y() / (2.0 * M_PI) * sum * 0.25 * hx * hz;
}

// Nelder-Mead simplex minimiser.
inline Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                                   double step, int max_iter = 200000, double ftol = 1e-15) {
  const Eigen::Index n = x0.size();
  std::vector<Eigen::VectorXd> s(n + 1, x0);
  for (Eigen::Index i = 0; i < n; ++i) s[i + 1][i] += step;
  std::vector<double> fs(n + 1);
  for (Eigen::Index i = 0; i <= n; ++i) fs[i] = f(s[i]);
  for (int it = 0; it < max_iter; ++it) {
    std::vector<Eigen::Index> idx(n + 1);
    for (Eigen::Index i = 0; i <= n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return fs[a] < fs[b]; });
    std::vector<Eigen::VectorXd> s2;
    std::vector<double> f2;
    for (auto i : idx) {
      s2.push_back(s[i]);
      f2.push_back(fs[i]);
    }
    s = std::move(s2);
    fs = std::move(f2);
    if (std::abs(fs[n] - fs[0]) <= ftol * (std::abs(fs[0]) + 1e-300)) {
      double spread = 0.0;
      for (Eigen::Index i = 1; i <= n; ++i) spread = std::max(spread, (s[i] - s[0]).norm());
      if (spread < 1e-13) break;
    }
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) c += s[i];
    c /= static_cast<double>(n);
    const Eigen::VectorXd xr = c + (c - s[n]);
    const double fr = f(xr);
    if (fr < fs[0]) {
      const Eigen::VectorXd xe = c + 2.0 * (c - s[n]);
      const double fe = f(xe);
      if (fe < fr) {
        s[n] = xe;
        fs[n] = fe;
      } else {
        s[n] = xr;
        fs[n] = fr;
      }
    } else if (fr < fs[n - 1]) {
      s[n] = xr;
      fs[n] = fr;
    } else {
      const Eigen::VectorXd xc = c + 0.5 * (s[n] - c);
      const double fc = f(xc);
      if (fc < fs[n]) {
        s[n] = xc;
        fs[n] = fc;
      } else {
        for (Eigen::Index i = 1; i <= n; ++i) {
          s[i] = s[0] + 0.5 * (s[i] - s[0]);
          fs[i] = f(s[i]);
        }
      }
    }
  }
  return s[0];
}

// Axial equilibrium of N ions in a harmonic well, in units of the chain length
// scale: minimise sum z^2 / 2 + sum_{i<j} 1 / |z_i - z_j|.
inline std::vector<double> harmonic_chain(int n) {
  auto energy = [n](const Eigen::VectorXd& z) {
    double e = 0.5 * z.squaredNorm();
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) e += 1.0 / std::abs(z[i] - z[j]);
    return e;
  };
  Eigen::VectorXd z0(n);
  for (int i = 0; i < n; ++i) z0[i] = -1.0 + 2.0 * i / std::max(1, n - 1);
  Eigen::VectorXd z = z0;
  for (int restart = 0; restart < 6; ++restart) z = nelder_mead(energy, z, 0.05);
  std::vector<double> out(z.data(), z.data() + n);
  std::sort(out.begin(), out.end());
  return out;
}

inline std::mt19937_64 rng(std::uint64_t seed = 12345) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

// Single well on the R = 0 node, for chain tests.
inline trapscape::TrapModel single_well_model(double f_z_hz, double alpha = 0.5, double beta = 0.5) {
  auto model = trapscape::canonical_model(0.0);
  trapscape::NodeSearchOptions o;
  o.compute_barrier = false;
  const auto nodes = trapscape::find_nodes(model, o);
  model.axial_wells = trapscape::wells_at_nodes(nodes, trapscape::units::angular(f_z_hz), 0.0, alpha, beta);
  return model;
}

}  // namespace oracle
