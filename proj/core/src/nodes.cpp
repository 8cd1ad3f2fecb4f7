#include "trapscape/nodes.hpp"

#include "trapscape/errors.hpp"
#include "trapscape/log.hpp"
#include "trapscape/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

namespace trapscape {

namespace {

using cplx = std::complex<double>;

enum class Refinement { converged, rejected, stalled };

struct RefineResult {
  Refinement status = Refinement::rejected;
  Vec2 point = Vec2::Zero();
  double residual = 0.0;
  int steps = 0;
};

bool inside(const Vec2& p, const NodeSearchOptions& o, double margin) {
  return p.x() >= o.x_min - margin && p.x() <= o.x_max + margin && p.y() >= o.y_min - margin &&
         p.y() <= o.y_max + margin && p.y() > 0.0;
}

// Newton on the analytic function G(w): w <- w - G / G', steps capped at a few
// grid pitches and kept above the plane.
RefineResult refine(const RfField& field, Vec2 start, const NodeSearchOptions& o) {
  RefineResult r;
  cplx w(start.x(), start.y());
  const double max_step = 4.0 * o.pitch;
  int polish = 0;
  for (int it = 0; it < o.max_newton_steps; ++it) {
    const auto s = field.sample({w.real(), w.imag()});
    r.residual = std::abs(s.g);
    r.steps = it;
    if (r.residual < o.field_tolerance) {
      // A couple of extra steps push the root to full precision.
      if (++polish > 3) break;
    }
    if (std::abs(s.dg) == 0.0) break;
    cplx step = -s.g / s.dg;
    if (std::abs(step) > max_step) step *= max_step / std::abs(step);
    while (w.imag() + step.imag() <= 0.0) step *= 0.5;
    w += step;
    if (!inside({w.real(), w.imag()}, o, 2.0 * o.pitch)) {
      r.status = Refinement::rejected;
      r.point = {w.real(), w.imag()};
      return r;
    }
    if (polish > 0 && std::abs(step) <= 1e-15 * std::abs(w)) break;
  }
  r.point = {w.real(), w.imag()};
  r.residual = field.magnitude(r.point);
  if (r.residual < o.field_tolerance) {
    r.status = inside(r.point, o, 0.0) ? Refinement::converged : Refinement::rejected;
  } else {
    // Close to a null but not converging: report instead of silently dropping.
    r.status = r.residual < 1.0 ? Refinement::stalled : Refinement::rejected;
  }
  return r;
}

// Saddle of the pseudopotential between two nodes. A bottleneck (minimax)
// path is found on a grid spanning the pair and the region above it, then
// Newton on grad(Phi) polishes the highest grid point of that path.
std::pair<Vec2, double> saddle_between(const Pseudopotential& pseudo, const Vec2& a, const Vec2& b) {
  const double length = (b - a).norm();
  const double x0 = std::min(a.x(), b.x()) - length;
  const double x1 = std::max(a.x(), b.x()) + length;
  const double y0 = 0.05 * std::min(a.y(), b.y());
  const double y1 = std::max(a.y(), b.y()) + 3.0 * length;
  const double h = length / 40.0;
  const int nx = static_cast<int>(std::ceil((x1 - x0) / h)) + 1;
  const int ny = static_cast<int>(std::ceil((y1 - y0) / h)) + 1;
  const auto point = [&](int i) { return Vec2(x0 + (i % nx) * h, y0 + (i / nx) * h); };
  const auto index = [&](const Vec2& p) {
    const int ix = std::clamp(static_cast<int>(std::lround((p.x() - x0) / h)), 0, nx - 1);
    const int iy = std::clamp(static_cast<int>(std::lround((p.y() - y0) / h)), 0, ny - 1);
    return iy * nx + ix;
  };

  const std::size_t cells = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
  std::vector<double> phi(cells);
  for (std::size_t i = 0; i < cells; ++i) phi[i] = pseudo.value(point(static_cast<int>(i)));

  // Dijkstra with path cost = highest value visited.
  const int source = index(a);
  const int target = index(b);
  std::vector<double> cost(cells, std::numeric_limits<double>::infinity());
  std::vector<int> parent(cells, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  cost[static_cast<std::size_t>(source)] = phi[static_cast<std::size_t>(source)];
  queue.emplace(cost[static_cast<std::size_t>(source)], source);
  while (!queue.empty()) {
    const auto [c, i] = queue.top();
    queue.pop();
    if (i == target) break;
    if (c > cost[static_cast<std::size_t>(i)]) continue;
    const int ix = i % nx;
    const int iy = i / nx;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int jx = ix + dx;
        const int jy = iy + dy;
        if ((dx == 0 && dy == 0) || jx < 0 || jx >= nx || jy < 0 || jy >= ny) continue;
        const int j = jy * nx + jx;
        const double cj = std::max(c, phi[static_cast<std::size_t>(j)]);
        if (cj < cost[static_cast<std::size_t>(j)]) {
          cost[static_cast<std::size_t>(j)] = cj;
          parent[static_cast<std::size_t>(j)] = i;
          queue.emplace(cj, j);
        }
      }
    }
  }
  int top = target;
  for (int i = target; i != -1; i = parent[static_cast<std::size_t>(i)]) {
    if (phi[static_cast<std::size_t>(i)] > phi[static_cast<std::size_t>(top)]) top = i;
  }
  const Vec2 best = point(top);
  const double best_val = phi[static_cast<std::size_t>(top)];

  Vec2 p = best;
  for (int it = 0; it < 50; ++it) {
    const Vec2 step = -pseudo.hessian(p).fullPivLu().solve(pseudo.gradient(p));
    if (!step.allFinite() || step.norm() > 4.0 * h) break;
    p += step;
    if (p.y() <= 0.0) break;
    if (step.norm() < 1e-10 * length) {
      if (pseudo.hessian(p).determinant() < 0.0) return {p, pseudo.value(p)};
      break;
    }
  }
  log::warn("saddle refinement did not converge; barrier taken from the grid bottleneck path");
  return {best, best_val};
}

// Bisection probes: no barrier, no q warnings.
NodeSearchOptions topology_only(NodeSearchOptions o) {
  o.compute_barrier = false;
  o.stability_warning_q = std::numeric_limits<double>::infinity();
  return o;
}

NodeTopology classify(std::vector<Vec2>& nodes, const NodeSearchOptions& o) {
  if (nodes.empty()) return NodeTopology::none;
  if (nodes.size() == 1) return NodeTopology::single;
  if (nodes.size() > 2) {
    std::ostringstream msg;
    msg << "found " << nodes.size() << " RF nodes in the search window; at most two are supported";
    throw NumericalError(msg.str());
  }
  const Vec2 d = nodes[1] - nodes[0];
  if (d.norm() < o.degenerate_distance) {
    nodes = {0.5 * (nodes[0] + nodes[1])};
    return NodeTopology::single;
  }
  return std::abs(d.x()) >= std::abs(d.y()) ? NodeTopology::horizontal_pair : NodeTopology::vertical_pair;
}

}  // namespace

std::string_view to_string(NodeTopology topology) {
  switch (topology) {
    case NodeTopology::none: return "none";
    case NodeTopology::single: return "single";
    case NodeTopology::vertical_pair: return "vertical_pair";
    case NodeTopology::horizontal_pair: return "horizontal_pair";
  }
  return "none";
}

NodeSet find_nodes(const TrapModel& model, const NodeSearchOptions& o) {
  if (!(o.pitch > 0.0) || !(o.x_min < o.x_max) || !(o.y_min < o.y_max) || !(o.y_min > 0.0)) {
    throw DomainError("invalid node search window");
  }
  const Pseudopotential pseudo(model);
  const RfField& field = pseudo.field();

  GridSpec spec;
  spec.x_min = o.x_min;
  spec.x_max = o.x_max;
  spec.y_min = o.y_min;
  spec.y_max = o.y_max;
  spec.n_x = static_cast<std::size_t>(std::llround((o.x_max - o.x_min) / o.pitch)) + 1;
  spec.n_y = static_cast<std::size_t>(std::llround((o.y_max - o.y_min) / o.pitch)) + 1;
  spec.clip_threshold = 0.0;
  const PotentialGrid grid = pseudopotential_grid(model, spec);

  std::vector<Vec2> found;
  auto add = [&](const Vec2& p) {
    for (const auto& q : found) {
      if ((q - p).norm() < o.merge_distance) return;
    }
    found.push_back(p);
  };
  auto attempt = [&](const Vec2& start) {
    const RefineResult r = refine(field, start, o);
    if (r.status == Refinement::converged) {
      add(r.point);
      return true;
    }
    if (r.status == Refinement::stalled) {
      std::ostringstream msg;
      msg << "node refinement stalled after " << r.steps << " steps at (" << units::to_um(r.point.x()) << ", "
          << units::to_um(r.point.y()) << ") um with |E| = " << r.residual << " V/m";
      throw NumericalError(msg.str());
    }
    return false;
  };

  for (const auto& [ix, iy] : grid.local_minima()) {
    const Vec2 start(grid.x[ix], grid.y[iy]);
    if (attempt(start)) continue;
    // On a symmetry axis Newton cannot leave the axis; nudge sideways.
    if (!attempt(start + Vec2(0.5 * o.pitch, 0.0))) attempt(start - Vec2(0.5 * o.pitch, 0.0));
  }

  std::sort(found.begin(), found.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
  });

  NodeSet out;
  out.nodes = std::move(found);
  out.topology = classify(out.nodes, o);
  double q_max = 0.0;
  for (const auto& n : out.nodes) q_max = std::max(q_max, pseudo.stability_q(n));
  if (q_max > o.stability_warning_q) {
    std::ostringstream msg;
    msg << "stability parameter q = " << q_max << " at an RF node exceeds " << o.stability_warning_q
        << "; pseudopotential approximation is questionable";
    log::warn(msg.str());
  }
  if (out.nodes.size() == 2 && o.compute_barrier) {
    const auto [saddle, barrier] = saddle_between(pseudo, out.nodes[0], out.nodes[1]);
    out.saddle = saddle;
    out.barrier = barrier - std::max(pseudo.value(out.nodes[0]), pseudo.value(out.nodes[1]));
  }
  return out;
}

double node_separation(const NodeSet& nodes) {
  if (nodes.topology != NodeTopology::horizontal_pair) {
    throw StateError("node separation needs a horizontal pair, found topology '" +
                     std::string(to_string(nodes.topology)) + "'");
  }
  return (nodes.nodes[1] - nodes.nodes[0]).norm();
}

double node_separation(const TrapModel& model, const NodeSearchOptions& options) {
  return node_separation(find_nodes(model, options));
}

std::vector<SeparationPoint> separation_sweep(const TrapModel& model, std::span<const double> r_values,
                                              const NodeSearchOptions& options, unsigned threads) {
  if (!std::is_sorted(r_values.begin(), r_values.end())) throw DomainError("R values must be ascending");
  std::vector<SeparationPoint> out(r_values.size());
  parallel_for(r_values.size(), threads, [&](std::size_t i) {
    SeparationPoint& pt = out[i];
    pt.ratio = r_values[i];
    try {
      TrapModel m = model;
      m.drive.ratio_r = r_values[i];
      m.drive.validate();
      const NodeSet nodes = find_nodes(m, options);
      pt.topology = nodes.topology;
      pt.nodes = nodes.nodes;
      pt.barrier = nodes.barrier;
      if (nodes.topology == NodeTopology::horizontal_pair) pt.separation = node_separation(nodes);
    } catch (const std::exception& e) {
      pt.error = e.what();
    }
  });
  return out;
}

CriticalRatio critical_ratio(const TrapModel& model, double tol, const NodeSearchOptions& user_options) {
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  const NodeSearchOptions options = topology_only(user_options);
  auto is_double_well = [&](double r) {
    TrapModel m = model;
    m.drive.ratio_r = r;
    return find_nodes(m, options).topology == NodeTopology::horizontal_pair;
  };
  CriticalRatio c{0.0, 1.0};
  if (is_double_well(c.r_lo) || !is_double_well(c.r_hi)) {
    throw NumericalError("no single-well to double-well transition for R in [0, 1]");
  }
  while (c.width() > tol) {
    const double mid = c.mid();
    if (is_double_well(mid)) {
      c.r_hi = mid;
    } else {
      c.r_lo = mid;
    }
  }
  return c;
}

double ratio_for_separation(const TrapModel& model, double separation, double tol,
                            const NodeSearchOptions& user_options) {
  if (!(separation > 0.0)) throw DomainError("target separation must be positive");
  const NodeSearchOptions options = topology_only(user_options);
  auto distance = [&](double r) {
    TrapModel m = model;
    m.drive.ratio_r = r;
    const NodeSet nodes = find_nodes(m, options);
    return nodes.topology == NodeTopology::horizontal_pair ? node_separation(nodes) : 0.0;
  };
  double lo = critical_ratio(model, 1e-3, options).r_lo;
  double hi = 1.5;
  if (distance(hi) < separation) {
    std::ostringstream msg;
    msg << "separation " << units::to_um(separation) << " um is not reachable for R <= 1.5";
    throw NumericalError(msg.str());
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (distance(mid) < separation) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double ratio_sensitivity(double r, double eps) {
  if (!(eps >= 0.0 && eps < 0.5)) throw DomainError("relative voltage error must lie in [0, 0.5)");
  return r * ((1.0 + eps) / (1.0 - eps) - 1.0);
}

std::vector<AxialConfinement> wells_at_nodes(const NodeSet& nodes, double omega_z, double center_z, double alpha,
                                             double beta) {
  std::vector<AxialConfinement> wells;
  for (const auto& n : nodes.nodes) wells.push_back({omega_z, center_z, n, alpha, beta});
  return wells;
}

}  // namespace trapscape
