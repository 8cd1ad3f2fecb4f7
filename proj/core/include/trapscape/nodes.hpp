#pragma once

#include "trapscape/fields.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace trapscape {

enum class NodeTopology { none, single, vertical_pair, horizontal_pair };

std::string_view to_string(NodeTopology topology);

/// RF nulls found in the search window.
struct NodeSet {
  std::vector<Vec2> nodes;  // sorted by x, then y
  NodeTopology topology = NodeTopology::none;
  std::optional<double> barrier;  // J, pseudopotential at the saddle between a pair
  std::optional<Vec2> saddle;

  bool empty() const { return nodes.empty(); }
};

struct NodeSearchOptions {
  double x_min = -150e-6;
  double x_max = 150e-6;
  double y_min = 2e-6;
  double y_max = 200e-6;
  double pitch = 2e-6;
  double field_tolerance = 1e-4;         // V/m
  double merge_distance = 0.1e-6;        // duplicates closer than this are one node
  double degenerate_distance = 0.2e-6;   // a pair closer than this is reported as single
  int max_newton_steps = 200;
  double stability_warning_q = 0.3;
  bool compute_barrier = true;           // pairs only
};

/// Grid scan of |E|^2 followed by damped complex Newton on E = 0.
/// Returns an empty NodeSet (topology none) when the window holds no node.
/// Throws NumericalError when a refinement stalls next to a root.
NodeSet find_nodes(const TrapModel& model, const NodeSearchOptions& options = {});

/// Distance between the two nodes of a horizontal pair; StateError otherwise.
double node_separation(const TrapModel& model, const NodeSearchOptions& options = {});
double node_separation(const NodeSet& nodes);

struct SeparationPoint {
  double ratio = 0.0;
  NodeTopology topology = NodeTopology::none;
  std::optional<double> separation;  // m, horizontal pairs only
  std::optional<double> barrier;     // J
  std::vector<Vec2> nodes;
  std::string error;                 // non-empty when find_nodes failed at this R

  bool ok() const { return error.empty(); }
};

/// Node topology, separation and barrier for each R (ascending). Failures are
/// recorded per point and do not abort the sweep.
std::vector<SeparationPoint> separation_sweep(const TrapModel& model, std::span<const double> r_values,
                                              const NodeSearchOptions& options = {}, unsigned threads = 1);

struct CriticalRatio {
  double r_lo = 0.0;  // last R without a horizontal pair
  double r_hi = 0.0;  // first R with a horizontal pair
  double mid() const { return 0.5 * (r_lo + r_hi); }
  double width() const { return r_hi - r_lo; }
};

/// Bisection on R in [0, 1] for the onset of the horizontal (double-well) pair.
CriticalRatio critical_ratio(const TrapModel& model, double tol, const NodeSearchOptions& options = {});

/// R at which the horizontal pair is separated by `separation` (bisection above R*).
double ratio_for_separation(const TrapModel& model, double separation, double tol = 1e-10,
                            const NodeSearchOptions& options = {});

/// Worst-case error in R from independent relative errors eps on both voltages.
double ratio_sensitivity(double r, double voltage_rel_err);

/// One axial well per node, centred on it.
std::vector<AxialConfinement> wells_at_nodes(const NodeSet& nodes, double omega_z, double center_z = 0.0,
                                             double alpha = 0.5, double beta = 0.5);

}  // namespace trapscape
