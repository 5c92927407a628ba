#pragma once

// Primal network simplex for balanced, uncapacitated min-cost flow with real supplies.
// Used by the W1 transport solves; tree bookkeeping follows the strongly feasible
// spanning-tree rule so degenerate pivots cannot cycle.

#include <cstddef>
#include <vector>

namespace ergograph {

struct FlowArc {
  int from = 0;
  int to = 0;
  double cost = 0.0;
};

struct FlowSolution {
  double cost = 0.0;
  std::vector<double> flow;  // one entry per input arc
  std::size_t pivots = 0;
};

/// Minimizes sum cost*flow subject to out - in = supply at every node, flow >= 0.
/// Supplies must sum to zero (within 1e-9 relative); throws std::invalid_argument otherwise
/// and std::runtime_error when the network cannot route the supplies.
FlowSolution min_cost_flow(int num_nodes, const std::vector<double>& supply,
                           const std::vector<FlowArc>& arcs);

}  // namespace ergograph
