#include "ergograph/network_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ergograph {
namespace {

enum class Dir : signed char { Up, Down };  // tree arc points to the parent (Up) or from it (Down)

class NetworkSimplex {
 public:
  NetworkSimplex(int n, const std::vector<double>& supply, const std::vector<FlowArc>& arcs)
      : n_(n), m_(static_cast<int>(arcs.size())), root_(n) {
    const int total = m_ + n_;
    src_.resize(total);
    dst_.resize(total);
    cost_.resize(total);
    flow_.assign(total, 0.0);
    in_tree_.assign(total, 0);
    double max_cost = 0.0;
    for (int a = 0; a < m_; ++a) {
      if (arcs[a].from < 0 || arcs[a].from >= n || arcs[a].to < 0 || arcs[a].to >= n) {
        throw std::invalid_argument("min_cost_flow: arc endpoint out of range");
      }
      src_[a] = arcs[a].from;
      dst_[a] = arcs[a].to;
      cost_[a] = arcs[a].cost;
      max_cost = std::max(max_cost, std::abs(arcs[a].cost));
    }
    const double art = (max_cost + 1.0) * (n_ + 1);
    eps_ = 64.0 * std::numeric_limits<double>::epsilon() * art;

    parent_.assign(n_ + 1, -1);
    pred_.assign(n_ + 1, -1);
    dir_.assign(n_ + 1, Dir::Up);
    depth_.assign(n_ + 1, 0);
    pi_.assign(n_ + 1, 0.0);
    adj_.assign(n_ + 1, {});
    for (int u = 0; u < n_; ++u) {
      const int e = m_ + u;
      parent_[u] = root_;
      pred_[u] = e;
      depth_[u] = 1;
      in_tree_[e] = 1;
      if (supply[u] >= 0.0) {
        dir_[u] = Dir::Up;
        src_[e] = u;
        dst_[e] = root_;
        flow_[e] = supply[u];
        cost_[e] = 0.0;
        pi_[u] = 0.0;
      } else {
        dir_[u] = Dir::Down;
        src_[e] = root_;
        dst_[e] = u;
        flow_[e] = -supply[u];
        cost_[e] = art;
        pi_[u] = art;
      }
      adj_[u].push_back(e);
      adj_[root_].push_back(e);
    }
    block_ = std::max(10, static_cast<int>(std::sqrt(static_cast<double>(std::max(m_, 1)))));
  }

  FlowSolution run() {
    FlowSolution sol;
    int in_arc;
    while ((in_arc = find_entering()) >= 0) {
      pivot(in_arc);
      ++sol.pivots;
    }
    double supply_left = 0.0;
    for (int u = 0; u < n_; ++u) supply_left += flow_[m_ + u];
    double scale = 0.0;
    for (int a = 0; a < m_; ++a) scale = std::max(scale, flow_[a]);
    if (supply_left > 1e-9 * (scale + 1.0)) {
      throw std::runtime_error("min_cost_flow: supplies cannot be routed through the network");
    }
    sol.flow.assign(flow_.begin(), flow_.begin() + m_);
    for (int a = 0; a < m_; ++a) sol.cost += sol.flow[a] * cost_[a];
    return sol;
  }

 private:
  double reduced(int a) const { return cost_[a] + pi_[src_[a]] - pi_[dst_[a]]; }

  // Block search pivot rule: best candidate within the first block that has one.
  int find_entering() {
    int best = -1;
    double best_rc = -eps_;
    int scanned = 0;
    for (int i = 0; i < m_; ++i) {
      const int a = next_;
      next_ = (next_ + 1) % m_;
      if (!in_tree_[a]) {
        const double rc = reduced(a);
        if (rc < best_rc) {
          best_rc = rc;
          best = a;
        }
      }
      if (++scanned == block_) {
        if (best >= 0) return best;
        scanned = 0;
      }
    }
    return best;
  }

  int join_node(int u, int v) const {
    while (u != v) {
      if (depth_[u] >= depth_[v]) {
        u = parent_[u];
      } else {
        v = parent_[v];
      }
    }
    return u;
  }

  void pivot(int in_arc) {
    const int first = src_[in_arc];
    const int second = dst_[in_arc];
    const int join = join_node(first, second);
    constexpr double kInf = std::numeric_limits<double>::infinity();
    double delta = kInf;
    int u_out = -1;
    int side = 0;
    // Flow travels first -> second over the entering arc, second up to the join node, then
    // down from the join node to first.
    for (int u = first; u != join; u = parent_[u]) {
      const double d = dir_[u] == Dir::Up ? flow_[pred_[u]] : kInf;
      if (d < delta) {
        delta = d;
        u_out = u;
        side = 1;
      }
    }
    for (int u = second; u != join; u = parent_[u]) {
      const double d = dir_[u] == Dir::Down ? flow_[pred_[u]] : kInf;
      if (d <= delta) {
        delta = d;
        u_out = u;
        side = 2;
      }
    }
    if (u_out < 0) throw std::runtime_error("min_cost_flow: unbounded (negative cycle)");

    if (delta > 0.0) {
      flow_[in_arc] += delta;
      for (int u = first; u != join; u = parent_[u]) {
        flow_[pred_[u]] += dir_[u] == Dir::Up ? -delta : delta;
      }
      for (int u = second; u != join; u = parent_[u]) {
        flow_[pred_[u]] += dir_[u] == Dir::Up ? delta : -delta;
      }
    }
    const int out_arc = pred_[u_out];
    flow_[out_arc] = 0.0;

    // Detach the subtree below the leaving arc and re-hang it from the entering arc.
    const int u_in = side == 1 ? first : second;
    const int v_in = side == 1 ? second : first;
    remove_adj(src_[out_arc], out_arc);
    remove_adj(dst_[out_arc], out_arc);
    in_tree_[out_arc] = 0;
    in_tree_[in_arc] = 1;
    adj_[u_in].push_back(in_arc);
    adj_[v_in].push_back(in_arc);
    rehang(u_in, v_in, in_arc);
  }

  void remove_adj(int node, int arc) {
    auto& v = adj_[node];
    v.erase(std::find(v.begin(), v.end(), arc));
  }

  void attach(int child, int parent, int arc) {
    parent_[child] = parent;
    pred_[child] = arc;
    depth_[child] = depth_[parent] + 1;
    if (src_[arc] == child) {
      dir_[child] = Dir::Up;
      pi_[child] = pi_[parent] - cost_[arc];
    } else {
      dir_[child] = Dir::Down;
      pi_[child] = pi_[parent] + cost_[arc];
    }
  }

  void rehang(int u_in, int v_in, int in_arc) {
    stack_.clear();
    attach(u_in, v_in, in_arc);
    stack_.push_back(u_in);
    while (!stack_.empty()) {
      const int u = stack_.back();
      stack_.pop_back();
      for (int a : adj_[u]) {
        if (a == pred_[u]) continue;
        const int w = src_[a] == u ? dst_[a] : src_[a];
        attach(w, u, a);
        stack_.push_back(w);
      }
    }
  }

  int n_, m_, root_;
  double eps_ = 0.0;
  int block_ = 10;
  int next_ = 0;
  std::vector<int> src_, dst_;
  std::vector<double> cost_, flow_;
  std::vector<char> in_tree_;
  std::vector<int> parent_, pred_, depth_;
  std::vector<Dir> dir_;
  std::vector<double> pi_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> stack_;
};

}  // namespace

FlowSolution min_cost_flow(int num_nodes, const std::vector<double>& supply,
                           const std::vector<FlowArc>& arcs) {
  if (num_nodes < 0 || static_cast<int>(supply.size()) != num_nodes) {
    throw std::invalid_argument("min_cost_flow: supply vector size mismatch");
  }
  double sum = 0.0, scale = 0.0;
  for (double s : supply) {
    sum += s;
    scale += std::abs(s);
  }
  if (std::abs(sum) > 1e-9 * (scale + 1e-300)) {
    throw std::invalid_argument("min_cost_flow: supplies do not balance");
  }
  if (num_nodes == 0 || arcs.empty()) {
    if (scale > 0.0) throw std::runtime_error("min_cost_flow: supplies cannot be routed");
    return {};
  }
  NetworkSimplex ns(num_nodes, supply, arcs);
  return ns.run();
}

}  // namespace ergograph
