// Copyright 2026 the partial-id authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "partialid/errors.hpp"

namespace partialid::oracle {

inline constexpr double kDeficiencyTol = 1e-12;
inline constexpr double kFlowTol = 1e-9;

// A finite structure: masses p over m observable points, masses q over k
// latent points, and allowed[i][j] marking u_j in Gamma(y_i). Every row of
// `allowed` must be non-empty (Gamma has non-empty values).
class DiscreteStructure {
 public:
  DiscreteStructure(std::vector<double> p, std::vector<double> q,
                    const std::vector<std::vector<bool>>& allowed)
      : p_(std::move(p)), q_(std::move(q)) {
    m_ = p_.size();
    k_ = q_.size();
    if (m_ == 0 || k_ == 0) throw InputError("structure needs at least one point on each side");
    if (allowed.size() != m_) throw InputError("allowed matrix must have one row per p entry");
    check_masses(p_, "p");
    check_masses(q_, "q");
    words_ = (k_ + 63) / 64;
    rows_.assign(m_ * words_, 0);
    for (std::size_t i = 0; i < m_; ++i) {
      if (allowed[i].size() != k_) throw InputError("allowed matrix must have one column per q entry");
      bool any = false;
      for (std::size_t j = 0; j < k_; ++j) {
        if (allowed[i][j]) {
          rows_[i * words_ + (j >> 6)] |= std::uint64_t{1} << (j & 63);
          any = true;
        }
      }
      if (!any) {
        throw InputError("row " + std::to_string(i) + " of allowed is empty (Gamma(y_" +
                         std::to_string(i) + ") has no latent point)");
      }
    }
  }

  std::size_t m() const { return m_; }
  std::size_t k() const { return k_; }
  const std::vector<double>& p() const { return p_; }
  const std::vector<double>& q() const { return q_; }
  bool allowed(std::size_t i, std::size_t j) const {
    return (rows_[i * words_ + (j >> 6)] >> (j & 63)) & 1u;
  }

  // q-mass of Gamma(A) for A given as a bitmask over the observable points.
  double q_mass_of_image(std::uint32_t mask) const {
    std::vector<std::uint64_t> un(words_, 0);
    for (std::size_t i = 0; i < m_; ++i) {
      if (mask & (1u << i)) {
        const std::uint64_t* row = rows_.data() + i * words_;
        for (std::size_t w = 0; w < words_; ++w) un[w] |= row[w];
      }
    }
    double total = 0.0;
    for (std::size_t w = 0; w < words_; ++w) {
      std::uint64_t bits = un[w];
      while (bits) {
        std::size_t j = w * 64 + static_cast<std::size_t>(std::countr_zero(bits));
        total += q_[j];
        bits &= bits - 1;
      }
    }
    return total;
  }

 private:
  static void check_masses(const std::vector<double>& v, const char* which) {
    double sum = 0.0;
    for (double x : v) {
      if (!(x >= 0.0)) throw InputError(std::string(which) + " entries must be non-negative");
      sum += x;
    }
    if (std::abs(sum - 1.0) > kDeficiencyTol) {
      throw InputError(std::string(which) + " must sum to 1 (got " + std::to_string(sum) + ")");
    }
  }

  std::vector<double> p_, q_;
  std::size_t m_ = 0, k_ = 0, words_ = 0;
  std::vector<std::uint64_t> rows_;  // m x words bitmask of allowed latent points
};

struct DeficiencyWitness {
  double value = 0.0;
  std::uint32_t argmax_mask = 0;  // subset A attaining the supremum
};

// max over all subsets A of P(A) - q(Gamma(A)). The empty set attains 0, so
// the maximum is never negative; the structure is internally consistent
// exactly when it is 0.
inline DeficiencyWitness sup_deficiency_witness(const DiscreteStructure& d) {
  if (d.m() > 20) {
    throw InputError("sup_deficiency enumerates 2^m subsets; m must be <= 20");
  }
  DeficiencyWitness best;  // A = empty set gives 0
  const std::uint32_t total = 1u << d.m();
  for (std::uint32_t mask = 1; mask < total; ++mask) {
    double psum = 0.0;
    for (std::uint32_t bits = mask; bits;) {
      std::size_t i = static_cast<std::size_t>(std::countr_zero(bits));
      psum += d.p()[i];
      bits &= bits - 1;
    }
    double value = psum - d.q_mass_of_image(mask);
    if (value > best.value) {
      best.value = value;
      best.argmax_mask = mask;
    }
  }
  return best;
}

inline double sup_deficiency(const DiscreteStructure& d) {
  return sup_deficiency_witness(d).value;
}

struct CouplingResult {
  bool feasible = false;
  double max_flow = 0.0;
  std::vector<std::vector<double>> coupling;  // m x k, present only when feasible
};

namespace detail {

struct FlowGraph {
  struct Edge {
    int to;
    double cap;
    int rev;
  };
  std::vector<std::vector<Edge>> adj;

  explicit FlowGraph(int nodes) : adj(nodes) {}

  void add_edge(int from, int to, double cap) {
    adj[from].push_back({to, cap, static_cast<int>(adj[to].size())});
    adj[to].push_back({from, 0.0, static_cast<int>(adj[from].size()) - 1});
  }

  // Edmonds-Karp with an epsilon floor on usable residuals; fine for the
  // tiny bipartite transportation graphs built here.
  double max_flow(int s, int t, double eps) {
    double total = 0.0;
    for (;;) {
      std::vector<int> prev_node(adj.size(), -1), prev_edge(adj.size(), -1);
      std::queue<int> bfs;
      bfs.push(s);
      prev_node[s] = s;
      while (!bfs.empty() && prev_node[t] < 0) {
        int v = bfs.front();
        bfs.pop();
        for (std::size_t e = 0; e < adj[v].size(); ++e) {
          const Edge& edge = adj[v][e];
          if (edge.cap > eps && prev_node[edge.to] < 0) {
            prev_node[edge.to] = v;
            prev_edge[edge.to] = static_cast<int>(e);
            bfs.push(edge.to);
          }
        }
      }
      if (prev_node[t] < 0) return total;
      double bottleneck = std::numeric_limits<double>::infinity();
      for (int v = t; v != s; v = prev_node[v]) {
        bottleneck = std::min(bottleneck, adj[prev_node[v]][prev_edge[v]].cap);
      }
      for (int v = t; v != s; v = prev_node[v]) {
        Edge& fwd = adj[prev_node[v]][prev_edge[v]];
        fwd.cap -= bottleneck;
        adj[v][fwd.rev].cap += bottleneck;
      }
      total += bottleneck;
    }
  }
};

}  // namespace detail

// Transportation feasibility: does a law pi with marginals p and q exist,
// supported only on allowed pairs? Solved as max-flow
// source -> y_i (cap p_i) -> u_j (cap 2 if allowed) -> sink (cap q_j);
// feasible iff the flow moves all mass. The middle-edge flows are a witness
// coupling.
inline CouplingResult feasible_coupling(const DiscreteStructure& d) {
  const int m = static_cast<int>(d.m());
  const int k = static_cast<int>(d.k());
  const int source = 0, sink = m + k + 1;
  detail::FlowGraph g(m + k + 2);
  for (int i = 0; i < m; ++i) g.add_edge(source, 1 + i, d.p()[i]);
  // infinite capacity encoded as 2.0 (> any feasible flow of total mass 1)
  std::vector<std::vector<int>> middle(m, std::vector<int>(k, -1));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < k; ++j) {
      if (d.allowed(i, j)) {
        middle[i][j] = static_cast<int>(g.adj[1 + i].size());
        g.add_edge(1 + i, 1 + m + j, 2.0);
      }
    }
  }
  for (int j = 0; j < k; ++j) g.add_edge(1 + m + j, sink, d.q()[j]);

  CouplingResult res;
  res.max_flow = g.max_flow(source, sink, 1e-12);
  res.feasible = res.max_flow >= 1.0 - kFlowTol;
  if (res.feasible) {
    res.coupling.assign(m, std::vector<double>(k, 0.0));
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < k; ++j) {
        if (middle[i][j] >= 0) {
          res.coupling[i][j] = 2.0 - g.adj[1 + i][middle[i][j]].cap;
        }
      }
    }
  }
  return res;
}

// Desk-scale duality check: the enumeration route and the coupling route
// must agree on internal consistency.
inline bool check_duality(const DiscreteStructure& d) {
  bool consistent_by_deficiency = sup_deficiency(d) <= kDeficiencyTol;
  bool consistent_by_coupling = feasible_coupling(d).feasible;
  return consistent_by_deficiency == consistent_by_coupling;
}

}  // namespace partialid::oracle
