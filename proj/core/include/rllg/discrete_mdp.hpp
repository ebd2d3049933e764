#pragma once

#include <cstdint>
#include <vector>

#include "rllg/mlp.hpp"

namespace rllg {

/// Small tabular MDP: transition tensor P(s,a,s') with rows summing to one,
/// reward table r(s,a), discount gamma. Host for the exact Bellman oracles.
struct DiscreteMdp {
  int n_states = 0;
  int n_actions = 0;
  std::vector<Matrix> P;  // P[a] is n_states x n_states, row s -> dist over s'
  Matrix reward;          // n_states x n_actions
  double gamma = 0.9;

  void validate() const;  // throws on malformed tensors
};

/// policy(s, a) = pi(a|s); rows are states and sum to one.
using TabularPolicy = Matrix;

/// Exact fixed point of B^pi via the linear solve (I - gamma P Pi) Q = r.
/// Returns Q as an n_states x n_actions table.
Matrix exact_q(const DiscreteMdp& mdp, const TabularPolicy& policy);

/// Iterates the empirical-free Bellman operator B^pi from Q0 = 0.
Matrix policy_evaluation_sweeps(const DiscreteMdp& mdp,
                                const TabularPolicy& policy, int sweeps);

/// Iterates the optimality operator B* until max-norm change < tol.
Matrix value_iteration(const DiscreteMdp& mdp, double tol = 1e-10,
                       int max_sweeps = 100000);

TabularPolicy greedy_policy(const DiscreteMdp& mdp, const Matrix& q);
TabularPolicy uniform_policy(const DiscreteMdp& mdp);

/// Deterministic chain: action 0 steps left, the last action steps right,
/// middle actions stay; reward 1 for stepping right from the last state.
DiscreteMdp make_chain_mdp(int n_states, int n_actions, double slip,
                           double gamma);

/// Random dense MDP with Dirichlet-ish rows and rewards in [0, 1].
DiscreteMdp make_random_mdp(int n_states, int n_actions, double gamma,
                            std::uint64_t seed);

}  // namespace rllg
