#include "rllg/discrete_mdp.hpp"

#include <random>
#include <stdexcept>

namespace rllg {

void DiscreteMdp::validate() const {
  if (n_states < 1 || n_actions < 1)
    throw std::invalid_argument("DiscreteMdp: need at least one state and action");
  if (gamma < 0.0 || gamma >= 1.0)
    throw std::invalid_argument("DiscreteMdp: gamma must be in [0,1)");
  if (static_cast<int>(P.size()) != n_actions ||
      reward.rows() != n_states || reward.cols() != n_actions)
    throw std::invalid_argument("DiscreteMdp: tensor shapes do not match");
  for (const Matrix& Pa : P) {
    if (Pa.rows() != n_states || Pa.cols() != n_states)
      throw std::invalid_argument("DiscreteMdp: transition matrix shape");
    for (int s = 0; s < n_states; ++s) {
      if (Pa.row(s).minCoeff() < 0.0 ||
          std::abs(Pa.row(s).sum() - 1.0) > 1e-12)
        throw std::invalid_argument(
            "DiscreteMdp: transition rows must be distributions");
    }
  }
}

Matrix exact_q(const DiscreteMdp& mdp, const TabularPolicy& policy) {
  mdp.validate();
  const int S = mdp.n_states, A = mdp.n_actions, n = S * A;
  // M[(s,a),(s',a')] = P(s,a,s') * pi(a'|s'); solve (I - gamma M) q = r.
  Matrix M = Matrix::Zero(n, n);
  Vector r(n);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      const int row = s * A + a;
      r(row) = mdp.reward(s, a);
      for (int sn = 0; sn < S; ++sn)
        for (int an = 0; an < A; ++an)
          M(row, sn * A + an) = mdp.P[a](s, sn) * policy(sn, an);
    }
  Matrix lhs = Matrix::Identity(n, n) - mdp.gamma * M;
  Vector q = lhs.partialPivLu().solve(r);
  Matrix out(S, A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) out(s, a) = q(s * A + a);
  return out;
}

Matrix policy_evaluation_sweeps(const DiscreteMdp& mdp,
                                const TabularPolicy& policy, int sweeps) {
  const int S = mdp.n_states, A = mdp.n_actions;
  Matrix q = Matrix::Zero(S, A);
  for (int it = 0; it < sweeps; ++it) {
    Vector v(S);  // v(s) = sum_a pi(a|s) q(s,a)
    for (int s = 0; s < S; ++s) v(s) = policy.row(s).dot(q.row(s));
    Matrix next(S, A);
    for (int a = 0; a < A; ++a)
      next.col(a) = mdp.reward.col(a) + mdp.gamma * (mdp.P[a] * v);
    q = next;
  }
  return q;
}

Matrix value_iteration(const DiscreteMdp& mdp, double tol, int max_sweeps) {
  const int S = mdp.n_states, A = mdp.n_actions;
  Matrix q = Matrix::Zero(S, A);
  for (int it = 0; it < max_sweeps; ++it) {
    Vector v = q.rowwise().maxCoeff();
    Matrix next(S, A);
    for (int a = 0; a < A; ++a)
      next.col(a) = mdp.reward.col(a) + mdp.gamma * (mdp.P[a] * v);
    const double delta = (next - q).cwiseAbs().maxCoeff();
    q = next;
    if (delta < tol) break;
  }
  return q;
}

TabularPolicy greedy_policy(const DiscreteMdp& mdp, const Matrix& q) {
  TabularPolicy pi = Matrix::Zero(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    Eigen::Index best;
    q.row(s).maxCoeff(&best);
    pi(s, best) = 1.0;
  }
  return pi;
}

TabularPolicy uniform_policy(const DiscreteMdp& mdp) {
  return Matrix::Constant(mdp.n_states, mdp.n_actions,
                          1.0 / mdp.n_actions);
}

DiscreteMdp make_chain_mdp(int n_states, int n_actions, double slip,
                           double gamma) {
  DiscreteMdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.gamma = gamma;
  mdp.reward = Matrix::Zero(n_states, n_actions);
  mdp.P.assign(n_actions, Matrix::Zero(n_states, n_states));
  const int right = n_actions - 1;
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      int intended = s;
      if (a == 0) intended = std::max(0, s - 1);
      if (a == right) intended = std::min(n_states - 1, s + 1);
      const int slipped = std::max(0, s - 1);
      mdp.P[a](s, intended) += 1.0 - slip;
      mdp.P[a](s, slipped) += slip;
      if (a == right && s == n_states - 1) mdp.reward(s, a) = 1.0;
    }
  }
  mdp.validate();
  return mdp;
}

DiscreteMdp make_random_mdp(int n_states, int n_actions, double gamma,
                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  DiscreteMdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.gamma = gamma;
  mdp.reward = Matrix::Zero(n_states, n_actions);
  mdp.P.assign(n_actions, Matrix::Zero(n_states, n_states));
  for (int a = 0; a < n_actions; ++a)
    for (int s = 0; s < n_states; ++s) {
      double total = 0.0;
      for (int sn = 0; sn < n_states; ++sn) {
        mdp.P[a](s, sn) = -std::log(1.0 - unif(rng));  // Exp(1) -> Dirichlet(1)
        total += mdp.P[a](s, sn);
      }
      mdp.P[a].row(s) /= total;
      // renormalize exactly so validate()'s 1e-12 row check holds
      mdp.P[a](s, n_states - 1) = 1.0 - mdp.P[a].row(s).head(n_states - 1).sum();
      mdp.reward(s, a) = unif(rng);
    }
  mdp.validate();
  return mdp;
}

}  // namespace rllg
