#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "avf/rng.hpp"

namespace avf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Thrown when an enumeration would exceed its explicit budget.
class BudgetError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Finite MDP with state rewards r(x) and per-action transition matrices.
/// transition[a](x, x') = P(x' | x, a). Rows are probability vectors.
struct Mdp {
    int n_states = 0;
    int n_actions = 0;
    Vec reward;                  // length n_states
    std::vector<Mat> transition; // n_actions matrices, each n_states x n_states
    double discount = 0.0;       // in [0, 1)

    /// Throws std::invalid_argument when shapes or stochasticity are broken.
    void validate(double row_tol = 1e-12) const;
};

/// Tabular policy: probs(x, a) = pi(a | x). Rows sum to 1.
struct Policy {
    Mat probs;

    int n_states() const { return static_cast<int>(probs.rows()); }
    int n_actions() const { return static_cast<int>(probs.cols()); }

    bool is_deterministic(double tol = 1e-12) const;
    void validate(double row_tol = 1e-12) const;

    static Policy uniform(int n_states, int n_actions);
    /// One-hot rows from an action assignment (one action index per state).
    static Policy deterministic(const std::vector<int>& actions, int n_actions);
    /// Action assignment of a deterministic policy (argmax per row).
    std::vector<int> actions() const;
};

/// State-to-state transition matrix P^pi(x'|x) = sum_a pi(a|x) P(x'|x,a).
Mat policy_transition(const Mdp& mdp, const Policy& pi);

/// Exact policy evaluation: the unique solution of (I - gamma P^pi) V = r.
Vec evaluate_policy(const Mdp& mdp, const Policy& pi);

/// Streams all |A|^n deterministic policies in lexicographic action-index
/// order (the assignment for the last state varies fastest).
class DeterministicPolicyEnumerator {
  public:
    /// Throws BudgetError up front when |A|^n exceeds `cap`.
    DeterministicPolicyEnumerator(const Mdp& mdp, std::uint64_t cap = kDefaultCap);

    std::optional<Policy> next();
    /// Current assignment without materializing a Policy (valid after next()).
    const std::vector<int>& assignment() const { return actions_; }

    std::uint64_t total() const { return total_; }

    static constexpr std::uint64_t kDefaultCap = 10'000'000;

  private:
    int n_states_;
    int n_actions_;
    std::uint64_t total_;
    std::uint64_t emitted_ = 0;
    std::vector<int> actions_;
};

/// Number of deterministic policies |A|^n; throws BudgetError past `cap`.
std::uint64_t count_deterministic_policies(const Mdp& mdp, std::uint64_t cap);

struct OracleResult {
    Policy policy;     // deterministic argmax, lexicographically smallest on ties
    Vec value;         // V^pi of that policy
    double functional; // delta^T value
};

/// Brute-force maximizer of delta^T V^pi over all deterministic policies.
/// Grounds the correctness tests of everything built on top of it.
OracleResult directional_max_oracle(const Mdp& mdp, const Vec& delta,
                                    std::uint64_t cap = DeterministicPolicyEnumerator::kDefaultCap);

/// Value functions of k policies drawn with independent Dirichlet(1,..,1) rows.
std::vector<Vec> sample_value_polytope(const Mdp& mdp, int k, std::uint64_t seed);

/// Plain value iteration to tolerance; returns V* and a greedy policy
/// (lowest action index on ties). Used as the optimal-control reference.
std::pair<Vec, Policy> value_iteration(const Mdp& mdp, double tol = 1e-12,
                                       int max_iter = 1'000'000);

} // namespace avf
