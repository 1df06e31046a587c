#include "avf/mdp.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

namespace avf {

void Mdp::validate(double row_tol) const {
    if (n_states <= 0 || n_actions <= 0)
        throw std::invalid_argument("Mdp: state and action counts must be positive");
    if (reward.size() != n_states)
        throw std::invalid_argument("Mdp: reward length != n_states");
    if (!reward.allFinite())
        throw std::invalid_argument("Mdp: reward must be finite");
    if (!(discount >= 0.0 && discount < 1.0))
        throw std::invalid_argument("Mdp: discount must lie in [0, 1)");
    if (static_cast<int>(transition.size()) != n_actions)
        throw std::invalid_argument("Mdp: transition must hold one matrix per action");
    for (int a = 0; a < n_actions; ++a) {
        const Mat& P = transition[a];
        if (P.rows() != n_states || P.cols() != n_states)
            throw std::invalid_argument("Mdp: transition matrix shape mismatch for action " +
                                        std::to_string(a));
        if ((P.array() < 0.0).any())
            throw std::invalid_argument("Mdp: negative transition probability in action " +
                                        std::to_string(a));
        for (int x = 0; x < n_states; ++x) {
            if (std::abs(P.row(x).sum() - 1.0) > row_tol)
                throw std::invalid_argument("Mdp: transition row does not sum to 1 at state " +
                                            std::to_string(x) + ", action " + std::to_string(a));
        }
    }
}

bool Policy::is_deterministic(double tol) const {
    for (int x = 0; x < probs.rows(); ++x) {
        int ones = 0;
        for (int a = 0; a < probs.cols(); ++a) {
            const double p = probs(x, a);
            if (std::abs(p - 1.0) <= tol)
                ++ones;
            else if (std::abs(p) > tol)
                return false;
        }
        if (ones != 1)
            return false;
    }
    return true;
}

void Policy::validate(double row_tol) const {
    if (probs.rows() == 0 || probs.cols() == 0)
        throw std::invalid_argument("Policy: empty table");
    if ((probs.array() < 0.0).any())
        throw std::invalid_argument("Policy: negative probability");
    for (int x = 0; x < probs.rows(); ++x) {
        if (std::abs(probs.row(x).sum() - 1.0) > row_tol)
            throw std::invalid_argument("Policy: row " + std::to_string(x) +
                                        " does not sum to 1");
    }
}

Policy Policy::uniform(int n_states, int n_actions) {
    Policy pi;
    pi.probs = Mat::Constant(n_states, n_actions, 1.0 / n_actions);
    return pi;
}

Policy Policy::deterministic(const std::vector<int>& actions, int n_actions) {
    Policy pi;
    pi.probs = Mat::Zero(static_cast<int>(actions.size()), n_actions);
    for (int x = 0; x < static_cast<int>(actions.size()); ++x)
        pi.probs(x, actions[x]) = 1.0;
    return pi;
}

std::vector<int> Policy::actions() const {
    std::vector<int> out(probs.rows());
    for (int x = 0; x < probs.rows(); ++x) {
        int best = 0;
        for (int a = 1; a < probs.cols(); ++a)
            if (probs(x, a) > probs(x, best))
                best = a;
        out[x] = best;
    }
    return out;
}

Mat policy_transition(const Mdp& mdp, const Policy& pi) {
    if (pi.probs.rows() != mdp.n_states || pi.probs.cols() != mdp.n_actions)
        throw std::invalid_argument("policy_transition: policy shape does not match MDP");
    Mat P = Mat::Zero(mdp.n_states, mdp.n_states);
    for (int a = 0; a < mdp.n_actions; ++a)
        P.noalias() += pi.probs.col(a).asDiagonal() * mdp.transition[a];
    return P;
}

Vec evaluate_policy(const Mdp& mdp, const Policy& pi) {
    const Mat P = policy_transition(mdp, pi);
    Mat A = Mat::Identity(mdp.n_states, mdp.n_states) - mdp.discount * P;
    return A.partialPivLu().solve(mdp.reward);
}

DeterministicPolicyEnumerator::DeterministicPolicyEnumerator(const Mdp& mdp, std::uint64_t cap)
    : n_states_(mdp.n_states), n_actions_(mdp.n_actions),
      total_(count_deterministic_policies(mdp, cap)), actions_(mdp.n_states, 0) {}

std::optional<Policy> DeterministicPolicyEnumerator::next() {
    if (emitted_ >= total_)
        return std::nullopt;
    if (emitted_ > 0) {
        // odometer increment: last state's action varies fastest
        int x = n_states_ - 1;
        while (x >= 0) {
            if (++actions_[x] < n_actions_)
                break;
            actions_[x] = 0;
            --x;
        }
    }
    ++emitted_;
    return Policy::deterministic(actions_, n_actions_);
}

std::uint64_t count_deterministic_policies(const Mdp& mdp, std::uint64_t cap) {
    const auto actions = static_cast<std::uint64_t>(mdp.n_actions);
    std::uint64_t total = 1;
    for (int x = 0; x < mdp.n_states; ++x) {
        // total > cap / |A| implies total * |A| > cap, so this never overflows
        if (total > cap / actions)
            throw BudgetError("deterministic policy count |A|^n = " + std::to_string(mdp.n_actions) +
                              "^" + std::to_string(mdp.n_states) + " exceeds budget " +
                              std::to_string(cap));
        total *= actions;
    }
    return total;
}

OracleResult directional_max_oracle(const Mdp& mdp, const Vec& delta, std::uint64_t cap) {
    if (delta.size() != mdp.n_states)
        throw std::invalid_argument("directional_max_oracle: delta length != n_states");
    DeterministicPolicyEnumerator en(mdp, cap);
    OracleResult best;
    bool first = true;
    while (auto pi = en.next()) {
        Vec v = evaluate_policy(mdp, *pi);
        const double f = delta.dot(v);
        // strict > keeps the lexicographically smallest assignment on ties
        if (first || f > best.functional) {
            best = OracleResult{std::move(*pi), std::move(v), f};
            first = false;
        }
    }
    return best;
}

std::vector<Vec> sample_value_polytope(const Mdp& mdp, int k, std::uint64_t seed) {
    if (k < 1)
        throw std::invalid_argument("sample_value_polytope: k must be >= 1");
    Rng rng(seed);
    std::vector<Vec> out;
    out.reserve(k);
    for (int i = 0; i < k; ++i) {
        Policy pi;
        pi.probs.resize(mdp.n_states, mdp.n_actions);
        for (int x = 0; x < mdp.n_states; ++x)
            pi.probs.row(x) = rng.simplex(mdp.n_actions).transpose();
        out.push_back(evaluate_policy(mdp, pi));
    }
    return out;
}

std::pair<Vec, Policy> value_iteration(const Mdp& mdp, double tol, int max_iter) {
    Vec v = Vec::Zero(mdp.n_states);
    Mat q(mdp.n_states, mdp.n_actions);
    for (int it = 0; it < max_iter; ++it) {
        for (int a = 0; a < mdp.n_actions; ++a)
            q.col(a) = mdp.transition[a] * v;
        Vec next = mdp.reward + mdp.discount * q.rowwise().maxCoeff();
        const double change = (next - v).lpNorm<Eigen::Infinity>();
        v = std::move(next);
        if (change < tol)
            break;
    }
    std::vector<int> greedy(mdp.n_states, 0);
    for (int a = 0; a < mdp.n_actions; ++a)
        q.col(a) = mdp.transition[a] * v;
    for (int x = 0; x < mdp.n_states; ++x) {
        int best = 0;
        for (int a = 1; a < mdp.n_actions; ++a)
            if (q(x, a) > q(x, best))
                best = a;
        greedy[x] = best;
    }
    return {v, Policy::deterministic(greedy, mdp.n_actions)};
}

} // namespace avf
