#pragma once

#include <cstdint>
#include <vector>

#include "avf/mdp.hpp"
#include "avf/rng.hpp"

namespace avf {

enum class DeltaMode { Continuous, Ternary }; // [-1,1] entries vs {-1,0,1}

/// Interest function with i.i.d. entries, uniform over the chosen support.
Vec sample_interest(int n, DeltaMode mode, Rng& rng);
Vec sample_interest(int n, DeltaMode mode, std::uint64_t seed);

/// delta^T V^pi, evaluated through an exact policy evaluation.
double functional_value(const Mdp& mdp, const Vec& delta, const Policy& pi);

/// Discounted interest flow: the solution of (I - gamma P^pi^T) d = delta.
Vec network_flow(const Mdp& mdp, const Policy& pi, const Vec& delta);

struct PolicyGradientConfig {
    int steps = 1000;
    double learning_rate = 0.1;
    int restarts = 5;          // restart 0 starts from zero logits (uniform policy)
    double restart_noise = 1.0; // stddev of Gaussian logit noise for restarts > 0
    std::uint64_t seed = 0;
};

struct AvfResult {
    Vec delta;
    Mat logits;        // final per-state action logits of the best restart
    Policy policy;     // softmax(logits)
    Vec value;         // V^policy
    Vec flow;          // network flow of (policy, delta)
    double functional_value = 0.0; // delta^T value
    Policy det_policy; // greedy determinization, lowest action index on ties
    Vec det_value;
    double det_functional_value = 0.0;
    bool converged = false; // determinization did not lose functional value
    int gradient_steps = 0; // total steps across restarts

    /// The achieved AVF: the better of the softmax and determinized values.
    const Vec& best_value() const {
        return det_functional_value >= functional_value ? det_value : value;
    }
    double best_functional_value() const {
        return det_functional_value >= functional_value ? det_functional_value
                                                        : functional_value;
    }
};

/// Maximizes delta^T V^pi over tabular softmax policies by exact gradient
/// ascent: the gradient is computed analytically through the linear solve,
/// no sampling. Returns the best restart by achieved functional value.
AvfResult policy_gradient_avf(const Mdp& mdp, const Vec& delta,
                              const PolicyGradientConfig& cfg = {});

/// Analytic gradient of delta^T V^pi with respect to the softmax logits.
/// Exposed for the finite-difference checks.
Mat avf_logit_gradient(const Mdp& mdp, const Vec& delta, const Mat& logits);

struct StructureReport {
    struct Violation {
        int state;
        double flow;
        double chosen_ev; // expected next value of the chosen action
        double best_ev;   // the max (flow > 0) or min (flow < 0) the policy had to attain
    };
    int checked = 0;    // states with |flow| above the degeneracy threshold
    int degenerate = 0; // states exempt from the check
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
};

/// Checks the sign structure of a deterministic policy against its flow:
/// where d(x) > 0 the chosen action must attain max_a E V(x'), where
/// d(x) < 0 the min. Ties are allowed within 1e-9.
StructureReport verify_avf_structure(const Mdp& mdp, const Policy& det_policy,
                                     const Vec& delta, double zero_tol = 1e-8);
StructureReport verify_avf_structure(const Mdp& mdp, const AvfResult& avf,
                                     double zero_tol = 1e-8);

using SignPattern = Eigen::VectorXi; // entries exactly +1 or -1

/// Fixed point of the sign-modulated Bellman operator
/// T_sigma V(x) = r(x) + gamma sigma(x) max_a sigma(x) E V(x'),
/// iterated from V = 0. A gamma-contraction, so this always converges.
Vec t_sigma_fixed_point(const Mdp& mdp, const SignPattern& sigma, double tol = 1e-10,
                        int max_iter = 1'000'000);

/// One application of T_sigma (used by the contraction property tests).
Vec t_sigma_apply(const Mdp& mdp, const SignPattern& sigma, const Vec& v);

/// All T_sigma fixed points over sigma in {-1,+1}^n, deduplicated by
/// inf-norm tolerance. Superset of the extremal vertices, size <= 2^n.
std::vector<Vec> enumerate_avfs(const Mdp& mdp, int max_states = 20,
                                double dedup_tol = 1e-6, double fp_tol = 1e-10);

/// Greedy determinization: argmax action per state, lowest index on ties.
Policy determinize(const Policy& pi);

/// JSON object with delta, logits, value, flow, functional_value, converged
/// (plus the determinized value and step count).
std::string avf_result_to_json(const AvfResult& r);

/// Row-wise softmax of a logit table.
Policy softmax_policy(const Mat& logits);

} // namespace avf
