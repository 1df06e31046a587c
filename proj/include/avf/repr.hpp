#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "avf/mdp.hpp"

namespace avf {

/// n x d feature table. When has_bias is set, a constant-1 column is
/// appended at projection/regression time; it is never counted in d.
struct Representation {
    Mat features;
    bool has_bias = false;

    int n_states() const { return static_cast<int>(features.rows()); }
    int dim() const { return static_cast<int>(features.cols()); }
};

enum class TargetProvenance {
    Avf,
    RandomDeterministic,
    RandomStochastic,
    SingleValue,
    PvfIndicator,
};

std::string to_string(TargetProvenance p);

/// The set of auxiliary-task value functions a representation is fit to.
struct ValueTargetSet {
    std::vector<Vec> targets; // all length n
    TargetProvenance provenance = TargetProvenance::Avf;

    int n_states() const { return targets.empty() ? 0 : static_cast<int>(targets[0].size()); }
    /// Targets stacked as columns of an n x k matrix.
    Mat as_matrix() const;
};

/// Orthogonal projection of v onto span(features [+ bias]). Least squares
/// through a rank-revealing decomposition; minimum-norm on rank deficiency.
Vec project(const Representation& phi, const Vec& v);

/// Sum over targets of squared projection residuals (the auxiliary-task loss).
double representation_loss(const Representation& phi, const ValueTargetSet& targets);

/// Worst-case squared projection residual over all deterministic policies,
/// with the achieving policy. Exact but exponential in the state count.
std::pair<double, Policy> representation_error(
    const Representation& phi, const Mdp& mdp,
    std::uint64_t cap = DeterministicPolicyEnumerator::kDefaultCap);

/// Lower bound on representation_error from sampled deterministic policies
/// plus any supplied targets; for domains where enumeration is infeasible.
double representation_error_lower_bound(const Representation& phi, const Mdp& mdp,
                                        int n_samples, std::uint64_t seed,
                                        const std::vector<Vec>& extra_targets = {});

/// Top-d left singular vectors of the stacked target matrix; orthonormal
/// columns, each flipped so positive entries outnumber negative ones.
Representation svd_representation(const ValueTargetSet& targets, int d);

/// Proto-value functions: top-d left singular vectors of the successor
/// representation (I - gamma P^pi)^{-1} for the uniformly random policy.
Representation pvf_representation(const Mdp& mdp, int d);

struct TwoPartNetConfig {
    int hidden = 512;
    int updates = 200'000;
    int batch = 32;
    double learning_rate = 0.00025;
    double rms_decay = 0.9;
    double rms_epsilon = 1e-6;
    std::uint64_t seed = 0;
    int log_every = 1000;
    double divergence_cutoff = 1e6;
};

/// One-hot states -> dense(n, hidden) ReLU -> dense(hidden, d) ReLU features
/// -> linear heads (d+1 -> k, bias unit included). Hand-rolled backprop and
/// RMSProp; features are nonnegative by construction.
class TwoPartNet {
  public:
    TwoPartNet(int n_states, int d, int n_tasks, const TwoPartNetConfig& cfg);

    /// Feature vector phi(x) for every state: n x d matrix.
    Mat features() const;
    /// Head predictions for all states and tasks: n x k matrix.
    Mat predictions() const;

    /// Mean squared error of one (state, task) minibatch, with backprop and
    /// an RMSProp step. Entries of `states`/`tasks` index rows of T.
    double train_step(const Mat& targets_nk, const std::vector<int>& states,
                      const std::vector<int>& tasks);

    /// Full-dataset mean squared error (all state/task pairs).
    double full_loss(const Mat& targets_nk) const;

    /// Gradient of full_loss w.r.t. every parameter, flattened; and the
    /// matching flattened parameter access. For finite-difference checks.
    Vec parameter_vector() const;
    void set_parameter_vector(const Vec& theta);
    Vec full_loss_gradient(const Mat& targets_nk) const;

    const std::vector<std::pair<int, double>>& loss_log() const { return loss_log_; }

    int n_states() const { return n_; }
    int feature_dim() const { return d_; }

  private:
    struct Grads;
    Grads backward(const Mat& targets_nk, const std::vector<int>& states,
                   const std::vector<int>& tasks, double* loss_out) const;
    void rmsprop_apply(const Grads& g);

    int n_, h_, d_, k_;
    TwoPartNetConfig cfg_;
    Mat w1_; // n x h (row x is the hidden pre-activation for one-hot state x)
    Eigen::RowVectorXd b1_;
    Mat w2_; // h x d
    Eigen::RowVectorXd b2_;
    Mat w3_; // d x k
    Eigen::RowVectorXd b3_;
    // RMSProp second-moment accumulators, same shapes
    Mat m1_, m2_, m3_;
    Eigen::RowVectorXd mb1_, mb2_, mb3_;
    std::vector<std::pair<int, double>> loss_log_;
    friend std::pair<TwoPartNet, Representation>
    train_two_part(const ValueTargetSet&, int, const TwoPartNetConfig&);
};

/// Trains the network to regress all targets jointly; minibatches are
/// uniform (state, task) pairs. Returns the net and its final feature table.
std::pair<TwoPartNet, Representation> train_two_part(const ValueTargetSet& targets, int d,
                                                     const TwoPartNetConfig& cfg = {});

} // namespace avf
