#include "avf/repr.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "avf/rng.hpp"

namespace avf {

std::string to_string(TargetProvenance p) {
    switch (p) {
    case TargetProvenance::Avf: return "avf";
    case TargetProvenance::RandomDeterministic: return "random-deterministic";
    case TargetProvenance::RandomStochastic: return "random-stochastic";
    case TargetProvenance::SingleValue: return "single-value";
    case TargetProvenance::PvfIndicator: return "pvf-indicator";
    }
    return "unknown";
}

Mat ValueTargetSet::as_matrix() const {
    if (targets.empty())
        throw std::invalid_argument("ValueTargetSet: empty target set");
    Mat m(targets[0].size(), static_cast<int>(targets.size()));
    for (int j = 0; j < m.cols(); ++j) {
        if (targets[j].size() != m.rows())
            throw std::invalid_argument("ValueTargetSet: targets differ in length");
        m.col(j) = targets[j];
    }
    return m;
}

namespace {

Mat with_bias(const Representation& phi) {
    if (!phi.has_bias)
        return phi.features;
    Mat out(phi.features.rows(), phi.features.cols() + 1);
    out.leftCols(phi.features.cols()) = phi.features;
    out.col(phi.features.cols()).setOnes();
    return out;
}

} // namespace

Vec project(const Representation& phi, const Vec& v) {
    const Mat basis = with_bias(phi);
    if (basis.rows() != v.size())
        throw std::invalid_argument("project: value length != representation rows");
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(basis);
    return basis * cod.solve(v);
}

double representation_loss(const Representation& phi, const ValueTargetSet& targets) {
    if (targets.targets.empty())
        throw std::invalid_argument("representation_loss: empty target set");
    const Mat basis = with_bias(phi);
    const Mat t = targets.as_matrix();
    if (basis.rows() != t.rows())
        throw std::invalid_argument("representation_loss: shape mismatch");
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(basis);
    const Mat residual = t - basis * cod.solve(t);
    return residual.squaredNorm();
}

std::pair<double, Policy> representation_error(const Representation& phi, const Mdp& mdp,
                                               std::uint64_t cap) {
    const Mat basis = with_bias(phi);
    if (basis.rows() != mdp.n_states)
        throw std::invalid_argument("representation_error: representation rows != n_states");
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(basis);

    DeterministicPolicyEnumerator en(mdp, cap);
    double worst = -1.0;
    Policy worst_pi;
    while (auto pi = en.next()) {
        const Vec v = evaluate_policy(mdp, *pi);
        const double err = (v - basis * cod.solve(v)).squaredNorm();
        if (err > worst) {
            worst = err;
            worst_pi = std::move(*pi);
        }
    }
    return {worst, worst_pi};
}

double representation_error_lower_bound(const Representation& phi, const Mdp& mdp,
                                        int n_samples, std::uint64_t seed,
                                        const std::vector<Vec>& extra_targets) {
    const Mat basis = with_bias(phi);
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(basis);
    auto residual = [&](const Vec& v) { return (v - basis * cod.solve(v)).squaredNorm(); };

    Rng rng(seed);
    double worst = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        std::vector<int> act(mdp.n_states);
        for (int& a : act)
            a = rng.index(mdp.n_actions);
        worst = std::max(worst, residual(evaluate_policy(
                                    mdp, Policy::deterministic(act, mdp.n_actions))));
    }
    for (const Vec& v : extra_targets)
        worst = std::max(worst, residual(v));
    return worst;
}

namespace {

// singular vectors are defined up to sign; flip so positive entries win
void majority_positive(Mat& columns) {
    for (int j = 0; j < columns.cols(); ++j) {
        int pos = 0, neg = 0;
        for (int i = 0; i < columns.rows(); ++i) {
            if (columns(i, j) > 0)
                ++pos;
            else if (columns(i, j) < 0)
                ++neg;
        }
        if (neg > pos)
            columns.col(j) = -columns.col(j);
    }
}

Representation top_left_singular_vectors(const Mat& m, int d) {
    Eigen::BDCSVD<Mat> svd(m, Eigen::ComputeFullU);
    Representation phi;
    phi.features = svd.matrixU().leftCols(d);
    phi.has_bias = false;
    majority_positive(phi.features);
    return phi;
}

} // namespace

Representation svd_representation(const ValueTargetSet& targets, int d) {
    const Mat m = targets.as_matrix();
    if (d < 1 || d > m.rows())
        throw std::invalid_argument("svd_representation: need 1 <= d <= n");
    return top_left_singular_vectors(m, d);
}

Representation pvf_representation(const Mdp& mdp, int d) {
    if (d < 1 || d > mdp.n_states)
        throw std::invalid_argument("pvf_representation: need 1 <= d <= n");
    const Policy uniform = Policy::uniform(mdp.n_states, mdp.n_actions);
    const Mat P = policy_transition(mdp, uniform);
    const Mat sr = (Mat::Identity(mdp.n_states, mdp.n_states) - mdp.discount * P)
                       .partialPivLu()
                       .inverse();
    return top_left_singular_vectors(sr, d);
}

} // namespace avf
