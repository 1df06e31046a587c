#include "avf/avf_solver.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

namespace avf {

Vec sample_interest(int n, DeltaMode mode, Rng& rng) {
    if (n < 1)
        throw std::invalid_argument("sample_interest: n must be >= 1");
    Vec delta(n);
    for (int i = 0; i < n; ++i) {
        if (mode == DeltaMode::Continuous)
            delta[i] = rng.uniform(-1.0, 1.0);
        else
            delta[i] = static_cast<double>(rng.index(3) - 1);
    }
    return delta;
}

Vec sample_interest(int n, DeltaMode mode, std::uint64_t seed) {
    Rng rng(seed);
    return sample_interest(n, mode, rng);
}

double functional_value(const Mdp& mdp, const Vec& delta, const Policy& pi) {
    if (delta.size() != mdp.n_states)
        throw std::invalid_argument("functional_value: delta length != n_states");
    return delta.dot(evaluate_policy(mdp, pi));
}

Vec network_flow(const Mdp& mdp, const Policy& pi, const Vec& delta) {
    if (delta.size() != mdp.n_states)
        throw std::invalid_argument("network_flow: delta length != n_states");
    const Mat P = policy_transition(mdp, pi);
    Mat A = Mat::Identity(mdp.n_states, mdp.n_states) - mdp.discount * P.transpose();
    return A.partialPivLu().solve(delta);
}

Policy softmax_policy(const Mat& logits) {
    Policy pi;
    pi.probs.resize(logits.rows(), logits.cols());
    for (int x = 0; x < logits.rows(); ++x) {
        const double m = logits.row(x).maxCoeff();
        Eigen::RowVectorXd e = (logits.row(x).array() - m).exp();
        pi.probs.row(x) = e / e.sum();
    }
    return pi;
}

Policy determinize(const Policy& pi) {
    std::vector<int> act(pi.n_states());
    for (int x = 0; x < pi.n_states(); ++x) {
        int best = 0;
        for (int a = 1; a < pi.n_actions(); ++a)
            if (pi.probs(x, a) > pi.probs(x, best))
                best = a;
        act[x] = best;
    }
    return Policy::deterministic(act, pi.n_actions());
}

namespace {

// Shared by the gradient step and the public gradient entry point.
// Writes V^pi and d_pi through the same LU factorization.
struct GradientWork {
    Vec value;
    Vec flow;
    Mat grad; // n x |A|, gradient w.r.t. logits
};

GradientWork gradient_at(const Mdp& mdp, const Vec& delta, const Mat& logits) {
    const Policy pi = softmax_policy(logits);
    const Mat P = policy_transition(mdp, pi);
    Eigen::PartialPivLU<Mat> lu(Mat::Identity(mdp.n_states, mdp.n_states) -
                                mdp.discount * P);

    GradientWork w;
    w.value = lu.solve(mdp.reward);
    w.flow = lu.transpose().solve(delta);

    // d(delta^T V)/d pi(a|x) = gamma * d(x) * [P_a V](x); the softmax jacobian
    // then gives  g(x,b) = gamma d(x) pi(b|x) (q(x,b) - sum_a pi(a|x) q(x,a)).
    Mat q(mdp.n_states, mdp.n_actions);
    for (int a = 0; a < mdp.n_actions; ++a)
        q.col(a) = mdp.transition[a] * w.value;
    const Vec qbar = (q.array() * pi.probs.array()).rowwise().sum();
    w.grad = mdp.discount *
             (w.flow.asDiagonal() * (pi.probs.array() * (q.colwise() - qbar).array()).matrix());
    return w;
}

} // namespace

Mat avf_logit_gradient(const Mdp& mdp, const Vec& delta, const Mat& logits) {
    if (delta.size() != mdp.n_states)
        throw std::invalid_argument("avf_logit_gradient: delta length != n_states");
    return gradient_at(mdp, delta, logits).grad;
}

AvfResult policy_gradient_avf(const Mdp& mdp, const Vec& delta, const PolicyGradientConfig& cfg) {
    if (delta.size() != mdp.n_states)
        throw std::invalid_argument("policy_gradient_avf: delta length != n_states");
    if (cfg.steps < 0 || cfg.restarts < 1)
        throw std::invalid_argument("policy_gradient_avf: bad config");

    AvfResult best;
    double best_score = -std::numeric_limits<double>::infinity();
    int total_steps = 0;

    for (int restart = 0; restart < cfg.restarts; ++restart) {
        Mat logits = Mat::Zero(mdp.n_states, mdp.n_actions);
        if (restart > 0) {
            Rng rng(Rng::stream_seed(cfg.seed, restart));
            for (int x = 0; x < mdp.n_states; ++x)
                for (int a = 0; a < mdp.n_actions; ++a)
                    logits(x, a) = cfg.restart_noise * rng.gaussian();
        }

        for (int step = 0; step < cfg.steps; ++step) {
            const GradientWork w = gradient_at(mdp, delta, logits);
            if (!w.grad.allFinite())
                throw std::runtime_error("policy_gradient_avf: non-finite gradient at restart " +
                                         std::to_string(restart) + ", step " +
                                         std::to_string(step));
            logits.noalias() += cfg.learning_rate * w.grad;
            ++total_steps;
        }

        AvfResult r;
        r.delta = delta;
        r.logits = logits;
        r.policy = softmax_policy(logits);
        r.value = evaluate_policy(mdp, r.policy);
        r.flow = network_flow(mdp, r.policy, delta);
        r.functional_value = delta.dot(r.value);
        r.det_policy = determinize(r.policy);
        r.det_value = evaluate_policy(mdp, r.det_policy);
        r.det_functional_value = delta.dot(r.det_value);
        r.converged = r.det_functional_value >= r.functional_value - 1e-12;

        const double score = std::max(r.functional_value, r.det_functional_value);
        if (score > best_score) {
            best_score = score;
            best = std::move(r);
        }
    }
    best.gradient_steps = total_steps;
    return best;
}

StructureReport verify_avf_structure(const Mdp& mdp, const Policy& det_policy,
                                     const Vec& delta, double zero_tol) {
    if (!det_policy.is_deterministic(1e-9))
        throw std::invalid_argument("verify_avf_structure: policy must be deterministic");
    const Vec v = evaluate_policy(mdp, det_policy);
    const Vec d = network_flow(mdp, det_policy, delta);
    const std::vector<int> chosen = det_policy.actions();

    Mat q(mdp.n_states, mdp.n_actions);
    for (int a = 0; a < mdp.n_actions; ++a)
        q.col(a) = mdp.transition[a] * v;

    constexpr double kTieTol = 1e-9;
    StructureReport rep;
    for (int x = 0; x < mdp.n_states; ++x) {
        if (std::abs(d[x]) <= zero_tol) {
            ++rep.degenerate;
            continue;
        }
        ++rep.checked;
        const double chosen_ev = q(x, chosen[x]);
        const double best_ev = d[x] > 0 ? q.row(x).maxCoeff() : q.row(x).minCoeff();
        const bool bad = d[x] > 0 ? chosen_ev < best_ev - kTieTol : chosen_ev > best_ev + kTieTol;
        if (bad)
            rep.violations.push_back({x, d[x], chosen_ev, best_ev});
    }
    return rep;
}

StructureReport verify_avf_structure(const Mdp& mdp, const AvfResult& avf, double zero_tol) {
    return verify_avf_structure(mdp, avf.det_policy, avf.delta, zero_tol);
}

Vec t_sigma_apply(const Mdp& mdp, const SignPattern& sigma, const Vec& v) {
    Mat q(mdp.n_states, mdp.n_actions);
    for (int a = 0; a < mdp.n_actions; ++a)
        q.col(a) = mdp.transition[a] * v;
    Vec out(mdp.n_states);
    for (int x = 0; x < mdp.n_states; ++x) {
        const double ev = sigma[x] > 0 ? q.row(x).maxCoeff() : q.row(x).minCoeff();
        out[x] = mdp.reward[x] + mdp.discount * ev;
    }
    return out;
}

Vec t_sigma_fixed_point(const Mdp& mdp, const SignPattern& sigma, double tol, int max_iter) {
    if (sigma.size() != mdp.n_states)
        throw std::invalid_argument("t_sigma_fixed_point: sigma length != n_states");
    for (int i = 0; i < sigma.size(); ++i)
        if (sigma[i] != 1 && sigma[i] != -1)
            throw std::invalid_argument("t_sigma_fixed_point: sigma entries must be +1 or -1");
    if (tol <= 0)
        throw std::invalid_argument("t_sigma_fixed_point: tol must be positive");

    Vec v = Vec::Zero(mdp.n_states);
    for (int it = 0; it < max_iter; ++it) {
        Vec next = t_sigma_apply(mdp, sigma, v);
        const double change = (next - v).lpNorm<Eigen::Infinity>();
        v = std::move(next);
        if (change < tol)
            return v;
    }
    throw std::runtime_error("t_sigma_fixed_point: no convergence in " +
                             std::to_string(max_iter) + " iterations");
}

std::vector<Vec> enumerate_avfs(const Mdp& mdp, int max_states, double dedup_tol, double fp_tol) {
    if (mdp.n_states > max_states)
        throw BudgetError("enumerate_avfs: 2^" + std::to_string(mdp.n_states) +
                          " sign patterns exceed the budget cap of 2^" +
                          std::to_string(max_states));
    const std::uint64_t count = 1ull << mdp.n_states;
    std::vector<Vec> out;
    SignPattern sigma(mdp.n_states);
    for (std::uint64_t bits = 0; bits < count; ++bits) {
        for (int x = 0; x < mdp.n_states; ++x)
            sigma[x] = (bits >> x) & 1 ? 1 : -1;
        Vec v = t_sigma_fixed_point(mdp, sigma, fp_tol);
        bool dup = false;
        for (const Vec& seen : out) {
            if ((seen - v).lpNorm<Eigen::Infinity>() < dedup_tol) {
                dup = true;
                break;
            }
        }
        if (!dup)
            out.push_back(std::move(v));
    }
    return out;
}

} // namespace avf
