#include "avf/control.hpp"

#include <cmath>
#include <deque>

#include <Eigen/Dense>

#include "avf/rng.hpp"

namespace avf {

namespace {

constexpr double kEdgeTol = 1e-15;

std::vector<bool> reverse_reachable(const Mat& P, int target) {
    const int n = static_cast<int>(P.rows());
    std::vector<bool> seen(n, false);
    std::deque<int> queue{target};
    seen[target] = true;
    while (!queue.empty()) {
        const int y = queue.front();
        queue.pop_front();
        for (int x = 0; x < n; ++x) {
            if (!seen[x] && P(x, y) > kEdgeTol) {
                seen[x] = true;
                queue.push_back(x);
            }
        }
    }
    return seen;
}

std::vector<bool> forward_reachable_stopped(const Mat& P, int start, int stop_state) {
    const int n = static_cast<int>(P.rows());
    std::vector<bool> seen(n, false);
    std::deque<int> queue{start};
    seen[start] = true;
    while (!queue.empty()) {
        const int x = queue.front();
        queue.pop_front();
        if (x == stop_state)
            continue; // the chain is absorbed here
        for (int y = 0; y < n; ++y) {
            if (!seen[y] && P(x, y) > kEdgeTol) {
                seen[y] = true;
                queue.push_back(y);
            }
        }
    }
    return seen;
}

} // namespace

PolicyQuality policy_quality(const Mdp& mdp, const Policy& pi, int start_state, int goal_state) {
    if (start_state < 0 || start_state >= mdp.n_states || goal_state >= mdp.n_states)
        throw std::invalid_argument("policy_quality: state index out of range");
    PolicyQuality q;
    const Vec v = evaluate_policy(mdp, pi);
    q.ret = v[start_state];
    if (goal_state < 0)
        return q;

    const double cap = 10.0 * mdp.n_states / (1.0 - mdp.discount);
    if (start_state == goal_state)
        return q;

    const Mat P = policy_transition(mdp, pi);
    const std::vector<bool> can_reach = reverse_reachable(P, goal_state);
    const std::vector<bool> fwd = forward_reachable_stopped(P, start_state, goal_state);
    bool stranded = !can_reach[start_state];
    for (int x = 0; x < mdp.n_states && !stranded; ++x)
        if (fwd[x] && x != goal_state && !can_reach[x])
            stranded = true;
    if (stranded) {
        q.steps_to_goal = cap;
        q.capped = true;
        return q;
    }

    // expected hitting time on the forward-reachable set, absorbed at the goal
    std::vector<int> idx(mdp.n_states, -1);
    std::vector<int> members;
    for (int x = 0; x < mdp.n_states; ++x)
        if (fwd[x] && x != goal_state) {
            idx[x] = static_cast<int>(members.size());
            members.push_back(x);
        }
    const int m = static_cast<int>(members.size());
    Mat A = Mat::Identity(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            A(i, j) -= P(members[i], members[j]);
    const Vec h = A.partialPivLu().solve(Vec::Ones(m));
    q.steps_to_goal = h[idx[start_state]];
    return q;
}

Policy greedy_from_q(const Mat& q_visible, int n_states, int n_actions) {
    std::vector<int> act(n_states, 0);
    for (int x = 0; x < q_visible.rows(); ++x) {
        int best = 0;
        for (int a = 1; a < n_actions; ++a)
            if (q_visible(x, a) > q_visible(x, best))
                best = a;
        act[x] = best;
    }
    return Policy::deterministic(act, n_actions);
}

std::pair<LinearQ, ControlRunRecord> expected_sarsa(const ControlTask& task,
                                                    const Representation& phi,
                                                    const ExpectedSarsaConfig& cfg,
                                                    std::uint64_t seed) {
    const Mdp& mdp = *task.mdp;
    const int nv = task.n_visible;
    const int na = mdp.n_actions;
    if (phi.features.rows() != nv)
        throw std::invalid_argument("expected_sarsa: representation must cover visible states");
    if (task.start_state < 0 || task.start_state >= nv)
        throw std::invalid_argument("expected_sarsa: task needs a designated start state");

    // bias-augmented features
    Mat basis(nv, phi.features.cols() + 1);
    basis.leftCols(phi.features.cols()) = phi.features;
    basis.col(phi.features.cols()).setOnes();
    const int dp1 = static_cast<int>(basis.cols());

    // visible-restricted dynamics for the TD targets (sink successors drop out)
    std::vector<Mat> Pv(na);
    for (int a = 0; a < na; ++a)
        Pv[a] = mdp.transition[a].topLeftCorner(nv, nv);
    const Vec r = mdp.reward.head(nv);

    // pinv(Phi~^T Phi~) via truncated SVD
    Mat precond;
    {
        const Mat gram = basis.transpose() * basis;
        Eigen::BDCSVD<Mat> svd(gram, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const double cut = cfg.pinv_cutoff * svd.singularValues()[0];
        Vec inv = Vec::Zero(svd.singularValues().size());
        for (int i = 0; i < inv.size(); ++i)
            if (svd.singularValues()[i] > cut)
                inv[i] = 1.0 / svd.singularValues()[i];
        precond = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
    }

    // small random init so independent seeds give independent tie-breaking
    LinearQ q;
    q.weights.resize(dp1, na);
    {
        Rng rng(seed);
        for (int i = 0; i < dp1; ++i)
            for (int a = 0; a < na; ++a)
                q.weights(i, a) = 0.01 * rng.gaussian();
    }

    ControlRunRecord rec;
    rec.seed = seed;
    Vec occupancy = Vec::Constant(nv, 1.0 / nv);
    const Vec uniform = occupancy;
    const double eps_share = cfg.epsilon / na;

    Mat qs(nv, na), pi_eps(nv, na), td(nv, na), occ_op(nv, nv);
    for (int step = 1; step <= cfg.steps; ++step) {
        qs.noalias() = basis * q.weights;

        pi_eps.setConstant(eps_share);
        for (int x = 0; x < nv; ++x) {
            int best = 0;
            for (int a = 1; a < na; ++a)
                if (qs(x, a) > qs(x, best))
                    best = a;
            pi_eps(x, best) += 1.0 - cfg.epsilon;
        }

        // occupancy transition: true dynamics, except that termination at the
        // goal begins a new episode at the designated start (uniformly when
        // the task has no start state)
        occ_op.setZero();
        for (int a = 0; a < na; ++a)
            occ_op.noalias() += pi_eps.col(a).asDiagonal() * Pv[a];
        if (task.goal_state >= 0) {
            occ_op.row(task.goal_state).setZero();
            if (task.start_state >= 0)
                occ_op(task.goal_state, task.start_state) = 1.0;
            else
                occ_op.row(task.goal_state).setConstant(1.0 / nv);
        }
        occupancy = cfg.occupancy_mix * (occ_op.transpose() * occupancy) +
                    (1.0 - cfg.occupancy_mix) * uniform;
        rec.occupancy_max_sum_error =
            std::max(rec.occupancy_max_sum_error, std::abs(occupancy.sum() - 1.0));
        rec.occupancy_min_entry = std::min(rec.occupancy_min_entry, occupancy.minCoeff());

        // expected-SARSA targets at every state simultaneously
        const Vec v_next = (pi_eps.array() * qs.array()).rowwise().sum();
        for (int a = 0; a < na; ++a)
            td.col(a) = r + mdp.discount * (Pv[a] * v_next) - qs.col(a);

        // occupancy weights enter with mean 1 (n * d): the stated step size
        // and step count only converge at this normalization; fixed points
        // are the occupancy-weighted projections either way
        const Mat grad = basis.transpose() * ((nv * occupancy).asDiagonal() * td);
        q.weights.noalias() += cfg.step_size * (precond * grad);
        if (!q.weights.allFinite())
            throw std::runtime_error("expected_sarsa: weights diverged at step " +
                                     std::to_string(step));

        if (step % cfg.record_every == 0) {
            const Policy greedy = greedy_from_q(qs, mdp.n_states, na);
            const Vec v = evaluate_policy(mdp, greedy);
            PolicyQuality pq = policy_quality(mdp, greedy, task.start_state, task.goal_state);
            rec.checkpoints.push_back(
                {step, v[task.start_state], v.head(nv).mean(), pq.steps_to_goal});
        }
    }

    const int window = std::min<int>(cfg.final_window, static_cast<int>(rec.checkpoints.size()));
    if (window > 0) {
        double sr = 0, sa = 0, ss = 0;
        for (int i = static_cast<int>(rec.checkpoints.size()) - window;
             i < static_cast<int>(rec.checkpoints.size()); ++i) {
            sr += rec.checkpoints[i].return_from_start;
            sa += rec.checkpoints[i].mean_return_all;
            ss += rec.checkpoints[i].steps_to_goal;
        }
        rec.final_return = sr / window;
        rec.final_mean_return_all = sa / window;
        rec.final_steps_to_goal = ss / window;
    }
    return {std::move(q), std::move(rec)};
}

} // namespace avf
