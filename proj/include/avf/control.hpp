#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avf/mdp.hpp"
#include "avf/repr.hpp"

namespace avf {

/// A control problem over the visible slice of an MDP. For grid domains the
/// hidden sink sits at index n_visible; the occupancy never includes it and
/// successor values outside the visible set count as 0 (episode end).
struct ControlTask {
    const Mdp* mdp = nullptr;
    int n_visible = 0;
    int start_state = 0;
    int goal_state = -1; // -1: no terminal restart row
};

struct ExpectedSarsaConfig {
    int steps = 50'000;
    double epsilon = 0.1;        // epsilon-greedy behaviour policy
    double step_size = 0.01;
    double occupancy_mix = 0.99; // d <- mix * d P^pi + (1 - mix) * Unif
    int record_every = 100;
    int final_window = 10;       // checkpoints averaged into the final report
    double pinv_cutoff = 1e-10;  // relative singular-value cutoff for pinv(Phi^T Phi)
};

/// Bias-augmented linear action values: Q(x, a) = [phi(x); 1]^T weights.col(a).
struct LinearQ {
    Mat weights; // (d+1) x |A|
};

struct PolicyQuality {
    double ret = 0.0;           // exact V^pi(start)
    double steps_to_goal = 0.0; // expected hitting time from start, capped when unreachable
    bool capped = false;
};

/// Exact policy quality: return via policy evaluation, steps-to-goal via the
/// hitting-time linear system. The cap is 10 n / (1 - gamma).
PolicyQuality policy_quality(const Mdp& mdp, const Policy& pi, int start_state,
                             int goal_state);

struct ControlRunRecord {
    struct Checkpoint {
        int step;
        double return_from_start;
        double mean_return_all; // averaged over visible states
        double steps_to_goal;
    };
    std::vector<Checkpoint> checkpoints;
    double final_return = 0.0;   // mean over the last final_window checkpoints
    double final_mean_return_all = 0.0;
    double final_steps_to_goal = 0.0;
    std::uint64_t seed = 0;
    std::string provenance;
    // occupancy health over the whole run
    double occupancy_max_sum_error = 0.0;
    double occupancy_min_entry = 0.0;
};

/// Model-based expected SARSA with an occupancy-weighted, pinv-preconditioned
/// semi-gradient update applied simultaneously across all states.
std::pair<LinearQ, ControlRunRecord> expected_sarsa(const ControlTask& task,
                                                    const Representation& phi,
                                                    const ExpectedSarsaConfig& cfg,
                                                    std::uint64_t seed);

/// Greedy policy over the full MDP from visible-state Q values; states at or
/// past n_visible (the sink) take action 0.
Policy greedy_from_q(const Mat& q_visible, int n_states, int n_actions);

} // namespace avf
