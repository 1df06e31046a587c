#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "avf/avf_solver.hpp"
#include "avf/control.hpp"
#include "avf/envs.hpp"
#include "avf/repr.hpp"

namespace avf {

inline constexpr const char* kProjectVersion = "0.1.0";

/// Flat key=value configuration. Resolution order: defaults, then a config
/// file, then AVF_<KEY> environment variables, then CLI flags.
struct ExperimentConfig {
    std::string env = "four-room"; // builtin environment name
    std::string grid_file;         // path to an ASCII grid; overrides env
    int k = 1000;
    int d = 16;
    double gamma = 0.99;
    std::string delta_mode = "continuous"; // continuous | ternary
    std::uint64_t seed = 1;
    int seeds = 20; // control seeds
    std::string out = "runs/out";
    int jobs = 0;             // 0 = all processors
    std::string repr = "svd"; // svd | net

    int pg_steps = 1000;
    double pg_lr = 0.1;
    int pg_restarts = 1; // small MDP work wants 5; the four-room pipeline 1
    int net_updates = 200'000;
    int net_hidden = 512;
    int net_batch = 32;
    double net_lr = 0.00025;
    int sarsa_steps = 50'000;
    double sarsa_epsilon = 0.1;
    double sarsa_lr = 0.01;
    std::string d_list = "2,4,8,16,32";
    int polytope_samples = 200;

    void load_file(const std::filesystem::path& path);
    void apply_env_overrides(); // AVF_K=..., AVF_GAMMA=..., ...
    void set_key(const std::string& key, const std::string& value);

    /// Canonical "key = value" listing, one per line, fixed order.
    std::string canonical() const;
    /// FNV-1a hash of the canonical listing, as hex.
    std::string hash() const;

    GridMdp build_env() const;
    DeltaMode parsed_delta_mode() const;
    std::vector<int> parsed_d_list() const;
};

enum class BaselineKind { Value, RandomDeterministic, RandomStochastic, Pvf };
BaselineKind baseline_kind_from_string(const std::string& s);

/// Algorithm: sample k interest functions, solve the AVFs by exact policy
/// gradient (in parallel), and learn representations from their values by
/// both SVD and the two-part network. Returns the run directory.
std::filesystem::path run_avf_pipeline(const ExperimentConfig& cfg);

/// Same artifact set with targets built from a baseline family.
std::filesystem::path run_baseline_pipeline(const ExperimentConfig& cfg, BaselineKind kind);

struct ControlComparisonRow {
    std::string provenance;
    int d;
    std::uint64_t seed;
    double avg_return;
    double steps_to_goal;
};

/// SARSA control sweep over d values and representation provenances
/// (value, avf, pvf, plus the tabular ceiling), cfg.seeds runs each.
std::filesystem::path run_control_comparison(const ExperimentConfig& cfg,
                                             const std::vector<int>& d_list,
                                             std::vector<ControlComparisonRow>* rows_out = nullptr);

struct SetCoverReport {
    int max_actions = 0;
    double max_functional = 0.0; // max_pi R(pi)
    int cover_via_mdp = 0;       // round(2n - 4 max R)
    int cover_exhaustive = 0;
    bool agreement = false;
};

SetCoverReport run_setcover(const ExperimentConfig& cfg, const SetCoverInstance& inst);

std::filesystem::path run_polytope_sample(const ExperimentConfig& cfg);

std::filesystem::path run_structure_report(const ExperimentConfig& cfg);

/// Bundle used by pipelines and tests: the k AVF results for an environment,
/// solved in parallel with per-index derived seeds.
std::vector<AvfResult> solve_avfs(const GridMdp& env, const ExperimentConfig& cfg);

/// Visible-state value targets from a baseline family.
ValueTargetSet baseline_targets(const GridMdp& env, const ExperimentConfig& cfg,
                                BaselineKind kind);

/// Visible-state value targets from solved AVFs (their achieved values).
ValueTargetSet avf_targets(const GridMdp& env, const std::vector<AvfResult>& avfs);

} // namespace avf
