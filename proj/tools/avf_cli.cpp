#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "avf/experiment.hpp"
#include "avf/io.hpp"

namespace {

struct CliState {
    std::string config_file;
    // raw CLI values, applied on top of file and environment overrides
    std::vector<std::pair<std::string, CLI::Option*>> bound;
    std::vector<std::string> values;
};

void bind_common(CLI::App* cmd, CliState& state) {
    cmd->add_option("--config", state.config_file, "flat key = value config file");
    static const std::vector<std::pair<const char*, const char*>> options = {
        {"--env", "env"},           {"--grid", "grid"},
        {"--k", "k"},               {"--d", "d"},
        {"--gamma", "gamma"},       {"--delta-mode", "delta_mode"},
        {"--seed", "seed"},         {"--seeds", "seeds"},
        {"--out", "out"},           {"--jobs", "jobs"},
        {"--repr", "repr"},         {"--pg-steps", "pg_steps"},
        {"--pg-lr", "pg_lr"},       {"--pg-restarts", "pg_restarts"},
        {"--net-updates", "net_updates"}, {"--net-hidden", "net_hidden"},
        {"--net-batch", "net_batch"},     {"--net-lr", "net_lr"},
        {"--sarsa-steps", "sarsa_steps"}, {"--sarsa-epsilon", "sarsa_epsilon"},
        {"--sarsa-lr", "sarsa_lr"},       {"--d-list", "d_list"},
    };
    state.values.reserve(state.values.size() + options.size());
    for (const auto& [flag, key] : options) {
        state.values.emplace_back();
        CLI::Option* opt = cmd->add_option(flag, state.values.back(), key);
        state.bound.emplace_back(key, opt);
    }
}

avf::ExperimentConfig resolve_config(const CliState& state) {
    avf::ExperimentConfig cfg;
    if (!state.config_file.empty())
        cfg.load_file(state.config_file);
    cfg.apply_env_overrides();
    for (size_t i = 0; i < state.bound.size(); ++i)
        if (state.bound[i].second->count() > 0)
            cfg.set_key(state.bound[i].first, state.values[i]);
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adversarial value functions and value-geometry representation learning"};
    app.require_subcommand(1);

    CliState st_avf, st_base, st_control, st_setcover, st_poly, st_struct;
    std::string baseline_kind = "value";
    std::string instance_file;

    CLI::App* cmd_avf = app.add_subcommand(
        "avf-pipeline", "sample interest functions, solve AVFs, learn representations");
    bind_common(cmd_avf, st_avf);

    CLI::App* cmd_base =
        app.add_subcommand("baseline", "representation from a baseline target family");
    bind_common(cmd_base, st_base);
    cmd_base->add_option("--kind", baseline_kind,
                         "value | random-deterministic | random-stochastic | pvf");

    CLI::App* cmd_control =
        app.add_subcommand("control", "expected-SARSA sweep over d and provenances");
    bind_common(cmd_control, st_control);

    CLI::App* cmd_setcover =
        app.add_subcommand("setcover", "set-cover reduction report for an instance file");
    bind_common(cmd_setcover, st_setcover);
    cmd_setcover->add_option("--instance", instance_file, "set-cover instance file")->required();

    CLI::App* cmd_poly =
        app.add_subcommand("polytope-sample", "value functions of random stochastic policies");
    bind_common(cmd_poly, st_poly);

    CLI::App* cmd_struct =
        app.add_subcommand("structure-report", "one AVF with its flow and structure check");
    bind_common(cmd_struct, st_struct);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_avf->parsed()) {
            const auto dir = avf::run_avf_pipeline(resolve_config(st_avf));
            std::cout << "run directory: " << dir.string() << "\n";
        } else if (cmd_base->parsed()) {
            const auto kind = avf::baseline_kind_from_string(baseline_kind);
            const auto dir = avf::run_baseline_pipeline(resolve_config(st_base), kind);
            std::cout << "run directory: " << dir.string() << "\n";
        } else if (cmd_control->parsed()) {
            const auto cfg = resolve_config(st_control);
            const auto dir = avf::run_control_comparison(cfg, cfg.parsed_d_list());
            std::cout << "run directory: " << dir.string() << "\n";
        } else if (cmd_setcover->parsed()) {
            const auto cfg = resolve_config(st_setcover);
            const auto inst = avf::SetCoverInstance::parse(avf::read_text_file(instance_file));
            const auto rep = avf::run_setcover(cfg, inst);
            std::cout << "max R(pi)        = " << avf::fmt_double(rep.max_functional) << "\n"
                      << "cover via MDP    = " << rep.cover_via_mdp << "\n"
                      << "cover exhaustive = " << rep.cover_exhaustive << "\n"
                      << "agreement        = " << (rep.agreement ? "true" : "false") << "\n";
            return rep.agreement ? 0 : 1;
        } else if (cmd_poly->parsed()) {
            const auto dir = avf::run_polytope_sample(resolve_config(st_poly));
            std::cout << "run directory: " << dir.string() << "\n";
        } else if (cmd_struct->parsed()) {
            const auto dir = avf::run_structure_report(resolve_config(st_struct));
            std::cout << "run directory: " << dir.string() << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
