#include "avf/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "avf/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace avf {

namespace {

json vec_to_json(const Vec& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i)
        a.push_back(v[i]);
    return a;
}

json mat_to_json(const Mat& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

} // namespace

std::string avf_result_to_json(const AvfResult& r) {
    json j;
    j["delta"] = vec_to_json(r.delta);
    j["logits"] = mat_to_json(r.logits);
    j["value"] = vec_to_json(r.value);
    j["flow"] = vec_to_json(r.flow);
    j["functional_value"] = r.functional_value;
    j["converged"] = r.converged;
    j["det_functional_value"] = r.det_functional_value;
    j["gradient_steps"] = r.gradient_steps;
    return j.dump();
}

namespace {

struct ConfigField {
    const char* key;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

long long parse_int(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        long long x = std::stoll(v, &pos);
        if (pos != v.size())
            throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad integer for '" + key + "': " + v);
    }
}

double parse_double(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size())
            throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad number for '" + key + "': " + v);
    }
}

const std::vector<ConfigField>& config_fields() {
    auto str_field = [](std::string ExperimentConfig::*member) {
        return ConfigField{
            nullptr,
            [member](const ExperimentConfig& c) { return c.*member; },
            [member](ExperimentConfig& c, const std::string& v) { c.*member = v; },
        };
    };
    auto int_field = [](int ExperimentConfig::*member) {
        return ConfigField{
            nullptr,
            [member](const ExperimentConfig& c) { return std::to_string(c.*member); },
            [member](ExperimentConfig& c, const std::string& v) {
                c.*member = static_cast<int>(parse_int(v, "int"));
            },
        };
    };
    auto dbl_field = [](double ExperimentConfig::*member) {
        return ConfigField{
            nullptr,
            [member](const ExperimentConfig& c) { return fmt_double(c.*member); },
            [member](ExperimentConfig& c, const std::string& v) {
                c.*member = parse_double(v, "double");
            },
        };
    };
    static const std::vector<ConfigField> fields = [&] {
        std::vector<ConfigField> f;
        auto add = [&f](const char* key, ConfigField field) {
            field.key = key;
            f.push_back(std::move(field));
        };
        add("env", str_field(&ExperimentConfig::env));
        add("grid", str_field(&ExperimentConfig::grid_file));
        add("k", int_field(&ExperimentConfig::k));
        add("d", int_field(&ExperimentConfig::d));
        add("gamma", dbl_field(&ExperimentConfig::gamma));
        add("delta_mode", str_field(&ExperimentConfig::delta_mode));
        add("seed", ConfigField{nullptr,
                                [](const ExperimentConfig& c) { return std::to_string(c.seed); },
                                [](ExperimentConfig& c, const std::string& v) {
                                    c.seed = static_cast<std::uint64_t>(parse_int(v, "seed"));
                                }});
        add("seeds", int_field(&ExperimentConfig::seeds));
        add("out", str_field(&ExperimentConfig::out));
        add("jobs", int_field(&ExperimentConfig::jobs));
        add("repr", str_field(&ExperimentConfig::repr));
        add("pg_steps", int_field(&ExperimentConfig::pg_steps));
        add("pg_lr", dbl_field(&ExperimentConfig::pg_lr));
        add("pg_restarts", int_field(&ExperimentConfig::pg_restarts));
        add("net_updates", int_field(&ExperimentConfig::net_updates));
        add("net_hidden", int_field(&ExperimentConfig::net_hidden));
        add("net_batch", int_field(&ExperimentConfig::net_batch));
        add("net_lr", dbl_field(&ExperimentConfig::net_lr));
        add("sarsa_steps", int_field(&ExperimentConfig::sarsa_steps));
        add("sarsa_epsilon", dbl_field(&ExperimentConfig::sarsa_epsilon));
        add("sarsa_lr", dbl_field(&ExperimentConfig::sarsa_lr));
        add("d_list", str_field(&ExperimentConfig::d_list));
        return f;
    }();
    return fields;
}

} // namespace

void ExperimentConfig::set_key(const std::string& key, const std::string& value) {
    for (const auto& f : config_fields()) {
        if (key == f.key) {
            f.set(*this, value);
            return;
        }
    }
    throw std::invalid_argument("config: unknown key '" + key + "'");
}

void ExperimentConfig::load_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("config: cannot open " + path.string());
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw std::invalid_argument("config: expected 'key = value' at " + path.string() +
                                            ":" + std::to_string(line_no));
            continue;
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        set_key(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

void ExperimentConfig::apply_env_overrides() {
    for (const auto& f : config_fields()) {
        std::string name = "AVF_";
        for (const char* p = f.key; *p; ++p)
            name += static_cast<char>(std::toupper(*p == '-' ? '_' : *p));
        if (const char* v = std::getenv(name.c_str()))
            f.set(*this, v);
    }
}

std::string ExperimentConfig::canonical() const {
    std::ostringstream out;
    for (const auto& f : config_fields())
        out << f.key << " = " << f.get(*this) << "\n";
    return out.str();
}

std::string ExperimentConfig::hash() const {
    const std::string text = canonical();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

GridMdp ExperimentConfig::build_env() const {
    if (k < 1 || d < 1)
        throw std::invalid_argument("config: k and d must be >= 1");
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw std::invalid_argument("config: gamma must lie in [0, 1)");
    parsed_delta_mode();
    if (repr != "svd" && repr != "net")
        throw std::invalid_argument("config: repr must be 'svd' or 'net'");
    if (!grid_file.empty()) {
        if (!fs::exists(grid_file))
            throw std::invalid_argument("config: grid file does not exist: " + grid_file);
        return parse_grid(read_text_file(grid_file), gamma);
    }
    if (env == "four-room")
        return four_room(gamma);
    throw std::invalid_argument("config: unknown builtin environment '" + env + "'");
}

DeltaMode ExperimentConfig::parsed_delta_mode() const {
    if (delta_mode == "continuous")
        return DeltaMode::Continuous;
    if (delta_mode == "ternary")
        return DeltaMode::Ternary;
    throw std::invalid_argument("config: delta_mode must be 'continuous' or 'ternary'");
}

std::vector<int> ExperimentConfig::parsed_d_list() const {
    std::vector<int> out;
    std::istringstream in(d_list);
    std::string tok;
    while (std::getline(in, tok, ','))
        if (!tok.empty())
            out.push_back(static_cast<int>(parse_int(tok, "d_list")));
    if (out.empty())
        throw std::invalid_argument("config: empty d_list");
    return out;
}

BaselineKind baseline_kind_from_string(const std::string& s) {
    if (s == "value")
        return BaselineKind::Value;
    if (s == "random-deterministic" || s == "rp")
        return BaselineKind::RandomDeterministic;
    if (s == "random-stochastic" || s == "rsp")
        return BaselineKind::RandomStochastic;
    if (s == "pvf")
        return BaselineKind::Pvf;
    throw std::invalid_argument("unknown baseline kind '" + s + "'");
}

namespace {

std::string baseline_name(BaselineKind kind) {
    switch (kind) {
    case BaselineKind::Value: return "value";
    case BaselineKind::RandomDeterministic: return "random-deterministic";
    case BaselineKind::RandomStochastic: return "random-stochastic";
    case BaselineKind::Pvf: return "pvf";
    }
    return "unknown";
}

/// Appends one stage record after running it; failures are recorded in the
/// manifest (which is flushed) and rethrown so callers see partial outputs.
class RunManifest {
  public:
    RunManifest(fs::path dir, const ExperimentConfig& cfg, const std::string& command)
        : dir_(std::move(dir)) {
        fs::create_directories(dir_);
        doc_["version"] = kProjectVersion;
        doc_["command"] = command;
        doc_["config_hash"] = cfg.hash();
        doc_["seed"] = cfg.seed;
        json c;
        std::istringstream in(cfg.canonical());
        std::string line;
        while (std::getline(in, line)) {
            const auto eq = line.find(" = ");
            c[line.substr(0, eq)] = line.substr(eq + 3);
        }
        doc_["config"] = c;
        doc_["stages"] = json::array();
        doc_["outputs"] = json::array();
        write_text_file(dir_ / "config.txt", cfg.canonical());
    }

    template <typename Fn> void stage(const std::string& name, Fn&& fn) {
        try {
            fn();
            doc_["stages"].push_back({{"name", name}, {"status", "ok"}});
            flush();
        } catch (const std::exception& e) {
            doc_["stages"].push_back({{"name", name}, {"status", "failed"}, {"error", e.what()}});
            flush();
            throw;
        }
    }

    void output(const fs::path& rel, const std::string& content) {
        write_text_file(dir_ / rel, content);
        doc_["outputs"].push_back(rel.string());
    }

    json& doc() { return doc_; }
    void flush() { write_text_file(dir_ / "manifest.json", doc_.dump(2) + "\n"); }
    const fs::path& dir() const { return dir_; }

  private:
    fs::path dir_;
    json doc_;
};

Mat targets_matrix_visible(const ValueTargetSet& t) { return t.as_matrix(); }

void write_representation(RunManifest& man, const GridMdp& env, const Representation& phi,
                          const std::string& tag, const std::string& provenance) {
    man.output(tag + ".csv",
               matrix_csv(phi.features, "f",
                          "provenance=" + provenance + " d=" + std::to_string(phi.dim()) +
                              " n=" + std::to_string(phi.n_states()) +
                              " has_bias=" + (phi.has_bias ? std::string("true") : "false")));
    for (int j = 0; j < phi.dim(); ++j) {
        char name[64];
        std::snprintf(name, sizeof(name), "%s_feature_%02d.svg", tag.c_str(), j);
        man.output(name, svg_heatmap(env.spec, env.cell_to_state, phi.features.col(j)));
    }
}

ExpectedSarsaConfig sarsa_config(const ExperimentConfig& cfg) {
    ExpectedSarsaConfig sc;
    sc.steps = cfg.sarsa_steps;
    sc.epsilon = cfg.sarsa_epsilon;
    sc.step_size = cfg.sarsa_lr;
    return sc;
}

TwoPartNetConfig net_config(const ExperimentConfig& cfg, std::uint64_t stream) {
    TwoPartNetConfig nc;
    nc.hidden = cfg.net_hidden;
    nc.updates = cfg.net_updates;
    nc.batch = cfg.net_batch;
    nc.learning_rate = cfg.net_lr;
    nc.seed = Rng::stream_seed(cfg.seed, stream);
    return nc;
}

constexpr std::uint64_t kNetStream = 0x6e657400;     // representation training
constexpr std::uint64_t kControlStream = 0x63747200; // sarsa seeds
constexpr std::uint64_t kTargetStream = 0x74677400;  // baseline target sampling

} // namespace

std::vector<AvfResult> solve_avfs(const GridMdp& env, const ExperimentConfig& cfg) {
    const int nv = env.visible_states();
    const DeltaMode mode = cfg.parsed_delta_mode();
    std::vector<AvfResult> results(cfg.k);
    parallel_for(cfg.k, cfg.jobs, [&](int i) {
        Rng delta_rng(Rng::stream_seed(cfg.seed, 2 * static_cast<std::uint64_t>(i)));
        const Vec delta = env.pad_sink(sample_interest(nv, mode, delta_rng));
        PolicyGradientConfig pg;
        pg.steps = cfg.pg_steps;
        pg.learning_rate = cfg.pg_lr;
        pg.restarts = cfg.pg_restarts;
        pg.seed = Rng::stream_seed(cfg.seed, 2 * static_cast<std::uint64_t>(i) + 1);
        results[i] = policy_gradient_avf(env.mdp, delta, pg);
    });
    return results;
}

ValueTargetSet avf_targets(const GridMdp& env, const std::vector<AvfResult>& avfs) {
    ValueTargetSet t;
    t.provenance = TargetProvenance::Avf;
    t.targets.reserve(avfs.size());
    for (const auto& r : avfs)
        t.targets.push_back(r.best_value().head(env.visible_states()));
    return t;
}

ValueTargetSet baseline_targets(const GridMdp& env, const ExperimentConfig& cfg,
                                BaselineKind kind) {
    const Mdp& mdp = env.mdp;
    const int nv = env.visible_states();
    ValueTargetSet t;
    switch (kind) {
    case BaselineKind::Value: {
        t.provenance = TargetProvenance::SingleValue;
        t.targets.push_back(
            evaluate_policy(mdp, Policy::uniform(mdp.n_states, mdp.n_actions)).head(nv));
        break;
    }
    case BaselineKind::RandomDeterministic: {
        t.provenance = TargetProvenance::RandomDeterministic;
        for (int i = 0; i < cfg.k; ++i) {
            Rng rng(Rng::stream_seed(cfg.seed, kTargetStream + i));
            std::vector<int> act(mdp.n_states);
            for (int& a : act)
                a = rng.index(mdp.n_actions);
            t.targets.push_back(
                evaluate_policy(mdp, Policy::deterministic(act, mdp.n_actions)).head(nv));
        }
        break;
    }
    case BaselineKind::RandomStochastic: {
        t.provenance = TargetProvenance::RandomStochastic;
        for (Vec& v : sample_value_polytope(mdp, cfg.k, Rng::stream_seed(cfg.seed, kTargetStream)))
            t.targets.push_back(v.head(nv));
        break;
    }
    case BaselineKind::Pvf: {
        // indicator-reward value functions under the uniformly random policy,
        // restricted to the visible slice (termination drops the sink)
        t.provenance = TargetProvenance::PvfIndicator;
        const Policy uniform = Policy::uniform(mdp.n_states, mdp.n_actions);
        const Mat P = policy_transition(mdp, uniform).topLeftCorner(nv, nv);
        const Mat sr = (Mat::Identity(nv, nv) - mdp.discount * P).partialPivLu().inverse();
        for (int y = 0; y < nv; ++y)
            t.targets.push_back(sr.col(y));
        break;
    }
    }
    return t;
}

namespace {

void emit_repr_artifacts(RunManifest& man, const GridMdp& env, const ExperimentConfig& cfg,
                         const ValueTargetSet& targets, const std::string& provenance) {
    Representation svd_phi;
    man.stage("svd-representation", [&] {
        svd_phi = svd_representation(targets, cfg.d);
        write_representation(man, env, svd_phi, "repr_svd", provenance);
        man.doc()["diagnostics"]["svd_loss"] = representation_loss(svd_phi, targets);
        man.doc()["diagnostics"]["svd_repr_error_lower_bound"] = representation_error_lower_bound(
            svd_phi, env.mdp, 64, Rng::stream_seed(cfg.seed, 0x6c6200), targets.targets);
        man.doc()["diagnostics"]["repr_error_is_lower_bound"] = true;
    });
    man.stage("net-representation", [&] {
        auto [net, net_phi] = train_two_part(targets, cfg.d, net_config(cfg, kNetStream));
        write_representation(man, env, net_phi, "repr_net", provenance);
        std::vector<std::vector<std::string>> rows;
        for (const auto& [step, loss] : net.loss_log())
            rows.push_back({std::to_string(step), fmt_double(loss)});
        man.output("net_loss.csv", csv_table({"step", "loss"}, rows));
        man.doc()["diagnostics"]["net_loss"] = representation_loss(net_phi, targets);
    });
}

} // namespace

fs::path run_avf_pipeline(const ExperimentConfig& cfg) {
    GridMdp env;
    RunManifest man(cfg.out, cfg, "avf-pipeline");
    man.stage("environment", [&] { env = cfg.build_env(); });

    std::vector<AvfResult> avfs;
    man.stage("solve-avfs", [&] {
        avfs = solve_avfs(env, cfg);
        std::ostringstream jsonl;
        for (const auto& r : avfs)
            jsonl << avf_result_to_json(r) << "\n";
        man.output("avfs.jsonl", jsonl.str());

        std::vector<std::vector<std::string>> rows;
        int converged = 0;
        for (size_t i = 0; i < avfs.size(); ++i) {
            const StructureReport rep = verify_avf_structure(env.mdp, avfs[i]);
            converged += avfs[i].converged;
            rows.push_back({std::to_string(i), fmt_double(avfs[i].functional_value),
                            fmt_double(avfs[i].det_functional_value),
                            avfs[i].converged ? "1" : "0", std::to_string(rep.checked),
                            std::to_string(rep.degenerate),
                            std::to_string(rep.violations.size())});
        }
        man.output("structure_report.csv",
                   csv_table({"avf", "functional_value", "det_functional_value", "converged",
                              "flow_checked", "flow_degenerate", "violations"},
                             rows));
        man.doc()["diagnostics"]["converged_avfs"] = converged;
    });

    ValueTargetSet targets;
    man.stage("targets", [&] {
        targets = avf_targets(env, avfs);
        man.output("targets.csv", matrix_csv(targets_matrix_visible(targets), "t",
                                             "provenance=avf k=" + std::to_string(cfg.k)));
    });

    emit_repr_artifacts(man, env, cfg, targets, "avf");
    return man.dir();
}

fs::path run_baseline_pipeline(const ExperimentConfig& cfg, BaselineKind kind) {
    GridMdp env;
    RunManifest man(cfg.out, cfg, "baseline:" + baseline_name(kind));
    man.stage("environment", [&] { env = cfg.build_env(); });

    ValueTargetSet targets;
    man.stage("targets", [&] {
        targets = baseline_targets(env, cfg, kind);
        man.output("targets.csv",
                   matrix_csv(targets_matrix_visible(targets), "t",
                              "provenance=" + to_string(targets.provenance) +
                                  " k=" + std::to_string(targets.targets.size())));
    });

    emit_repr_artifacts(man, env, cfg, targets, baseline_name(kind));
    return man.dir();
}

fs::path run_control_comparison(const ExperimentConfig& cfg, const std::vector<int>& d_list,
                                std::vector<ControlComparisonRow>* rows_out) {
    GridMdp env;
    RunManifest man(cfg.out, cfg, "control");
    man.stage("environment", [&] {
        env = cfg.build_env();
        if (env.start_state < 0)
            throw std::invalid_argument("control requires a grid with a designated start 'S'");
    });
    const int nv = env.visible_states();

    ControlTask task{&env.mdp, nv, env.start_state, env.goal_state};
    const ExpectedSarsaConfig sc = sarsa_config(cfg);

    ValueTargetSet value_targets, pvf_targets, avf_t;
    man.stage("targets", [&] {
        value_targets = baseline_targets(env, cfg, BaselineKind::Value);
        pvf_targets = baseline_targets(env, cfg, BaselineKind::Pvf);
        avf_t = avf_targets(env, solve_avfs(env, cfg));
    });

    auto build_repr = [&](const ValueTargetSet& targets, int d) -> Representation {
        if (cfg.repr == "net")
            return train_two_part(targets, d, net_config(cfg, kNetStream)).second;
        return svd_representation(targets, d);
    };

    std::vector<ControlComparisonRow> rows;
    json summary;
    man.stage("control-runs", [&] {
        struct Job {
            std::string provenance;
            int d;
            Representation phi;
        };
        std::vector<Job> grid;
        for (int d : d_list) {
            grid.push_back({"value", d, build_repr(value_targets, d)});
            grid.push_back({"avf", d, build_repr(avf_t, d)});
            grid.push_back({"pvf", d, build_repr(pvf_targets, d)});
        }
        Representation tabular;
        tabular.features = Mat::Identity(nv, nv);
        grid.push_back({"tabular", nv, std::move(tabular)});

        for (const auto& job : grid) {
            std::vector<ControlRunRecord> recs(cfg.seeds);
            parallel_for(cfg.seeds, cfg.jobs, [&](int s) {
                const std::uint64_t run_seed =
                    Rng::stream_seed(cfg.seed, kControlStream + 1000ull * job.d + s);
                recs[s] = expected_sarsa(task, job.phi, sc, run_seed).second;
                recs[s].provenance = job.provenance;
            });
            for (int s = 0; s < cfg.seeds; ++s) {
                const auto& rec = recs[s];
                rows.push_back({job.provenance, job.d, rec.seed, rec.final_return,
                                rec.final_steps_to_goal});
                std::vector<std::vector<std::string>> lines;
                for (const auto& cp : rec.checkpoints)
                    lines.push_back({std::to_string(cp.step), fmt_double(cp.return_from_start),
                                     fmt_double(cp.steps_to_goal)});
                char name[96];
                std::snprintf(name, sizeof(name), "runs/%s_d%03d_seed%02d.csv",
                              job.provenance.c_str(), job.d, s);
                man.output(name, csv_table({"step", "avg_return", "steps_to_goal"}, lines));
                json& slot = summary[job.provenance][std::to_string(job.d)][std::to_string(s)];
                slot["avg_return"] = rec.final_return;
                slot["steps_to_goal"] = rec.final_steps_to_goal;
                slot["mean_return_all_states"] = rec.final_mean_return_all;
                slot["seed"] = rec.seed;
            }
        }
    });

    man.stage("summary", [&] {
        std::vector<std::vector<std::string>> lines;
        for (const auto& r : rows)
            lines.push_back({r.provenance, std::to_string(r.d), std::to_string(r.seed),
                             fmt_double(r.avg_return), fmt_double(r.steps_to_goal)});
        man.output("summary.csv",
                   csv_table({"provenance", "d", "seed", "avg_return", "steps_to_goal"}, lines));
        const auto [vstar, pistar] = value_iteration(env.mdp);
        summary["optimal_return"] = vstar[env.start_state];
        man.output("summary.json", summary.dump(2) + "\n");
    });

    if (rows_out)
        *rows_out = std::move(rows);
    return man.dir();
}

SetCoverReport run_setcover(const ExperimentConfig& cfg, const SetCoverInstance& inst) {
    const SetCoverMdp red = set_cover_mdp(inst);
    SetCoverReport rep;
    rep.max_actions = red.mdp.n_actions;
    const OracleResult best = directional_max_oracle(red.mdp, red.delta);
    rep.max_functional = best.functional;
    rep.cover_via_mdp = static_cast<int>(std::lround(2.0 * red.n - 4.0 * best.functional));
    rep.cover_exhaustive = min_cover_exhaustive(inst);
    rep.agreement = rep.cover_via_mdp == rep.cover_exhaustive;

    RunManifest man(cfg.out, cfg, "setcover");
    man.stage("report", [&] {
        json j;
        j["universe"] = red.n;
        j["sets"] = red.m;
        j["actions"] = rep.max_actions;
        j["max_functional"] = rep.max_functional;
        j["cover_via_mdp"] = rep.cover_via_mdp;
        j["cover_exhaustive"] = rep.cover_exhaustive;
        j["agreement"] = rep.agreement;
        man.output("setcover_report.json", j.dump(2) + "\n");
    });
    return rep;
}

fs::path run_polytope_sample(const ExperimentConfig& cfg) {
    GridMdp env;
    RunManifest man(cfg.out, cfg, "polytope-sample");
    man.stage("environment", [&] { env = cfg.build_env(); });
    man.stage("sample", [&] {
        const auto samples = sample_value_polytope(env.mdp, cfg.k, cfg.seed);
        Mat m(static_cast<int>(samples.size()), env.mdp.n_states);
        for (size_t i = 0; i < samples.size(); ++i)
            m.row(static_cast<int>(i)) = samples[i].transpose();
        man.output("polytope_samples.csv",
                   matrix_csv(m, "v", "k=" + std::to_string(cfg.k) + " one value function per row"));
    });
    return man.dir();
}

fs::path run_structure_report(const ExperimentConfig& cfg) {
    GridMdp env;
    RunManifest man(cfg.out, cfg, "structure-report");
    man.stage("environment", [&] { env = cfg.build_env(); });
    man.stage("solve", [&] {
        Rng delta_rng(Rng::stream_seed(cfg.seed, 0));
        const Vec delta =
            env.pad_sink(sample_interest(env.visible_states(), cfg.parsed_delta_mode(), delta_rng));
        PolicyGradientConfig pg;
        pg.steps = cfg.pg_steps;
        pg.learning_rate = cfg.pg_lr;
        pg.restarts = cfg.pg_restarts;
        pg.seed = Rng::stream_seed(cfg.seed, 1);
        const AvfResult avf = policy_gradient_avf(env.mdp, delta, pg);
        const StructureReport rep = verify_avf_structure(env.mdp, avf);

        man.output("avf.json", avf_result_to_json(avf) + "\n");
        const int nv = env.visible_states();
        man.output("heatmap_delta.svg", svg_heatmap(env.spec, env.cell_to_state, delta.head(nv)));
        man.output("heatmap_flow.svg", svg_heatmap(env.spec, env.cell_to_state, avf.flow.head(nv)));
        man.output("heatmap_avf.svg",
                   svg_heatmap(env.spec, env.cell_to_state, avf.best_value().head(nv)));

        json j;
        j["checked"] = rep.checked;
        j["degenerate"] = rep.degenerate;
        j["converged"] = avf.converged;
        j["functional_value"] = avf.functional_value;
        j["det_functional_value"] = avf.det_functional_value;
        json v = json::array();
        for (const auto& viol : rep.violations)
            v.push_back({{"state", viol.state},
                         {"flow", viol.flow},
                         {"chosen_ev", viol.chosen_ev},
                         {"best_ev", viol.best_ev}});
        j["violations"] = v;
        man.output("structure_report.json", j.dump(2) + "\n");
    });
    return man.dir();
}

} // namespace avf
