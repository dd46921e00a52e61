#pragma once

#include <array>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "stac/diagnostics.hpp"
#include "stac/error.hpp"
#include "stac/features.hpp"
#include "stac/mdp.hpp"
#include "stac/oracle.hpp"
#include "stac/policy.hpp"
#include "stac/serialize.hpp"
#include "stac/simulate.hpp"

namespace stac {

namespace fs = std::filesystem;

/// Runs fn(i) for i in [0, count) on a small worker pool. Results must land
/// in pre-indexed slots; the schedule never affects output content.
inline void parallel_for(std::int64_t count, int threads, const std::function<void(std::int64_t)>& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::int64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            const std::int64_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const int n = static_cast<int>(std::min<std::int64_t>(threads, count));
    pool.reserve(n);
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

// --- configuration ---------------------------------------------------------------

/// Parsed and validated experiment description. `c` resolves "auto" to the
/// stepsize-ratio threshold from the constant calculus.
struct ExperimentConfig {
    json raw;                       // canonical echo of the input document
    std::uint64_t config_hash = 0;  // FNV-1a of the canonical dump

    FiniteMdp mdp;
    FeatureMap features;
    Vec theta0;
    RunMode mode = RunMode::Markovian;
    std::vector<std::int64_t> t_list;
    std::optional<double> c_fixed;  // nullopt = "auto"
    std::vector<double> c_list;     // sweep only; empty otherwise
    int seeds = 32;
    std::uint64_t master_seed = 1;
    std::int64_t checkpoint_every = 0;  // 0 = auto (T / 256)
    std::optional<double> u_omega_override;
    int mu_refresh_every = 1;
    int probe_count = 4;
    double probe_scale = 1.0;
    std::uint64_t probe_seed = 11;
    int threads = 0;  // 0 = hardware concurrency
    bool write_traces = true;
    int mixing_tau_max = 64;  // horizon of the total-variation decay probe
};

inline ExperimentConfig parse_config(const json& doc) {
    ExperimentConfig config;
    config.raw = doc;
    config.config_hash = fnv1a64(doc.dump());
    try {
        const json& mdp_spec = doc.at("mdp");
        if (mdp_spec.contains("garnet")) {
            const json& g = mdp_spec["garnet"];
            config.mdp = generate_ergodic_garnet(
                g.at("n_states").get<int>(), g.at("n_actions").get<int>(),
                g.at("branching").get<int>(), g.at("seed").get<std::uint64_t>(),
                g.value("u_r", 1.0));
        } else if (mdp_spec.contains("inline")) {
            config.mdp = mdp_from_json(mdp_spec["inline"]);
        } else if (mdp_spec.contains("file")) {
            std::ifstream in(mdp_spec["file"].get<std::string>());
            require(in.good(), ErrorKind::Parameter, "config: cannot open mdp file");
            config.mdp = mdp_from_json(json::parse(in));
        } else {
            fail(ErrorKind::Parameter, "config: mdp must be garnet, inline, or file");
        }
        require(validate(config.mdp).valid(), ErrorKind::Parameter,
                "config: mdp fails validation");

        const json& feat = doc.at("features");
        const std::string kind = feat.at("kind").get<std::string>();
        if (kind == "centered_onehot") {
            config.features = make_centered_onehot(config.mdp.n_states);
        } else if (kind == "random_bounded") {
            config.features = make_random_bounded(config.mdp.n_states, feat.at("dim").get<int>(),
                                                  feat.at("seed").get<std::uint64_t>());
        } else if (kind == "custom") {
            config.features = make_custom(mat_from_json(feat.at("table")));
            require(config.features.n_states() == config.mdp.n_states, ErrorKind::Parameter,
                    "config: custom feature table has wrong number of rows");
        } else {
            fail(ErrorKind::Parameter, "config: unknown feature kind " + kind);
        }

        SoftmaxPolicy policy = make_policy(config.mdp);
        if (doc.contains("policy_init")) {
            config.theta0 = vec_from_json(doc["policy_init"]);
            require(config.theta0.size() == policy.param_dim(), ErrorKind::Parameter,
                    "config: policy_init has wrong dimension");
            require(config.theta0.allFinite(), ErrorKind::Parameter,
                    "config: policy_init must be finite");
        } else {
            config.theta0 = Vec::Zero(policy.param_dim());
        }

        const std::string mode = doc.at("mode").get<std::string>();
        if (mode == "markovian") config.mode = RunMode::Markovian;
        else if (mode == "iid") config.mode = RunMode::Iid;
        else fail(ErrorKind::Parameter, "config: mode must be markovian or iid");

        for (const json& t : doc.at("t_list")) {
            const std::int64_t value = t.get<std::int64_t>();
            require(value >= 1, ErrorKind::Parameter, "config: T values must be >= 1");
            config.t_list.push_back(value);
        }
        require(!config.t_list.empty(), ErrorKind::Parameter, "config: t_list is empty");

        if (doc.contains("c")) {
            const json& c = doc["c"];
            if (c.is_string()) {
                require(c.get<std::string>() == "auto", ErrorKind::Parameter,
                        "config: c must be a number or \"auto\"");
            } else {
                config.c_fixed = c.get<double>();
                require(*config.c_fixed > 0.0, ErrorKind::Parameter,
                        "config: c must be positive");
            }
        }
        if (doc.contains("c_list"))
            for (const json& c : doc["c_list"]) {
                config.c_list.push_back(c.get<double>());
                require(config.c_list.back() > 0.0, ErrorKind::Parameter,
                        "config: c_list entries must be positive");
            }

        config.seeds = doc.value("seeds", 32);
        require(config.seeds >= 1, ErrorKind::Parameter, "config: seeds must be >= 1");
        config.master_seed = doc.value("master_seed", std::uint64_t{1});
        config.checkpoint_every = doc.value("checkpoint_every", std::int64_t{0});
        require(config.checkpoint_every >= 0, ErrorKind::Parameter,
                "config: checkpoint_every must be >= 0");
        if (doc.contains("u_omega")) {
            config.u_omega_override = doc["u_omega"].get<double>();
            require(*config.u_omega_override > 0.0, ErrorKind::Parameter,
                    "config: u_omega must be positive");
        }
        config.mu_refresh_every = doc.value("mu_refresh_every", 1);
        require(config.mu_refresh_every >= 1, ErrorKind::Parameter,
                "config: mu_refresh_every must be >= 1");
        if (doc.contains("probe_thetas")) {
            const json& p = doc["probe_thetas"];
            config.probe_count = p.value("count", 4);
            config.probe_scale = p.value("scale", 1.0);
            config.probe_seed = p.value("seed", std::uint64_t{11});
            require(config.probe_count >= 0, ErrorKind::Parameter,
                    "config: probe count must be >= 0");
        }
        config.threads = doc.value("threads", 0);
        config.write_traces = doc.value("write_traces", true);
        if (doc.contains("tolerances")) {
            const json& tol = doc["tolerances"];
            config.mixing_tau_max = tol.value("mixing_tau_max", 64);
            require(config.mixing_tau_max >= 2, ErrorKind::Parameter,
                    "config: mixing_tau_max must be >= 2");
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::Parameter, std::string("config: ") + e.what());
    }
    return config;
}

inline ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::Parameter, "cannot open config file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorKind::Parameter, std::string("config parse error: ") + e.what());
    }
    return parse_config(doc);
}

/// The probe set for the constant calculus: theta0 plus `count` random
/// parameter vectors drawn at the configured scale.
inline std::vector<Vec> probe_theta_set(const ExperimentConfig& config) {
    SoftmaxPolicy policy = make_policy(config.mdp);
    std::vector<Vec> probes = {config.theta0};
    Mt64Stream rng(config.probe_seed);
    for (int k = 0; k < config.probe_count; ++k) {
        Vec theta(policy.param_dim());
        for (int i = 0; i < theta.size(); ++i)
            theta[i] = (2.0 * rng.next() - 1.0) * config.probe_scale;
        probes.push_back(theta);
    }
    return probes;
}

// --- derived run plan -------------------------------------------------------------

/// Everything needed to execute cells: the constant calculus, the resolved
/// stepsize ratio, and the projection radius.
struct ExperimentPlan {
    SoftmaxPolicy policy;
    PaperConstants constants;
    StepsizeVerdict verdict;
    PolicyProbe policy_probe;
    double u_omega = 0.0;  // radius actually used by the runners
    double c = 0.0;

    std::int64_t tau_for(std::int64_t t_total) const {
        return mixing_time_tau(constants.m, constants.rho, t_total);
    }
};

inline ExperimentPlan make_plan(const ExperimentConfig& config) {
    ExperimentPlan plan;
    plan.policy = make_policy(config.mdp);
    std::vector<Vec> probes = probe_theta_set(config);
    plan.constants = paper_constants(config.mdp, plan.policy,
                                     policy_constants(config.mdp.n_states, config.mdp.n_actions),
                                     config.features, probes, config.c_fixed,
                                     config.mixing_tau_max);
    plan.verdict = check_stepsize_condition(plan.constants);
    plan.policy_probe = probe_policy_constants(plan.policy, 1000, config.probe_seed + 1);
    plan.c = plan.constants.c;
    if (config.u_omega_override) {
        plan.u_omega = *config.u_omega_override;
    } else {
        // Default radius from the margin at theta0, the runner-facing choice.
        OracleBundle at_start =
            compute_bundle(config.mdp, plan.policy, config.features, config.theta0);
        plan.u_omega = 2.0 * config.mdp.u_r / at_start.lambda_margin;
    }
    // Theorem hypothesis T >= 2 tau_T, checked once (m, rho) are known.
    for (std::int64_t t : config.t_list) {
        const std::int64_t tau = plan.tau_for(t);
        require(t >= 2 * tau, ErrorKind::Parameter,
                "config: T = " + std::to_string(t) + " violates T >= 2 tau_T (tau_T = " +
                    std::to_string(tau) + ")");
    }
    return plan;
}

inline std::int64_t checkpoint_cadence(const ExperimentConfig& config, std::int64_t t_total) {
    if (config.checkpoint_every > 0) return config.checkpoint_every;
    return std::max<std::int64_t>(1, t_total / 256);
}

/// Documented run-index rule: cell T-index in the high word, seed in the low.
inline std::uint64_t run_index_for(std::size_t t_index, int seed) {
    return (static_cast<std::uint64_t>(t_index) << 32) | static_cast<std::uint64_t>(seed);
}

inline Trace run_single(const ExperimentConfig& config, const ExperimentPlan& plan,
                        std::size_t t_index, std::int64_t t_total, double c, int seed) {
    StepSizes steps = stepsizes(t_total, c);
    RunOptions options;
    options.checkpoint_every = checkpoint_cadence(config, t_total);
    options.mu_refresh_every = config.mu_refresh_every;
    options.monitor_omega_star = true;
    SeededStreams streams(config.master_seed, run_index_for(t_index, seed));
    Vec omega0 = Vec::Zero(config.features.dim);
    Trace trace =
        config.mode == RunMode::Markovian
            ? run_markovian(config.mdp, plan.policy, config.features, config.theta0, omega0,
                            0.0, steps, plan.u_omega, streams.view(), options)
            : run_iid(config.mdp, plan.policy, config.features, config.theta0, omega0, 0.0,
                      steps, plan.u_omega, streams.view(), options);
    trace.run_seed = run_index_for(t_index, seed);
    trace.config_hash = config.config_hash;
    return trace;
}

// --- file emission ------------------------------------------------------------------

inline void write_trace_csv(const Trace& trace, const fs::path& path) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::Parameter, "cannot write " + path.string());
    out << "t,s,a,r,delta,eta,omega_norm\n";
    for (const StepRecord& rec : trace.steps) {
        out << rec.t << ',' << rec.s << ',' << rec.a << ',' << format_double(rec.r) << ','
            << format_double(rec.delta) << ',' << format_double(rec.eta) << ','
            << format_double(rec.omega_norm) << '\n';
    }
}

inline void write_errors_csv(const ErrorTrajectories& traj, const fs::path& path) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::Parameter, "cannot write " + path.string());
    out << "t,y,z_norm_sq,grad_norm_sq\n";
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
        out << traj.t[i] << ',' << format_double(traj.y[i]) << ','
            << format_double(traj.z_norm_sq[i]) << ',' << format_double(traj.grad_norm_sq[i])
            << '\n';
    }
}

inline json checkpoints_to_json(const Trace& trace) {
    json list = json::array();
    for (const Checkpoint& cp : trace.checkpoints)
        list.push_back({{"t", cp.t},
                        {"eta", cp.eta},
                        {"theta", vec_to_json(cp.theta)},
                        {"omega", vec_to_json(cp.omega)}});
    json doc{{"mode", to_string(trace.mode)},
             {"run_seed", trace.run_seed},
             {"config_hash", hash_hex(std::to_string(trace.config_hash))},
             {"checkpoints", std::move(list)}};
    if (trace.diverged_at) doc["diverged_at"] = *trace.diverged_at;
    return doc;
}

inline json constants_to_json(const ExperimentPlan& plan) {
    const PaperConstants& pc = plan.constants;
    json doc{{"u_r", pc.u_r},
             {"u_omega", pc.u_omega},
             {"u_delta", pc.u_delta},
             {"g_bound", pc.g_bound},
             {"lambda", pc.lambda},
             {"m", pc.m},
             {"rho", pc.rho},
             {"l_j", pc.l_j},
             {"l_star", pc.l_star},
             {"b_bound", pc.b_bound},
             {"l_pi", pc.l_pi},
             {"l_l", pc.l_l},
             {"l1", pc.l1},
             {"l2", pc.l2},
             {"l3", pc.l3},
             {"l4", pc.l4},
             {"c", pc.c},
             {"c_threshold", pc.c_threshold},
             {"u_omega_run", plan.u_omega},
             {"policy_probe",
              {{"b_max", plan.policy_probe.b_max},
               {"l_l_max", plan.policy_probe.l_l_max},
               {"l_pi_max", plan.policy_probe.l_pi_max}}},
             {"stepsize_condition",
              {{"lhs_a", plan.verdict.lhs_a},
               {"lhs_b", plan.verdict.lhs_b},
               {"condition_a", plan.verdict.condition_a},
               {"condition_b", plan.verdict.condition_b},
               {"pass", plan.verdict.pass}}}};
    if (pc.l_jprime) doc["l_jprime_probe"] = *pc.l_jprime;
    if (pc.l_s) doc["l_s_probe"] = *pc.l_s;
    if (pc.l_mu) doc["l_mu_probe"] = *pc.l_mu;
    return doc;
}

// --- cells ---------------------------------------------------------------------------

/// Result of one (T, c) cell: seed-averaged windowed means plus the
/// stability bookkeeping the acceptance criteria need.
struct CellResult {
    std::int64_t t_total = 0;
    double c = 0.0;
    std::int64_t tau = 0;
    WindowedMeans means;
    std::vector<int> diverged_seeds;
    std::int64_t omega_bound_violations = 0;
    std::int64_t delta_bound_violations = 0;
    std::int64_t actor_step_violations = 0;
    std::int64_t omega_star_exit_count = 0;
    double u_omega = 0.0;
    double u_delta = 0.0;
    double actor_step_bound = 0.0;  // alpha * G with the run's radius
};

inline CellResult run_cell(const ExperimentConfig& config, const ExperimentPlan& plan,
                           std::size_t t_index, std::int64_t t_total, double c,
                           const fs::path* outdir, int threads) {
    CellResult cell;
    cell.t_total = t_total;
    cell.c = c;
    cell.tau = plan.tau_for(t_total);
    cell.u_omega = plan.u_omega;
    cell.u_delta = 2.0 * config.mdp.u_r + 2.0 * plan.u_omega;
    cell.actor_step_bound = stepsizes(t_total, c).alpha * cell.u_delta * plan.constants.b_bound;

    std::vector<ErrorTrajectories> trajectories(config.seeds);
    std::vector<std::optional<std::int64_t>> diverged(config.seeds);
    std::vector<std::array<std::int64_t, 4>> counters(config.seeds, {0, 0, 0, 0});

    parallel_for(config.seeds, threads, [&](std::int64_t seed) {
        Trace trace = run_single(config, plan, t_index, t_total, c, static_cast<int>(seed));
        if (outdir && config.write_traces) {
            char name[64];
            std::snprintf(name, sizeof(name), "trace_seed%04d.csv", static_cast<int>(seed));
            write_trace_csv(trace, *outdir / name);
            std::snprintf(name, sizeof(name), "checkpoints_seed%04d.json",
                          static_cast<int>(seed));
            std::ofstream out(*outdir / name);
            out << checkpoints_to_json(trace).dump(2) << '\n';
        }
        diverged[seed] = trace.diverged_at;
        counters[seed] = {trace.omega_bound_violations, trace.delta_bound_violations,
                          trace.actor_step_violations,
                          static_cast<std::int64_t>(trace.omega_star_exits.size())};
        if (!trace.diverged_at) {
            trajectories[seed] =
                error_trajectories(trace, config.mdp, plan.policy, config.features);
            if (outdir && config.write_traces) {
                char name[64];
                std::snprintf(name, sizeof(name), "errors_seed%04d.csv",
                              static_cast<int>(seed));
                write_errors_csv(trajectories[seed], *outdir / name);
            }
        }
    });

    std::vector<ErrorTrajectories> usable;
    for (int seed = 0; seed < config.seeds; ++seed) {
        if (diverged[seed]) {
            cell.diverged_seeds.push_back(seed);
        } else {
            usable.push_back(std::move(trajectories[seed]));
        }
        cell.omega_bound_violations += counters[seed][0];
        cell.delta_bound_violations += counters[seed][1];
        cell.actor_step_violations += counters[seed][2];
        cell.omega_star_exit_count += counters[seed][3];
    }
    if (!usable.empty()) cell.means = windowed_means(usable, cell.tau, t_total);
    return cell;
}

inline json cell_to_json(const CellResult& cell, std::uint64_t config_hash,
                         const ExperimentPlan* plan = nullptr) {
    json doc{{"T", cell.t_total},
                {"c", cell.c},
                {"tau", cell.tau},
                {"n_seeds", cell.means.n_seeds},
                {"n_excluded", cell.means.n_excluded},
                {"y_mean", cell.means.y_mean},
                {"y_stderr", cell.means.y_stderr},
                {"z_mean", cell.means.z_mean},
                {"z_stderr", cell.means.z_stderr},
                {"g_mean", cell.means.g_mean},
                {"g_stderr", cell.means.g_stderr},
                {"diverged_seeds", cell.diverged_seeds},
                {"omega_bound_violations", cell.omega_bound_violations},
                {"delta_bound_violations", cell.delta_bound_violations},
                {"actor_step_violations", cell.actor_step_violations},
                {"omega_star_exits", cell.omega_star_exit_count},
                {"config_hash", hash_hex(std::to_string(config_hash))}};
    if (plan) doc["constants"] = constants_to_json(*plan);
    return doc;
}

// --- experiment drivers ----------------------------------------------------------------

struct ExperimentResult {
    fs::path outdir;
    ExperimentPlan plan;
    std::vector<CellResult> cells;  // one per T
    bool any_diverged = false;
};

inline int effective_threads(const ExperimentConfig& config) {
    if (config.threads > 0) return config.threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

inline void write_trend_files(const std::vector<CellResult>& cells, const fs::path& outdir) {
    {
        std::ofstream dat(outdir / "trend.dat");
        dat << "# T y_mean y_stderr z_mean z_stderr g_mean g_stderr\n";
        for (const CellResult& cell : cells) {
            dat << cell.t_total << ' ' << format_double(cell.means.y_mean) << ' '
                << format_double(cell.means.y_stderr) << ' ' << format_double(cell.means.z_mean)
                << ' ' << format_double(cell.means.z_stderr) << ' '
                << format_double(cell.means.g_mean) << ' ' << format_double(cell.means.g_stderr)
                << '\n';
        }
    }
    std::ofstream gp(outdir / "plot.gp");
    gp << "set logscale xy\n"
          "set xlabel 'T'\n"
          "set ylabel 'windowed mean squared error'\n"
          "set key left bottom\n"
          "plot 'trend.dat' using 1:2:3 with yerrorlines title 'Y_T', \\\n"
          "     'trend.dat' using 1:4:5 with yerrorlines title 'Z_T', \\\n"
          "     'trend.dat' using 1:6:7 with yerrorlines title 'G_T'\n";
}

inline json rate_fit_json(const std::vector<CellResult>& cells) {
    json doc;
    auto fit_of = [&](auto accessor, const char* key) {
        std::vector<std::pair<double, double>> pairs;
        for (const CellResult& cell : cells) {
            const double value = accessor(cell);
            if (cell.means.n_seeds > 0 && value > 0.0)
                pairs.push_back({static_cast<double>(cell.t_total), value});
        }
        if (pairs.size() >= 3) {
            RateFit fit = fit_rate(pairs);
            doc[key] = {{"slope", fit.slope},
                        {"intercept", fit.intercept},
                        {"r_squared", fit.r_squared}};
        } else {
            doc[key] = nullptr;
        }
    };
    fit_of([](const CellResult& c) { return c.means.y_mean; }, "y");
    fit_of([](const CellResult& c) { return c.means.z_mean; }, "z");
    fit_of([](const CellResult& c) { return c.means.g_mean; }, "g");
    return doc;
}

/// Runs the configured T list at the single resolved c and emits the full
/// artifact directory. Divergent seeds do not abort: partial diagnostics are
/// still written and the result is flagged.
inline ExperimentResult run_experiment(const ExperimentConfig& config, const fs::path& outdir) {
    ExperimentResult result;
    result.outdir = outdir;
    result.plan = make_plan(config);
    fs::create_directories(outdir);

    {
        json echo = config.raw;
        echo["resolved_c"] = result.plan.c;
        echo["config_hash"] = hash_hex(std::to_string(config.config_hash));
        std::ofstream out(outdir / "config.json");
        out << echo.dump(2) << '\n';
    }
    {
        std::ofstream out(outdir / "constants.json");
        json doc = constants_to_json(result.plan);
        doc["config_hash"] = hash_hex(std::to_string(config.config_hash));
        out << doc.dump(2) << '\n';
    }

    const int threads = effective_threads(config);
    for (std::size_t i = 0; i < config.t_list.size(); ++i) {
        const std::int64_t t_total = config.t_list[i];
        fs::path cell_dir = outdir / ("T" + std::to_string(t_total));
        fs::create_directories(cell_dir);
        CellResult cell = run_cell(config, result.plan, i, t_total, result.plan.c, &cell_dir,
                                   threads);
        {
            std::ofstream out(cell_dir / "metrics.json");
            out << cell_to_json(cell, config.config_hash, &result.plan).dump(2) << '\n';
        }
        result.any_diverged = result.any_diverged || !cell.diverged_seeds.empty();
        result.cells.push_back(std::move(cell));
    }

    write_trend_files(result.cells, outdir);
    {
        std::ofstream out(outdir / "rate_fit.json");
        out << rate_fit_json(result.cells).dump(2) << '\n';
    }
    return result;
}

// --- sweep -------------------------------------------------------------------------------

struct SweepCell {
    std::int64_t t_total = 0;
    double c = 0.0;
    bool failed = false;       // infrastructure failure (e.g. NonErgodic), not divergence
    std::string error;
    StepsizeVerdict verdict;
    CellResult result;
};

struct SweepResult {
    fs::path outdir;
    ExperimentPlan plan;
    std::vector<SweepCell> cells;
};

/// Grid over (T, c); cells run in parallel and per-cell failures are
/// recorded without stopping the sweep.
inline SweepResult sweep(const ExperimentConfig& config, const fs::path& outdir) {
    SweepResult result;
    result.outdir = outdir;
    result.plan = make_plan(config);
    fs::create_directories(outdir);

    std::vector<double> c_values = config.c_list;
    if (c_values.empty()) c_values.push_back(result.plan.c);

    const std::size_t n_cells = config.t_list.size() * c_values.size();
    result.cells.resize(n_cells);
    const int threads = effective_threads(config);
    // Parallelism across cells; seeds inside a cell run serially here.
    parallel_for(static_cast<std::int64_t>(n_cells), threads, [&](std::int64_t index) {
        const std::size_t t_index = index / c_values.size();
        const std::size_t c_index = index % c_values.size();
        SweepCell& cell = result.cells[index];
        cell.t_total = config.t_list[t_index];
        cell.c = c_values[c_index];
        PaperConstants bound = result.plan.constants;
        bound.c = cell.c;
        bound.l1 = bound.c * bound.g_bound;
        bound.l3 = 2.0 * bound.c * bound.b_bound * bound.l_star / bound.lambda;
        cell.verdict = check_stepsize_condition(bound);
        try {
            cell.result = run_cell(config, result.plan, t_index, cell.t_total, cell.c,
                                   nullptr, 1);
        } catch (const Error& e) {
            cell.failed = true;
            cell.error = e.what();
        }
    });

    json cells = json::array();
    for (const SweepCell& cell : result.cells) {
        json entry = cell.failed
                         ? json{{"T", cell.t_total}, {"c", cell.c}, {"error", cell.error}}
                         : cell_to_json(cell.result, config.config_hash);
        entry["condition_fail"] = !cell.verdict.pass;
        entry["failed"] = cell.failed;
        cells.push_back(std::move(entry));
    }
    json doc{{"config_hash", hash_hex(std::to_string(config.config_hash))},
             {"constants", constants_to_json(result.plan)},
             {"cells", std::move(cells)}};
    std::ofstream out(outdir / "sweep.json");
    out << doc.dump(2) << '\n';
    return result;
}

// --- oracle dump -----------------------------------------------------------------------

inline json bundle_to_json(const OracleBundle& bundle) {
    return json{{"mu", vec_to_json(bundle.mu)},
                {"j", bundle.j},
                {"v", vec_to_json(bundle.v)},
                {"q", mat_to_json(bundle.q)},
                {"a_mat", mat_to_json(bundle.a_mat)},
                {"b_vec", vec_to_json(bundle.b_vec)},
                {"omega_star", vec_to_json(bundle.omega_star)},
                {"grad_j", vec_to_json(bundle.grad_j)},
                {"lambda", bundle.lambda_margin},
                {"eps_app_theta", bundle.eps_app_theta}};
}

} // namespace stac
