#pragma once

#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "stac/diagnostics.hpp"
#include "stac/experiment.hpp"
#include "stac/oracle.hpp"

namespace stac {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

struct AcceptanceReport {
    std::vector<CriterionResult> criteria;

    bool all_pass() const {
        for (const CriterionResult& c : criteria)
            if (!c.pass) return false;
        return true;
    }
};

inline void print_criterion(const CriterionResult& c, std::ostream& out) {
    out << "criterion " << c.id << " [" << c.name << "]: " << (c.pass ? "PASS" : "FAIL")
        << " -- " << c.detail << "\n";
}

inline void print_report(const AcceptanceReport& report, std::ostream& out) {
    for (const CriterionResult& c : report.criteria) print_criterion(c, out);
    out << (report.all_pass() ? "acceptance: ALL PASS" : "acceptance: FAILURES PRESENT")
        << "\n";
}

namespace acceptance_detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

inline Vec random_theta(const SoftmaxPolicy& policy, Mt64Stream& rng, double scale) {
    Vec theta(policy.param_dim());
    for (int i = 0; i < theta.size(); ++i) theta[i] = (2.0 * rng.next() - 1.0) * scale;
    return theta;
}

/// Deterministic grid of small test instances for the oracle criteria.
inline FiniteMdp instance_for(int k) {
    const int n = 3 + (k * 5) % 8;       // 3..10 states
    const int actions = 2 + k % 3;       // 2..4 actions
    const int branching = 1 + k % n;
    return generate_ergodic_garnet(n, actions, branching, 1000 + 17 * k);
}

// --- criterion 1 ---------------------------------------------------------------

inline CriterionResult oracle_self_consistency() {
    CriterionResult result{1, "oracle-self-consistency"};
    double worst = 0.0;
    Mt64Stream rng(101);
    for (int k = 0; k < 20; ++k) {
        FiniteMdp mdp = instance_for(k);
        SoftmaxPolicy policy = make_policy(mdp);
        FeatureMap map = make_centered_onehot(mdp.n_states);
        for (int probe = 0; probe < 5; ++probe) {
            Vec theta = random_theta(policy, rng, 1.0);
            OracleBundle bundle = compute_bundle(mdp, policy, map, theta);
            InducedChain chain = induced_chain(mdp, policy, theta);
            worst = std::max(worst, (chain.p_theta.transpose() * bundle.mu - bundle.mu)
                                        .cwiseAbs()
                                        .maxCoeff());
            Vec poisson =
                (Mat::Identity(mdp.n_states, mdp.n_states) - chain.p_theta) * bundle.v -
                (chain.r_theta - Vec::Constant(mdp.n_states, bundle.j));
            worst = std::max(worst, poisson.cwiseAbs().maxCoeff());
            worst = std::max(
                worst, (bundle.b_vec + bundle.a_mat * bundle.omega_star).cwiseAbs().maxCoeff());
            worst = std::max(worst, std::abs(bundle.mu.dot(bundle.v)));
            Mat probs = policy.prob_table(theta);
            Vec v_from_q = (probs.array() * bundle.q.array()).rowwise().sum();
            worst = std::max(worst, (v_from_q - bundle.v).cwiseAbs().maxCoeff());
        }
    }
    result.pass = worst <= 1e-10;
    result.detail = "max identity residual " + fmt(worst) + " (tolerance 1e-10)";
    return result;
}

// --- criterion 2 ---------------------------------------------------------------

inline CriterionResult exact_gradient() {
    CriterionResult result{2, "exact-gradient"};
    double worst_rel = 0.0;
    Mt64Stream rng(202);
    for (int k = 0; k < 10; ++k) {
        FiniteMdp mdp = instance_for(k + 3);
        SoftmaxPolicy policy = make_policy(mdp);
        Vec theta = random_theta(policy, rng, 1.0);
        Vec grad = exact_policy_gradient(mdp, policy, theta);
        Vec fd = finite_difference_gradient(mdp, policy, theta, 1e-5);
        worst_rel = std::max(worst_rel, (grad - fd).norm() / std::max(1e-12, grad.norm()));
    }
    FiniteMdp m2 = make_m2();
    SoftmaxPolicy m2_policy = make_policy(m2);
    Vec m2_grad = exact_policy_gradient(m2, m2_policy, Vec::Zero(4));
    Vec expected(4);
    expected << -0.1, 0.1, -0.1, 0.1;
    const double m2_err = (m2_grad - expected).cwiseAbs().maxCoeff();
    result.pass = worst_rel <= 1e-6 && m2_err <= 1e-10;
    result.detail = "max FD relative error " + fmt(worst_rel) + " (<= 1e-6), M2 gradient error " +
                    fmt(m2_err) + " (<= 1e-10)";
    return result;
}

// --- criterion 3 ---------------------------------------------------------------

inline CriterionResult worked_fixture() {
    CriterionResult result{3, "worked-fixture"};
    FiniteMdp mdp = make_m2();
    SoftmaxPolicy policy = make_policy(mdp);
    OracleBundle bundle = compute_bundle(mdp, policy, make_m2_fixture_features(), Vec::Zero(4));
    double worst = 0.0;
    worst = std::max(worst, std::abs(bundle.j - 0.5));
    worst = std::max(worst, std::abs(bundle.v[0] + 0.5));
    worst = std::max(worst, std::abs(bundle.v[1] - 0.5));
    worst = std::max(worst, std::abs(bundle.a_mat(0, 0) + 1.0));
    worst = std::max(worst, std::abs(bundle.b_vec[0] + 0.5));
    worst = std::max(worst, std::abs(bundle.omega_star[0] + 0.5));
    worst = std::max(worst, std::abs(bundle.lambda_margin - 1.0));
    worst = std::max(worst, bundle.eps_app_theta);
    result.pass = worst <= 1e-10;
    result.detail = "max fixture deviation " + fmt(worst) + " (tolerance 1e-10)";
    return result;
}

// --- criterion 4 ---------------------------------------------------------------

/// Tabulates the four noise functionals over all (s, a, s') triples so the
/// million-draw Monte Carlo is a categorical draw plus a lookup.
struct FunctionalTables {
    Vec mu;
    Mat probs;
    std::vector<double> phi, psi, theta, xi;  // indexed (s * A + a) * S + s'
    int n = 0, actions = 0;
};

inline FunctionalTables tabulate_functionals(const FiniteMdp& mdp, const SoftmaxPolicy& policy,
                                             const FeatureMap& map, double eta, const Vec& omega,
                                             const Vec& theta) {
    FunctionalTables tables;
    OracleBundle bundle = compute_bundle(mdp, policy, map, theta);
    Mat jacobian = critic_target_jacobian(mdp, policy, map, theta);
    Vec eh = expected_h(mdp, policy, map, theta, bundle);
    tables.mu = bundle.mu;
    tables.probs = policy.prob_table(theta);
    tables.n = mdp.n_states;
    tables.actions = mdp.n_actions;
    const std::size_t size = static_cast<std::size_t>(mdp.n_states) * mdp.n_actions * mdp.n_states;
    tables.phi.resize(size);
    tables.psi.resize(size);
    tables.theta.resize(size);
    tables.xi.resize(size);
    for (int s = 0; s < mdp.n_states; ++s)
        for (int a = 0; a < mdp.n_actions; ++a)
            for (int s_next = 0; s_next < mdp.n_states; ++s_next) {
                BiasFunctionals f = bias_functionals(mdp, policy, map, {s, a, s_next}, eta,
                                                     omega, theta, bundle, jacobian, eh);
                const std::size_t idx =
                    (static_cast<std::size_t>(s) * mdp.n_actions + a) * mdp.n_states + s_next;
                tables.phi[idx] = f.phi_f;
                tables.psi[idx] = f.psi_f;
                tables.theta[idx] = f.theta_f;
                tables.xi[idx] = f.xi_f;
            }
    return tables;
}

inline CriterionResult iid_unbiasedness() {
    CriterionResult result{4, "iid-unbiasedness"};
    std::vector<FiniteMdp> instances = {make_m2(), generate_ergodic_garnet(5, 3, 2, 20)};
    std::vector<FeatureMap> maps = {make_m2_fixture_features(), make_centered_onehot(5)};
    double worst_sigmas = 0.0;
    Mt64Stream rng(404);
    const int n_draws = 1000000;
    for (std::size_t inst = 0; inst < instances.size(); ++inst) {
        const FiniteMdp& mdp = instances[inst];
        SoftmaxPolicy policy = make_policy(mdp);
        const FeatureMap& map = maps[inst];
        for (int state_idx = 0; state_idx < 5; ++state_idx) {
            const double eta = 2.0 * rng.next() - 1.0;
            Vec omega(map.dim);
            for (int i = 0; i < map.dim; ++i) omega[i] = (2.0 * rng.next() - 1.0) * 2.0;
            Vec theta = random_theta(policy, rng, 0.8);
            FunctionalTables tables = tabulate_functionals(mdp, policy, map, eta, omega, theta);

            Mt64Stream draws(9000 + 100 * static_cast<int>(inst) + state_idx);
            double sums[4] = {0, 0, 0, 0};
            double sq[4] = {0, 0, 0, 0};
            for (int i = 0; i < n_draws; ++i) {
                const int s = sample_categorical(tables.mu, draws.next());
                const int a = sample_categorical(tables.probs.row(s), draws.next());
                const int s_next =
                    sample_categorical(mdp.transition[a].row(s), draws.next());
                const std::size_t idx =
                    (static_cast<std::size_t>(s) * tables.actions + a) * tables.n + s_next;
                const double vals[4] = {tables.phi[idx], tables.psi[idx], tables.theta[idx],
                                        tables.xi[idx]};
                for (int k = 0; k < 4; ++k) {
                    sums[k] += vals[k];
                    sq[k] += vals[k] * vals[k];
                }
            }
            for (int k = 0; k < 4; ++k) {
                const double mean = sums[k] / n_draws;
                const double se =
                    std::sqrt(std::max(0.0, sq[k] / n_draws - mean * mean) / n_draws);
                const double sigmas = se > 0.0 ? std::abs(mean) / se
                                               : (std::abs(mean) > 1e-14 ? 1e9 : 0.0);
                worst_sigmas = std::max(worst_sigmas, sigmas);
            }
        }
    }
    result.pass = worst_sigmas <= 4.0;
    result.detail = "max |mean|/stderr over Phi/Psi/Theta/Xi = " + fmt(worst_sigmas) +
                    " (<= 4 standard errors)";
    return result;
}

// --- trend rigs (criteria 5-9) ----------------------------------------------------

inline json trend_config_json(const std::string& mode, const json& features) {
    return json{{"mdp",
                 {{"garnet",
                   {{"n_states", 5}, {"n_actions", 3}, {"branching", 2}, {"seed", 20},
                    {"u_r", 1.0}}}}},
                {"features", features},
                {"mode", mode},
                {"t_list", {4096, 16384, 65536}},
                {"c", "auto"},
                {"seeds", 32},
                {"master_seed", 1},
                {"probe_thetas", {{"count", 4}, {"scale", 1.0}, {"seed", 11}}},
                {"write_traces", false}};
}

/// Lazily computed shared state for the trend criteria: both sampling modes
/// on exact features plus the rank-deficient run.
struct TrendRuns {
    ExperimentConfig iid_config;
    ExperimentPlan iid_plan;
    std::vector<CellResult> iid_cells;

    ExperimentConfig markov_config;
    ExperimentPlan markov_plan;
    std::vector<CellResult> markov_cells;

    ExperimentConfig thin_config;
    ExperimentPlan thin_plan;
    std::vector<CellResult> thin_cells;  // T = 2^14, 2^16 only
};

inline TrendRuns run_trend_cells(std::ostream* progress) {
    TrendRuns runs;
    const json exact_features = {{"kind", "centered_onehot"}};
    runs.iid_config = parse_config(trend_config_json("iid", exact_features));
    runs.iid_plan = make_plan(runs.iid_config);
    runs.markov_config = parse_config(trend_config_json("markovian", exact_features));
    runs.markov_plan = make_plan(runs.markov_config);

    const json thin_features = {{"kind", "random_bounded"}, {"dim", 1}, {"seed", 2}};
    json thin_doc = trend_config_json("iid", thin_features);
    thin_doc["t_list"] = {16384, 65536};
    runs.thin_config = parse_config(thin_doc);
    runs.thin_plan = make_plan(runs.thin_config);

    const int threads = effective_threads(runs.iid_config);
    auto run_all = [&](const ExperimentConfig& config, const ExperimentPlan& plan,
                       std::vector<CellResult>& cells, const char* label) {
        for (std::size_t i = 0; i < config.t_list.size(); ++i) {
            cells.push_back(
                run_cell(config, plan, i, config.t_list[i], plan.c, nullptr, threads));
            if (progress)
                *progress << "  [" << label << "] T = " << config.t_list[i]
                          << " done (Y=" << fmt(cells.back().means.y_mean)
                          << ", Z=" << fmt(cells.back().means.z_mean)
                          << ", G=" << fmt(cells.back().means.g_mean) << ")\n";
        }
    };
    run_all(runs.markov_config, runs.markov_plan, runs.markov_cells, "markovian");
    run_all(runs.iid_config, runs.iid_plan, runs.iid_cells, "iid");
    run_all(runs.thin_config, runs.thin_plan, runs.thin_cells, "iid, d=1");
    return runs;
}

inline RateFit g_slope(const std::vector<CellResult>& cells) {
    std::vector<std::pair<double, double>> pairs;
    for (const CellResult& cell : cells)
        pairs.push_back({static_cast<double>(cell.t_total), cell.means.g_mean});
    return fit_rate(pairs);
}

inline std::string trend_summary(const std::vector<CellResult>& cells) {
    std::ostringstream out;
    out << "Y: ";
    for (const CellResult& c : cells) out << fmt(c.means.y_mean) << " ";
    out << "Z: ";
    for (const CellResult& c : cells) out << fmt(c.means.z_mean) << " ";
    out << "G: ";
    for (const CellResult& c : cells) out << fmt(c.means.g_mean) << " ";
    return out.str();
}

inline bool strictly_decreasing(const std::vector<CellResult>& cells,
                                double (*field)(const CellResult&)) {
    for (std::size_t i = 1; i < cells.size(); ++i)
        if (!(field(cells[i]) < field(cells[i - 1]))) return false;
    return true;
}

inline CriterionResult iid_trend(const TrendRuns& runs) {
    CriterionResult result{5, "convergence-trend-iid"};
    const auto& cells = runs.iid_cells;
    const bool y_dec = strictly_decreasing(cells, [](const CellResult& c) { return c.means.y_mean; });
    const bool z_dec = strictly_decreasing(cells, [](const CellResult& c) { return c.means.z_mean; });
    const bool g_dec = strictly_decreasing(cells, [](const CellResult& c) { return c.means.g_mean; });
    RateFit fit = g_slope(cells);
    const bool slope_ok = fit.slope >= -0.8 && fit.slope <= -0.25;
    result.pass = y_dec && z_dec && g_dec && slope_ok;
    result.detail = trend_summary(cells) + "| G slope " + fmt(fit.slope) +
                    " (target [-0.8, -0.25]); decreasing y/z/g = " + std::to_string(y_dec) +
                    "/" + std::to_string(z_dec) + "/" + std::to_string(g_dec);
    return result;
}

inline CriterionResult markovian_trend(const TrendRuns& runs) {
    CriterionResult result{6, "convergence-trend-markovian"};
    const auto& cells = runs.markov_cells;
    const bool y_dec = strictly_decreasing(cells, [](const CellResult& c) { return c.means.y_mean; });
    const bool z_dec = strictly_decreasing(cells, [](const CellResult& c) { return c.means.z_mean; });
    const bool g_dec = strictly_decreasing(cells, [](const CellResult& c) { return c.means.g_mean; });
    RateFit fit = g_slope(cells);
    const bool slope_ok = fit.slope <= -0.2;
    result.pass = y_dec && z_dec && g_dec && slope_ok;
    result.detail = trend_summary(cells) + "| G slope " + fmt(fit.slope) +
                    " (target <= -0.2); decreasing y/z/g = " + std::to_string(y_dec) + "/" +
                    std::to_string(z_dec) + "/" + std::to_string(g_dec);
    return result;
}

inline CriterionResult approximation_floor(const TrendRuns& runs) {
    CriterionResult result{7, "approximation-error-floor"};
    const CellResult& exact_14 = runs.iid_cells[1];
    const CellResult& exact_16 = runs.iid_cells[2];
    const CellResult& thin_14 = runs.thin_cells[0];
    const CellResult& thin_16 = runs.thin_cells[1];
    const double separation = thin_16.means.z_mean / exact_16.means.z_mean;
    const double thin_ratio = thin_16.means.z_mean / thin_14.means.z_mean;
    const double exact_ratio = exact_16.means.z_mean / exact_14.means.z_mean;
    result.pass = separation >= 5.0 && thin_ratio >= 0.5 && exact_ratio <= 0.5;
    result.detail = "Z separation at 2^16 = " + fmt(separation) + "x (>= 5), deficient ratio " +
                    fmt(thin_ratio) + " (>= 0.5), exact ratio " + fmt(exact_ratio) +
                    " (<= 0.5)";
    return result;
}

inline CriterionResult stability(const TrendRuns& runs) {
    CriterionResult result{8, "stability-under-threshold"};
    std::int64_t diverged = 0, omega_violations = 0, delta_violations = 0, actor_violations = 0;
    auto absorb = [&](const std::vector<CellResult>& cells) {
        for (const CellResult& cell : cells) {
            diverged += static_cast<std::int64_t>(cell.diverged_seeds.size());
            omega_violations += cell.omega_bound_violations;
            delta_violations += cell.delta_bound_violations;
            actor_violations += cell.actor_step_violations;
        }
    };
    absorb(runs.iid_cells);
    absorb(runs.markov_cells);
    result.pass =
        diverged == 0 && omega_violations == 0 && delta_violations == 0 && actor_violations == 0;
    result.detail = "diverged seeds " + std::to_string(diverged) + ", bound violations omega/" +
                    "delta/actor-step = " + std::to_string(omega_violations) + "/" +
                    std::to_string(delta_violations) + "/" + std::to_string(actor_violations) +
                    " (all must be 0)";
    return result;
}

inline CriterionResult determinism(const TrendRuns& runs) {
    CriterionResult result{9, "determinism"};
    const ExperimentConfig& config = runs.iid_config;
    const ExperimentPlan& plan = runs.iid_plan;
    fs::path dir = fs::temp_directory_path() / "stac_determinism_check";
    fs::create_directories(dir);
    auto write_once = [&](const fs::path& path) {
        Trace trace = run_single(config, plan, 0, config.t_list[0], plan.c, 0);
        write_trace_csv(trace, path);
    };
    write_once(dir / "a.csv");
    write_once(dir / "b.csv");
    std::ifstream a(dir / "a.csv", std::ios::binary);
    std::ifstream b(dir / "b.csv", std::ios::binary);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    const bool identical = sa.str() == sb.str() && !sa.str().empty();
    result.pass = identical;
    result.detail = identical ? "repeated cell reproduces byte-identical trace CSVs"
                              : "trace CSV bytes differ between repeated runs";
    return result;
}

} // namespace acceptance_detail

/// Runs the acceptance criteria: 1-4 at the fast level, 1-9 at the full
/// level. Each criterion reports a measured value next to its verdict.
inline AcceptanceReport run_acceptance(bool full, std::ostream* progress = nullptr) {
    using namespace acceptance_detail;
    AcceptanceReport report;
    auto add = [&](CriterionResult c) {
        if (progress) print_criterion(c, *progress);
        report.criteria.push_back(std::move(c));
    };
    add(oracle_self_consistency());
    add(exact_gradient());
    add(worked_fixture());
    add(iid_unbiasedness());
    if (!full) return report;

    TrendRuns runs = run_trend_cells(progress);
    add(iid_trend(runs));
    add(markovian_trend(runs));
    add(approximation_floor(runs));
    add(stability(runs));
    add(determinism(runs));
    return report;
}

} // namespace stac
