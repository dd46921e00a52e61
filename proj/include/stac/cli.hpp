#pragma once

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "stac/acceptance.hpp"
#include "stac/experiment.hpp"

namespace stac {

// Exit codes: 0 ok, 2 config error, 3 inadmissible instance
// (NonErgodic / AssumptionOneViolated), 4 a run diverged, 5 mixing cap.
inline int exit_code_for(const Error& e) {
    switch (e.kind()) {
    case ErrorKind::Parameter: return 2;
    case ErrorKind::NonErgodic:
    case ErrorKind::AssumptionOneViolated: return 3;
    case ErrorKind::Diverged: return 4;
    case ErrorKind::MixingTooSlow: return 5;
    }
    return 1;
}

namespace cli_detail {

inline fs::path resolve_outdir(const std::string& flag_value, const ExperimentConfig& config) {
    if (!flag_value.empty()) return flag_value;
    fs::path root = ".";
    if (const char* env = std::getenv("STAC_OUTPUT_ROOT")) root = env;
    std::string leaf = config.raw.value("output_dir", std::string{});
    if (leaf.empty()) leaf = "stac_out_" + hash_hex(std::to_string(config.config_hash));
    return root / leaf;
}

inline ExperimentConfig load_with_overrides(const std::string& config_path,
                                            std::uint64_t seed_override, bool has_seed) {
    ExperimentConfig config = load_config(config_path);
    if (has_seed) {
        json doc = config.raw;
        doc["master_seed"] = seed_override;
        config = parse_config(doc);
    }
    return config;
}

} // namespace cli_detail

inline int cli_main(int argc, char** argv) {
    CLI::App app{"single-timescale actor-critic laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string outdir_flag;
    std::uint64_t seed_override = 0;
    bool fast = false, full = false;
    std::string theta_path;

    CLI::App* run_cmd = app.add_subcommand("run", "run the configured experiment");
    run_cmd->add_option("config", config_path, "experiment config (JSON)")->required();
    run_cmd->add_option("--out", outdir_flag, "output directory");
    CLI::Option* run_seed = run_cmd->add_option("--seed", seed_override, "master seed override");

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "grid over (T, c)");
    sweep_cmd->add_option("config", config_path, "experiment config (JSON)")->required();
    sweep_cmd->add_option("--out", outdir_flag, "output directory");
    CLI::Option* sweep_seed =
        sweep_cmd->add_option("--seed", seed_override, "master seed override");

    CLI::App* verify_cmd = app.add_subcommand("verify", "run the acceptance suite");
    verify_cmd->add_flag("--fast", fast, "oracle and identity criteria only");
    verify_cmd->add_flag("--full", full, "all criteria including trend runs");

    CLI::App* constants_cmd = app.add_subcommand("constants", "print the constant calculus");
    constants_cmd->add_option("config", config_path, "experiment config (JSON)")->required();

    CLI::App* oracle_cmd = app.add_subcommand("oracle", "dump the oracle bundle at a theta");
    oracle_cmd->add_option("config", config_path, "experiment config (JSON)")->required();
    oracle_cmd->add_option("--theta", theta_path, "JSON file with a flat theta array")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (run_cmd->parsed()) {
            ExperimentConfig config =
                cli_detail::load_with_overrides(config_path, seed_override, run_seed->count() > 0);
            fs::path outdir = cli_detail::resolve_outdir(outdir_flag, config);
            ExperimentResult result = run_experiment(config, outdir);
            std::cout << "wrote " << outdir.string() << "\n";
            if (result.any_diverged) {
                std::cerr << "warning: at least one seed diverged; partial diagnostics written\n";
                return 4;
            }
            return 0;
        }
        if (sweep_cmd->parsed()) {
            ExperimentConfig config = cli_detail::load_with_overrides(
                config_path, seed_override, sweep_seed->count() > 0);
            fs::path outdir = cli_detail::resolve_outdir(outdir_flag, config);
            SweepResult result = sweep(config, outdir);
            std::cout << "wrote " << (outdir / "sweep.json").string() << "\n";
            for (const SweepCell& cell : result.cells)
                if (!cell.failed && !cell.result.diverged_seeds.empty()) return 4;
            return 0;
        }
        if (verify_cmd->parsed()) {
            require(!(fast && full), ErrorKind::Parameter,
                    "verify: choose at most one of --fast / --full");
            AcceptanceReport report = run_acceptance(full, &std::cout);
            std::cout << (report.all_pass() ? "acceptance: ALL PASS"
                                            : "acceptance: FAILURES PRESENT")
                      << "\n";
            return report.all_pass() ? 0 : 1;
        }
        if (constants_cmd->parsed()) {
            ExperimentConfig config = load_config(config_path);
            ExperimentPlan plan = make_plan(config);
            std::cout << constants_to_json(plan).dump(2) << "\n";
            return 0;
        }
        if (oracle_cmd->parsed()) {
            ExperimentConfig config = load_config(config_path);
            SoftmaxPolicy policy = make_policy(config.mdp);
            std::ifstream in(theta_path);
            require(in.good(), ErrorKind::Parameter, "cannot open theta file " + theta_path);
            json doc;
            try {
                doc = json::parse(in);
            } catch (const json::exception& e) {
                fail(ErrorKind::Parameter, std::string("theta file: ") + e.what());
            }
            auto bundle_at = [&](const json& theta_json) {
                Vec theta = vec_from_json(theta_json);
                require(theta.size() == policy.param_dim(), ErrorKind::Parameter,
                        "theta has wrong dimension");
                return bundle_to_json(
                    compute_bundle(config.mdp, policy, config.features, theta));
            };
            if (doc.is_array()) {
                // A single flat theta vector.
                std::cout << bundle_at(doc).dump(2) << "\n";
            } else if (doc.contains("checkpoints")) {
                // A checkpoints file from a run: dump one bundle per theta_t.
                json out = json::array();
                for (const json& cp : doc["checkpoints"]) {
                    json entry = bundle_at(cp.at("theta"));
                    entry["t"] = cp.at("t");
                    out.push_back(std::move(entry));
                }
                std::cout << out.dump(2) << "\n";
            } else {
                fail(ErrorKind::Parameter,
                     "theta file must be a flat array or a checkpoints document");
            }
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

} // namespace stac
