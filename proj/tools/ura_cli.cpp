// SPDX-License-Identifier: Apache-2.0
//
// Command line front end: `simulate` runs an error-rate sweep, `analyze`
// prints the closed-form performance estimates for a configuration, `trial`
// runs one verbose trial for debugging.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "ura/analysis.hpp"
#include "ura/harness.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::map<std::string, std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "configuration file (key = value lines)");
    for (const auto& key : ura::config_keys())
        cmd->add_option_function<std::string>(
               "--" + key.name,
               [&opts, name = key.name](const std::string& v) { opts.overrides[name] = v; },
               key.help)
            ->expected(1);
}

ura::SystemConfig build_config(const CommonOptions& opts) {
    ura::SystemConfig cfg;
    if (!opts.config_path.empty()) cfg = ura::load_config(opts.config_path);
    for (const auto& [key, value] : opts.overrides) ura::apply_override(cfg, key, value);
    cfg.validate();
    return cfg;
}

int run_simulate(const CommonOptions& opts, const std::string& out_path,
                 const std::string& format) {
    const ura::SystemConfig cfg = build_config(opts);
    const ura::ResultFormat fmt =
        format == "json" ? ura::ResultFormat::json : ura::ResultFormat::csv;

    const ura::MetricsTable table = ura::run_sweep(cfg, &std::cerr);
    if (out_path.empty())
        ura::write_results(table, std::cout, fmt);
    else
        ura::write_results(table, out_path, fmt);
    return 0;
}

int run_analyze(const CommonOptions& opts, int n_b, double c1) {
    const ura::SystemConfig cfg = build_config(opts);
    const ura::TreeCodeProfile profile = cfg.profile();
    const int n_rf = cfg.channel.n_rf_chains;
    const int n = 1 << cfg.code.block_bits;
    const double pm = ura::analysis::p_match(n_rf, n_b);

    std::cout << "p_match(N_RF=" << n_rf << ", N_b=" << n_b << ") = " << pm << "\n\n";
    std::cout << "stage  E[paths traditional]  E[paths beam-matched]\n";
    for (int j = 2; j <= profile.sub_blocks; ++j)
        std::cout << j << "  " << ura::analysis::traditional_expected_paths(cfg.sim.ka, profile, j)
                  << "  " << ura::analysis::expected_erroneous_paths(cfg.sim.ka, profile, pm, j)
                  << "\n";
    std::cout << "\nfalse-alarm bound (Markov): "
              << ura::analysis::fa_bound(cfg.sim.ka, profile, pm) << "\n";
    std::cout << "expected 2-user root collisions: "
              << ura::analysis::expected_collisions(cfg.sim.ka, 2, 1, n, profile) << "\n";
    std::cout << "K_a upper bound (c1=" << c1 << "): "
              << ura::analysis::ka_upper_bound(cfg.codebook.length, n, cfg.code.block_bits,
                                               profile.rate(), static_cast<double>(n_b) / n_rf, c1)
              << "\n";
    const auto cx = ura::analysis::complexity_estimates(cfg.sim.ka, profile, pm, n_b,
                                                        cfg.soft.l_save, cfg.soft.mpa_iters);
    std::cout << "complexity: traditional=" << cx.traditional << " hard=" << cx.hard
              << " soft=" << cx.soft << "\n";
    return 0;
}

int run_single_trial(const CommonOptions& opts, std::uint64_t seed) {
    const ura::SystemConfig cfg = build_config(opts);
    const ura::TrialResult trial = ura::run_trial(cfg, seed);

    std::cout << "seed: " << trial.seed << "\n";
    std::cout << "transmitted: " << trial.transmitted.size() << " messages\n";
    if (trial.amp_diverged) std::cout << "note: AMP flagged divergence in at least one slot\n";
    for (const auto& score : trial.scores) {
        std::cout << score.decoder << ": decoded " << score.decoded_count << ", missed "
                  << score.missed << ", false alarms " << score.false_alarms
                  << " (p_md=" << score.p_md << ", p_fa=" << score.p_fa << ")\n";
        const auto& list = trial.decoded.at(score.decoder);
        for (const auto& m : list.messages) {
            std::cout << "  ";
            for (auto bit : m.info_bits) std::cout << int(bit);
            if (score.decoder == "soft") std::cout << "  pm=" << m.path_metric;
            std::cout << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Unsourced random access link-level simulator"};
    app.require_subcommand(1);

    CommonOptions sim_opts, ana_opts, trial_opts;
    std::string out_path, format = "csv";
    int n_b = 2;
    double c1 = 1.0;
    std::uint64_t trial_seed = 1;

    CLI::App* simulate = app.add_subcommand("simulate", "run a Monte Carlo error-rate sweep");
    add_common(simulate, sim_opts);
    simulate->add_option("--out", out_path, "output file (default: stdout)");
    simulate->add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    simulate->add_option_function<std::uint64_t>(
        "--seed", [&sim_opts](std::uint64_t s) { sim_opts.overrides["sim.seed"] = std::to_string(s); },
        "master seed (alias of --sim.seed)");
    simulate->add_option_function<std::string>(
        "--decoders",
        [&sim_opts](const std::string& v) { sim_opts.overrides["sim.decoders"] = v; },
        "comma list of traditional,hard,soft");
    simulate->add_flag_function(
        "--oracle-cs",
        [&sim_opts](std::int64_t) { sim_opts.overrides["sim.oracle_cs"] = "true"; },
        "bypass AMP and feed true lists to the outer decoders");
    simulate->add_option_function<int>(
        "--erase", [&sim_opts](int k) { sim_opts.overrides["sim.erase"] = std::to_string(k); },
        "delete k true sub-blocks per user from the CS lists");

    CLI::App* analyze = app.add_subcommand("analyze", "closed-form performance estimates");
    add_common(analyze, ana_opts);
    analyze->add_option("--nb", n_b, "beams per user N_b for the pattern-matching terms");
    analyze->add_option("--c1", c1, "constant of the CS-side user bound");

    CLI::App* trial = app.add_subcommand("trial", "run one verbose trial");
    add_common(trial, trial_opts);
    trial->add_option("--seed", trial_seed, "trial seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) return run_simulate(sim_opts, out_path, format);
        if (analyze->parsed()) return run_analyze(ana_opts, n_b, c1);
        if (trial->parsed()) return run_single_trial(trial_opts, trial_seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
