#include "rlb/errors.hpp"
#include "rlb/harness/config.hpp"
#include "rlb/harness/runner.hpp"
#include "rlb/ini.hpp"
#include "rlb/sim/engine.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace
{
    enum ExitCode
    {
        ok = 0,
        config_error = 1,
        runtime_failure = 2,
    };

    void print_warnings(const rlb::harness::ExperimentConfig& cfg)
    {
        for (const auto& w : cfg.warnings)
        {
            std::cerr << "warning: " << w << '\n';
        }
    }
} // namespace

int main(int argc, char** argv)
{
    using namespace rlb;

    CLI::App app{"Event-driven load-balancing simulator with baseline and SAC policies"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string policy_name;
    std::string reward_name;
    bool reward_literal = false;
    std::string out_dir;
    bool quiet = false;

    auto* run = app.add_subcommand("run", "Run the episode schedule for one config");
    run->add_option("--config", config_path, "Config file")->required();
    run->add_option("--seed", seed, "Override the seed list with one seed");
    run->add_option("--policy", policy_name, "ecmp | wcmp | lsq | sed | rlb-sac | rlb-sac-j|g|b");
    run->add_option("--reward", reward_name, "jain | g | bossaer");
    run->add_flag("--reward-literal", reward_literal, "Use 1 - F as the reward instead of F - 1");
    run->add_option("--out", out_dir, "Output directory");
    run->add_flag("-q,--quiet", quiet, "No per-episode progress");

    std::string rates;
    std::string policies;
    std::string seeds;
    auto* sw = app.add_subcommand("sweep", "Run policies x rates x seeds and write table.csv");
    sw->add_option("--config", config_path, "Base config file")->required();
    sw->add_option("--rates", rates, "Comma-separated rate fractions");
    sw->add_option("--policies", policies, "Comma-separated policy names");
    sw->add_option("--seeds", seeds, "Comma-separated seeds");
    sw->add_option("--out", out_dir, "Output directory");

    auto* validate = app.add_subcommand("validate", "Check a config file and print it resolved");
    validate->add_option("--config", config_path, "Config file")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    harness::ExperimentConfig cfg;
    try
    {
        cfg = harness::load_config(config_path);
        if (!policy_name.empty())
        {
            const auto choice = harness::parse_policy_choice(policy_name);
            cfg.policy = choice.kind;
            if (choice.reward)
            {
                cfg.reward_index = *choice.reward;
            }
        }
        if (!reward_name.empty())
        {
            cfg.reward_index = metrics::parse_fairness_index(reward_name);
        }
        if (reward_literal)
        {
            cfg.reward_sign = metrics::RewardSign::literal;
        }
        if (seed)
        {
            cfg.seeds = {*seed};
        }
        if (!out_dir.empty())
        {
            cfg.output_dir = out_dir;
        }
        if (!rates.empty())
        {
            cfg.sweep.rates = harness::parse_double_list(rates, "--rates");
        }
        if (!policies.empty())
        {
            cfg.sweep.policies = harness::parse_name_list(policies);
            for (const auto& p : cfg.sweep.policies)
            {
                harness::parse_policy_choice(p);
            }
        }
        if (!seeds.empty())
        {
            cfg.sweep.seeds = harness::parse_seed_list(seeds, "--seeds");
        }
    }
    catch (const ConfigError& e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    }
    print_warnings(cfg);

    if (validate->parsed())
    {
        std::cout << harness::to_config_text(cfg);
        return ok;
    }

    try
    {
        if (run->parsed())
        {
            for (const auto s : cfg.seeds)
            {
                const auto dir = cfg.seeds.size() == 1 ? cfg.output_dir : cfg.output_dir / ("seed-" + std::to_string(s));
                harness::RunOptions opts{dir, true, true, {}};
                if (!quiet)
                {
                    opts.on_episode = [s](const harness::EpisodeSummary& e) {
                        std::fprintf(stderr, "seed %llu episode %d: FI %.4f avg RW %.4f max RW %.4f reward %.4f (%.1fs)\n",
                                     static_cast<unsigned long long>(s), e.episode, e.fairness, e.avg_residual,
                                     e.max_residual, e.mean_reward, e.wall_seconds);
                    };
                }
                harness::run_experiment(cfg, s, opts);
            }
            return ok;
        }
        if (cfg.sweep.rates.empty() || cfg.sweep.policies.empty() || cfg.sweep.seeds.empty())
        {
            std::cerr << "config error: sweep needs --rates, --policies and --seeds (or a [sweep] section)\n";
            return config_error;
        }
        const auto result = harness::sweep(cfg, cfg.output_dir);
        for (const auto& cell : result.cells)
        {
            std::printf("%-10s rate %-5g FI %.4f avg RW %.4f max RW %.4f (%zu ok, %zu failed)\n",
                        cell.policy.c_str(), cell.rate, cell.fairness, cell.avg_residual, cell.max_residual,
                        cell.seeds_ok.size(), cell.failures.size());
            for (const auto& f : cell.failures)
            {
                std::fprintf(stderr, "  %s\n", f.c_str());
            }
        }
        return result.failed_runs == 0 ? ok : runtime_failure;
    }
    catch (const ConfigError& e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    }
    catch (const std::exception& e)
    {
        std::cerr << "runtime failure: " << e.what() << '\n';
        return runtime_failure;
    }
}
