#pragma once

#include "rlb/harness/config.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rlb::harness
{
    struct EpisodeSummary
    {
        int episode = 0;
        double duration = 0.0;
        std::size_t arrivals = 0;
        std::size_t completions = 0;
        double fairness = 1.0;     // Jain index of residual workloads, mean over steps
        double avg_residual = 0.0; // over every (step, server) sample
        double max_residual = 0.0;
        double mean_reward = 0.0;
        double wall_seconds = 0.0;
    };

    struct RunResult
    {
        std::uint64_t seed = 0;
        std::vector<EpisodeSummary> episodes;
        std::vector<double> last_episode_residuals; // sorted
    };

    struct RunOptions
    {
        /// Output directory; nothing is written when unset.
        std::optional<std::filesystem::path> out_dir;
        bool write_steps = true;
        bool write_checkpoints = true;
        std::function<void(const EpisodeSummary&)> on_episode;
    };

    /// Runs the configured episode schedule for one seed with agents that
    /// persist across episodes. Writes steps.csv, episodes.csv, cdf.csv,
    /// checkpoints/ (rlb-sac only) and manifest.ini into out_dir.
    RunResult run_experiment(const ExperimentConfig& config, std::uint64_t seed, const RunOptions& options = {});

    /// Runs every seed of `config`. One seed writes into `out`; several
    /// seeds write into out/seed-<n>.
    std::vector<RunResult> run_all_seeds(const ExperimentConfig& config, const std::filesystem::path& out);

    struct SweepCell
    {
        std::string policy;
        double rate = 0.0;
        std::vector<std::uint64_t> seeds_ok;
        std::vector<std::string> failures; // "seed N: message"
        double fairness = 0.0;             // medians over successful seeds
        double avg_residual = 0.0;
        double max_residual = 0.0;
    };

    struct SweepResult
    {
        std::vector<SweepCell> cells;
        std::size_t failed_runs = 0;
    };

    /// Cartesian product policies x rates x seeds from config.sweep. Cells run
    /// in RLB_WORKERS parallel slots (default 1). Writes cells/<label>/,
    /// table.csv and sweep_manifest.ini into `out`.
    SweepResult sweep(const ExperimentConfig& config, const std::filesystem::path& out);

    /// Median with the mean of the two middle values for even counts.
    double median(std::vector<double> values);

    /// Worker slots from RLB_WORKERS; 1 when unset or invalid.
    unsigned worker_slots();

    inline const std::vector<std::string> kStepsHeader{"episode", "step", "time", "lb_id", "server_id",
                                                       "residual_workload", "ongoing", "reward", "fairness"};
    inline const std::vector<std::string> kEpisodesHeader{"episode", "duration", "arrivals", "completions",
                                                          "fairness", "avg_residual", "max_residual",
                                                          "mean_reward", "wall_seconds"};
    inline const std::vector<std::string> kTableHeader{"policy", "rate", "fairness", "avg_residual",
                                                       "max_residual", "seeds_ok", "seeds_failed", "errors"};
} // namespace rlb::harness
