#pragma once

#include "rlb/metrics/fairness.hpp"
#include "rlb/policy/policies.hpp"
#include "rlb/sac/model.hpp"
#include "rlb/sim/engine.hpp"
#include "rlb/traffic/traffic.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rlb::harness
{
    struct AgentSettings
    {
        int hidden = 64;
        std::size_t batch_size = 64;
        std::size_t buffer_size = 3000;
        sac::SacHyper hyper;
        bool observe_duration = true;
        bool evaluation = false;
        std::optional<std::filesystem::path> load_checkpoints; // directory from a previous run
    };

    struct SweepSettings
    {
        std::vector<double> rates;
        std::vector<std::string> policies;
        std::vector<std::uint64_t> seeds;
    };

    struct ExperimentConfig
    {
        std::string preset; // empty when the topology is spelled out
        sim::Topology topology;
        traffic::TrafficSpec traffic;
        policy::PolicyKind policy = policy::PolicyKind::rlb_sac;
        metrics::FairnessIndex reward_index = metrics::FairnessIndex::jain;
        metrics::RewardSign reward_sign = metrics::RewardSign::fairness_minus_one;
        policy::TieBreak tie_break = policy::TieBreak::random; // among servers with equal scores
        int episodes = 20;
        double step_interval = 0.5;
        double first_episode_duration = 60.0;
        double episode_increment = 5.0;
        std::vector<std::uint64_t> seeds{1};
        sim::LoadScale load_scale = sim::LoadScale::processors;
        std::filesystem::path output_dir = "results";
        AgentSettings agent;
        SweepSettings sweep;

        std::vector<std::string> warnings;

        /// Duration of episode `index` (0-based): first + index * increment.
        double episode_duration(int index) const;
    };

    /// Named topologies: 1lb-2s (p = 4, 2), 1lb-4s, 2lb-4s, 1lb-8s, 2lb-8s
    /// (half the servers with 4 processors, half with 2), all with p_hat = 2p.
    sim::Topology preset_topology(std::string_view name);
    std::vector<std::string> preset_names();

    /// Parses and validates config text. Unset fields take the default
    /// training hyperparameters. Errors carry the offending line and key.
    ExperimentConfig validate_config(std::string_view text);
    ExperimentConfig load_config(const std::filesystem::path& path);

    /// Canonical config text for `config`; feeding it back to
    /// validate_config reproduces the run.
    std::string to_config_text(const ExperimentConfig& config);

    /// Policy name as accepted by sweep lists: the plain policy names plus
    /// rlb-sac-j / rlb-sac-g / rlb-sac-b selecting the reward index.
    struct PolicyChoice
    {
        policy::PolicyKind kind = policy::PolicyKind::sed;
        std::optional<metrics::FairnessIndex> reward;
    };
    PolicyChoice parse_policy_choice(std::string_view name);

    std::vector<double> parse_double_list(std::string_view text, std::string_view field);
    std::vector<std::uint64_t> parse_seed_list(std::string_view text, std::string_view field);
    std::vector<std::string> parse_name_list(std::string_view text);
} // namespace rlb::harness
