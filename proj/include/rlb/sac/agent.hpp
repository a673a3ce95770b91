#pragma once

#include "rlb/metrics/fairness.hpp"
#include "rlb/nn/normalizer.hpp"
#include "rlb/policy/policies.hpp"
#include "rlb/sac/model.hpp"
#include "rlb/sac/observation.hpp"
#include "rlb/sac/replay_buffer.hpp"
#include "rlb/sim/engine.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <vector>

namespace rlb::sac
{
    /// s~_j = (a_j + 1) / 2 + 0.05, strictly positive and order preserving.
    std::vector<double> action_to_speeds(const nn::Vector& action);

    inline constexpr double kSpeedFloor = 0.05;

    struct AgentOptions
    {
        int servers = 2;
        int hidden = 64;
        std::size_t batch_size = 64;
        std::size_t buffer_capacity = 3000;
        SacHyper hyper;
        metrics::FairnessIndex reward_index = metrics::FairnessIndex::jain;
        metrics::RewardSign reward_sign = metrics::RewardSign::fairness_minus_one;
        bool observe_duration = true;
        bool evaluation = false; // deterministic mean action, no learning
        policy::TieBreak tie_break = policy::TieBreak::lowest_index;
        std::uint64_t seed = 0;
        /// Where a checkpoint is written if training diverges; empty to skip.
        std::filesystem::path divergence_dump;
    };

    /// One SAC load-balancing agent. Dispatches with the server assignment
    /// rule between step boundaries and observes, learns and refreshes its
    /// speed estimates at each boundary.
    class RlbAgent final : public sim::LbHooks
    {
    public:
        explicit RlbAgent(const AgentOptions& options);

        std::size_t choose(std::span<const int> local_ongoing) override;
        void on_episode_start(std::size_t server_count) override;
        void on_dispatch(const sim::Task& task, double now) override;
        void on_completion(const sim::Task& task, double now) override;
        double on_step(const sim::StepContext& ctx) override;

        /// The per-boundary step: observe, reward, store, train, act.
        /// Returns the reward.
        double step(std::span<const int> local_ongoing, double now, bool last_step);

        const std::vector<double>& speeds() const noexcept { return speeds_; }
        const nn::Vector& last_action() const noexcept { return action_; }
        const ReplayBuffer& buffer() const noexcept { return buffer_; }
        const SacModel& model() const noexcept { return *model_; }
        SacModel& model() noexcept { return *model_; }
        const nn::InputNormalizer& normalizer() const noexcept { return normalizer_; }
        const LocalEventLog& event_log() const noexcept { return log_; }
        std::uint64_t steps() const noexcept { return steps_; }
        std::uint64_t updates() const noexcept { return updates_; }
        const std::optional<UpdateStats>& last_update() const noexcept { return last_update_; }
        const AgentOptions& options() const noexcept { return options_; }
        void set_evaluation(bool evaluation) noexcept { options_.evaluation = evaluation; }

        /// Writes `<stem>.ckpt` (nets and normalizer) and `<stem>.manifest`.
        void save(const std::filesystem::path& stem) const;
        /// Loads networks, normalizer and temperature saved by save().
        void load(const std::filesystem::path& stem);

    private:
        Minibatch sample_minibatch();
        nn::Vector act(const nn::Vector& normalized_state);

        AgentOptions options_;
        std::unique_ptr<SacModel> model_;
        std::unique_ptr<SacLearner> learner_;
        nn::InputNormalizer normalizer_;
        ReplayBuffer buffer_;
        LocalEventLog log_;
        std::mt19937_64 action_rng_;
        std::mt19937_64 sample_rng_;
        std::mt19937_64 tie_rng_;

        std::vector<double> speeds_;
        nn::Vector action_;
        std::optional<nn::Vector> prev_state_;
        nn::Vector prev_action_;
        std::uint64_t steps_ = 0;
        std::uint64_t updates_ = 0;
        std::optional<UpdateStats> last_update_;
    };
} // namespace rlb::sac
