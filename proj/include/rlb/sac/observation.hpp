#pragma once

#include "rlb/metrics/fairness.hpp"
#include "rlb/nn/dense.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace rlb::sac
{
    inline constexpr int kLbFeatures = 5;
    inline constexpr int kServerFeatures = 11;

    constexpr int observation_size(int servers) noexcept
    {
        return kLbFeatures + kServerFeatures * servers;
    }

    struct ServerObservation
    {
        metrics::ChannelStats duration; // completion - service start
        metrics::ChannelStats tct;      // completion - arrival
        double ongoing = 0.0;
    };

    struct Observation
    {
        metrics::ChannelStats inter_arrival;
        std::vector<ServerObservation> servers;

        /// [inter-arrival(5), then per server: duration(5), tct(5), ongoing(1)]
        nn::Vector to_vector() const;
    };

    /// Everything one LB can see about its own traffic during an episode:
    /// arrival instants and the completions of tasks it dispatched.
    class LocalEventLog
    {
    public:
        LocalEventLog() = default;
        explicit LocalEventLog(std::size_t servers);

        void reset(std::size_t servers);
        void record_arrival(double time);
        void record_completion(std::size_t server, double arrival, double service_start,
                               double completion);

        std::size_t server_count() const noexcept { return duration_.size(); }
        std::span<const metrics::TimedSample> inter_arrivals() const noexcept
        {
            return inter_arrival_;
        }
        std::span<const metrics::TimedSample> durations(std::size_t server) const
        {
            return duration_.at(server);
        }
        std::span<const metrics::TimedSample> tcts(std::size_t server) const
        {
            return tct_.at(server);
        }

    private:
        std::optional<double> last_arrival_;
        std::vector<metrics::TimedSample> inter_arrival_;
        std::vector<std::vector<metrics::TimedSample>> duration_;
        std::vector<std::vector<metrics::TimedSample>> tct_;
    };

    /// Reduces the log at `now`. `ongoing` is the LB's live per-server count.
    /// With include_duration false the duration channel reads as zeros.
    Observation build_observation(const LocalEventLog& log, std::span<const int> ongoing,
                                  double now, bool include_duration = true);

    /// Discounted-average TCT per server, the input of the reward.
    std::vector<double> tct_discounted_averages(const LocalEventLog& log, double now);
} // namespace rlb::sac
