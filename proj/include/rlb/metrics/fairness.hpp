#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace rlb::metrics
{
    struct TimedSample
    {
        double value = 0.0;
        double timestamp = 0.0;
    };

    /// Five-scalar summary of one observation channel.
    struct ChannelStats
    {
        double average = 0.0;
        double p90 = 0.0;
        double std = 0.0;
        double discounted_average = 0.0;
        double weighted_discounted_average = 0.0;
    };

    /// Per-second decay applied to sample age in the discounted averages.
    inline constexpr double kSampleDiscount = 0.9;

    /// Reduces a channel to ChannelStats at time `now`. Sample weights are
    /// 0.9^(now - timestamp). The 90th percentile interpolates linearly
    /// between order statistics; std is the population deviation. An empty
    /// channel reduces to zeros.
    ChannelStats reduce(std::span<const TimedSample> samples, double now);

    /// Linear-interpolation percentile (q in [0, 1]) of unsorted values.
    /// Reorders `values`.
    double percentile(std::span<double> values, double q);

    enum class FairnessIndex
    {
        jain,
        g,
        bossaer,
    };

    FairnessIndex parse_fairness_index(std::string_view name);
    std::string_view to_string(FairnessIndex index);

    // The three indices take nonnegative values. An all-zero vector is
    // treated as perfectly fair and returns 1.
    double jain(std::span<const double> x);
    double g_fairness(std::span<const double> x);
    double bossaer(std::span<const double> x);
    double fairness(FairnessIndex index, std::span<const double> x);

    /// True when every element is zero, the case the indices report as 1.
    bool all_zero(std::span<const double> x);

    enum class RewardSign
    {
        fairness_minus_one, // F - 1, maximal at perfect fairness
        literal,            // 1 - F
    };

    /// Step reward from per-server discounted-average TCTs.
    double reward(std::span<const double> per_server_tct, FairnessIndex index,
                  RewardSign sign = RewardSign::fairness_minus_one);
} // namespace rlb::metrics
