#include "rlb/metrics/fairness.hpp"

#include "rlb/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace rlb::metrics
{
    double percentile(std::span<double> values, double q)
    {
        if (values.empty())
        {
            return 0.0;
        }
        const double rank = q * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(rank));
        const double frac = rank - static_cast<double>(lo);
        auto lo_it = values.begin() + static_cast<std::ptrdiff_t>(lo);
        std::nth_element(values.begin(), lo_it, values.end());
        const double lo_value = *lo_it;
        if (frac == 0.0 || lo + 1 >= values.size())
        {
            return lo_value;
        }
        const double hi_value = *std::min_element(lo_it + 1, values.end());
        return lo_value + frac * (hi_value - lo_value);
    }

    ChannelStats reduce(std::span<const TimedSample> samples, double now)
    {
        ChannelStats out;
        if (samples.empty())
        {
            return out;
        }
        const double n = static_cast<double>(samples.size());
        const double log_discount = std::log(kSampleDiscount);

        double sum = 0.0;
        double discounted = 0.0;
        double weight_sum = 0.0;
        std::vector<double> values;
        values.reserve(samples.size());
        for (const auto& s : samples)
        {
            const double w = std::exp(log_discount * (now - s.timestamp));
            sum += s.value;
            discounted += w * s.value;
            weight_sum += w;
            values.push_back(s.value);
        }
        out.average = sum / n;

        double sq = 0.0;
        for (const double v : values)
        {
            sq += (v - out.average) * (v - out.average);
        }
        out.std = std::sqrt(sq / n);
        out.discounted_average = discounted / n;
        // weight_sum underflows only when every sample is ancient
        out.weighted_discounted_average = weight_sum > 0.0 ? discounted / weight_sum : 0.0;
        out.p90 = percentile(values, 0.9);
        return out;
    }

    FairnessIndex parse_fairness_index(std::string_view name)
    {
        if (name == "jain" || name == "j")
        {
            return FairnessIndex::jain;
        }
        if (name == "g")
        {
            return FairnessIndex::g;
        }
        if (name == "bossaer" || name == "b")
        {
            return FairnessIndex::bossaer;
        }
        throw ConfigError("unknown fairness index '" + std::string(name) +
                          "' (expected jain | g | bossaer)");
    }

    std::string_view to_string(FairnessIndex index)
    {
        switch (index)
        {
        case FairnessIndex::jain:
            return "jain";
        case FairnessIndex::g:
            return "g";
        case FairnessIndex::bossaer:
            return "bossaer";
        }
        return "jain";
    }

    bool all_zero(std::span<const double> x)
    {
        return std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; });
    }

    double jain(std::span<const double> x)
    {
        if (x.empty() || all_zero(x))
        {
            return 1.0;
        }
        double sum = 0.0;
        double sq = 0.0;
        for (const double v : x)
        {
            sum += v;
            sq += v * v;
        }
        const double n = static_cast<double>(x.size());
        const double mean = sum / n;
        return mean * mean / (sq / n);
    }

    double g_fairness(std::span<const double> x)
    {
        if (x.empty() || all_zero(x))
        {
            return 1.0;
        }
        const double top = *std::max_element(x.begin(), x.end());
        double product = 1.0;
        for (const double v : x)
        {
            product *= std::sin(std::numbers::pi * v / (2.0 * top));
        }
        return product;
    }

    double bossaer(std::span<const double> x)
    {
        if (x.empty() || all_zero(x))
        {
            return 1.0;
        }
        const double top = *std::max_element(x.begin(), x.end());
        double product = 1.0;
        for (const double v : x)
        {
            product *= v / top;
        }
        return product;
    }

    double fairness(FairnessIndex index, std::span<const double> x)
    {
        switch (index)
        {
        case FairnessIndex::jain:
            return jain(x);
        case FairnessIndex::g:
            return g_fairness(x);
        case FairnessIndex::bossaer:
            return bossaer(x);
        }
        return jain(x);
    }

    double reward(std::span<const double> per_server_tct, FairnessIndex index, RewardSign sign)
    {
        const double f = fairness(index, per_server_tct);
        return sign == RewardSign::literal ? 1.0 - f : f - 1.0;
    }
} // namespace rlb::metrics
