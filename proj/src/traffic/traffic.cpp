#include "rlb/traffic/traffic.hpp"

#include "rlb/errors.hpp"

#include <string>

namespace rlb::traffic
{
    void TrafficSpec::validate() const
    {
        if (!(rate_fraction > 0.0))
        {
            throw ConfigError("traffic: rate_fraction must be > 0, got " +
                              std::to_string(rate_fraction));
        }
        if (const auto* id = std::get_if<Identical>(&distribution); id && !(id->workload > 0.0))
        {
            throw ConfigError("traffic: identical workload must be > 0");
        }
        if (const auto* ex = std::get_if<Exponential>(&distribution); ex && !(ex->mean > 0.0))
        {
            throw ConfigError("traffic: exponential mean must be > 0");
        }
    }

    double mean_workload(const WorkloadDistribution& distribution)
    {
        if (const auto* id = std::get_if<Identical>(&distribution))
        {
            return id->workload;
        }
        return std::get<Exponential>(distribution).mean;
    }

    double system_capacity(const sim::Topology& topology, const WorkloadDistribution& distribution)
    {
        int processors = 0;
        for (const auto& s : topology.servers)
        {
            processors += s.p;
        }
        return static_cast<double>(processors) / mean_workload(distribution);
    }

    double arrival_rate(const TrafficSpec& spec, const sim::Topology& topology)
    {
        return spec.rate_fraction * system_capacity(topology, spec.distribution);
    }

    std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                          static_cast<std::uint32_t>(index >> 32)};
        std::uint32_t out[2];
        seq.generate(out, out + 2);
        return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    }

    std::vector<sim::Arrival> generate(const TrafficSpec& spec, const sim::Topology& topology,
                                       double duration)
    {
        spec.validate();
        if (!(duration > 0.0))
        {
            throw ConfigError("traffic: duration must be positive");
        }
        const double lambda = arrival_rate(spec, topology);
        std::mt19937_64 gap_rng(derive_seed(spec.seed, Stream::inter_arrival));
        std::mt19937_64 work_rng(derive_seed(spec.seed, Stream::workload));
        std::exponential_distribution<double> gap(lambda);

        std::vector<sim::Arrival> out;
        out.reserve(static_cast<std::size_t>(lambda * duration * 1.1) + 16);
        double t = gap(gap_rng);
        while (t < duration)
        {
            double w = 0.0;
            if (const auto* id = std::get_if<Identical>(&spec.distribution))
            {
                w = id->workload;
            }
            else
            {
                std::exponential_distribution<double> work(1.0 / std::get<Exponential>(spec.distribution).mean);
                do
                {
                    w = work(work_rng);
                } while (!(w > 0.0));
            }
            out.push_back(sim::Arrival{t, w});
            t += gap(gap_rng);
        }
        return out;
    }
} // namespace rlb::traffic
