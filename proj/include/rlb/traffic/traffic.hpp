#pragma once

#include "rlb/sim/engine.hpp"

#include <cstdint>
#include <random>
#include <variant>
#include <vector>

namespace rlb::traffic
{
    struct Identical
    {
        double workload = 0.1;
    };

    struct Exponential
    {
        double mean = 0.2;
    };

    using WorkloadDistribution = std::variant<Identical, Exponential>;

    struct TrafficSpec
    {
        double rate_fraction = 0.9;
        WorkloadDistribution distribution = Identical{};
        std::uint64_t seed = 0;

        /// Throws ConfigError for nonpositive rate or workload parameters.
        void validate() const;
        /// Rates above 1 are accepted but exceed the stability boundary.
        bool overloaded() const noexcept { return rate_fraction > 1.0; }
    };

    double mean_workload(const WorkloadDistribution& distribution);

    /// Maximum sustainable departure rate in tasks per second: total
    /// processors divided by the mean workload.
    double system_capacity(const sim::Topology& topology, const WorkloadDistribution& distribution);

    /// Arrival rate in tasks per second for `spec` on `topology`.
    double arrival_rate(const TrafficSpec& spec, const sim::Topology& topology);

    /// Independent RNG streams derived from one master seed.
    enum class Stream : std::uint64_t
    {
        inter_arrival = 1,
        workload = 2,
        lb_routing = 3,
        policy = 4,
        agent = 5,
        episode = 6,
    };

    /// Seeds a stream from (master seed, stream id, index) so that
    /// changing one consumer does not perturb the others.
    std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index = 0);

    /// Poisson arrivals with i.i.d. workloads, sorted by time, truncated
    /// strictly before `duration`.
    std::vector<sim::Arrival> generate(const TrafficSpec& spec, const sim::Topology& topology,
                                       double duration);
} // namespace rlb::traffic
