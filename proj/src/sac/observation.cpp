#include "rlb/sac/observation.hpp"

#include "rlb/errors.hpp"

namespace rlb::sac
{
    namespace
    {
        void put(nn::Vector& v, Eigen::Index& at, const metrics::ChannelStats& s)
        {
            v(at++) = s.average;
            v(at++) = s.p90;
            v(at++) = s.std;
            v(at++) = s.discounted_average;
            v(at++) = s.weighted_discounted_average;
        }
    } // namespace

    nn::Vector Observation::to_vector() const
    {
        nn::Vector v(observation_size(static_cast<int>(servers.size())));
        Eigen::Index at = 0;
        put(v, at, inter_arrival);
        for (const auto& s : servers)
        {
            put(v, at, s.duration);
            put(v, at, s.tct);
            v(at++) = s.ongoing;
        }
        return v;
    }

    LocalEventLog::LocalEventLog(std::size_t servers) { reset(servers); }

    void LocalEventLog::reset(std::size_t servers)
    {
        last_arrival_.reset();
        inter_arrival_.clear();
        duration_.assign(servers, {});
        tct_.assign(servers, {});
    }

    void LocalEventLog::record_arrival(double time)
    {
        if (last_arrival_)
        {
            inter_arrival_.push_back({time - *last_arrival_, time});
        }
        last_arrival_ = time;
    }

    void LocalEventLog::record_completion(std::size_t server, double arrival, double service_start,
                                          double completion)
    {
        if (server >= duration_.size())
        {
            throw InvariantError("LocalEventLog: completion on unknown server");
        }
        duration_[server].push_back({completion - service_start, completion});
        tct_[server].push_back({completion - arrival, completion});
    }

    Observation build_observation(const LocalEventLog& log, std::span<const int> ongoing,
                                  double now, bool include_duration)
    {
        if (ongoing.size() != log.server_count())
        {
            throw InvariantError("build_observation: count vector length mismatch");
        }
        Observation obs;
        obs.inter_arrival = metrics::reduce(log.inter_arrivals(), now);
        obs.servers.resize(log.server_count());
        for (std::size_t j = 0; j < log.server_count(); ++j)
        {
            if (include_duration)
            {
                obs.servers[j].duration = metrics::reduce(log.durations(j), now);
            }
            obs.servers[j].tct = metrics::reduce(log.tcts(j), now);
            obs.servers[j].ongoing = static_cast<double>(ongoing[j]);
        }
        return obs;
    }

    std::vector<double> tct_discounted_averages(const LocalEventLog& log, double now)
    {
        std::vector<double> out(log.server_count());
        for (std::size_t j = 0; j < out.size(); ++j)
        {
            out[j] = metrics::reduce(log.tcts(j), now).discounted_average;
        }
        return out;
    }
} // namespace rlb::sac
