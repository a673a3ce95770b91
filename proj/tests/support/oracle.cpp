#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace rlb::testing
{
    Scenario random_scenario(std::mt19937_64& rng)
    {
        std::uniform_int_distribution<int> servers(1, 3);
        std::uniform_int_distribution<int> procs(1, 4);
        std::uniform_int_distribution<int> tasks(1, 50);
        std::uniform_int_distribution<long> gap(0, 2000); // up to 0.2 s between arrivals
        std::uniform_real_distribution<double> work(0.01, 0.5);

        Scenario s;
        const int n = servers(rng);
        for (int j = 0; j < n; ++j)
        {
            const int p = procs(rng);
            std::uniform_int_distribution<int> cap(p, 2 * p);
            s.topology.servers.push_back({p, cap(rng)});
        }
        std::uniform_int_distribution<std::size_t> pick(0, static_cast<std::size_t>(n - 1));
        long tick = 0;
        const int count = tasks(rng);
        for (int k = 0; k < count; ++k)
        {
            tick += gap(rng);
            s.arrivals.push_back({static_cast<double>(tick) * kOracleDt, work(rng)});
            s.route.push_back(pick(rng));
        }
        return s;
    }

    double drain_horizon(const Scenario& scenario)
    {
        double total = 0.0;
        for (const auto& a : scenario.arrivals)
        {
            total += a.workload;
        }
        const double last = scenario.arrivals.empty() ? 0.0 : scenario.arrivals.back().time;
        return last + total + 1.0;
    }

    std::vector<double> integrate_completions(const Scenario& scenario, double dt)
    {
        const std::size_t n = scenario.topology.servers.size();
        const std::size_t m = scenario.arrivals.size();
        std::vector<double> remaining(m);
        std::vector<double> done(m, std::numeric_limits<double>::quiet_NaN());
        std::vector<std::vector<std::size_t>> serving(n);
        std::vector<std::deque<std::size_t>> waiting(n);
        for (std::size_t k = 0; k < m; ++k)
        {
            remaining[k] = scenario.arrivals[k].workload;
        }

        std::size_t next = 0;
        std::size_t finished = 0;
        for (long step = 0; finished < m; ++step)
        {
            const double t0 = static_cast<double>(step) * dt;
            while (next < m && scenario.arrivals[next].time <= t0 + dt * 1e-6)
            {
                const std::size_t j = scenario.route[next];
                const auto cap = static_cast<std::size_t>(scenario.topology.servers[j].p_hat);
                if (serving[j].size() < cap)
                {
                    serving[j].push_back(next);
                }
                else
                {
                    waiting[j].push_back(next);
                }
                ++next;
            }
            for (std::size_t j = 0; j < n; ++j)
            {
                const int p = scenario.topology.servers[j].p;
                const int cap = scenario.topology.servers[j].p_hat;
                double left = dt;
                double t = t0;
                while (left > 0.0 && !serving[j].empty())
                {
                    const int count = static_cast<int>(serving[j].size() + waiting[j].size());
                    const double speed = count <= p ? 1.0 : static_cast<double>(p) / std::min(cap, count);
                    auto it = std::min_element(serving[j].begin(), serving[j].end(),
                                               [&](std::size_t a, std::size_t b) { return remaining[a] < remaining[b]; });
                    const double need = remaining[*it] / speed;
                    if (need > left)
                    {
                        for (const auto k : serving[j])
                        {
                            remaining[k] -= speed * left;
                        }
                        break;
                    }
                    for (const auto k : serving[j])
                    {
                        remaining[k] -= speed * need;
                    }
                    t += need;
                    left -= need;
                    done[*it] = t;
                    ++finished;
                    serving[j].erase(it);
                    if (!waiting[j].empty())
                    {
                        serving[j].push_back(waiting[j].front());
                        waiting[j].pop_front();
                    }
                }
            }
        }
        return done;
    }
} // namespace rlb::testing
