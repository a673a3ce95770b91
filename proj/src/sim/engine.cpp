#include "rlb/sim/engine.hpp"

#include "rlb/errors.hpp"
#include "rlb/metrics/fairness.hpp"

#include <cmath>
#include <string>

namespace rlb::sim
{
    void Topology::validate() const
    {
        if (lbs < 1)
        {
            throw ConfigError("topology: at least one LB required");
        }
        if (servers.empty())
        {
            throw ConfigError("topology: at least one server required");
        }
        for (std::size_t j = 0; j < servers.size(); ++j)
        {
            const auto& s = servers[j];
            if (s.p < 1)
            {
                throw ConfigError("topology: server " + std::to_string(j) +
                                  " needs p >= 1, got " + std::to_string(s.p));
            }
            if (s.p_hat < s.p)
            {
                throw ConfigError("topology: server " + std::to_string(j) + " has p_hat " +
                                  std::to_string(s.p_hat) + " < p " + std::to_string(s.p));
            }
        }
    }

    std::size_t step_count(double duration, double step_interval)
    {
        if (!(step_interval > 0.0))
        {
            throw ConfigError("step_interval must be positive");
        }
        std::size_t k = 0;
        while (static_cast<double>(k) * step_interval < duration)
        {
            ++k;
        }
        return k;
    }

    Engine::Engine(const Topology& topology, std::span<LbHooks* const> lbs,
                   std::span<const Arrival> arrivals, const EpisodeOptions& options)
        : topology_(topology),
          lbs_(lbs.begin(), lbs.end()),
          arrivals_(arrivals),
          options_(options),
          routing_rng_(topology.lb_routing_seed)
    {
        topology_.validate();
        if (!(options_.duration > 0.0))
        {
            throw ConfigError("episode duration must be positive");
        }
        if (lbs_.size() != static_cast<std::size_t>(topology_.lbs))
        {
            throw ConfigError("need exactly one policy per LB: topology has " +
                              std::to_string(topology_.lbs) + ", got " +
                              std::to_string(lbs_.size()));
        }
        steps_per_lb_ = step_count(options_.duration, options_.step_interval);

        const std::size_t n = topology_.servers.size();
        servers_.resize(n);
        for (std::size_t j = 0; j < n; ++j)
        {
            servers_[j].id = static_cast<int>(j);
            servers_[j].p = topology_.servers[j].p;
            servers_[j].p_hat = topology_.servers[j].p_hat;
        }
        completion_version_.assign(n, 0);
        local_.assign(lbs_.size(), std::vector<int>(n, 0));
        tasks_.reserve(arrivals_.size());
        trace_.duration = options_.duration;

        push(options_.duration, EventKind::episode_end, 0, 0);
        for (std::size_t lb = 0; lb < lbs_.size(); ++lb)
        {
            lbs_[lb]->on_episode_start(n);
            if (steps_per_lb_ > 0)
            {
                push(0.0, EventKind::step_boundary, static_cast<std::uint32_t>(lb), 0);
            }
        }
        schedule_next_arrival();
    }

    void Engine::push(double time, EventKind kind, std::uint32_t target, std::uint64_t payload)
    {
        queue_.push(Event{time, sequence_++, kind, target, payload});
    }

    void Engine::schedule_next_arrival()
    {
        if (next_arrival_ < arrivals_.size())
        {
            const Arrival& a = arrivals_[next_arrival_];
            push(a.time, EventKind::arrival, static_cast<std::uint32_t>(next_arrival_), 0);
        }
    }

    void Engine::reschedule_completion(std::size_t server_id)
    {
        const std::uint64_t version = ++completion_version_[server_id];
        const auto& server = servers_[server_id];
        if (auto dt = time_to_next_completion(server, tasks_))
        {
            push(now_ + *dt, EventKind::service_completion, static_cast<std::uint32_t>(server_id),
                 version);
        }
    }

    bool Engine::process_next()
    {
        if (finished_ || queue_.empty())
        {
            finished_ = true;
            return false;
        }
        const Event e = queue_.top();
        queue_.pop();
        if (e.time < now_)
        {
            throw InvariantError("event queue returned an event in the past");
        }
        now_ = e.time;

        switch (e.kind)
        {
        case EventKind::arrival:
            handle_arrival(e);
            break;
        case EventKind::service_completion:
            handle_completion(e);
            break;
        case EventKind::step_boundary:
            handle_step(e);
            break;
        case EventKind::episode_end:
            advance_all();
            for (std::size_t lb = 0; lb < lbs_.size(); ++lb)
            {
                lbs_[lb]->on_episode_end(now_);
            }
            finished_ = true;
            return false;
        }
        return true;
    }

    void Engine::run()
    {
        while (process_next())
        {
        }
    }

    void Engine::dispatch(TaskId task, std::size_t server_id, double now)
    {
        if (server_id >= servers_.size())
        {
            throw ConfigError("dispatch: unknown server id " + std::to_string(server_id));
        }
        Task& t = tasks_[task];
        if (t.dispatch_time)
        {
            throw InvariantError("dispatch: task " + std::to_string(task) + " dispatched twice");
        }
        ServerState& server = servers_[server_id];
        advance_server(server, tasks_, now);
        admit_task(server, t, now);
        ++local_[t.lb_id][server_id];
        reschedule_completion(server_id);
    }

    void Engine::handle_arrival(const Event& e)
    {
        const Arrival& a = arrivals_[e.target];
        ++next_arrival_;
        schedule_next_arrival();

        Task task;
        task.id = static_cast<TaskId>(tasks_.size());
        task.workload = a.workload;
        task.remaining_work = a.workload;
        task.arrival_time = a.time;
        if (lbs_.size() > 1)
        {
            std::uniform_int_distribution<int> pick(0, static_cast<int>(lbs_.size()) - 1);
            task.lb_id = pick(routing_rng_);
        }
        tasks_.push_back(task);

        const int lb = task.lb_id;
        std::size_t server_id = 0;
        try
        {
            server_id = lbs_[lb]->choose(local_[lb]);
        }
        catch (const std::exception& ex)
        {
            throw EpisodeAborted("LB " + std::to_string(lb) + " failed to choose a server at t=" +
                                 std::to_string(now_) + ": " + ex.what());
        }
        dispatch(task.id, server_id, now_);
        lbs_[lb]->on_dispatch(tasks_[task.id], now_);
    }

    void Engine::handle_completion(const Event& e)
    {
        const std::size_t j = e.target;
        if (e.payload != completion_version_[j])
        {
            return; // superseded by a later membership change
        }
        ServerState& server = servers_[j];
        advance_server(server, tasks_, now_);

        TaskId finished = server.in_service.front();
        for (const TaskId id : server.in_service)
        {
            if (tasks_[id].remaining_work < tasks_[finished].remaining_work)
            {
                finished = id;
            }
        }
        complete_task(server, tasks_, finished, now_);
        const Task& done = tasks_[finished];
        --local_[done.lb_id][j];
        reschedule_completion(j);
        lbs_[done.lb_id]->on_completion(done, now_);
    }

    void Engine::advance_all()
    {
        for (auto& server : servers_)
        {
            advance_server(server, tasks_, now_);
        }
    }

    std::vector<double> Engine::residual_loads()
    {
        advance_all();
        std::vector<double> loads;
        loads.reserve(servers_.size());
        for (const auto& server : servers_)
        {
            const double scale =
                options_.load_scale == LoadScale::processors ? static_cast<double>(server.p) : 1.0;
            loads.push_back(residual_workload(server, tasks_, scale));
        }
        return loads;
    }

    void Engine::handle_step(const Event& e)
    {
        const int lb = static_cast<int>(e.target);
        const std::size_t k = e.payload;

        StepContext ctx;
        ctx.lb_id = lb;
        ctx.step_index = k;
        ctx.step_count = steps_per_lb_;
        ctx.now = now_;
        ctx.last_step = k + 1 == steps_per_lb_;
        ctx.local_ongoing = local_[lb];

        double reward = 0.0;
        try
        {
            reward = lbs_[lb]->on_step(ctx);
        }
        catch (const std::exception& ex)
        {
            throw EpisodeAborted("LB " + std::to_string(lb) + " step hook failed at t=" +
                                 std::to_string(now_) + " (step " + std::to_string(k) +
                                 "): " + ex.what());
        }

        StepRecord rec;
        rec.step = k;
        rec.time = now_;
        rec.lb_id = lb;
        rec.reward = reward;
        rec.residual = residual_loads();
        rec.fairness = metrics::jain(rec.residual);
        rec.idle = metrics::all_zero(rec.residual);
        rec.local_ongoing = local_[lb];
        trace_.steps.push_back(std::move(rec));

        if (k + 1 < steps_per_lb_)
        {
            push(static_cast<double>(k + 1) * options_.step_interval, EventKind::step_boundary,
                 e.target, k + 1);
        }
    }

    EpisodeTrace Engine::take_trace()
    {
        trace_.tasks = tasks_;
        return std::move(trace_);
    }

    EpisodeTrace run_episode(const Topology& topology, std::span<LbHooks* const> lbs,
                             std::span<const Arrival> arrivals, const EpisodeOptions& options)
    {
        Engine engine(topology, lbs, arrivals, options);
        engine.run();
        return engine.take_trace();
    }
} // namespace rlb::sim
