#pragma once

#include "rlb/sim/server.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <queue>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace rlb::sim
{
    struct ServerSpec
    {
        int p = 1;
        int p_hat = 1;
    };

    struct Topology
    {
        int lbs = 1;
        std::vector<ServerSpec> servers;
        std::uint64_t lb_routing_seed = 0;

        /// Throws ConfigError on lbs < 1, no servers, p < 1 or p_hat < p.
        void validate() const;
        std::size_t server_count() const noexcept { return servers.size(); }
    };

    struct Arrival
    {
        double time = 0.0;
        double workload = 0.0;
    };

    /// How residual work is turned into the per-server load l_j.
    enum class LoadScale
    {
        unit,       // l_j = remaining work (nominal speed 1)
        processors, // l_j = remaining work / p_j
    };

    struct StepContext
    {
        int lb_id = 0;
        std::size_t step_index = 0;
        std::size_t step_count = 0;
        double now = 0.0;
        bool last_step = false;
        std::span<const int> local_ongoing;
    };

    /// Per-LB dispatch policy plus the hooks the engine drives. One instance
    /// per LB; instances never see each other's tasks.
    class LbHooks
    {
    public:
        virtual ~LbHooks() = default;

        /// Picks a server for a newly arrived task given this LB's own count
        /// of dispatched, uncompleted tasks per server.
        virtual std::size_t choose(std::span<const int> local_ongoing) = 0;

        virtual void on_episode_start(std::size_t /*server_count*/) {}
        virtual void on_dispatch(const Task& /*task*/, double /*now*/) {}
        virtual void on_completion(const Task& /*task*/, double /*now*/) {}
        /// Called at every step boundary of this LB. Returns the step reward
        /// (0 for policies that do not learn).
        virtual double on_step(const StepContext& /*ctx*/) { return 0.0; }
        virtual void on_episode_end(double /*now*/) {}
    };

    struct StepRecord
    {
        std::size_t step = 0;
        double time = 0.0;
        int lb_id = 0;
        double reward = 0.0;
        double fairness = 1.0; // Jain index over residual
        bool idle = false;     // every residual zero; fairness is 1 by convention
        std::vector<double> residual;
        std::vector<int> local_ongoing;
    };

    struct EpisodeTrace
    {
        double duration = 0.0;
        std::vector<StepRecord> steps;
        std::vector<Task> tasks; // every task that arrived, completed or not
    };

    struct EpisodeOptions
    {
        double duration = 60.0;
        double step_interval = 0.5;
        LoadScale load_scale = LoadScale::processors;
    };

    /// Number of step boundaries k * step_interval strictly before duration.
    std::size_t step_count(double duration, double step_interval);

    class EpisodeAborted : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    enum class EventKind : std::uint8_t
    {
        arrival,
        service_completion,
        step_boundary,
        episode_end,
    };

    struct Event
    {
        double time = 0.0;
        std::uint64_t sequence = 0;
        EventKind kind = EventKind::arrival;
        std::uint32_t target = 0;  // task index, server id or lb id
        std::uint64_t payload = 0; // completion version or step index
    };

    struct EventLater
    {
        bool operator()(const Event& a, const Event& b) const noexcept
        {
            if (a.time != b.time)
            {
                return a.time > b.time;
            }
            return a.sequence > b.sequence;
        }
    };

    /// Single-threaded discrete-event engine for one episode. Exposed
    /// event-by-event so tests can check invariants between events;
    /// run_episode() is the usual entry point.
    class Engine
    {
    public:
        Engine(const Topology& topology, std::span<LbHooks* const> lbs,
               std::span<const Arrival> arrivals, const EpisodeOptions& options);

        /// Processes the next event. Returns false once the episode is over.
        bool process_next();
        void run();

        /// Dispatches `task` to `server_id` at `now`.
        void dispatch(TaskId task, std::size_t server_id, double now);

        double now() const noexcept { return now_; }
        bool finished() const noexcept { return finished_; }
        std::span<const ServerState> servers() const noexcept { return servers_; }
        std::span<const Task> tasks() const noexcept { return tasks_; }
        std::size_t arrivals_seen() const noexcept { return next_arrival_; }
        std::size_t arrivals_total() const noexcept { return arrivals_.size(); }
        std::span<const int> local_ongoing(int lb) const noexcept { return local_[lb]; }

        /// Load l_j of each server at the current time.
        std::vector<double> residual_loads();

        EpisodeTrace take_trace();

    private:
        void push(double time, EventKind kind, std::uint32_t target, std::uint64_t payload);
        void schedule_next_arrival();
        void reschedule_completion(std::size_t server_id);
        void handle_arrival(const Event& e);
        void handle_completion(const Event& e);
        void handle_step(const Event& e);
        void advance_all();

        Topology topology_;
        std::vector<LbHooks*> lbs_;
        std::span<const Arrival> arrivals_;
        EpisodeOptions options_;
        std::size_t steps_per_lb_ = 0;

        std::priority_queue<Event, std::vector<Event>, EventLater> queue_;
        std::uint64_t sequence_ = 0;
        double now_ = 0.0;
        bool finished_ = false;
        std::size_t next_arrival_ = 0;

        std::vector<ServerState> servers_;
        std::vector<std::uint64_t> completion_version_;
        std::vector<Task> tasks_;
        std::vector<std::vector<int>> local_;
        std::mt19937_64 routing_rng_;
        EpisodeTrace trace_;
    };

    /// Runs one episode from empty servers. `lbs` holds one hook set per LB.
    EpisodeTrace run_episode(const Topology& topology, std::span<LbHooks* const> lbs,
                             std::span<const Arrival> arrivals, const EpisodeOptions& options);
} // namespace rlb::sim
