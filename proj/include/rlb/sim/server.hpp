#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

namespace rlb::sim
{
    using TaskId = std::uint32_t;

    struct Task
    {
        TaskId id = 0;
        double workload = 0.0; // single-processor seconds
        double arrival_time = 0.0;
        int lb_id = 0;
        std::optional<int> server_id;
        std::optional<double> dispatch_time;
        std::optional<double> service_start_time;
        std::optional<double> completion_time;
        double remaining_work = 0.0;

        bool completed() const noexcept { return completion_time.has_value(); }
    };

    /// Per-task processing speed under blocked processor sharing.
    /// `count` is the number of ongoing tasks (in service plus backlogged).
    double server_speed(int count, int p, int p_hat);

    /// One multi-processor server. Up to p_hat tasks share p processors;
    /// the rest wait in a FIFO backlog.
    struct ServerState
    {
        int id = 0;
        int p = 1;
        int p_hat = 1;
        std::vector<TaskId> in_service; // service-start order
        std::deque<TaskId> backlog;
        double last_update_time = 0.0;

        int ongoing() const noexcept
        {
            return static_cast<int>(in_service.size() + backlog.size());
        }
        double speed() const { return server_speed(ongoing(), p, p_hat); }
    };

    /// Runs every in-service task at the current speed up to `to_time`.
    /// Membership must not have changed since `last_update_time`.
    void advance_server(ServerState& server, std::span<Task> tasks, double to_time);

    /// Admits a task: straight into service when a slot is free, else to the
    /// backlog tail. Caller reschedules the server's completion event.
    void admit_task(ServerState& server, Task& task, double now);

    /// Removes a finished task and promotes backlogged tasks into free slots
    /// in FIFO order. Returns the ids promoted.
    std::vector<TaskId> complete_task(ServerState& server, std::span<Task> tasks, TaskId id,
                                      double now);

    /// Remaining single-processor work over in-service and backlogged tasks.
    double residual_work(const ServerState& server, std::span<const Task> tasks);

    /// Residual work divided by a nominal server speed. With
    /// nominal_speed = 1 this is the raw remaining work in seconds; with
    /// nominal_speed = p it is the time the server needs to drain at full
    /// utilisation.
    double residual_workload(const ServerState& server, std::span<const Task> tasks,
                             double nominal_speed = 1.0);

    /// Time until the in-service task with the least remaining work finishes,
    /// assuming no membership change. Empty server: nullopt.
    std::optional<double> time_to_next_completion(const ServerState& server,
                                                  std::span<const Task> tasks);
} // namespace rlb::sim
