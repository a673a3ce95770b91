#include "rlb/sim/server.hpp"

#include "rlb/errors.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace rlb::sim
{
    double server_speed(int count, int p, int p_hat)
    {
        if (count < 0 || p < 1 || p_hat < p)
        {
            throw ConfigError("server_speed: invalid parameters count=" + std::to_string(count) +
                              " p=" + std::to_string(p) + " p_hat=" + std::to_string(p_hat));
        }
        if (count <= p)
        {
            return 1.0;
        }
        return static_cast<double>(p) / static_cast<double>(std::min(p_hat, count));
    }

    void advance_server(ServerState& server, std::span<Task> tasks, double to_time)
    {
        const double dt = to_time - server.last_update_time;
        if (dt < 0.0)
        {
            throw InvariantError("advance_server: time moved backwards on server " +
                                 std::to_string(server.id));
        }
        if (dt > 0.0 && !server.in_service.empty())
        {
            const double progress = server.speed() * dt;
            for (const TaskId id : server.in_service)
            {
                Task& t = tasks[id];
                t.remaining_work = std::max(0.0, t.remaining_work - progress);
            }
        }
        server.last_update_time = to_time;
    }

    void admit_task(ServerState& server, Task& task, double now)
    {
        task.server_id = server.id;
        task.dispatch_time = now;
        if (static_cast<int>(server.in_service.size()) < server.p_hat)
        {
            task.service_start_time = now;
            server.in_service.push_back(task.id);
        }
        else
        {
            server.backlog.push_back(task.id);
        }
    }

    std::vector<TaskId> complete_task(ServerState& server, std::span<Task> tasks, TaskId id,
                                      double now)
    {
        auto it = std::find(server.in_service.begin(), server.in_service.end(), id);
        if (it == server.in_service.end())
        {
            throw InvariantError("complete_task: task " + std::to_string(id) +
                                 " not in service on server " + std::to_string(server.id));
        }
        server.in_service.erase(it);
        Task& done = tasks[id];
        done.remaining_work = 0.0;
        done.completion_time = now;

        std::vector<TaskId> promoted;
        while (!server.backlog.empty() && static_cast<int>(server.in_service.size()) < server.p_hat)
        {
            const TaskId next = server.backlog.front();
            server.backlog.pop_front();
            tasks[next].service_start_time = now;
            server.in_service.push_back(next);
            promoted.push_back(next);
        }
        return promoted;
    }

    double residual_work(const ServerState& server, std::span<const Task> tasks)
    {
        double total = 0.0;
        for (const TaskId id : server.in_service)
        {
            total += tasks[id].remaining_work;
        }
        for (const TaskId id : server.backlog)
        {
            total += tasks[id].remaining_work;
        }
        return total;
    }

    double residual_workload(const ServerState& server, std::span<const Task> tasks,
                             double nominal_speed)
    {
        return residual_work(server, tasks) / nominal_speed;
    }

    std::optional<double> time_to_next_completion(const ServerState& server,
                                                  std::span<const Task> tasks)
    {
        if (server.in_service.empty())
        {
            return std::nullopt;
        }
        double least = std::numeric_limits<double>::infinity();
        for (const TaskId id : server.in_service)
        {
            least = std::min(least, tasks[id].remaining_work);
        }
        return least / server.speed();
    }
} // namespace rlb::sim
