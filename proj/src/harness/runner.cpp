#include "rlb/harness/runner.hpp"

#include "rlb/errors.hpp"
#include "rlb/harness/csv.hpp"
#include "rlb/ini.hpp"
#include "rlb/sac/agent.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <memory>
#include <thread>

namespace rlb::harness
{
    namespace fs = std::filesystem;

    namespace
    {
        std::ofstream open_output(const fs::path& path)
        {
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            if (!out)
            {
                throw std::runtime_error("cannot write " + path.string());
            }
            return out;
        }

        void make_dir(const fs::path& dir)
        {
            std::error_code ec;
            fs::create_directories(dir, ec);
            if (ec || !fs::is_directory(dir))
            {
                throw std::runtime_error("cannot create output directory " + dir.string() +
                                  (ec ? ": " + ec.message() : std::string()));
            }
        }

        std::vector<std::unique_ptr<sim::LbHooks>> build_lbs(const ExperimentConfig& cfg, std::uint64_t seed,
                                                             const std::optional<fs::path>& out_dir)
        {
            std::vector<std::unique_ptr<sim::LbHooks>> lbs;
            std::vector<double> processors;
            for (const auto& s : cfg.topology.servers)
            {
                processors.push_back(static_cast<double>(s.p));
            }
            for (int lb = 0; lb < cfg.topology.lbs; ++lb)
            {
                const auto index = static_cast<std::uint64_t>(lb);
                if (cfg.policy != policy::PolicyKind::rlb_sac)
                {
                    lbs.push_back(std::make_unique<policy::BaselineLb>(
                        cfg.policy, processors, traffic::derive_seed(seed, traffic::Stream::policy, index),
                        cfg.tie_break));
                    continue;
                }
                sac::AgentOptions opts;
                opts.servers = static_cast<int>(cfg.topology.server_count());
                opts.hidden = cfg.agent.hidden;
                opts.batch_size = cfg.agent.batch_size;
                opts.buffer_capacity = cfg.agent.buffer_size;
                opts.hyper = cfg.agent.hyper;
                opts.reward_index = cfg.reward_index;
                opts.reward_sign = cfg.reward_sign;
                opts.observe_duration = cfg.agent.observe_duration;
                opts.evaluation = cfg.agent.evaluation;
                opts.tie_break = cfg.tie_break;
                opts.seed = traffic::derive_seed(seed, traffic::Stream::agent, index);
                if (out_dir)
                {
                    opts.divergence_dump = *out_dir / "checkpoints" / ("lb" + std::to_string(lb) + "-diverged");
                }
                auto agent = std::make_unique<sac::RlbAgent>(opts);
                if (cfg.agent.load_checkpoints)
                {
                    agent->load(*cfg.agent.load_checkpoints / ("lb" + std::to_string(lb)));
                }
                lbs.push_back(std::move(agent));
            }
            return lbs;
        }

        EpisodeSummary summarize(int episode, const sim::EpisodeTrace& trace)
        {
            EpisodeSummary s;
            s.episode = episode;
            s.duration = trace.duration;
            s.arrivals = trace.tasks.size();
            s.completions = static_cast<std::size_t>(
                std::count_if(trace.tasks.begin(), trace.tasks.end(), [](const sim::Task& t) { return t.completed(); }));
            if (trace.steps.empty())
            {
                return s;
            }
            double fi = 0.0;
            double reward = 0.0;
            double residual = 0.0;
            std::size_t samples = 0;
            for (const auto& step : trace.steps)
            {
                fi += step.fairness;
                reward += step.reward;
                for (const double l : step.residual)
                {
                    residual += l;
                    s.max_residual = std::max(s.max_residual, l);
                    ++samples;
                }
            }
            const auto steps = static_cast<double>(trace.steps.size());
            s.fairness = fi / steps;
            s.mean_reward = reward / steps;
            s.avg_residual = samples ? residual / static_cast<double>(samples) : 0.0;
            return s;
        }

        std::vector<std::string> episode_row(const EpisodeSummary& s)
        {
            return {std::to_string(s.episode), format_double(s.duration), std::to_string(s.arrivals),
                    std::to_string(s.completions), format_double(s.fairness), format_double(s.avg_residual),
                    format_double(s.max_residual), format_double(s.mean_reward), format_double(s.wall_seconds)};
        }

        std::string cell_label(const std::string& policy, double rate)
        {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "_rate-%g", rate);
            return policy + buf;
        }
    } // namespace

    RunResult run_experiment(const ExperimentConfig& config, std::uint64_t seed, const RunOptions& options)
    {
        config.topology.validate();
        config.traffic.validate();

        std::ofstream steps_out;
        if (options.out_dir)
        {
            make_dir(*options.out_dir);
            if (options.write_steps)
            {
                steps_out = open_output(*options.out_dir / "steps.csv");
                write_csv_row(steps_out, kStepsHeader);
            }
        }

        auto lbs = build_lbs(config, seed, options.out_dir);
        std::vector<sim::LbHooks*> hooks;
        for (auto& lb : lbs)
        {
            hooks.push_back(lb.get());
        }

        RunResult result;
        result.seed = seed;
        sim::Topology topology = config.topology;
        for (int e = 0; e < config.episodes; ++e)
        {
            const auto index = static_cast<std::uint64_t>(e);
            topology.lb_routing_seed = traffic::derive_seed(seed, traffic::Stream::lb_routing, index);
            traffic::TrafficSpec spec = config.traffic;
            spec.seed = traffic::derive_seed(seed, traffic::Stream::episode, index);
            const double duration = config.episode_duration(e);

            const auto start = std::chrono::steady_clock::now();
            const auto arrivals = traffic::generate(spec, topology, duration);
            const sim::EpisodeTrace trace = sim::run_episode(
                topology, hooks, arrivals, sim::EpisodeOptions{duration, config.step_interval, config.load_scale});
            EpisodeSummary summary = summarize(e + 1, trace);
            summary.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

            if (steps_out.is_open())
            {
                for (const auto& step : trace.steps)
                {
                    for (std::size_t j = 0; j < step.residual.size(); ++j)
                    {
                        write_csv_row(steps_out,
                                      {std::to_string(e + 1), std::to_string(step.step), format_double(step.time),
                                       std::to_string(step.lb_id), std::to_string(j), format_double(step.residual[j]),
                                       std::to_string(step.local_ongoing[j]), format_double(step.reward),
                                       format_double(step.fairness)});
                    }
                }
            }
            if (e + 1 == config.episodes)
            {
                for (const auto& step : trace.steps)
                {
                    result.last_episode_residuals.insert(result.last_episode_residuals.end(), step.residual.begin(),
                                                         step.residual.end());
                }
                std::sort(result.last_episode_residuals.begin(), result.last_episode_residuals.end());
            }
            result.episodes.push_back(summary);
            if (options.on_episode)
            {
                options.on_episode(summary);
            }
        }

        if (options.out_dir)
        {
            const fs::path& dir = *options.out_dir;
            {
                auto out = open_output(dir / "episodes.csv");
                write_csv_row(out, kEpisodesHeader);
                for (const auto& s : result.episodes)
                {
                    write_csv_row(out, episode_row(s));
                }
            }
            {
                auto out = open_output(dir / "cdf.csv");
                write_csv_row(out, {"residual_workload", "cumulative_fraction"});
                const auto n = result.last_episode_residuals.size();
                for (std::size_t i = 0; i < n; ++i)
                {
                    write_csv_row(out, {format_double(result.last_episode_residuals[i]),
                                        format_double(static_cast<double>(i + 1) / static_cast<double>(n))});
                }
            }
            if (config.policy == policy::PolicyKind::rlb_sac && options.write_checkpoints)
            {
                for (std::size_t lb = 0; lb < lbs.size(); ++lb)
                {
                    static_cast<const sac::RlbAgent&>(*lbs[lb]).save(dir / "checkpoints" /
                                                                     ("lb" + std::to_string(lb)));
                }
            }
            ExperimentConfig manifest = config;
            manifest.seeds = {seed};
            manifest.output_dir = dir;
            manifest.sweep = {};
            auto out = open_output(dir / "manifest.ini");
            out << "# resolved configuration; rerun with: rlbsim run --config manifest.ini\n"
                << to_config_text(manifest);
        }
        return result;
    }

    std::vector<RunResult> run_all_seeds(const ExperimentConfig& config, const fs::path& out)
    {
        std::vector<RunResult> results;
        for (const auto seed : config.seeds)
        {
            const fs::path dir = config.seeds.size() == 1 ? out : out / ("seed-" + std::to_string(seed));
            results.push_back(run_experiment(config, seed, RunOptions{dir, true, true, {}}));
        }
        return results;
    }

    double median(std::vector<double> values)
    {
        if (values.empty())
        {
            return std::numeric_limits<double>::quiet_NaN();
        }
        std::sort(values.begin(), values.end());
        const std::size_t mid = values.size() / 2;
        return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
    }

    unsigned worker_slots()
    {
        const char* env = std::getenv("RLB_WORKERS");
        if (env == nullptr)
        {
            return 1;
        }
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1)
        {
            return 1;
        }
        return static_cast<unsigned>(std::min<long>(v, 256));
    }

    SweepResult sweep(const ExperimentConfig& config, const fs::path& out)
    {
        const SweepSettings& s = config.sweep;
        if (s.rates.empty() || s.policies.empty() || s.seeds.empty())
        {
            throw ConfigError("sweep needs nonempty rates, policies and seeds");
        }
        for (const auto& p : s.policies)
        {
            parse_policy_choice(p);
        }
        make_dir(out);

        struct Job
        {
            std::size_t cell = 0;
            std::uint64_t seed = 0;
            std::optional<EpisodeSummary> last;
            std::string error;
        };

        SweepResult result;
        std::vector<Job> jobs;
        for (const auto& p : s.policies)
        {
            for (const double rate : s.rates)
            {
                const std::size_t cell = result.cells.size();
                result.cells.push_back(SweepCell{p, rate, {}, {}, 0.0, 0.0, 0.0});
                for (const auto seed : s.seeds)
                {
                    jobs.push_back(Job{cell, seed, std::nullopt, {}});
                }
            }
        }

        auto run_job = [&](Job& job) {
            const SweepCell& cell = result.cells[job.cell];
            const fs::path final_dir =
                out / "cells" / cell_label(cell.policy, cell.rate) / ("seed-" + std::to_string(job.seed));
            const fs::path tmp_dir = fs::path(final_dir.string() + ".tmp");
            try
            {
                ExperimentConfig c = config;
                const PolicyChoice choice = parse_policy_choice(cell.policy);
                c.policy = choice.kind;
                if (choice.reward)
                {
                    c.reward_index = *choice.reward;
                }
                c.traffic.rate_fraction = cell.rate;
                std::error_code ec;
                fs::remove_all(tmp_dir, ec);
                const RunResult r = run_experiment(c, job.seed, RunOptions{tmp_dir, false, true, {}});
                fs::remove_all(final_dir, ec);
                fs::rename(tmp_dir, final_dir);
                job.last = r.episodes.back();
            }
            catch (const std::exception& e)
            {
                job.error = e.what();
                std::error_code ec;
                fs::remove_all(tmp_dir, ec);
            }
        };

        const unsigned slots = std::min<unsigned>(worker_slots(), static_cast<unsigned>(jobs.size()));
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next++; i < jobs.size(); i = next++)
            {
                run_job(jobs[i]);
            }
        };
        if (slots <= 1)
        {
            worker();
        }
        else
        {
            std::vector<std::thread> threads;
            for (unsigned t = 0; t < slots; ++t)
            {
                threads.emplace_back(worker);
            }
            for (auto& t : threads)
            {
                t.join();
            }
        }

        std::vector<std::vector<double>> fi(result.cells.size());
        std::vector<std::vector<double>> avg(result.cells.size());
        std::vector<std::vector<double>> mx(result.cells.size());
        for (const Job& job : jobs)
        {
            SweepCell& cell = result.cells[job.cell];
            if (job.last)
            {
                cell.seeds_ok.push_back(job.seed);
                fi[job.cell].push_back(job.last->fairness);
                avg[job.cell].push_back(job.last->avg_residual);
                mx[job.cell].push_back(job.last->max_residual);
            }
            else
            {
                cell.failures.push_back("seed " + std::to_string(job.seed) + ": " + job.error);
                ++result.failed_runs;
            }
        }

        const fs::path table_tmp = out / "table.csv.tmp";
        {
            auto table = open_output(table_tmp);
            write_csv_row(table, kTableHeader);
            for (std::size_t c = 0; c < result.cells.size(); ++c)
            {
                SweepCell& cell = result.cells[c];
                cell.fairness = median(fi[c]);
                cell.avg_residual = median(avg[c]);
                cell.max_residual = median(mx[c]);
                std::string errors;
                for (std::size_t i = 0; i < cell.failures.size(); ++i)
                {
                    errors += (i ? "; " : "") + cell.failures[i];
                }
                write_csv_row(table, {cell.policy, format_double(cell.rate), format_double(cell.fairness),
                                      format_double(cell.avg_residual), format_double(cell.max_residual),
                                      std::to_string(cell.seeds_ok.size()), std::to_string(cell.failures.size()),
                                      errors});
            }
        }
        fs::rename(table_tmp, out / "table.csv");

        ExperimentConfig manifest = config;
        manifest.output_dir = out;
        auto mf = open_output(out / "sweep_manifest.ini");
        mf << "# resolved sweep; rerun with: rlbsim sweep --config sweep_manifest.ini\n" << to_config_text(manifest);
        return result;
    }
} // namespace rlb::harness
