#include "rlb/sac/agent.hpp"

#include "rlb/errors.hpp"
#include "rlb/nn/checkpoint.hpp"
#include "rlb/traffic/traffic.hpp"

#include "rlb/ini.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace rlb::sac
{
    std::vector<double> action_to_speeds(const nn::Vector& action)
    {
        std::vector<double> speeds(static_cast<std::size_t>(action.size()));
        for (Eigen::Index j = 0; j < action.size(); ++j)
        {
            speeds[static_cast<std::size_t>(j)] = (action(j) + 1.0) / 2.0 + kSpeedFloor;
        }
        return speeds;
    }

    RlbAgent::RlbAgent(const AgentOptions& options)
        : options_(options),
          normalizer_(observation_size(options.servers)),
          buffer_(options.buffer_capacity),
          log_(static_cast<std::size_t>(options.servers)),
          action_rng_(traffic::derive_seed(options.seed, traffic::Stream::agent, 1)),
          sample_rng_(traffic::derive_seed(options.seed, traffic::Stream::agent, 2)),
          tie_rng_(traffic::derive_seed(options.seed, traffic::Stream::agent, 3)),
          speeds_(static_cast<std::size_t>(options.servers), 1.0),
          action_(nn::Vector::Zero(options.servers))
    {
        if (options_.batch_size == 0)
        {
            throw ConfigError("batch size must be positive");
        }
        std::mt19937_64 init_rng(traffic::derive_seed(options.seed, traffic::Stream::agent, 0));
        model_ = std::make_unique<SacModel>(options_.servers, options_.hidden, options_.hyper, init_rng);
        learner_ = std::make_unique<SacLearner>(
            *model_, traffic::derive_seed(options.seed, traffic::Stream::agent, 4));
    }

    std::size_t RlbAgent::choose(std::span<const int> local_ongoing)
    {
        policy::PolicyContext ctx{local_ongoing, speeds_, &tie_rng_, options_.tie_break};
        return policy::rlb_assign(ctx);
    }

    void RlbAgent::on_episode_start(std::size_t server_count)
    {
        if (server_count != static_cast<std::size_t>(options_.servers))
        {
            throw ConfigError("agent built for " + std::to_string(options_.servers) +
                              " servers, topology has " + std::to_string(server_count));
        }
        log_.reset(server_count);
        prev_state_.reset();
    }

    void RlbAgent::on_dispatch(const sim::Task& task, double now)
    {
        (void)now;
        log_.record_arrival(task.arrival_time);
    }

    void RlbAgent::on_completion(const sim::Task& task, double now)
    {
        log_.record_completion(static_cast<std::size_t>(*task.server_id), task.arrival_time,
                               task.service_start_time.value_or(now), now);
    }

    double RlbAgent::on_step(const sim::StepContext& ctx)
    {
        return step(ctx.local_ongoing, ctx.now, ctx.last_step);
    }

    double RlbAgent::step(std::span<const int> local_ongoing, double now, bool last_step)
    {
        const nn::Vector state =
            build_observation(log_, local_ongoing, now, options_.observe_duration).to_vector();
        if (!state.allFinite())
        {
            throw TrainingDivergence("observation is not finite at t=" + std::to_string(now));
        }
        const std::vector<double> tct = tct_discounted_averages(log_, now);
        const double reward = metrics::reward(tct, options_.reward_index, options_.reward_sign);

        if (!options_.evaluation)
        {
            normalizer_.update(state);
            if (prev_state_)
            {
                buffer_.push(Transition{*prev_state_, prev_action_, reward, state, last_step});
            }
            if (buffer_.size() >= options_.batch_size)
            {
                try
                {
                    last_update_ = learner_->update(sample_minibatch());
                }
                catch (const TrainingDivergence& e)
                {
                    if (!options_.divergence_dump.empty())
                    {
                        save(options_.divergence_dump);
                    }
                    throw TrainingDivergence(std::string(e.what()) + " (update " +
                                             std::to_string(updates_ + 1) + ", t=" +
                                             std::to_string(now) + ")");
                }
                ++updates_;
            }
        }

        action_ = act(normalizer_.normalize(state));
        speeds_ = action_to_speeds(action_);
        prev_state_ = state;
        prev_action_ = action_;
        ++steps_;
        return reward;
    }

    nn::Vector RlbAgent::act(const nn::Vector& normalized_state)
    {
        const PolicyOutput out = model_->actor.forward(nn::Matrix(normalized_state));
        if (options_.evaluation)
        {
            return out.mean.col(0).array().tanh().matrix();
        }
        const nn::Matrix noise = standard_normal(options_.servers, 1, action_rng_);
        return nn::gaussian_head_sample(out.mean, out.log_std, noise).action.col(0);
    }

    Minibatch RlbAgent::sample_minibatch()
    {
        const auto idx = buffer_.sample_indices(options_.batch_size, sample_rng_);
        const auto b = static_cast<Eigen::Index>(idx.size());
        const int dim = observation_size(options_.servers);
        Minibatch batch;
        batch.states.resize(dim, b);
        batch.next_states.resize(dim, b);
        batch.actions.resize(options_.servers, b);
        batch.rewards.resize(b);
        batch.dones.resize(b);
        for (Eigen::Index c = 0; c < b; ++c)
        {
            const Transition& t = buffer_.at(idx[static_cast<std::size_t>(c)]);
            batch.states.col(c) = t.state;
            batch.next_states.col(c) = t.next_state;
            batch.actions.col(c) = t.action;
            batch.rewards(c) = t.reward;
            batch.dones(c) = t.done ? 1.0 : 0.0;
        }
        batch.states = normalizer_.normalize(batch.states);
        batch.next_states = normalizer_.normalize(batch.next_states);
        return batch;
    }

    void RlbAgent::save(const std::filesystem::path& stem) const
    {
        if (stem.has_parent_path())
        {
            std::filesystem::create_directories(stem.parent_path());
        }
        std::vector<const nn::DenseNet*> nets;
        for (const auto* n : model_->actor.nets())
        {
            nets.push_back(n);
        }
        for (const auto* n : model_->critic.nets())
        {
            nets.push_back(n);
        }
        for (const auto* n : model_->guiding_actor.nets())
        {
            nets.push_back(n);
        }
        for (const auto* n : model_->guiding_critic.nets())
        {
            nets.push_back(n);
        }
        {
            std::ofstream out(stem.string() + ".ckpt", std::ios::binary);
            if (!out)
            {
                throw std::runtime_error("cannot write checkpoint " + stem.string() + ".ckpt");
            }
            nn::write_checkpoint(out, nets, &normalizer_);
        }

        IniDocument manifest;
        manifest.set("agent", "servers", std::to_string(options_.servers));
        manifest.set("agent", "hidden", std::to_string(options_.hidden));
        manifest.set("agent", "alpha", format_double(model_->alpha()));
        manifest.set("agent", "log_alpha", format_double(model_->log_alpha));
        manifest.set("agent", "steps", std::to_string(steps_));
        manifest.set("agent", "updates", std::to_string(updates_));
        manifest.set("agent", "buffer_size", std::to_string(buffer_.size()));
        manifest.set("agent", "reward", std::string(metrics::to_string(options_.reward_index)));
        manifest.set("agent", "networks", std::to_string(nets.size()));
        std::ofstream out(stem.string() + ".manifest");
        out << manifest.to_string();
    }

    void RlbAgent::load(const std::filesystem::path& stem)
    {
        std::ifstream in(stem.string() + ".ckpt", std::ios::binary);
        if (!in)
        {
            throw ConfigError("cannot read checkpoint " + stem.string() + ".ckpt");
        }
        nn::Checkpoint ck = nn::read_checkpoint(in);

        std::vector<nn::DenseNet*> targets;
        for (auto* n : model_->actor.nets())
        {
            targets.push_back(n);
        }
        for (auto* n : model_->critic.nets())
        {
            targets.push_back(n);
        }
        for (auto* n : model_->guiding_actor.nets())
        {
            targets.push_back(n);
        }
        for (auto* n : model_->guiding_critic.nets())
        {
            targets.push_back(n);
        }
        if (ck.nets.size() != targets.size())
        {
            throw ConfigError("checkpoint holds " + std::to_string(ck.nets.size()) +
                              " networks, agent expects " + std::to_string(targets.size()));
        }
        for (std::size_t i = 0; i < targets.size(); ++i)
        {
            auto dst = targets[i]->layers();
            auto src = ck.nets[i].layers();
            if (dst.size() != src.size())
            {
                throw ConfigError("checkpoint network " + std::to_string(i) + " has a different shape");
            }
            for (std::size_t l = 0; l < dst.size(); ++l)
            {
                if (dst[l].weight.rows() != src[l].weight.rows() ||
                    dst[l].weight.cols() != src[l].weight.cols())
                {
                    throw ConfigError("checkpoint network " + std::to_string(i) +
                                      " has a different shape");
                }
                dst[l].weight = src[l].weight;
                dst[l].bias = src[l].bias;
                dst[l].gain = src[l].gain;
                dst[l].shift = src[l].shift;
            }
        }
        if (ck.normalizer)
        {
            normalizer_ = *ck.normalizer;
        }
        std::ifstream mf(stem.string() + ".manifest");
        std::stringstream text;
        text << mf.rdbuf();
        const auto entry = IniDocument::parse(text.str()).find("agent.log_alpha");
        if (!entry)
        {
            throw ConfigError("agent manifest lacks log_alpha");
        }
        model_->log_alpha = std::stod(entry->value);
    }
} // namespace rlb::sac
