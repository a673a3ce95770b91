#include "rlb/sac/model.hpp"

#include "rlb/errors.hpp"
#include "rlb/sac/observation.hpp"

#include <cmath>
#include <string>

namespace rlb::sac
{
    namespace
    {
        // The actor heads start close to zero mean so early actions are not
        // biased toward any server.
        constexpr double kHeadOutputScale = 0.1;

        void check_finite(double value, const char* what)
        {
            if (!std::isfinite(value))
            {
                throw TrainingDivergence(std::string(what) + " is not finite");
            }
        }

        template <typename Nets>
        std::vector<nn::ParamRef> collect(Nets nets)
        {
            std::vector<nn::ParamRef> out;
            for (nn::DenseNet* net : nets)
            {
                auto p = net->parameters();
                out.insert(out.end(), p.begin(), p.end());
            }
            return out;
        }

        void blend(std::vector<nn::ParamRef> guiding, std::vector<nn::ParamRef> main, double tau)
        {
            if (guiding.size() != main.size())
            {
                throw InvariantError("soft_update: parameter layouts differ");
            }
            for (std::size_t b = 0; b < main.size(); ++b)
            {
                for (std::size_t i = 0; i < main[b].size; ++i)
                {
                    guiding[b].value[i] = (1.0 - tau) * guiding[b].value[i] + tau * main[b].value[i];
                }
            }
        }
    } // namespace

    Actor::Actor(int servers, int hidden, std::mt19937_64& rng, double initial_log_std)
        : servers_(servers), hidden_(hidden)
    {
        const auto server_specs = nn::encoder_specs(kServerFeatures, hidden);
        const auto lb_specs = nn::encoder_specs(kLbFeatures, hidden);
        const auto head = nn::head_specs(2 * hidden, hidden, 2);
        server_encoder_ = nn::DenseNet(server_specs, rng);
        lb_encoder_ = nn::DenseNet(lb_specs, rng);
        for (int j = 0; j < servers; ++j)
        {
            heads_.emplace_back(head, rng);
            heads_.back().scale_output_layer(kHeadOutputScale);
            heads_.back().layers().back().bias(1) = initial_log_std;
        }
    }

    PolicyOutput Actor::forward(const Matrix& obs) const { return run(obs, nullptr); }

    PolicyOutput Actor::forward(const Matrix& obs, Cache& cache) const { return run(obs, &cache); }

    PolicyOutput Actor::run(const Matrix& obs, Cache* cache) const
    {
        if (obs.rows() != observation_size(servers_))
        {
            throw ConfigError("Actor: observation has " + std::to_string(obs.rows()) +
                              " rows, expected " + std::to_string(observation_size(servers_)));
        }
        const Eigen::Index b = obs.cols();
        Matrix server_in(kServerFeatures, servers_ * b);
        for (int j = 0; j < servers_; ++j)
        {
            server_in.middleCols(j * b, b) = obs.middleRows(kLbFeatures + kServerFeatures * j, kServerFeatures);
        }
        const Matrix lb_in = obs.topRows(kLbFeatures);
        const Matrix server_emb =
            cache ? server_encoder_.forward(server_in, cache->server) : server_encoder_.forward(server_in);
        const Matrix lb_emb = cache ? lb_encoder_.forward(lb_in, cache->lb) : lb_encoder_.forward(lb_in);

        PolicyOutput out{Matrix(servers_, b), Matrix(servers_, b)};
        if (cache)
        {
            cache->heads.assign(servers_, {});
        }
        Matrix head_in(2 * hidden_, b);
        head_in.bottomRows(hidden_) = lb_emb;
        for (int j = 0; j < servers_; ++j)
        {
            head_in.topRows(hidden_) = server_emb.middleCols(j * b, b);
            const Matrix h = cache ? heads_[j].forward(head_in, cache->heads[j]) : heads_[j].forward(head_in);
            out.mean.row(j) = h.row(0);
            out.log_std.row(j) = h.row(1);
        }
        return out;
    }

    void Actor::backward(const Cache& cache, const Matrix& d_mean, const Matrix& d_log_std)
    {
        const Eigen::Index b = d_mean.cols();
        Matrix d_server(hidden_, servers_ * b);
        Matrix d_lb = Matrix::Zero(hidden_, b);
        Matrix d_out(2, b);
        for (int j = 0; j < servers_; ++j)
        {
            d_out.row(0) = d_mean.row(j);
            d_out.row(1) = d_log_std.row(j);
            const Matrix d_in = heads_[j].backward(cache.heads[j], d_out);
            d_server.middleCols(j * b, b) = d_in.topRows(hidden_);
            d_lb += d_in.bottomRows(hidden_);
        }
        server_encoder_.backward(cache.server, d_server);
        lb_encoder_.backward(cache.lb, d_lb);
    }

    void Actor::zero_grad()
    {
        for (auto* net : nets())
        {
            net->zero_grad();
        }
    }

    std::vector<nn::DenseNet*> Actor::nets()
    {
        std::vector<nn::DenseNet*> out{&server_encoder_, &lb_encoder_};
        for (auto& h : heads_)
        {
            out.push_back(&h);
        }
        return out;
    }

    std::vector<const nn::DenseNet*> Actor::nets() const
    {
        std::vector<const nn::DenseNet*> out{&server_encoder_, &lb_encoder_};
        for (const auto& h : heads_)
        {
            out.push_back(&h);
        }
        return out;
    }

    std::vector<nn::ParamRef> Actor::parameters() { return collect(nets()); }

    Critic::Critic(int servers, int hidden, std::mt19937_64& rng)
        : servers_(servers), hidden_(hidden)
    {
        const auto server_specs = nn::encoder_specs(kServerFeatures + 1, hidden);
        const auto lb_specs = nn::encoder_specs(kLbFeatures, hidden);
        const auto head = nn::head_specs(hidden * (servers + 1), hidden, 1);
        server_encoder_ = nn::DenseNet(server_specs, rng);
        lb_encoder_ = nn::DenseNet(lb_specs, rng);
        head_ = nn::DenseNet(head, rng);
    }

    RowVector Critic::forward(const Matrix& obs, const Matrix& action) const
    {
        return run(obs, action, nullptr);
    }

    RowVector Critic::forward(const Matrix& obs, const Matrix& action, Cache& cache) const
    {
        return run(obs, action, &cache);
    }

    RowVector Critic::run(const Matrix& obs, const Matrix& action, Cache* cache) const
    {
        if (obs.rows() != observation_size(servers_) || action.rows() != servers_ ||
            action.cols() != obs.cols())
        {
            throw ConfigError("Critic: observation/action shape mismatch");
        }
        const Eigen::Index b = obs.cols();
        Matrix server_in(kServerFeatures + 1, servers_ * b);
        for (int j = 0; j < servers_; ++j)
        {
            server_in.block(0, j * b, kServerFeatures, b) =
                obs.middleRows(kLbFeatures + kServerFeatures * j, kServerFeatures);
            server_in.block(kServerFeatures, j * b, 1, b) = action.row(j);
        }
        const Matrix lb_in = obs.topRows(kLbFeatures);
        const Matrix server_emb =
            cache ? server_encoder_.forward(server_in, cache->server) : server_encoder_.forward(server_in);
        const Matrix lb_emb = cache ? lb_encoder_.forward(lb_in, cache->lb) : lb_encoder_.forward(lb_in);

        Matrix head_in(hidden_ * (servers_ + 1), b);
        head_in.topRows(hidden_) = lb_emb;
        for (int j = 0; j < servers_; ++j)
        {
            head_in.middleRows(hidden_ * (j + 1), hidden_) = server_emb.middleCols(j * b, b);
        }
        const Matrix q = cache ? head_.forward(head_in, cache->head) : head_.forward(head_in);
        return q.row(0);
    }

    Matrix Critic::backward(const Cache& cache, const RowVector& d_q)
    {
        const Eigen::Index b = d_q.cols();
        const Matrix d_head_in = head_.backward(cache.head, Matrix(d_q));
        Matrix d_server(hidden_, servers_ * b);
        for (int j = 0; j < servers_; ++j)
        {
            d_server.middleCols(j * b, b) = d_head_in.middleRows(hidden_ * (j + 1), hidden_);
        }
        lb_encoder_.backward(cache.lb, d_head_in.topRows(hidden_));
        const Matrix d_server_in = server_encoder_.backward(cache.server, d_server);
        Matrix d_action(servers_, b);
        for (int j = 0; j < servers_; ++j)
        {
            d_action.row(j) = d_server_in.block(kServerFeatures, j * b, 1, b);
        }
        return d_action;
    }

    void Critic::zero_grad()
    {
        for (auto* net : nets())
        {
            net->zero_grad();
        }
    }

    std::vector<nn::DenseNet*> Critic::nets() { return {&server_encoder_, &lb_encoder_, &head_}; }

    std::vector<const nn::DenseNet*> Critic::nets() const
    {
        return {&server_encoder_, &lb_encoder_, &head_};
    }

    std::vector<nn::ParamRef> Critic::parameters() { return collect(nets()); }

    SacModel::SacModel(int servers_in, int hidden, const SacHyper& hyper_in, std::mt19937_64& rng)
        : servers(servers_in),
          actor(servers_in, hidden, rng, hyper_in.initial_log_std),
          critic(servers_in, hidden, rng),
          hyper(hyper_in)
    {
        if (servers < 1)
        {
            throw ConfigError("SacModel needs at least one server");
        }
        if (!(hyper.initial_alpha > 0.0))
        {
            throw ConfigError("initial alpha must be positive");
        }
        guiding_actor = actor;
        guiding_critic = critic;
        log_alpha = std::log(hyper.initial_alpha);
        hyper.target_entropy = -static_cast<double>(servers);
    }

    double SacModel::alpha() const { return std::exp(log_alpha); }

    Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng)
    {
        std::normal_distribution<double> normal(0.0, 1.0);
        return Matrix::NullaryExpr(rows, cols, [&]() { return normal(rng); });
    }

    RowVector critic_target(const SacModel& model, const Minibatch& batch, const Matrix& next_noise)
    {
        const Actor& policy = model.hyper.guiding_actor_target ? model.guiding_actor : model.actor;
        const PolicyOutput next = policy.forward(batch.next_states);
        const nn::SquashedSample sample = nn::gaussian_head_sample(next.mean, next.log_std, next_noise);
        const RowVector q_next = model.guiding_critic.forward(batch.next_states, sample.action);
        const RowVector soft_value = q_next - model.alpha() * sample.log_prob;
        const RowVector not_done = RowVector::Ones(batch.dones.cols()) - batch.dones;
        return batch.rewards + model.hyper.gamma * not_done.cwiseProduct(soft_value);
    }

    double critic_loss_and_grad(SacModel& model, const Minibatch& batch, const RowVector& target)
    {
        const auto b = static_cast<double>(batch.size());
        Critic::Cache cache;
        model.critic.zero_grad();
        const RowVector q = model.critic.forward(batch.states, batch.actions, cache);
        const RowVector diff = q - target;
        const double loss = diff.squaredNorm() / b;
        check_finite(loss, "critic loss");
        model.critic.backward(cache, (2.0 / b) * diff);
        return loss;
    }

    ActorLoss actor_loss_and_grad(SacModel& model, const Minibatch& batch, const Matrix& noise,
                                  const ActionValueFn& q_fn)
    {
        const Eigen::Index n = batch.size();
        const auto b = static_cast<double>(n);
        const double alpha = model.alpha();

        Actor::Cache actor_cache;
        const PolicyOutput out = model.actor.forward(batch.states, actor_cache);
        const nn::SquashedSample sample = nn::gaussian_head_sample(out.mean, out.log_std, noise);

        const ActionValue value = q_fn(batch.states, sample.action);
        ActorLoss result;
        result.loss = (alpha * sample.log_prob - value.q).sum() / b;
        result.log_prob = sample.log_prob;
        check_finite(result.loss, "actor loss");

        const Matrix d_action = value.d_action * (-1.0 / b);
        const nn::HeadGradient g =
            nn::gaussian_head_backward(sample, d_action, RowVector::Constant(n, alpha / b));
        model.actor.zero_grad();
        model.actor.backward(actor_cache, g.d_mean, g.d_log_std);
        return result;
    }

    ActorLoss actor_loss_and_grad(SacModel& model, const Minibatch& batch, const Matrix& noise)
    {
        // dQ/da only; the critic's own parameters are not trained here
        auto critic_value = [&model](const Matrix& states, const Matrix& actions) {
            Critic::Cache cache;
            ActionValue v;
            v.q = model.critic.forward(states, actions, cache);
            model.critic.zero_grad();
            v.d_action = model.critic.backward(cache, RowVector::Ones(actions.cols()));
            model.critic.zero_grad();
            return v;
        };
        return actor_loss_and_grad(model, batch, noise, critic_value);
    }

    double alpha_gradient(const SacModel& model, const RowVector& log_prob)
    {
        return -(log_prob.array() + model.hyper.target_entropy).mean();
    }

    void soft_update(SacModel& model, double tau)
    {
        blend(model.guiding_actor.parameters(), model.actor.parameters(), tau);
        blend(model.guiding_critic.parameters(), model.critic.parameters(), tau);
    }

    SacLearner::SacLearner(SacModel& model, std::uint64_t seed)
        : model_(model),
          critic_opt_(model.critic.parameters(), nn::AdamOptions{model.hyper.learning_rate}),
          actor_opt_(model.actor.parameters(), nn::AdamOptions{model.hyper.learning_rate}),
          alpha_opt_({nn::ParamRef{&model.log_alpha, &model.d_log_alpha, 1}},
                     nn::AdamOptions{model.hyper.learning_rate}),
          rng_(seed)
    {
    }

    double SacLearner::critic_update(const Minibatch& batch)
    {
        const Matrix next_noise = standard_normal(model_.servers, batch.size(), rng_);
        const RowVector target = critic_target(model_, batch, next_noise);
        const double loss = critic_loss_and_grad(model_, batch, target);
        critic_opt_.step();
        return loss;
    }

    ActorLoss SacLearner::actor_update(const Minibatch& batch)
    {
        const Matrix noise = standard_normal(model_.servers, batch.size(), rng_);
        ActorLoss result = actor_loss_and_grad(model_, batch, noise);
        actor_opt_.step();
        return result;
    }

    ActorLoss SacLearner::actor_update(const Minibatch& batch, const ActionValueFn& q_fn)
    {
        const Matrix noise = standard_normal(model_.servers, batch.size(), rng_);
        ActorLoss result = actor_loss_and_grad(model_, batch, noise, q_fn);
        actor_opt_.step();
        return result;
    }

    double SacLearner::alpha_update(const RowVector& log_prob)
    {
        model_.d_log_alpha = alpha_gradient(model_, log_prob);
        alpha_opt_.step();
        return model_.alpha();
    }

    UpdateStats SacLearner::update(const Minibatch& batch)
    {
        UpdateStats stats;
        stats.critic_loss = critic_update(batch);
        const ActorLoss actor = actor_update(batch);
        stats.actor_loss = actor.loss;
        stats.alpha = alpha_update(actor.log_prob);
        soft_update(model_, model_.hyper.tau);
        return stats;
    }
} // namespace rlb::sac
