#pragma once

#include "rlb/nn/adam.hpp"
#include "rlb/nn/dense.hpp"
#include "rlb/nn/gaussian.hpp"

#include <cstddef>
#include <functional>
#include <random>
#include <vector>

namespace rlb::sac
{
    using nn::Matrix;
    using nn::RowVector;

    struct PolicyOutput
    {
        Matrix mean;    // servers x batch
        Matrix log_std; // servers x batch, unclamped
    };

    /// Shared per-server encoder, LB encoder and one Gaussian head per
    /// server. Input: normalised observations, one per column.
    class Actor
    {
    public:
        struct Cache
        {
            nn::DenseNet::Cache server;
            nn::DenseNet::Cache lb;
            std::vector<nn::DenseNet::Cache> heads;
        };

        Actor() = default;
        Actor(int servers, int hidden, std::mt19937_64& rng, double initial_log_std = 0.0);

        PolicyOutput forward(const Matrix& obs) const;
        PolicyOutput forward(const Matrix& obs, Cache& cache) const;
        void backward(const Cache& cache, const Matrix& d_mean, const Matrix& d_log_std);

        void zero_grad();
        std::vector<nn::ParamRef> parameters();
        std::vector<nn::DenseNet*> nets();
        std::vector<const nn::DenseNet*> nets() const;
        int servers() const noexcept { return servers_; }

    private:
        PolicyOutput run(const Matrix& obs, Cache* cache) const;

        int servers_ = 0;
        int hidden_ = 0;
        nn::DenseNet server_encoder_;
        nn::DenseNet lb_encoder_;
        std::vector<nn::DenseNet> heads_;
    };

    /// Q(s, a). The per-server encoder sees that server's features plus its
    /// action; the head sees every server embedding and the LB embedding.
    class Critic
    {
    public:
        struct Cache
        {
            nn::DenseNet::Cache server;
            nn::DenseNet::Cache lb;
            nn::DenseNet::Cache head;
        };

        Critic() = default;
        Critic(int servers, int hidden, std::mt19937_64& rng);

        RowVector forward(const Matrix& obs, const Matrix& action) const;
        RowVector forward(const Matrix& obs, const Matrix& action, Cache& cache) const;
        /// Accumulates parameter gradients; returns dQ/d(action).
        Matrix backward(const Cache& cache, const RowVector& d_q);

        void zero_grad();
        std::vector<nn::ParamRef> parameters();
        std::vector<nn::DenseNet*> nets();
        std::vector<const nn::DenseNet*> nets() const;
        int servers() const noexcept { return servers_; }

    private:
        RowVector run(const Matrix& obs, const Matrix& action, Cache* cache) const;

        int servers_ = 0;
        int hidden_ = 0;
        nn::DenseNet server_encoder_;
        nn::DenseNet lb_encoder_;
        nn::DenseNet head_;
    };

    struct SacHyper
    {
        double gamma = 0.99;
        double tau = 0.005;
        double learning_rate = 1e-3;
        double initial_alpha = 0.01;
        double initial_log_std = 0.0; // bias of the log-std outputs at init
        double target_entropy = 0.0; // set to -servers by SacModel
        bool guiding_actor_target = false;
    };

    struct SacModel
    {
        SacModel() = default;
        SacModel(int servers, int hidden, const SacHyper& hyper, std::mt19937_64& rng);

        int servers = 0;
        Actor actor;
        Critic critic;
        Actor guiding_actor;
        Critic guiding_critic;
        double log_alpha = 0.0;
        double d_log_alpha = 0.0;
        SacHyper hyper;

        double alpha() const;
    };

    /// One column per transition; states already normalised.
    struct Minibatch
    {
        Matrix states;
        Matrix actions;
        RowVector rewards;
        Matrix next_states;
        RowVector dones;

        Eigen::Index size() const noexcept { return states.cols(); }
    };

    Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

    /// Bootstrapped critic target r + gamma (1 - done) [Q~(s', a') - alpha log pi(a'|s')]
    /// with a' drawn from the current actor (or the guiding actor when
    /// configured) using `next_noise`.
    RowVector critic_target(const SacModel& model, const Minibatch& batch, const Matrix& next_noise);

    /// Mean squared TD error; leaves the critic's gradient in its buffers.
    double critic_loss_and_grad(SacModel& model, const Minibatch& batch, const RowVector& target);

    struct ActorLoss
    {
        double loss = 0.0;
        RowVector log_prob; // of the reparameterised samples
    };

    /// mean(alpha log pi(a|s) - Q(s, a)) with a = tanh(mu + sigma * noise);
    /// leaves the actor's gradient in its buffers, critic gradients zeroed.
    ActorLoss actor_loss_and_grad(SacModel& model, const Minibatch& batch, const Matrix& noise);

    /// Q values and dQ/da for a batch of (state, action) columns.
    struct ActionValue
    {
        RowVector q;
        Matrix d_action;
    };
    using ActionValueFn = std::function<ActionValue(const Matrix& states, const Matrix& actions)>;

    /// Same loss with Q supplied by `q_fn` instead of the model's critic.
    ActorLoss actor_loss_and_grad(SacModel& model, const Minibatch& batch, const Matrix& noise,
                                  const ActionValueFn& q_fn);

    /// dL/d(log alpha) of mean(-log alpha (log pi + target entropy)).
    double alpha_gradient(const SacModel& model, const RowVector& log_prob);

    /// guiding <- (1 - tau) guiding + tau main, for actor and critic.
    void soft_update(SacModel& model, double tau);

    struct UpdateStats
    {
        double critic_loss = 0.0;
        double actor_loss = 0.0;
        double alpha = 0.0;
    };

    /// Owns the optimizers of one model and applies full SAC updates.
    class SacLearner
    {
    public:
        SacLearner(SacModel& model, std::uint64_t seed);

        double critic_update(const Minibatch& batch);
        /// Returns the loss; the sample log-probabilities feed alpha_update.
        ActorLoss actor_update(const Minibatch& batch);
        ActorLoss actor_update(const Minibatch& batch, const ActionValueFn& q_fn);
        double alpha_update(const RowVector& log_prob);
        /// critic, actor, temperature, then soft update of guiding nets.
        UpdateStats update(const Minibatch& batch);

        std::mt19937_64& rng() noexcept { return rng_; }

    private:
        SacModel& model_;
        nn::Adam critic_opt_;
        nn::Adam actor_opt_;
        nn::Adam alpha_opt_;
        std::mt19937_64 rng_;
    };
} // namespace rlb::sac
