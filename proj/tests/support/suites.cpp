#include "support/suites.hpp"

#include "rlb/metrics/fairness.hpp"
#include "rlb/nn/dense.hpp"
#include "rlb/nn/gaussian.hpp"
#include "rlb/policy/policies.hpp"
#include "rlb/sac/model.hpp"
#include "rlb/sac/observation.hpp"
#include "support/gradcheck.hpp"
#include "support/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <vector>

namespace rlb::testing
{
    using nn::RowVector;

    namespace
    {
        std::string format(const char* fmt, auto... args)
        {
            char buf[512];
            std::snprintf(buf, sizeof buf, fmt, args...);
            return buf;
        }

        bool close(double a, double b, double tol = 1e-12)
        {
            return std::abs(a - b) <= tol;
        }

        // Failure counter that keeps the first few messages.
        struct Tally
        {
            int failures = 0;
            std::string first;

            void expect(bool ok, const std::string& what)
            {
                if (!ok)
                {
                    if (failures < 3)
                    {
                        first += (first.empty() ? "" : "; ") + what;
                    }
                    ++failures;
                }
            }
        };
    } // namespace

    SuiteResult oracle_suite(int scenarios, std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        Tally tally;
        double worst = 0.0;
        std::size_t task_total = 0;
        for (int trial = 0; trial < scenarios; ++trial)
        {
            const Scenario scenario = random_scenario(rng);
            const auto expected = integrate_completions(scenario);
            ScriptedLb lb(scenario.route);
            sim::LbHooks* hooks[] = {&lb};
            sim::Engine engine(scenario.topology, hooks, scenario.arrivals,
                               {drain_horizon(scenario), 0.5, sim::LoadScale::unit});

            std::vector<std::vector<sim::TaskId>> entered(scenario.topology.servers.size());
            while (engine.process_next())
            {
                std::size_t live = 0;
                for (const auto& s : engine.servers())
                {
                    live += s.in_service.size() + s.backlog.size();
                    tally.expect(s.backlog.empty() || static_cast<int>(s.in_service.size()) == s.p_hat,
                                 format("scenario %d: idle slot with a backlog", trial));
                    auto& seen = entered[static_cast<std::size_t>(s.id)];
                    for (const auto id : s.backlog)
                    {
                        if (std::find(seen.begin(), seen.end(), id) == seen.end())
                        {
                            seen.push_back(id);
                        }
                    }
                }
                std::size_t done = 0;
                for (const auto& t : engine.tasks())
                {
                    done += t.completed() ? 1 : 0;
                }
                tally.expect(engine.arrivals_seen() == done + live,
                             format("scenario %d: conservation broken at t=%g", trial, engine.now()));
            }

            const auto tasks = engine.tasks();
            for (const auto& seen : entered)
            {
                for (std::size_t i = 1; i < seen.size(); ++i)
                {
                    tally.expect(*tasks[seen[i - 1]].service_start_time <= *tasks[seen[i]].service_start_time,
                                 format("scenario %d: FIFO order broken", trial));
                }
            }
            tally.expect(tasks.size() == expected.size(), format("scenario %d: task count", trial));
            for (std::size_t k = 0; k < std::min(tasks.size(), expected.size()); ++k)
            {
                if (!tasks[k].completed())
                {
                    tally.expect(false, format("scenario %d: task %zu never completed", trial, k));
                    continue;
                }
                const double err = std::abs(*tasks[k].completion_time - expected[k]);
                worst = std::max(worst, err);
                tally.expect(err < 1e-3, format("scenario %d task %zu: |dt| = %.3g", trial, k, err));
            }
            task_total += tasks.size();
        }
        SuiteResult r;
        r.pass = tally.failures == 0;
        r.detail = format("%d scenarios, %zu tasks, max |completion - oracle| = %.3g s", scenarios,
                          task_total, worst);
        if (!r.pass)
        {
            r.detail += format(", %d failures: ", tally.failures) + tally.first;
        }
        return r;
    }

    SuiteResult policy_equivalence_suite(std::uint64_t seed)
    {
        using policy::PolicyContext;
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<int> size_dist(1, 8);
        std::uniform_int_distribution<int> count_dist(0, 12);
        std::uniform_int_distribution<int> proc_dist(1, 8);
        std::uniform_real_distribution<double> log_scale(std::log(1e-3), std::log(1e3));
        Tally tally;
        int sed_ties = 0;

        auto random_counts = [&](int n) {
            std::vector<int> c(static_cast<std::size_t>(n));
            for (auto& v : c)
            {
                v = count_dist(rng);
            }
            return c;
        };

        for (int k = 0; k < 10000; ++k)
        {
            const int n = size_dist(rng);
            const auto counts = random_counts(n);
            std::vector<double> p(static_cast<std::size_t>(n));
            for (auto& v : p)
            {
                v = proc_dist(rng);
            }
            const double c = std::exp(log_scale(rng));
            std::vector<double> speeds(p.size());
            std::transform(p.begin(), p.end(), speeds.begin(), [c](double v) { return c * v; });

            const auto sed = policy::sed(PolicyContext{counts, p});
            const auto rlb = policy::rlb_assign(PolicyContext{counts, speeds});
            tally.expect(sed == rlb, format("context %d: sed %zu vs rlb %zu", k, sed, rlb));
            std::vector<double> scores(p.size());
            for (std::size_t j = 0; j < p.size(); ++j)
            {
                scores[j] = (counts[j] + 1.0) / p[j];
            }
            sed_ties += std::count(scores.begin(), scores.end(), scores[sed]) > 1 ? 1 : 0;

            const std::vector<double> equal(static_cast<std::size_t>(n), p[0]);
            const auto lsq = policy::lsq(PolicyContext{counts, equal});
            const auto sed_equal = policy::sed(PolicyContext{counts, equal});
            tally.expect(lsq == sed_equal, format("context %d: lsq %zu vs sed %zu", k, lsq, sed_equal));
        }

        std::uniform_real_distribution<double> speed_dist(0.05, 1.05);
        for (int k = 0; k < 1000; ++k)
        {
            const int n = size_dist(rng);
            const auto counts = random_counts(n);
            std::vector<double> speeds(static_cast<std::size_t>(n));
            for (auto& v : speeds)
            {
                // odd contexts draw speeds from a coarse grid
                v = (k % 2 == 0) ? speed_dist(rng) : 0.05 + 0.25 * proc_dist(rng);
            }
            const double c = std::exp(log_scale(rng));
            std::vector<double> scaled(speeds.size());
            std::transform(speeds.begin(), speeds.end(), scaled.begin(), [c](double v) { return c * v; });

            tally.expect(policy::rlb_assign(PolicyContext{counts, speeds}) ==
                             policy::rlb_assign(PolicyContext{counts, scaled}),
                         format("scaling %d: lowest-index choice changed", k));
            std::mt19937_64 a(seed + static_cast<std::uint64_t>(k));
            std::mt19937_64 b = a;
            tally.expect(
                policy::rlb_assign(PolicyContext{counts, speeds, &a, policy::TieBreak::random}) ==
                    policy::rlb_assign(PolicyContext{counts, scaled, &b, policy::TieBreak::random}),
                format("scaling %d: random tie-break choice changed", k));
        }

        SuiteResult r;
        r.pass = tally.failures == 0;
        r.detail = format("10000 SED/RLB contexts (%d with tied minima), 10000 LSQ/SED contexts, "
                          "1000 rescalings",
                          sed_ties);
        if (!r.pass)
        {
            r.detail += format(", %d failures: ", tally.failures) + tally.first;
        }
        return r;
    }

    SuiteResult metrics_suite(std::uint64_t seed)
    {
        using namespace metrics;
        Tally tally;
        auto ex = [&](double got, double want, const char* what) {
            tally.expect(close(got, want), format("%s: got %.17g want %.17g", what, got, want));
        };
        using V = std::vector<double>;

        {
            const std::vector<TimedSample> one{{2.0, 5.0}};
            const auto s = reduce(one, 5.0);
            ex(s.average, 2.0, "reduce single avg");
            ex(s.p90, 2.0, "reduce single p90");
            ex(s.std, 0.0, "reduce single std");
            ex(s.discounted_average, 2.0, "reduce single disc");
            ex(s.weighted_discounted_average, 2.0, "reduce single wdisc");
        }
        {
            const std::vector<TimedSample> ones{{1, 3}, {1, 3}, {1, 3}, {1, 3}};
            const auto s = reduce(ones, 3.0);
            ex(s.average, 1.0, "reduce ones avg");
            ex(s.p90, 1.0, "reduce ones p90");
            ex(s.std, 0.0, "reduce ones std");
            ex(s.discounted_average, 1.0, "reduce ones disc");
            ex(s.weighted_discounted_average, 1.0, "reduce ones wdisc");
        }
        {
            const std::vector<TimedSample> two{{1.0, 9.0}, {3.0, 10.0}};
            const auto s = reduce(two, 10.0);
            ex(s.discounted_average, 1.95, "reduce two disc");
            ex(s.weighted_discounted_average, 3.9 / 1.9, "reduce two wdisc");
        }
        {
            const auto s = reduce({}, 1.0);
            ex(s.average + s.p90 + s.std + s.discounted_average + s.weighted_discounted_average, 0.0,
               "reduce empty");
        }
        ex(jain(V{2, 2, 2}), 1.0, "jain [2,2,2]");
        ex(jain(V{1, 3}), 0.8, "jain [1,3]");
        ex(jain(V{1, 0}), 0.5, "jain [1,0]");
        ex(g_fairness(V{5, 5}), 1.0, "g [5,5]");
        ex(g_fairness(V{1, 2}), std::sqrt(0.5), "g [1,2]");
        ex(g_fairness(V{0, 1}), 0.0, "g [0,1]");
        ex(bossaer(V{3, 3, 3}), 1.0, "bossaer [3,3,3]");
        ex(bossaer(V{1, 2}), 0.5, "bossaer [1,2]");
        ex(bossaer(V{1, 2, 4}), 0.125, "bossaer [1,2,4]");
        ex(jain(V{0, 0}), 1.0, "jain all-zero");
        ex(g_fairness(V{0, 0}), 1.0, "g all-zero");
        ex(bossaer(V{0, 0, 0}), 1.0, "bossaer all-zero");
        ex(reward(V{0.2, 0.2}, FairnessIndex::jain), 0.0, "reward equal");
        ex(reward(V{1, 3}, FairnessIndex::jain), -0.2, "reward jain [1,3]");
        ex(reward(V{1, 2}, FairnessIndex::bossaer), -0.5, "reward bossaer [1,2]");
        ex(reward(V{1, 3}, FairnessIndex::jain, RewardSign::literal), 0.2, "literal reward");

        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<int> size_dist(1, 16);
        std::uniform_real_distribution<double> value_dist(0.0, 10.0);
        std::uniform_real_distribution<double> log_scale(std::log(1e-3), std::log(1e3));
        const FairnessIndex indices[] = {FairnessIndex::jain, FairnessIndex::g, FairnessIndex::bossaer};
        for (int k = 0; k < 10000; ++k)
        {
            const auto n = static_cast<std::size_t>(size_dist(rng));
            V x(n);
            for (auto& v : x)
            {
                v = value_dist(rng);
            }
            const double c = std::exp(log_scale(rng));
            V scaled(n);
            std::transform(x.begin(), x.end(), scaled.begin(), [c](double v) { return c * v; });
            const V constant(n, value_dist(rng) + 1e-3);
            for (const auto index : indices)
            {
                const double f = fairness(index, x);
                tally.expect(f >= 0.0 && f <= 1.0 + 1e-12, format("vector %d: index out of range", k));
                tally.expect(close(f, fairness(index, scaled), 1e-12 * std::max(1.0, f)),
                             format("vector %d: %s not scale invariant", k, std::string(to_string(index)).c_str()));
                tally.expect(close(fairness(index, constant), 1.0),
                             format("vector %d: constant vector not 1", k));
            }
            tally.expect(jain(x) >= 1.0 / static_cast<double>(n) - 1e-12, format("vector %d: jain < 1/n", k));
            V single(n, 0.0);
            single[static_cast<std::size_t>(k) % n] = x[0] + 1.0;
            tally.expect(close(jain(single), 1.0 / static_cast<double>(n)), format("vector %d: jain one-hot", k));

            const double big = 1.0 + value_dist(rng) * 100.0;
            tally.expect(bossaer(V{1.0, big}) < jain(V{1.0, big}), format("vector %d: bossaer >= jain", k));

            // reduce is permutation invariant over samples sharing a timestamp
            std::vector<TimedSample> samples;
            for (const double v : x)
            {
                samples.push_back({v, 4.0});
            }
            auto shuffled = samples;
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            const auto a = reduce(samples, 5.0);
            const auto b = reduce(shuffled, 5.0);
            const double tol = 1e-12 * 10.0;
            tally.expect(close(a.average, b.average, tol) && close(a.p90, b.p90, tol) &&
                             close(a.std, b.std, tol) && close(a.discounted_average, b.discounted_average, tol) &&
                             close(a.weighted_discounted_average, b.weighted_discounted_average, tol),
                         format("vector %d: reduce depends on sample order", k));
        }

        SuiteResult r;
        r.pass = tally.failures == 0;
        r.detail = "tagged examples within 1e-12, 10000 random vectors";
        if (!r.pass)
        {
            r.detail += format(", %d failures: ", tally.failures) + tally.first;
        }
        return r;
    }

    namespace
    {
        sac::Minibatch random_batch(int servers, Eigen::Index size, std::mt19937_64& rng)
        {
            const int obs = sac::observation_size(servers);
            sac::Minibatch b;
            b.states = sac::standard_normal(obs, size, rng);
            b.next_states = sac::standard_normal(obs, size, rng);
            b.actions = sac::standard_normal(servers, size, rng).array().tanh().matrix() * 0.9;
            b.rewards = sac::standard_normal(1, size, rng).row(0) * 0.1;
            b.dones = RowVector::Zero(size);
            b.dones(0) = 1.0;
            return b;
        }
    } // namespace

    SuiteResult gradient_suite(std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        const double limit = 1e-4;
        std::string detail;
        bool pass = true;
        auto record = [&](const char* name, const GradCheck& g) {
            pass = pass && g.max_relative_error < limit;
            detail += format("%s%s %.2e (%zu probes)", detail.empty() ? "" : ", ", name,
                             g.max_relative_error, g.probes);
        };

        {
            // encoder (linear, layer norm, relu), then tanh and linear layers
            auto specs = nn::encoder_specs(6, 12);
            specs.push_back({12, 7, nn::Activation::tanh, true});
            specs.push_back({7, 3, nn::Activation::linear, false});
            nn::DenseNet net(specs, rng);
            const nn::Matrix x = sac::standard_normal(6, 5, rng);
            const nn::Matrix up = sac::standard_normal(3, 5, rng);
            nn::DenseNet::Cache cache;
            net.forward(x, cache);
            net.zero_grad();
            net.backward(cache, up);
            auto loss = [&] { return net.forward(x).cwiseProduct(up).sum(); };
            record("dense/layer-norm", check_gradients(net.parameters(), loss, 100, rng));
        }
        {
            nn::Matrix mean = sac::standard_normal(3, 4, rng);
            nn::Matrix log_std = sac::standard_normal(3, 4, rng) * 0.5;
            const nn::Matrix noise = sac::standard_normal(3, 4, rng);
            const nn::Matrix w = sac::standard_normal(3, 4, rng);
            auto loss = [&] {
                const auto s = nn::gaussian_head_sample(mean, log_std, noise);
                return s.log_prob.sum() + s.action.cwiseProduct(w).sum();
            };
            const auto sample = nn::gaussian_head_sample(mean, log_std, noise);
            const auto g = nn::gaussian_head_backward(sample, w, RowVector::Ones(4));
            nn::Matrix d_mean = g.d_mean;
            nn::Matrix d_log_std = g.d_log_std;
            const std::vector<nn::ParamRef> params{
                {mean.data(), d_mean.data(), static_cast<std::size_t>(mean.size())},
                {log_std.data(), d_log_std.data(), static_cast<std::size_t>(log_std.size())}};
            record("gaussian log-prob", check_gradients(params, loss, 24, rng));
        }

        sac::SacHyper hyper;
        hyper.initial_alpha = 0.2;
        sac::SacModel model(2, 16, hyper, rng);
        const sac::Minibatch batch = random_batch(2, 8, rng);
        {
            const RowVector target = sac::critic_target(model, batch, sac::standard_normal(2, 8, rng));
            sac::critic_loss_and_grad(model, batch, target);
            auto loss = [&] { return sac::critic_loss_and_grad(model, batch, target); };
            record("critic loss", check_gradients(model.critic.parameters(), loss, 100, rng));
        }
        {
            const nn::Matrix noise = sac::standard_normal(2, 8, rng);
            sac::actor_loss_and_grad(model, batch, noise);
            auto loss = [&] { return sac::actor_loss_and_grad(model, batch, noise).loss; };
            record("actor loss", check_gradients(model.actor.parameters(), loss, 100, rng));
        }
        return {pass, detail};
    }

    SuiteResult sac_sanity_suite(std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        const double goal = std::atanh(0.5);
        std::string detail;
        bool pass = true;

        {
            sac::SacHyper hyper;
            hyper.initial_alpha = 1.0;
            sac::SacModel model(1, 64, hyper, rng);
            model.log_alpha = -1e3; // alpha = 0
            sac::SacLearner learner(model, seed + 1);
            const sac::Minibatch batch = random_batch(1, 64, rng);
            auto quadratic = [](const nn::Matrix&, const nn::Matrix& actions) {
                sac::ActionValue v;
                v.q = -(actions.array() - 0.5).square().matrix().row(0);
                v.d_action = -2.0 * (actions.array() - 0.5).matrix();
                return v;
            };
            int reached = -1;
            double gap = 0.0;
            for (int update = 1; update <= 2000; ++update)
            {
                learner.actor_update(batch, quadratic);
                const auto out = model.actor.forward(batch.states);
                gap = (out.mean.array() - goal).abs().maxCoeff();
                if (gap <= 0.05)
                {
                    reached = update;
                    break;
                }
            }
            pass = pass && reached > 0;
            detail += reached > 0
                          ? format("actor mean within %.3f of atanh(0.5) after %d updates", gap, reached)
                          : format("actor mean still %.3f from atanh(0.5) after 2000 updates", gap);
        }

        // temperature direction on constructed batches: pin each head's
        // log-std output to a constant and take one alpha step
        auto alpha_after = [&](double log_std) {
            sac::SacHyper hyper;
            hyper.initial_alpha = 0.5;
            sac::SacModel model(2, 16, hyper, rng);
            auto nets = model.actor.nets();
            for (std::size_t h = 2; h < nets.size(); ++h)
            {
                auto& last = nets[h]->layers().back();
                last.weight.row(1).setZero();
                last.bias(1) = log_std;
            }
            sac::SacLearner learner(model, seed + 2);
            const sac::Minibatch batch = random_batch(2, 64, rng);
            const double before = model.alpha();
            const auto actor = learner.actor_update(batch);
            const double entropy = -actor.log_prob.mean();
            learner.alpha_update(actor.log_prob);
            return std::pair{model.alpha() - before, entropy - model.hyper.target_entropy};
        };
        const auto [high_delta, high_excess] = alpha_after(1.0);
        const auto [low_delta, low_excess] = alpha_after(-4.0);
        const bool high_ok = high_excess > 0.0 && high_delta < 0.0;
        const bool low_ok = low_excess < 0.0 && low_delta > 0.0;

        sac::SacModel probe(2, 8, sac::SacHyper{}, rng);
        const RowVector at_target = RowVector::Constant(16, -probe.hyper.target_entropy);
        const double stationary = sac::alpha_gradient(probe, at_target);
        const bool stationary_ok = std::abs(stationary) < 1e-15;

        pass = pass && high_ok && low_ok && stationary_ok;
        detail += format("; entropy above target by %.2f: alpha change %.3g; below by %.2f: alpha change "
                         "%+.3g; gradient at target %.1g",
                         high_excess, high_delta, -low_excess, low_delta, std::abs(stationary));
        return {pass, detail};
    }
} // namespace rlb::testing
