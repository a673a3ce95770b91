#include "rlb/policy/policies.hpp"

#include "rlb/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rlb::policy
{
    namespace
    {
        std::mt19937_64& require_rng(const PolicyContext& ctx)
        {
            if (ctx.rng == nullptr)
            {
                throw InvariantError("randomized policy called without an rng");
            }
            return *ctx.rng;
        }

        void require_weights(const PolicyContext& ctx, const char* who)
        {
            if (ctx.weights.size() != ctx.local_ongoing.size())
            {
                throw ConfigError(std::string(who) + ": weights and counts differ in length");
            }
        }

        // Scores within this relative distance count as tied.
        constexpr double kTieTolerance = 1e-12;

        bool tied(double a, double b)
        {
            return std::abs(a - b) <= kTieTolerance * std::max(std::abs(a), std::abs(b));
        }

        // argmin of score(j) with the configured tie rule.
        template <typename Score>
        std::size_t argmin(const PolicyContext& ctx, Score score)
        {
            const std::size_t n = ctx.server_count();
            std::size_t best = 0;
            double best_score = score(0);
            std::size_t ties = 1;
            for (std::size_t j = 1; j < n; ++j)
            {
                const double s = score(j);
                if (tied(s, best_score))
                {
                    if (ctx.tie_break == TieBreak::random)
                    {
                        // reservoir sampling over tied servers
                        ++ties;
                        std::uniform_int_distribution<std::size_t> pick(0, ties - 1);
                        if (pick(require_rng(ctx)) == 0)
                        {
                            best = j;
                        }
                    }
                }
                else if (s < best_score)
                {
                    best = j;
                    best_score = s;
                    ties = 1;
                }
            }
            return best;
        }
    } // namespace

    std::size_t ecmp(const PolicyContext& ctx)
    {
        const std::size_t n = ctx.server_count();
        if (n == 1)
        {
            return 0;
        }
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        return pick(require_rng(ctx));
    }

    std::size_t wcmp(const PolicyContext& ctx)
    {
        require_weights(ctx, "wcmp");
        for (const double w : ctx.weights)
        {
            if (!(w > 0.0))
            {
                throw ConfigError("wcmp: weights must be positive");
            }
        }
        std::discrete_distribution<std::size_t> pick(ctx.weights.begin(), ctx.weights.end());
        return pick(require_rng(ctx));
    }

    std::size_t lsq(const PolicyContext& ctx)
    {
        return argmin(ctx, [&](std::size_t j) { return static_cast<double>(ctx.local_ongoing[j]); });
    }

    std::size_t sed(const PolicyContext& ctx)
    {
        require_weights(ctx, "sed");
        return argmin(ctx, [&](std::size_t j) {
            return (static_cast<double>(ctx.local_ongoing[j]) + 1.0) / ctx.weights[j];
        });
    }

    std::size_t rlb_assign(const PolicyContext& ctx)
    {
        if (ctx.weights.size() != ctx.local_ongoing.size())
        {
            throw InvariantError("rlb_assign: speed estimates and counts differ in length");
        }
        for (const double w : ctx.weights)
        {
            if (!(w > 0.0))
            {
                throw InvariantError("rlb_assign: nonpositive speed estimate " + std::to_string(w));
            }
        }
        return argmin(ctx, [&](std::size_t j) {
            return (static_cast<double>(ctx.local_ongoing[j]) + 1.0) / ctx.weights[j];
        });
    }

    PolicyKind parse_policy(std::string_view name)
    {
        if (name == "ecmp")
        {
            return PolicyKind::ecmp;
        }
        if (name == "wcmp")
        {
            return PolicyKind::wcmp;
        }
        if (name == "lsq")
        {
            return PolicyKind::lsq;
        }
        if (name == "sed")
        {
            return PolicyKind::sed;
        }
        if (name == "rlb-sac")
        {
            return PolicyKind::rlb_sac;
        }
        throw ConfigError("unknown policy '" + std::string(name) +
                          "' (expected ecmp | wcmp | lsq | sed | rlb-sac)");
    }

    std::string_view to_string(PolicyKind kind)
    {
        switch (kind)
        {
        case PolicyKind::ecmp:
            return "ecmp";
        case PolicyKind::wcmp:
            return "wcmp";
        case PolicyKind::lsq:
            return "lsq";
        case PolicyKind::sed:
            return "sed";
        case PolicyKind::rlb_sac:
            return "rlb-sac";
        }
        return "ecmp";
    }

    BaselineLb::BaselineLb(PolicyKind kind, std::vector<double> processors, std::uint64_t seed,
                           TieBreak tie_break)
        : kind_(kind), processors_(std::move(processors)), rng_(seed), tie_break_(tie_break)
    {
        if (kind_ == PolicyKind::rlb_sac)
        {
            throw ConfigError("BaselineLb cannot run rlb-sac");
        }
    }

    std::size_t BaselineLb::choose(std::span<const int> local_ongoing)
    {
        PolicyContext ctx{local_ongoing, processors_, &rng_, tie_break_};
        switch (kind_)
        {
        case PolicyKind::ecmp:
            return ecmp(ctx);
        case PolicyKind::wcmp:
            return wcmp(ctx);
        case PolicyKind::lsq:
            return lsq(ctx);
        case PolicyKind::sed:
            return sed(ctx);
        case PolicyKind::rlb_sac:
            break;
        }
        throw InvariantError("BaselineLb: unreachable policy kind");
    }
} // namespace rlb::policy
