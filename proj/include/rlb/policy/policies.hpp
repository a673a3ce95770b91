#pragma once

#include "rlb/sim/engine.hpp"

#include <cstddef>
#include <memory>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace rlb::policy
{
    /// Scores within a relative 1e-12 of each other are ties.
    enum class TieBreak
    {
        lowest_index,
        random, // uniform among tied servers, drawn from the context rng
    };

    /// What one LB knows when an arrival must be placed.
    struct PolicyContext
    {
        std::span<const int> local_ongoing; // this LB's uncompleted dispatches per server
        std::span<const double> weights;    // p_j for WCMP/SED, learned speeds for RLB
        std::mt19937_64* rng = nullptr;
        TieBreak tie_break = TieBreak::lowest_index;

        std::size_t server_count() const noexcept { return local_ongoing.size(); }
    };

    std::size_t ecmp(const PolicyContext& ctx);
    std::size_t wcmp(const PolicyContext& ctx);
    std::size_t lsq(const PolicyContext& ctx);
    std::size_t sed(const PolicyContext& ctx);

    /// argmin_j (local_ongoing[j] + 1) / weights[j] with weights the
    /// learned per-server speeds. Throws InvariantError on nonpositive
    /// weights.
    std::size_t rlb_assign(const PolicyContext& ctx);

    enum class PolicyKind
    {
        ecmp,
        wcmp,
        lsq,
        sed,
        rlb_sac,
    };

    PolicyKind parse_policy(std::string_view name);
    std::string_view to_string(PolicyKind kind);

    /// Engine adapter for the four non-learning policies.
    class BaselineLb final : public sim::LbHooks
    {
    public:
        BaselineLb(PolicyKind kind, std::vector<double> processors, std::uint64_t seed,
                   TieBreak tie_break = TieBreak::lowest_index);

        std::size_t choose(std::span<const int> local_ongoing) override;

    private:
        PolicyKind kind_;
        std::vector<double> processors_;
        std::mt19937_64 rng_;
        TieBreak tie_break_;
    };
} // namespace rlb::policy
