#include "rlb/errors.hpp"
#include "rlb/policy/policies.hpp"
#include "support/suites.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace rlb;
using namespace rlb::policy;

namespace
{
    std::vector<double> frequencies(std::size_t (*policy)(const PolicyContext&), std::vector<double> weights,
                                    int draws, std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        const std::vector<int> counts(weights.size(), 0);
        std::vector<double> freq(weights.size(), 0.0);
        for (int k = 0; k < draws; ++k)
        {
            const auto j = policy(PolicyContext{counts, weights, &rng});
            REQUIRE(j < weights.size());
            freq[j] += 1.0 / draws;
        }
        return freq;
    }

    void check_within_3_sigma(const std::vector<double>& freq, const std::vector<double>& expected, int draws)
    {
        for (std::size_t j = 0; j < freq.size(); ++j)
        {
            const double sigma = std::sqrt(expected[j] * (1.0 - expected[j]) / draws);
            CHECK(std::abs(freq[j] - expected[j]) <= 3.0 * sigma);
        }
    }
} // namespace

TEST_CASE("ecmp")
{
    std::mt19937_64 rng(1);
    const std::vector<int> one{7};
    CHECK(ecmp(PolicyContext{one, {}, &rng}) == 0);

    const int draws = 100000;
    check_within_3_sigma(frequencies(ecmp, {1, 1, 1, 1}, draws, 3), {0.25, 0.25, 0.25, 0.25}, draws);

    std::mt19937_64 a(9);
    std::mt19937_64 b(9);
    const std::vector<int> two{0, 0};
    for (int k = 0; k < 100; ++k)
    {
        CHECK(ecmp(PolicyContext{two, {}, &a}) == ecmp(PolicyContext{two, {}, &b}));
    }
    CHECK_THROWS_AS(ecmp(PolicyContext{two, {}, nullptr}), InvariantError);
}

TEST_CASE("wcmp")
{
    const int draws = 100000;
    check_within_3_sigma(frequencies(wcmp, {4, 2}, draws, 4), {2.0 / 3.0, 1.0 / 3.0}, draws);
    check_within_3_sigma(frequencies(wcmp, {1, 1, 1}, draws, 5), {1.0 / 3, 1.0 / 3, 1.0 / 3}, draws);
    std::mt19937_64 rng(1);
    const std::vector<int> counts{0, 0};
    const std::vector<double> bad{4, 0};
    CHECK_THROWS_AS(wcmp(PolicyContext{counts, bad, &rng}), ConfigError);
}

TEST_CASE("lsq examples")
{
    auto pick = [](std::vector<int> c) { return lsq(PolicyContext{c, {}}); };
    CHECK(pick({3, 1}) == 1);
    CHECK(pick({2, 2}) == 0);
    CHECK(pick({5, 0, 3}) == 1);
}

TEST_CASE("sed examples")
{
    const std::vector<double> p{4, 2};
    auto pick = [&](std::vector<int> c) { return sed(PolicyContext{c, p}); };
    CHECK(pick({2, 3}) == 0);
    CHECK(pick({0, 0}) == 0);
    CHECK(pick({3, 1}) == 0);
}

TEST_CASE("rlb_assign examples")
{
    const std::vector<int> zero{0, 0};
    const std::vector<double> s{0.9, 0.1};
    CHECK(rlb_assign(PolicyContext{zero, s}) == 0);
    const std::vector<double> extreme{1.05, 0.05};
    const std::vector<int> loaded{15, 0};
    CHECK(rlb_assign(PolicyContext{loaded, extreme}) == 0);
    const std::vector<double> bad{0.5, 0.0};
    CHECK_THROWS_AS(rlb_assign(PolicyContext{zero, bad}), InvariantError);
}

TEST_CASE("random tie-break spreads over tied servers only")
{
    std::mt19937_64 rng(12);
    const std::vector<int> counts{3, 1, 5};
    const std::vector<double> p{4, 2, 1};
    std::vector<int> hits(3, 0);
    for (int k = 0; k < 10000; ++k)
    {
        ++hits[sed(PolicyContext{counts, p, &rng, TieBreak::random})];
    }
    CHECK(hits[2] == 0);
    CHECK(std::abs(hits[0] - 5000) < 3 * 50);
}

TEST_CASE("policy equivalences")
{
    const auto r = testing::policy_equivalence_suite(2024);
    INFO(r.detail);
    CHECK(r.pass);
}

TEST_CASE("baseline adapter and names")
{
    CHECK(parse_policy("sed") == PolicyKind::sed);
    CHECK(to_string(PolicyKind::rlb_sac) == "rlb-sac");
    CHECK_THROWS_AS(parse_policy("round-robin"), ConfigError);
    CHECK_THROWS_AS(BaselineLb(PolicyKind::rlb_sac, {4, 2}, 1), ConfigError);
    BaselineLb lb(PolicyKind::sed, {4, 2}, 1);
    const std::vector<int> counts{2, 3};
    CHECK(lb.choose(counts) == 0);
}
