#include "rlb/errors.hpp"
#include "rlb/metrics/fairness.hpp"
#include "support/suites.hpp"

#include <doctest.h>

#include <vector>

using namespace rlb;
using namespace rlb::metrics;

TEST_CASE("metrics examples and properties")
{
    const auto r = testing::metrics_suite(77);
    INFO(r.detail);
    CHECK(r.pass);
}

TEST_CASE("percentile interpolates between order statistics")
{
    std::vector<double> v{5, 1, 4, 2, 3};
    CHECK(percentile(v, 0.9) == doctest::Approx(4.6).epsilon(1e-14));
    std::vector<double> w{10, 20};
    CHECK(percentile(w, 0.5) == 15.0);
    std::vector<double> empty;
    CHECK(percentile(empty, 0.9) == 0.0);
}

TEST_CASE("reduce examples")
{
    const std::vector<TimedSample> two{{1.0, 0.0}, {3.0, 1.0}};
    const auto s = reduce(two, 1.0);
    CHECK(s.average == 2.0);
    CHECK(s.std == 1.0);
    CHECK(s.p90 == doctest::Approx(2.8).epsilon(1e-14));
    CHECK(s.discounted_average == doctest::Approx(1.95).epsilon(1e-14));
}

TEST_CASE("index names")
{
    CHECK(parse_fairness_index("jain") == FairnessIndex::jain);
    CHECK(parse_fairness_index("g") == FairnessIndex::g);
    CHECK(parse_fairness_index("bossaer") == FairnessIndex::bossaer);
    CHECK(to_string(FairnessIndex::bossaer) == "bossaer");
    CHECK_THROWS_AS(parse_fairness_index("gini"), ConfigError);
}
