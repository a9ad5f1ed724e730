#include <gtest/gtest.h>

#include "properties.hpp"

namespace crowdspan::testing {
namespace {

TEST(Properties, MatchStrictPartitionsGoldAndHypothesis) { EXPECT_EQ(check_match_partition(1), ""); }

TEST(Properties, MicroAverageEqualsPerDocumentSums) { EXPECT_EQ(check_micro_average(2), ""); }

TEST(Properties, ThresholdSetsNestAndRecallFalls) { EXPECT_EQ(check_threshold_nesting(3), ""); }

TEST(Properties, FullRedundancyIsTheSweepMaximum) { EXPECT_EQ(check_full_redundancy(4), ""); }

TEST(Properties, PubtatorRoundTrip) { EXPECT_EQ(check_pubtator_round_trip(5), ""); }

TEST(Properties, ReplayMatchesEveryPrefix) {
  for (std::uint64_t seed : {6, 7, 8}) EXPECT_EQ(check_replay_prefixes(seed), "") << "seed " << seed;
}

TEST(Properties, OtherSeedsHoldToo) {
  for (const PropertyCheck& c : property_checks()) EXPECT_EQ(c.run(1000), "") << c.name;
}

}  // namespace
}  // namespace crowdspan::testing
