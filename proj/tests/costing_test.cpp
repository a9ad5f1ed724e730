#include <gtest/gtest.h>

#include "crowdspan/costing.hpp"
#include "crowdspan/errors.hpp"

namespace crowdspan {
namespace {

TEST(Money, ParsesAndPrintsTwoDecimals) {
  EXPECT_EQ(Money::parse("0.06").cents(), 6);
  EXPECT_EQ(Money::parse("12").cents(), 1200);
  EXPECT_EQ(Money::parse("1.5").cents(), 150);
  EXPECT_EQ(Money::from_cents(57360).to_string(), "573.60");
  EXPECT_EQ(Money::from_cents(5).to_string(), "0.05");
  EXPECT_EQ(Money().to_string(), "0.00");
  for (const char* bad : {"", "0.065", "-1", "1,00", "abc", ".", "1."}) {
    EXPECT_THROW(Money::parse(bad), Error) << bad;
  }
}

TEST(Money, Arithmetic) {
  EXPECT_EQ((Money::from_cents(6) * 15).cents(), 90);
  EXPECT_EQ((Money::from_cents(6) + Money::from_cents(24)).cents(), 30);
  EXPECT_LT(Money::from_cents(1), Money::from_cents(2));
}

TEST(Cost, ReferenceCampaign) {
  const CostBreakdown b = cost_breakdown(CostParams{}, 145, 589);
  // Independent arithmetic in cents: 145 * (6 + 4 * 6) + 589 * 15 * 6.
  const std::int64_t expected = 145 * (6 + 4 * 6) + 589 * 15 * 6;
  EXPECT_EQ(expected, 57360);
  EXPECT_EQ(b.total.cents(), expected);
  EXPECT_EQ(b.total.to_string(), "573.60");
  EXPECT_EQ(b.per_abstract.to_string(), "0.90");
  EXPECT_EQ(b.per_worker_training.to_string(), "0.30");
  EXPECT_EQ(b.training_total.cents(), 4350);
  EXPECT_EQ(b.annotation_total.cents(), 53010);
  EXPECT_EQ(campaign_cost(CostParams{}, 145, 589), b.total);
}

TEST(Cost, EmptyCampaignCostsNothing) {
  EXPECT_EQ(campaign_cost(CostParams{}, 0, 0).cents(), 0);
}

TEST(Cost, ScalesLinearly) {
  CostParams p;
  p.redundancy = 5;
  p.per_annotation_fee = Money::parse("0.10");
  for (std::int64_t w = 0; w < 20; w += 3) {
    for (std::int64_t d = 0; d < 50; d += 7) {
      EXPECT_EQ(campaign_cost(p, w, d).cents(), w * 30 + d * 50);
    }
  }
}

TEST(Cost, RejectsNegativeInputs) {
  EXPECT_THROW(campaign_cost(CostParams{}, -1, 5), Error);
  EXPECT_THROW(campaign_cost(CostParams{}, 1, -5), Error);
  CostParams p;
  p.redundancy = 0;
  EXPECT_THROW(p.validate(), Error);
  p = CostParams{};
  p.training_docs = -1;
  EXPECT_THROW(p.validate(), Error);
}

}  // namespace
}  // namespace crowdspan
