#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace crowdspan {

/// Fixed-point amount in whole cents.
class Money {
 public:
  constexpr Money() = default;
  static constexpr Money from_cents(std::int64_t cents) { return Money(cents); }

  /// Parses "573.60", "0.06", ".06", "12". At most two decimals; no sign.
  /// Throws InvalidArgument.
  static Money parse(std::string_view text);

  constexpr std::int64_t cents() const { return cents_; }

  /// Always two decimals: "573.60".
  std::string to_string() const;

  constexpr Money operator+(Money o) const { return Money(cents_ + o.cents_); }
  constexpr Money operator*(std::int64_t factor) const { return Money(cents_ * factor); }
  constexpr auto operator<=>(const Money&) const = default;

 private:
  constexpr explicit Money(std::int64_t cents) : cents_(cents) {}
  std::int64_t cents_ = 0;
};

struct CostParams {
  Money per_annotation_fee = Money::from_cents(6);
  Money survey_fee = Money::from_cents(6);
  Money training_fee_per_doc = Money::from_cents(6);
  std::int64_t training_docs = 4;
  std::int64_t redundancy = 15;

  /// Throws InvalidArgument for negative fees or counts.
  void validate() const;
};

struct CostBreakdown {
  Money per_worker_training;   // survey + training documents
  Money per_abstract;          // redundancy x annotation fee
  Money training_total;
  Money annotation_total;
  Money total;
};

CostBreakdown cost_breakdown(const CostParams& params, std::int64_t trained_workers, std::int64_t paid_documents);

/// trained_workers x (survey + training docs x fee) + paid_documents x
/// redundancy x annotation fee. paid_documents excludes the training set.
Money campaign_cost(const CostParams& params, std::int64_t trained_workers, std::int64_t paid_documents);

}  // namespace crowdspan
