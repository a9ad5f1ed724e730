#include "crowdspan/costing.hpp"

#include <cstdio>

#include "crowdspan/errors.hpp"

namespace crowdspan {

Money Money::parse(std::string_view text) {
  auto bad = [&] { return Error(ErrorCode::kInvalidArgument, "not a money amount: '" + std::string(text) + "'"); };
  if (text.empty()) throw bad();
  std::int64_t whole = 0, frac = 0;
  std::size_t i = 0;
  bool digits = false;
  for (; i < text.size() && text[i] != '.'; ++i) {
    if (text[i] < '0' || text[i] > '9') throw bad();
    whole = whole * 10 + (text[i] - '0');
    if (whole > 100'000'000'000LL) throw bad();
    digits = true;
  }
  if (i < text.size()) {
    ++i;
    int places = 0;
    for (; i < text.size(); ++i, ++places) {
      if (text[i] < '0' || text[i] > '9' || places == 2) throw bad();
      frac = frac * 10 + (text[i] - '0');
      digits = true;
    }
    if (places == 0) throw bad();
    if (places == 1) frac *= 10;
  }
  if (!digits) throw bad();
  return Money(whole * 100 + frac);
}

std::string Money::to_string() const {
  const std::int64_t abs = cents_ < 0 ? -cents_ : cents_;
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s%lld.%02lld", cents_ < 0 ? "-" : "", static_cast<long long>(abs / 100),
                static_cast<long long>(abs % 100));
  return buf;
}

void CostParams::validate() const {
  if (per_annotation_fee.cents() < 0 || survey_fee.cents() < 0 || training_fee_per_doc.cents() < 0) {
    throw Error(ErrorCode::kInvalidArgument, "fees must be non-negative");
  }
  if (training_docs < 0) throw Error(ErrorCode::kInvalidArgument, "training document count must be non-negative");
  if (redundancy < 1) throw Error(ErrorCode::kInvalidArgument, "redundancy must be at least 1");
}

CostBreakdown cost_breakdown(const CostParams& params, std::int64_t trained_workers, std::int64_t paid_documents) {
  params.validate();
  if (trained_workers < 0 || paid_documents < 0) throw Error(ErrorCode::kInvalidArgument, "counts must be non-negative");
  CostBreakdown b;
  b.per_worker_training = params.survey_fee + params.training_fee_per_doc * params.training_docs;
  b.per_abstract = params.per_annotation_fee * params.redundancy;
  b.training_total = b.per_worker_training * trained_workers;
  b.annotation_total = b.per_abstract * paid_documents;
  b.total = b.training_total + b.annotation_total;
  return b;
}

Money campaign_cost(const CostParams& params, std::int64_t trained_workers, std::int64_t paid_documents) {
  return cost_breakdown(params, trained_workers, paid_documents).total;
}

}  // namespace crowdspan
