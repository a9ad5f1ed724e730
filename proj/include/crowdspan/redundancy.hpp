#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crowdspan/aggregate.hpp"

namespace crowdspan {

enum class BestKMode {
  kGlobal,       // one threshold for the whole sampled corpus
  kPerDocument,  // each document keeps its own best threshold
};

struct RedundancyOptions {
  BestKMode mode = BestKMode::kGlobal;
  bool include_training = false;
};

struct RedundancyEstimate {
  std::size_t n = 0;
  std::size_t repetitions = 0;
  std::vector<double> max_f_values;
  double mean_max_f = 0.0;
  double stddev_max_f = 0.0;  // population
  std::vector<std::size_t> best_k_per_rep;

  /// Most frequent best k; ties go to the smaller k.
  std::size_t best_k_mode() const;
};

inline constexpr std::size_t kDefaultRepetitions = 10;

/// Quality expected from n workers per document. Each repetition draws
/// min(n, available) annotators per document without replacement, sweeps
/// k = 1..n, and keeps the best F (ties to the smallest k). Repetition r
/// draws from its own stream seeded by (seed, r).
///
/// Throws NoSubmissions when no submission falls in the evaluation scope.
RedundancyEstimate estimate_redundancy(std::span<const Submission> submissions, const GoldCorpus& gold,
                                       std::size_t n, std::size_t repetitions, std::uint64_t seed,
                                       const RedundancyOptions& options = {});

/// Estimates for n = 1..n_max.
std::vector<RedundancyEstimate> redundancy_curve(std::span<const Submission> submissions, const GoldCorpus& gold,
                                                 std::size_t n_max, std::size_t repetitions, std::uint64_t seed,
                                                 const RedundancyOptions& options = {});

/// Largest number of distinct annotators on any document in scope.
std::size_t max_annotators(std::span<const Submission> submissions, const GoldCorpus& gold, bool include_training);

std::string format_redundancy_tsv(std::span<const RedundancyEstimate> curve);

}  // namespace crowdspan
