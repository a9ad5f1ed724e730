#pragma once

// Synthetic annotators. Each worker is a profile of independent error rates;
// the campaign driver runs a population of them through the real lifecycle
// so routing, voting, sweeps and blocking can be exercised without people.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crowdspan/campaign.hpp"
#include "crowdspan/rng.hpp"

namespace crowdspan {

struct Distribution {
  enum class Kind { kPoint, kUniform, kBeta, kTruncatedNormal };

  Kind kind = Kind::kPoint;
  // point: a; uniform: [low, high]; beta: (a, b); truncated normal: mean a,
  // stddev b, clipped by rejection to [low, high].
  double a = 0.0;
  double b = 0.0;
  double low = 0.0;
  double high = 0.0;

  static Distribution point(double value);
  static Distribution uniform(double low, double high);
  static Distribution beta(double a, double b);
  static Distribution truncated_normal(double mean, double stddev, double low, double high);

  /// Throws InvalidDistribution if parameters are bad or the support leaves
  /// [legal_low, legal_high].
  void validate(double legal_low, double legal_high) const;

  double sample(Rng& rng) const;
};

struct SimWorkerProfile {
  WorkerId worker_id;
  double p_miss = 0.0;      // chance a gold span is left out
  double p_spurious = 0.0;  // expected spurious spans per 100 tokens
  double p_boundary = 0.0;  // chance a kept span is shifted by one token
  std::uint64_t ability_seed = 0;
  double quiz_accuracy = 1.0;  // fraction of quiz questions answered right

  bool operator==(const SimWorkerProfile&) const = default;
};

struct PopulationParams {
  Distribution miss = Distribution::point(0.0);
  Distribution spurious = Distribution::point(0.0);
  Distribution boundary = Distribution::point(0.0);
  std::size_t n_workers = 1;
  // Workers whose p_miss exceeds this fail the quiz. Unset: everyone passes.
  std::optional<double> quiz_fail_miss_above;

  /// A mixed crowd whose average worker F on synthetic text is about 0.76.
  static PopulationParams heterogeneous(std::size_t n_workers);

  /// Throws InvalidDistribution or InvalidArgument.
  static PopulationParams load(const std::string& path);
};

/// Profiles "S0001", "S0002", ... drawn independently. Throws
/// InvalidDistribution, InvalidArgument (n_workers == 0).
std::vector<SimWorkerProfile> sample_population(const PopulationParams& params, std::uint64_t seed);

/// One simulated submission: gold spans dropped with p_miss, survivors
/// shifted by one token with p_boundary (discarded on collision), plus
/// Poisson-many spurious 1-3 token spans away from gold. Never overlapping.
std::vector<SpanKey> simulate_annotation(const SimWorkerProfile& profile, const Document& doc,
                                         std::span<const SpanKey> gold, Rng& rng);

struct SimCampaignOptions {
  std::size_t gold_interval = 10;
  // Appended after the sampled population, e.g. a deliberately bad worker.
  std::vector<SimWorkerProfile> extra_profiles;
  std::vector<bool> quiz_key = quiz_key_default();

  static std::vector<bool> quiz_key_default();
};

struct SimCampaignResult {
  std::vector<SimWorkerProfile> profiles;  // worker_id is the campaign id
  CampaignState state;
};

/// Registers every profile, runs quiz, survey and training, then hands out
/// tasks round-robin until each gold-feedback and regular document has
/// `redundancy` submissions or no worker can take more. Deterministic for a
/// fixed seed; all events go to `log`.
SimCampaignResult run_campaign(const GoldCorpus& corpus, const PopulationParams& params, std::size_t redundancy,
                               std::uint64_t seed, EventLog& log, const SimCampaignOptions& options = {});

struct SyntheticCorpusParams {
  std::size_t training_docs = 4;
  std::size_t gold_feedback_docs = 2;
  std::size_t regular_docs = 14;
  std::size_t body_tokens = 200;
  std::size_t title_tokens = 12;
  double mentions_per_100_tokens = 4.0;
};

/// Random-word abstracts with non-overlapping 1-4 token gold mentions,
/// already partitioned.
GoldCorpus make_synthetic_corpus(const SyntheticCorpusParams& params, std::uint64_t seed);

}  // namespace crowdspan
