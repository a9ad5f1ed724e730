#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crowdspan/lifecycle.hpp"
#include "crowdspan/rng.hpp"
#include "crowdspan/store.hpp"

namespace crowdspan {

using Clock = std::function<std::int64_t()>;

/// Wall-clock milliseconds since the Unix epoch.
std::int64_t system_clock_ms();

struct QuizQuestion {
  std::string statement;
  bool expected = false;
  std::string explanation;
};

std::vector<QuizQuestion> default_quiz_bank();

/// JSON array of {"statement", "expected", "explanation"}. Throws
/// InvalidArgument.
std::vector<QuizQuestion> load_quiz_bank(const std::string& path);

std::vector<bool> quiz_key(std::span<const QuizQuestion> bank);

struct SubmitOutcome {
  Feedback feedback;
  WorkerRecord worker;
  // True when the request token matched an earlier submission and nothing
  // new was recorded.
  bool replayed = false;
};

/// Routes documents to workers and records everything they do.
///
/// Every mutation becomes an event: it is applied to the in-memory state,
/// then appended to the log, so the state always equals a replay of the log.
/// Not thread-safe; callers serialize access.
class Campaign {
 public:
  /// Replays whatever the log already holds. Throws CorruptLog.
  Campaign(const GoldCorpus& corpus, LifecycleConfig config, EventLog& log, Clock clock = system_clock_ms);

  WorkerId register_worker(const std::optional<std::string>& request_token = std::nullopt);

  /// Grades against the configured key; QUALIFIED on pass, REJECTED on fail.
  /// Throws UnknownWorker, WrongState, LengthMismatch.
  QuizResult take_quiz(const WorkerId& worker_id, const std::vector<bool>& answers,
                       const std::optional<std::string>& request_token = std::nullopt);

  WorkerRecord submit_survey(const WorkerId& worker_id, SurveyResponse response,
                             const std::optional<std::string>& request_token = std::nullopt);

  /// The worker's outstanding task, or a new assignment, or nullopt when no
  /// eligible document remains. Training documents come first in their fixed
  /// order; afterwards every gold_interval-th task is an unseen gold-feedback
  /// document and the rest go to the least-annotated unseen regular document
  /// below the redundancy target, ties broken by a seeded draw.
  /// Throws UnknownWorker, WrongState.
  std::optional<Assignment> next_task(const WorkerId& worker_id);

  /// Records the submission, then computes feedback from the stored state.
  /// Throws UnknownWorker, NotAssigned, AlreadySubmitted, OverlappingSpans,
  /// InvalidSpan.
  SubmitOutcome submit(const WorkerId& worker_id, const DocId& doc_id, std::vector<SpanKey> spans,
                       const std::optional<std::string>& request_token = std::nullopt);

  Feedback feedback_for(std::size_t submission_index) const;

  const CampaignState& state() const { return state_; }
  const GoldCorpus& corpus() const { return corpus_; }
  const LifecycleConfig& config() const { return config_; }
  const EventLog& log() const { return log_; }

  /// Throws UnknownWorker.
  const WorkerRecord& worker(const WorkerId& worker_id) const;

 private:
  void commit(EventPayload payload);
  std::optional<DocId> pick_least_loaded(const std::vector<DocId>& candidates, bool below_target_only,
                                         Rng& rng) const;

  const GoldCorpus& corpus_;
  LifecycleConfig config_;
  EventLog& log_;
  Clock clock_;
  CampaignState state_;
  std::vector<DocId> gold_docs_;
  std::vector<DocId> regular_docs_;
};

/// Workers paid for the survey and training: everyone with a recorded survey
/// or at least one submission.
std::int64_t count_trained_workers(const CampaignState& state);

/// Non-training documents with at least one submission.
std::int64_t count_paid_documents(const CampaignState& state, const GoldCorpus& corpus);

}  // namespace crowdspan
