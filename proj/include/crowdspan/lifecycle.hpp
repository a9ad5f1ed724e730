#pragma once

// Worker lifecycle: qualification quiz, survey, fixed training documents,
// then regular work with periodic gold-standard checks. A worker is blocked
// after three interspersed gold documents in a row scored below F = 0.5.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "crowdspan/aggregate.hpp"
#include "crowdspan/events.hpp"

namespace crowdspan {

enum class WorkerStage { kRegistered, kQualified, kRejected, kSurveyed, kTraining, kActive, kBlocked };

std::string_view to_string(WorkerStage stage);

struct Assignment {
  WorkerId worker_id;
  DocId doc_id;
  DocContext context = DocContext::kRegular;

  bool operator==(const Assignment&) const = default;
};

struct GoldScore {
  DocId doc_id;
  double f = 0.0;

  bool operator==(const GoldScore&) const = default;
};

struct WorkerRecord {
  WorkerId worker_id;
  WorkerStage stage = WorkerStage::kRegistered;
  std::size_t training_index = 0;  // meaningful in kTraining
  double quiz_score = 0.0;
  std::optional<SurveyResponse> survey;
  // Interspersed gold documents only; training documents never count.
  std::vector<GoldScore> gold_f_history;
  std::size_t consecutive_low_gold = 0;
  std::set<DocId> seen_docs;
  std::size_t training_submissions = 0;
  std::size_t post_training_assignments = 0;
  std::optional<Assignment> pending;

  /// "TRAINING(2)", "ACTIVE", ...
  std::string state_name() const;

  bool operator==(const WorkerRecord&) const = default;
};

inline constexpr double kBlockingFThreshold = 0.5;
inline constexpr std::size_t kBlockingRun = 3;

struct QuizResult {
  double score = 0.0;
  bool passed = false;
  std::size_t correct = 0;
  std::size_t total = 0;
};

/// Pass mark is 80% correct, compared in integers so 8/10 passes exactly.
/// Throws LengthMismatch.
QuizResult grade_quiz(const std::vector<bool>& answers, const std::vector<bool>& key);

/// Throws WrongState unless the worker is QUALIFIED, InvalidArgument when no
/// motivation is given.
WorkerRecord record_survey(WorkerRecord worker, SurveyResponse response);

/// Folds one interspersed gold score into the blocking window.
/// Throws WrongState unless the worker is ACTIVE.
WorkerRecord update_blocking(WorkerRecord worker, const DocId& doc_id, double gold_f);

enum class FeedbackKind { kGold, kPeer, kNone };

std::string_view to_string(FeedbackKind kind);

struct Feedback {
  FeedbackKind kind = FeedbackKind::kNone;
  std::vector<SpanKey> true_positives;
  std::vector<SpanKey> false_positives;
  std::vector<SpanKey> false_negatives;
  std::optional<double> f_score;
  std::map<std::string, std::vector<SpanKey>> peer_spans;  // alias -> spans

  bool operator==(const Feedback&) const = default;
};

/// Opaque alias for `viewed` as seen by `viewer`; stable across documents.
std::string peer_alias(std::uint64_t seed, const WorkerId& viewer, const WorkerId& viewed);

struct LifecycleConfig {
  std::size_t gold_interval = 10;
  std::size_t redundancy_target = 15;
  std::uint64_t seed = 0;
  std::vector<bool> quiz_key;
};

struct TokenEntry {
  EventKind kind = EventKind::kWorkerRegistered;
  WorkerId worker_id;
  DocId doc_id;
  std::size_t submission_index = 0;

  bool operator==(const TokenEntry&) const = default;
};

/// In-memory campaign state, rebuilt by folding events in sequence order.
class CampaignState {
 public:
  /// Applies one event. Throws Error (code describes the inconsistency) when
  /// the event is not legal in the current state; the state is unchanged then.
  void apply(const EventRecord& event, const GoldCorpus& corpus);

  const std::map<WorkerId, WorkerRecord>& workers() const { return workers_; }
  const WorkerRecord* find_worker(const WorkerId& id) const;
  const std::vector<Submission>& submissions() const { return submissions_; }
  /// Indices into submissions(), in submission order.
  const std::vector<std::size_t>& submissions_for(const DocId& doc_id) const;
  std::size_t submission_count(const DocId& doc_id) const;
  const TokenEntry* find_token(const std::string& token) const;
  std::uint64_t last_sequence() const { return last_sequence_; }
  std::size_t registrations() const { return workers_.size(); }

  /// Submissions of one worker, in order.
  std::vector<Submission> submissions_of(const WorkerId& worker_id) const;

  bool operator==(const CampaignState&) const = default;

 private:
  WorkerRecord& worker(const WorkerId& id);
  void remember_token(const std::optional<std::string>& token, TokenEntry entry);

  std::map<WorkerId, WorkerRecord> workers_;
  std::vector<Submission> submissions_;
  std::map<DocId, std::vector<std::size_t>> by_doc_;
  std::map<std::pair<WorkerId, DocId>, std::size_t> by_worker_doc_;
  std::map<std::string, TokenEntry> tokens_;
  std::uint64_t last_sequence_ = 0;
};

/// Feedback for a recorded submission, computed from the state: gold
/// comparison for training and gold-feedback documents, earlier workers'
/// spans under aliases for regular ones.
Feedback feedback_for(const CampaignState& state, const GoldCorpus& corpus, std::size_t submission_index,
                      std::uint64_t alias_seed);

}  // namespace crowdspan
