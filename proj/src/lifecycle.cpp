#include "crowdspan/lifecycle.hpp"

#include <cstdio>

#include "crowdspan/errors.hpp"
#include "crowdspan/rng.hpp"

namespace crowdspan {

namespace {

[[noreturn]] void wrong_state(const WorkerRecord& w, std::string_view action) {
  throw Error(ErrorCode::kWrongState, "worker " + w.worker_id + " in state " + w.state_name() + " cannot " +
                                          std::string(action));
}

bool accepts_tasks(WorkerStage stage) {
  return stage == WorkerStage::kSurveyed || stage == WorkerStage::kTraining || stage == WorkerStage::kActive;
}

const std::optional<std::string>* token_of(const EventPayload& payload) {
  return std::visit(
      [](const auto& p) -> const std::optional<std::string>* {
        if constexpr (requires { p.request_token; }) {
          return &p.request_token;
        } else {
          return nullptr;
        }
      },
      payload);
}

}  // namespace

std::string_view to_string(WorkerStage stage) {
  switch (stage) {
    case WorkerStage::kRegistered: return "REGISTERED";
    case WorkerStage::kQualified: return "QUALIFIED";
    case WorkerStage::kRejected: return "REJECTED";
    case WorkerStage::kSurveyed: return "SURVEYED";
    case WorkerStage::kTraining: return "TRAINING";
    case WorkerStage::kActive: return "ACTIVE";
    case WorkerStage::kBlocked: return "BLOCKED";
  }
  return "UNKNOWN";
}

std::string WorkerRecord::state_name() const {
  if (stage == WorkerStage::kTraining) return "TRAINING(" + std::to_string(training_index) + ")";
  return std::string(to_string(stage));
}

QuizResult grade_quiz(const std::vector<bool>& answers, const std::vector<bool>& key) {
  if (key.empty() || answers.size() != key.size()) {
    throw Error(ErrorCode::kLengthMismatch, "quiz has " + std::to_string(key.size()) + " questions, got " +
                                                std::to_string(answers.size()) + " answers");
  }
  QuizResult r;
  r.total = key.size();
  for (std::size_t i = 0; i < key.size(); ++i) r.correct += answers[i] == key[i] ? 1 : 0;
  r.score = static_cast<double>(r.correct) / static_cast<double>(r.total);
  r.passed = 5 * r.correct >= 4 * r.total;
  return r;
}

WorkerRecord record_survey(WorkerRecord worker, SurveyResponse response) {
  if (worker.stage != WorkerStage::kQualified) wrong_state(worker, "take the survey");
  if (response.motivations.empty()) throw Error(ErrorCode::kInvalidArgument, "survey needs at least one motivation");
  worker.survey = std::move(response);
  worker.stage = WorkerStage::kSurveyed;
  return worker;
}

WorkerRecord update_blocking(WorkerRecord worker, const DocId& doc_id, double gold_f) {
  if (worker.stage != WorkerStage::kActive) wrong_state(worker, "be scored on interspersed gold");
  worker.gold_f_history.push_back({doc_id, gold_f});
  if (gold_f < kBlockingFThreshold) {
    ++worker.consecutive_low_gold;
  } else {
    worker.consecutive_low_gold = 0;
  }
  if (worker.consecutive_low_gold >= kBlockingRun) {
    worker.stage = WorkerStage::kBlocked;
    worker.pending.reset();
  }
  return worker;
}

std::string_view to_string(FeedbackKind kind) {
  switch (kind) {
    case FeedbackKind::kGold: return "GOLD";
    case FeedbackKind::kPeer: return "PEER";
    case FeedbackKind::kNone: return "NONE";
  }
  return "NONE";
}

std::string peer_alias(std::uint64_t seed, const WorkerId& viewer, const WorkerId& viewed) {
  const std::uint64_t h = derive_seed({seed, hash_string(viewer), hash_string(viewed)});
  char buf[32];
  std::snprintf(buf, sizeof(buf), "peer-%08llx", static_cast<unsigned long long>(h >> 32));
  return buf;
}

const WorkerRecord* CampaignState::find_worker(const WorkerId& id) const {
  auto it = workers_.find(id);
  return it == workers_.end() ? nullptr : &it->second;
}

WorkerRecord& CampaignState::worker(const WorkerId& id) {
  auto it = workers_.find(id);
  if (it == workers_.end()) throw Error(ErrorCode::kUnknownWorker, "unknown worker " + id);
  return it->second;
}

const std::vector<std::size_t>& CampaignState::submissions_for(const DocId& doc_id) const {
  static const std::vector<std::size_t> kEmpty;
  auto it = by_doc_.find(doc_id);
  return it == by_doc_.end() ? kEmpty : it->second;
}

std::size_t CampaignState::submission_count(const DocId& doc_id) const { return submissions_for(doc_id).size(); }

const TokenEntry* CampaignState::find_token(const std::string& token) const {
  auto it = tokens_.find(token);
  return it == tokens_.end() ? nullptr : &it->second;
}

std::vector<Submission> CampaignState::submissions_of(const WorkerId& worker_id) const {
  std::vector<Submission> out;
  for (const Submission& s : submissions_) {
    if (s.worker_id == worker_id) out.push_back(s);
  }
  return out;
}

void CampaignState::remember_token(const std::optional<std::string>& token, TokenEntry entry) {
  if (!token) return;
  if (tokens_.count(*token)) throw Error(ErrorCode::kInvalidArgument, "request token reused: " + *token);
  tokens_.emplace(*token, std::move(entry));
}

void CampaignState::apply(const EventRecord& event, const GoldCorpus& corpus) {
  if (event.sequence != last_sequence_ + 1) {
    throw Error(ErrorCode::kCorruptLog, "expected sequence " + std::to_string(last_sequence_ + 1) + ", got " +
                                            std::to_string(event.sequence));
  }
  if (const auto* token = token_of(event.payload); token && *token && tokens_.count(**token)) {
    throw Error(ErrorCode::kInvalidArgument, "request token reused: " + **token);
  }

  // Each branch validates before mutating so a rejected event leaves no trace.
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, WorkerRegistered>) {
          if (workers_.count(p.worker_id)) throw Error(ErrorCode::kDuplicateWorker, "worker " + p.worker_id + " exists");
          WorkerRecord w;
          w.worker_id = p.worker_id;
          workers_.emplace(p.worker_id, std::move(w));
          remember_token(p.request_token, {EventKind::kWorkerRegistered, p.worker_id, {}, 0});
        } else if constexpr (std::is_same_v<T, QuizGraded>) {
          WorkerRecord& w = worker(p.worker_id);
          if (w.stage != WorkerStage::kRegistered) wrong_state(w, "take the quiz");
          if (p.total == 0 || p.correct > p.total) throw Error(ErrorCode::kInvalidArgument, "bad quiz counts");
          w.quiz_score = static_cast<double>(p.correct) / static_cast<double>(p.total);
          w.stage = p.passed ? WorkerStage::kQualified : WorkerStage::kRejected;
          remember_token(p.request_token, {EventKind::kQuizGraded, p.worker_id, {}, 0});
        } else if constexpr (std::is_same_v<T, SurveyRecorded>) {
          WorkerRecord& w = worker(p.worker_id);
          w = record_survey(w, p.response);
          remember_token(p.request_token, {EventKind::kSurveyRecorded, p.worker_id, {}, 0});
        } else if constexpr (std::is_same_v<T, Assigned>) {
          WorkerRecord& w = worker(p.worker_id);
          if (!accepts_tasks(w.stage)) wrong_state(w, "receive tasks");
          if (w.pending) throw Error(ErrorCode::kWrongState, "worker " + w.worker_id + " already holds a task");
          if (w.seen_docs.count(p.doc_id)) {
            throw Error(ErrorCode::kAlreadySubmitted, "worker " + w.worker_id + " already saw " + p.doc_id);
          }
          if (corpus.context(p.doc_id) != p.context) {
            throw Error(ErrorCode::kInvalidArgument, "assignment context does not match document " + p.doc_id);
          }
          const auto& training = corpus.training_docs();
          if (p.context == DocContext::kTraining) {
            const std::size_t index = w.stage == WorkerStage::kSurveyed ? 0 : w.training_index;
            if (w.stage == WorkerStage::kActive || index >= training.size() || training[index] != p.doc_id) {
              throw Error(ErrorCode::kInvalidArgument, "training document out of order for " + w.worker_id);
            }
            w.stage = WorkerStage::kTraining;
            w.training_index = index;
          } else {
            if (w.stage == WorkerStage::kTraining || (w.stage == WorkerStage::kSurveyed && !training.empty())) {
              wrong_state(w, "receive a non-training document");
            }
            w.stage = WorkerStage::kActive;
            ++w.post_training_assignments;
          }
          w.seen_docs.insert(p.doc_id);
          w.pending = Assignment{p.worker_id, p.doc_id, p.context};
        } else if constexpr (std::is_same_v<T, Submitted>) {
          WorkerRecord& w = worker(p.worker_id);
          const auto key = std::make_pair(p.worker_id, p.doc_id);
          if (by_worker_doc_.count(key)) {
            throw Error(ErrorCode::kAlreadySubmitted, p.worker_id + " already submitted " + p.doc_id);
          }
          const Document& doc = corpus.document(p.doc_id);
          std::vector<SpanKey> spans = normalize_spans(p.spans);
          for (const SpanKey& s : spans) {
            if (s.start >= s.end || s.end > doc.full_text().size()) {
              throw Error(ErrorCode::kInvalidSpan, "span outside document " + p.doc_id);
            }
          }
          if (!non_overlapping(spans)) throw Error(ErrorCode::kOverlappingSpans, "overlapping spans in " + p.doc_id);
          if (!p.imported) {
            if (!w.pending || w.pending->doc_id != p.doc_id) {
              throw Error(ErrorCode::kNotAssigned, p.doc_id + " is not assigned to " + p.worker_id);
            }
            if (w.pending->context != p.context) {
              throw Error(ErrorCode::kInvalidArgument, "submission context differs from its assignment");
            }
          }
          std::optional<double> gold_f;
          if (!p.imported && p.context == DocContext::kGoldFeedback && w.stage == WorkerStage::kActive) {
            MatchResult r = match_strict(corpus.gold_keys(p.doc_id), spans);
            gold_f = score(r.true_positives.size(), r.false_positives.size(), r.false_negatives.size()).f1;
          }

          const std::size_t index = submissions_.size();
          remember_token(p.request_token, {EventKind::kSubmitted, p.worker_id, p.doc_id, index});
          submissions_.push_back(Submission{p.worker_id, p.doc_id, std::move(spans), event.at, p.context});
          by_doc_[p.doc_id].push_back(index);
          by_worker_doc_.emplace(key, index);
          w.seen_docs.insert(p.doc_id);
          if (p.imported) return;
          w.pending.reset();
          if (p.context == DocContext::kTraining) {
            ++w.training_submissions;
            ++w.training_index;
            if (w.training_index >= corpus.training_docs().size()) {
              w.stage = WorkerStage::kActive;
              w.training_index = 0;
            }
          } else if (gold_f) {
            w = update_blocking(std::move(w), p.doc_id, *gold_f);
          }
        } else if constexpr (std::is_same_v<T, Blocked>) {
          const WorkerRecord& w = worker(p.worker_id);
          if (w.stage != WorkerStage::kBlocked) {
            throw Error(ErrorCode::kWrongState, "BLOCKED event for " + w.worker_id + " who is " + w.state_name());
          }
        }
      },
      event.payload);
  last_sequence_ = event.sequence;
}

Feedback feedback_for(const CampaignState& state, const GoldCorpus& corpus, std::size_t submission_index,
                      std::uint64_t alias_seed) {
  const Submission& sub = state.submissions().at(submission_index);
  Feedback fb;
  if (sub.context == DocContext::kTraining || sub.context == DocContext::kGoldFeedback) {
    MatchResult r = match_strict(corpus.gold_keys(sub.doc_id), sub.spans);
    fb.kind = FeedbackKind::kGold;
    fb.f_score = score(r.true_positives.size(), r.false_positives.size(), r.false_negatives.size()).f1;
    fb.true_positives = std::move(r.true_positives);
    fb.false_positives = std::move(r.false_positives);
    fb.false_negatives = std::move(r.false_negatives);
    return fb;
  }
  for (std::size_t index : state.submissions_for(sub.doc_id)) {
    if (index >= submission_index) break;
    const Submission& prior = state.submissions()[index];
    if (prior.worker_id == sub.worker_id) continue;
    fb.peer_spans.emplace(peer_alias(alias_seed, sub.worker_id, prior.worker_id), prior.spans);
  }
  fb.kind = fb.peer_spans.empty() ? FeedbackKind::kNone : FeedbackKind::kPeer;
  return fb;
}

}  // namespace crowdspan
