#include "crowdspan/campaign.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <limits>

#include "crowdspan/errors.hpp"
#include "crowdspan/rng.hpp"
#include "json.hpp"

namespace crowdspan {

std::int64_t system_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::vector<QuizQuestion> default_quiz_bank() {
  return {
      {"In 'patients with cystic fibrosis were enrolled', the words 'cystic fibrosis' should be highlighted.", true,
       "Named diseases are always highlighted."},
      {"When a disease name is followed by its abbreviation in parentheses, only the full name is highlighted.",
       false, "Abbreviations of diseases are highlighted as separate mentions."},
      {"In 'a history of early onset Alzheimer disease', highlighting only 'disease' is enough.", false,
       "Take the longest span that still names the specific disease."},
      {"In 'carriers of the CFTR gene', 'CFTR' should be highlighted.", false,
       "Gene names are never highlighted, even when they resemble a disease name."},
      {"Symptoms such as 'chronic fatigue' are highlighted.", true, "Symptoms of disease count as mentions."},
      {"If a disease is mentioned three times in an abstract, all three occurrences are highlighted.", true,
       "Every occurrence is a separate mention."},
      {"In 'lung and colon cancer', the whole phrase is highlighted as one span.", true,
       "Conjunctions of diseases form a single long span."},
      {"Treatments such as 'radiation therapy' are highlighted.", false, "Only diseases and symptoms are marked."},
      {"In 'an autosomal dominant disorder', the phrase 'autosomal dominant disorder' is highlighted.", true,
       "Disease groups are highlighted too."},
      {"Words such as 'patients' that follow a disease name are always included in the highlight.", false,
       "Stop the span at the end of the disease mention."},
  };
}

std::vector<QuizQuestion> load_quiz_bank(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open quiz bank " + path);
  try {
    const auto j = nlohmann::json::parse(in);
    std::vector<QuizQuestion> bank;
    for (const auto& q : j) {
      bank.push_back({q.at("statement").get<std::string>(), q.at("expected").get<bool>(),
                      q.value("explanation", std::string())});
    }
    if (bank.empty()) throw Error(ErrorCode::kInvalidArgument, "empty quiz bank");
    return bank;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, "quiz bank " + path + ": " + e.what());
  }
}

std::vector<bool> quiz_key(std::span<const QuizQuestion> bank) {
  std::vector<bool> key;
  for (const auto& q : bank) key.push_back(q.expected);
  return key;
}

Campaign::Campaign(const GoldCorpus& corpus, LifecycleConfig config, EventLog& log, Clock clock)
    : corpus_(corpus), config_(std::move(config)), log_(log), clock_(std::move(clock)) {
  if (config_.gold_interval == 0) throw Error(ErrorCode::kInvalidArgument, "gold interval must be at least 1");
  if (config_.redundancy_target == 0) throw Error(ErrorCode::kInvalidArgument, "redundancy target must be at least 1");
  state_ = replay(log_.events(), corpus_);
  gold_docs_ = corpus_.docs_in_context(DocContext::kGoldFeedback);
  regular_docs_ = corpus_.docs_in_context(DocContext::kRegular);
}

void Campaign::commit(EventPayload payload) {
  EventRecord event{log_.last_sequence() + 1, clock_(), std::move(payload)};
  state_.apply(event, corpus_);
  try {
    log_.append(event);
  } catch (...) {
    state_ = replay(log_.events(), corpus_);
    throw;
  }
}

const WorkerRecord& Campaign::worker(const WorkerId& worker_id) const {
  const WorkerRecord* w = state_.find_worker(worker_id);
  if (w == nullptr) throw Error(ErrorCode::kUnknownWorker, "unknown worker " + worker_id);
  return *w;
}

WorkerId Campaign::register_worker(const std::optional<std::string>& request_token) {
  if (request_token) {
    if (const TokenEntry* t = state_.find_token(*request_token)) {
      if (t->kind != EventKind::kWorkerRegistered) {
        throw Error(ErrorCode::kInvalidArgument, "request token reused for a different call");
      }
      return t->worker_id;
    }
  }
  std::size_t n = state_.registrations() + 1;
  WorkerId id;
  do {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "W%04zu", n++);
    id = buf;
  } while (state_.find_worker(id) != nullptr);
  commit(WorkerRegistered{id, request_token});
  return id;
}

QuizResult Campaign::take_quiz(const WorkerId& worker_id, const std::vector<bool>& answers,
                               const std::optional<std::string>& request_token) {
  if (request_token) {
    if (const TokenEntry* t = state_.find_token(*request_token)) {
      if (t->kind != EventKind::kQuizGraded || t->worker_id != worker_id) {
        throw Error(ErrorCode::kInvalidArgument, "request token reused for a different call");
      }
      const WorkerRecord& w = worker(worker_id);
      QuizResult r;
      r.score = w.quiz_score;
      r.passed = w.stage != WorkerStage::kRejected;
      return r;
    }
  }
  const WorkerRecord& w = worker(worker_id);
  if (w.stage != WorkerStage::kRegistered) {
    throw Error(ErrorCode::kWrongState, "worker " + worker_id + " in state " + w.state_name() + " cannot take the quiz");
  }
  if (config_.quiz_key.empty()) throw Error(ErrorCode::kInvalidArgument, "no quiz configured");
  const QuizResult r = grade_quiz(answers, config_.quiz_key);
  commit(QuizGraded{worker_id, r.correct, r.total, r.passed, request_token});
  return r;
}

WorkerRecord Campaign::submit_survey(const WorkerId& worker_id, SurveyResponse response,
                                     const std::optional<std::string>& request_token) {
  if (request_token) {
    if (const TokenEntry* t = state_.find_token(*request_token)) {
      if (t->kind != EventKind::kSurveyRecorded || t->worker_id != worker_id) {
        throw Error(ErrorCode::kInvalidArgument, "request token reused for a different call");
      }
      return worker(worker_id);
    }
  }
  record_survey(worker(worker_id), response);  // validation only
  commit(SurveyRecorded{worker_id, std::move(response), request_token});
  return worker(worker_id);
}

std::optional<DocId> Campaign::pick_least_loaded(const std::vector<DocId>& candidates, bool below_target_only,
                                                 Rng& rng) const {
  std::size_t best = std::numeric_limits<std::size_t>::max();
  std::vector<const DocId*> ties;
  for (const DocId& id : candidates) {
    const std::size_t count = state_.submission_count(id);
    if (below_target_only && count >= config_.redundancy_target) continue;
    if (count < best) {
      best = count;
      ties.clear();
    }
    if (count == best) ties.push_back(&id);
  }
  if (ties.empty()) return std::nullopt;
  return *ties[rng.uniform_index(ties.size())];
}

std::optional<Assignment> Campaign::next_task(const WorkerId& worker_id) {
  const WorkerRecord& w = worker(worker_id);
  if (w.stage != WorkerStage::kSurveyed && w.stage != WorkerStage::kTraining && w.stage != WorkerStage::kActive) {
    throw Error(ErrorCode::kWrongState, "worker " + worker_id + " in state " + w.state_name() + " cannot work");
  }
  if (w.pending) return w.pending;

  const auto& training = corpus_.training_docs();
  if (w.stage != WorkerStage::kActive) {
    const std::size_t index = w.stage == WorkerStage::kSurveyed ? 0 : w.training_index;
    if (index < training.size()) {
      commit(Assigned{worker_id, training[index], DocContext::kTraining});
      return worker(worker_id).pending;
    }
  }

  const std::size_t task_number = w.post_training_assignments + 1;
  Rng rng(derive_seed({config_.seed, hash_string(worker_id), static_cast<std::uint64_t>(task_number)}));
  auto unseen = [&](const std::vector<DocId>& pool) {
    std::vector<DocId> out;
    for (const DocId& id : pool) {
      if (!w.seen_docs.count(id)) out.push_back(id);
    }
    return out;
  };

  std::optional<Assignment> chosen;
  const std::vector<DocId> unseen_gold = unseen(gold_docs_);
  if (task_number % config_.gold_interval == 0 && !unseen_gold.empty()) {
    // Gold checks are quality control: they go out even when every unseen
    // gold document already reached the redundancy target.
    auto doc = pick_least_loaded(unseen_gold, true, rng);
    if (!doc) doc = pick_least_loaded(unseen_gold, false, rng);
    chosen = Assignment{worker_id, *doc, DocContext::kGoldFeedback};
  } else if (auto doc = pick_least_loaded(unseen(regular_docs_), true, rng)) {
    chosen = Assignment{worker_id, *doc, DocContext::kRegular};
  } else if (auto gold_doc = pick_least_loaded(unseen_gold, true, rng)) {
    chosen = Assignment{worker_id, *gold_doc, DocContext::kGoldFeedback};
  }
  if (!chosen) return std::nullopt;
  commit(Assigned{chosen->worker_id, chosen->doc_id, chosen->context});
  return chosen;
}

SubmitOutcome Campaign::submit(const WorkerId& worker_id, const DocId& doc_id, std::vector<SpanKey> spans,
                               const std::optional<std::string>& request_token) {
  if (request_token) {
    if (const TokenEntry* t = state_.find_token(*request_token)) {
      if (t->kind != EventKind::kSubmitted || t->worker_id != worker_id || t->doc_id != doc_id) {
        throw Error(ErrorCode::kInvalidArgument, "request token reused for a different call");
      }
      return {feedback_for(t->submission_index), worker(worker_id), true};
    }
  }
  const WorkerRecord& w = worker(worker_id);
  if (!w.pending || w.pending->doc_id != doc_id) {
    for (std::size_t index : state_.submissions_for(doc_id)) {
      if (state_.submissions()[index].worker_id == worker_id) {
        throw Error(ErrorCode::kAlreadySubmitted, worker_id + " already submitted " + doc_id);
      }
    }
    throw Error(ErrorCode::kNotAssigned, doc_id + " is not assigned to " + worker_id);
  }
  spans = normalize_spans(std::move(spans));
  if (!non_overlapping(spans)) throw Error(ErrorCode::kOverlappingSpans, "submission for " + doc_id + " overlaps itself");

  commit(Submitted{worker_id, doc_id, std::move(spans), w.pending->context, request_token, false});
  const std::size_t index = state_.submissions().size() - 1;
  const WorkerRecord& after = worker(worker_id);
  if (after.stage == WorkerStage::kBlocked) commit(Blocked{worker_id, after.consecutive_low_gold});
  return {feedback_for(index), worker(worker_id), false};
}

Feedback Campaign::feedback_for(std::size_t submission_index) const {
  return crowdspan::feedback_for(state_, corpus_, submission_index, config_.seed);
}

std::int64_t count_trained_workers(const CampaignState& state) {
  std::set<WorkerId> submitters;
  for (const Submission& s : state.submissions()) submitters.insert(s.worker_id);
  std::int64_t n = 0;
  for (const auto& [id, w] : state.workers()) {
    if (w.survey || submitters.count(id)) ++n;
  }
  return n;
}

std::int64_t count_paid_documents(const CampaignState& state, const GoldCorpus& corpus) {
  std::int64_t n = 0;
  for (const DocId& id : corpus.doc_ids()) {
    if (corpus.context(id) != DocContext::kTraining && state.submission_count(id) > 0) ++n;
  }
  return n;
}

}  // namespace crowdspan
