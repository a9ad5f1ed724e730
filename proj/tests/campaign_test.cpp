#include <gtest/gtest.h>

#include <fstream>
#include <functional>
#include <set>

#include "crowdspan/campaign.hpp"
#include "crowdspan/errors.hpp"
#include "support.hpp"

namespace crowdspan {
namespace {

using testing::make_active_worker;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kInvalidArgument;
}

class CampaignTest : public ::testing::Test {
 protected:
  explicit CampaignTest(std::size_t gold_interval = 10, std::size_t redundancy = 15,
                        GoldCorpus c = testing::lifecycle_corpus())
      : corpus(std::move(c)), campaign(corpus, testing::default_config(gold_interval, redundancy), log,
                                        testing::fake_clock()) {}

  GoldCorpus corpus;
  EventLog log;
  Campaign campaign;
};

TEST_F(CampaignTest, RegistrationIdsAreSequential) {
  EXPECT_EQ(campaign.register_worker(), "W0001");
  EXPECT_EQ(campaign.register_worker(), "W0002");
  EXPECT_EQ(campaign.worker("W0002").stage, WorkerStage::kRegistered);
  EXPECT_EQ(code_of([&] { campaign.worker("W0099"); }), ErrorCode::kUnknownWorker);
}

TEST_F(CampaignTest, QuizGateWithDefaultBank) {
  const auto key = campaign.config().quiz_key;
  ASSERT_EQ(key.size(), 10u);
  const WorkerId pass = campaign.register_worker();
  const WorkerId fail = campaign.register_worker();
  std::vector<bool> eight = key, seven = key;
  eight[0] = !eight[0];
  eight[1] = !eight[1];
  seven[0] = !seven[0];
  seven[1] = !seven[1];
  seven[2] = !seven[2];
  EXPECT_TRUE(campaign.take_quiz(pass, eight).passed);
  EXPECT_FALSE(campaign.take_quiz(fail, seven).passed);
  EXPECT_EQ(campaign.worker(pass).stage, WorkerStage::kQualified);
  EXPECT_EQ(campaign.worker(fail).stage, WorkerStage::kRejected);
  EXPECT_EQ(code_of([&] { campaign.take_quiz(pass, key); }), ErrorCode::kWrongState);
  EXPECT_EQ(code_of([&] { campaign.submit_survey(fail, testing::sample_survey()); }), ErrorCode::kWrongState);
  EXPECT_EQ(code_of([&] { campaign.next_task(fail); }), ErrorCode::kWrongState);
  const WorkerId short_answers = campaign.register_worker();
  EXPECT_EQ(code_of([&] { campaign.take_quiz(short_answers, {true}); }), ErrorCode::kLengthMismatch);
  EXPECT_EQ(campaign.worker(short_answers).stage, WorkerStage::kRegistered);
}

TEST_F(CampaignTest, NoTasksBeforeTheSurvey) {
  const WorkerId w = campaign.register_worker();
  EXPECT_EQ(code_of([&] { campaign.next_task(w); }), ErrorCode::kWrongState);
  campaign.take_quiz(w, campaign.config().quiz_key);
  EXPECT_EQ(code_of([&] { campaign.next_task(w); }), ErrorCode::kWrongState);
}

TEST_F(CampaignTest, TrainingDocumentsComeInFixedOrder) {
  for (int n = 0; n < 3; ++n) {
    const WorkerId w = campaign.register_worker();
    campaign.take_quiz(w, campaign.config().quiz_key);
    campaign.submit_survey(w, testing::sample_survey());
    for (std::size_t i = 0; i < 4; ++i) {
      const auto task = campaign.next_task(w);
      ASSERT_TRUE(task);
      EXPECT_EQ(task->doc_id, corpus.training_docs()[i]);
      EXPECT_EQ(task->context, DocContext::kTraining);
      EXPECT_EQ(campaign.worker(w).state_name(), "TRAINING(" + std::to_string(i) + ")");
      // Asking again returns the same outstanding task.
      EXPECT_EQ(campaign.next_task(w), task);
      const SubmitOutcome out = campaign.submit(w, task->doc_id, {});
      EXPECT_EQ(out.feedback.kind, FeedbackKind::kGold);
      EXPECT_EQ(out.feedback.f_score, 0.0);
    }
    EXPECT_EQ(campaign.worker(w).stage, WorkerStage::kActive);
    EXPECT_EQ(campaign.worker(w).training_submissions, 4u);
    // Training F of zero never counts toward blocking.
    EXPECT_EQ(campaign.worker(w).consecutive_low_gold, 0u);
  }
}

TEST_F(CampaignTest, GoldFillsInWhenRegularDocumentsRunOut) {
  const WorkerId w = make_active_worker(campaign);
  for (std::size_t task_no = 1; task_no <= 7; ++task_no) {
    const auto task = campaign.next_task(w);
    ASSERT_TRUE(task) << task_no;
    // Only six regular documents exist; the seventh falls back to gold.
    EXPECT_EQ(task->context, task_no <= 6 ? DocContext::kRegular : DocContext::kGoldFeedback) << task_no;
    campaign.submit(w, task->doc_id, corpus.gold_keys(task->doc_id));
  }
}

class GoldRoutingTest : public CampaignTest {
 protected:
  GoldRoutingTest() : CampaignTest(10, 15, testing::lifecycle_corpus(4, 4, 40)) {}
};

TEST_F(GoldRoutingTest, ExactlyOneGoldPerTenWhileGoldRemains) {
  const WorkerId w = make_active_worker(campaign);
  std::size_t gold_seen = 0;
  for (std::size_t task_no = 1; task_no <= 40; ++task_no) {
    const auto task = campaign.next_task(w);
    ASSERT_TRUE(task);
    const bool is_gold = task->context == DocContext::kGoldFeedback;
    EXPECT_EQ(is_gold, task_no % 10 == 0) << task_no;
    gold_seen += is_gold;
    campaign.submit(w, task->doc_id, corpus.gold_keys(task->doc_id));
    if (task_no % 10 == 0) EXPECT_EQ(gold_seen, task_no / 10);
  }
  EXPECT_EQ(campaign.worker(w).gold_f_history.size(), 4u);
}

TEST_F(CampaignTest, NeverTheSameDocumentTwiceAndNoTaskAtTheEnd) {
  const WorkerId w = make_active_worker(campaign);
  std::set<DocId> seen(corpus.training_docs().begin(), corpus.training_docs().end());
  std::size_t tasks = 0;
  while (auto task = campaign.next_task(w)) {
    EXPECT_TRUE(seen.insert(task->doc_id).second) << task->doc_id;
    campaign.submit(w, task->doc_id, corpus.gold_keys(task->doc_id));
    ++tasks;
  }
  EXPECT_EQ(seen.size(), corpus.size());
  EXPECT_EQ(tasks, corpus.size() - 4);
  EXPECT_FALSE(campaign.next_task(w));
}

class RedundancyTargetTest : public CampaignTest {
 protected:
  RedundancyTargetTest() : CampaignTest(1000, 2, testing::lifecycle_corpus(4, 0, 3)) {}
};

TEST_F(RedundancyTargetTest, RegularDocumentsStopAtTheTarget) {
  std::vector<WorkerId> workers;
  for (int i = 0; i < 4; ++i) workers.push_back(make_active_worker(campaign));
  std::size_t done = 0;
  for (const WorkerId& w : workers) {
    while (auto task = campaign.next_task(w)) {
      campaign.submit(w, task->doc_id, {});
      ++done;
    }
  }
  EXPECT_EQ(done, 6u);
  for (const char* id : {"r0", "r1", "r2"}) EXPECT_EQ(campaign.state().submission_count(id), 2u);
}

TEST_F(CampaignTest, LeastAnnotatedDocumentFirst) {
  const WorkerId a = make_active_worker(campaign);
  const WorkerId b = make_active_worker(campaign);
  const auto first = campaign.next_task(a);
  campaign.submit(a, first->doc_id, {});
  const auto second = campaign.next_task(b);
  EXPECT_NE(second->doc_id, first->doc_id);
}

TEST_F(CampaignTest, SubmitErrors) {
  const WorkerId w = make_active_worker(campaign);
  EXPECT_EQ(code_of([&] { campaign.submit(w, "r0", {}); }), ErrorCode::kNotAssigned);
  EXPECT_EQ(code_of([&] { campaign.submit(w, corpus.training_docs()[0], {}); }), ErrorCode::kAlreadySubmitted);
  EXPECT_EQ(code_of([&] { campaign.submit("nobody", "r0", {}); }), ErrorCode::kUnknownWorker);
  const auto task = campaign.next_task(w);
  EXPECT_EQ(code_of([&] { campaign.submit(w, task->doc_id, {{0, 5}, {2, 8}}); }), ErrorCode::kOverlappingSpans);
  // The failed attempt left the assignment in place.
  EXPECT_EQ(campaign.next_task(w), task);
  EXPECT_NO_THROW(campaign.submit(w, task->doc_id, {}));
}

TEST_F(CampaignTest, SubmissionIsStoredBeforeFeedback) {
  const WorkerId a = make_active_worker(campaign);
  const auto task = campaign.next_task(a);
  const std::size_t before = log.events().size();
  const SubmitOutcome out = campaign.submit(a, task->doc_id, {{9, 13}});
  ASSERT_EQ(log.events().size(), before + 1);
  EXPECT_EQ(log.events().back().kind(), EventKind::kSubmitted);
  EXPECT_EQ(out.feedback, campaign.feedback_for(campaign.state().submissions().size() - 1));
  EXPECT_EQ(out.feedback.kind, FeedbackKind::kNone);
}

class PeerTest : public CampaignTest {
 protected:
  PeerTest() : CampaignTest(1000, 15, testing::lifecycle_corpus(4, 0, 1)) {}
};

TEST_F(PeerTest, PeersAppearUnderAliasesOnly) {
  std::vector<WorkerId> ws;
  for (int i = 0; i < 3; ++i) ws.push_back(make_active_worker(campaign));
  std::vector<SubmitOutcome> outs;
  for (const WorkerId& w : ws) {
    const auto task = campaign.next_task(w);
    ASSERT_EQ(task->doc_id, "r0");
    outs.push_back(campaign.submit(w, "r0", {{9, 13}}));
  }
  EXPECT_EQ(outs[0].feedback.kind, FeedbackKind::kNone);
  EXPECT_EQ(outs[1].feedback.peer_spans.size(), 1u);
  ASSERT_EQ(outs[2].feedback.kind, FeedbackKind::kPeer);
  EXPECT_EQ(outs[2].feedback.peer_spans.size(), campaign.state().submission_count("r0") - 1);
  for (const SubmitOutcome& o : outs) {
    for (const auto& [alias, spans] : o.feedback.peer_spans) {
      for (const WorkerId& w : ws) EXPECT_EQ(alias.find(w), std::string::npos);
    }
  }
}

TEST(CampaignBlocking, BlockedAfterThreeLowGoldScores) {
  EventLog log2;
  const GoldCorpus c = testing::lifecycle_corpus(4, 4, 10);
  Campaign camp(c, testing::default_config(2, 15), log2, testing::fake_clock());
  const WorkerId w = make_active_worker(camp);
  std::size_t golds = 0;
  while (camp.worker(w).stage == WorkerStage::kActive) {
    const auto task = camp.next_task(w);
    ASSERT_TRUE(task);
    const bool gold = task->context == DocContext::kGoldFeedback;
    // Perfect on regular documents, empty on gold.
    const SubmitOutcome out = camp.submit(w, task->doc_id, gold ? std::vector<SpanKey>{} : c.gold_keys(task->doc_id));
    if (gold) {
      ++golds;
      EXPECT_EQ(out.feedback.f_score, 0.0);
    }
  }
  EXPECT_EQ(golds, 3u);
  EXPECT_EQ(camp.worker(w).post_training_assignments, 6u);
  EXPECT_EQ(log2.events().back().kind(), EventKind::kBlocked);
  EXPECT_EQ(code_of([&] { camp.next_task(w); }), ErrorCode::kWrongState);
}

TEST_F(CampaignTest, RequestTokensMakeCallsIdempotent) {
  const WorkerId w = campaign.register_worker(std::string("reg-1"));
  EXPECT_EQ(campaign.register_worker(std::string("reg-1")), w);
  EXPECT_EQ(campaign.state().registrations(), 1u);

  campaign.take_quiz(w, campaign.config().quiz_key, std::string("quiz-1"));
  const QuizResult again = campaign.take_quiz(w, {}, std::string("quiz-1"));
  EXPECT_TRUE(again.passed);
  EXPECT_EQ(again.score, 1.0);

  campaign.submit_survey(w, testing::sample_survey(), std::string("survey-1"));
  EXPECT_EQ(campaign.submit_survey(w, testing::sample_survey(), std::string("survey-1")).stage,
            WorkerStage::kSurveyed);

  const auto task = campaign.next_task(w);
  const SubmitOutcome first = campaign.submit(w, task->doc_id, {}, std::string("sub-1"));
  const std::size_t events = log.events().size();
  const SubmitOutcome replayed = campaign.submit(w, task->doc_id, {{0, 5}}, std::string("sub-1"));
  EXPECT_TRUE(replayed.replayed);
  EXPECT_FALSE(first.replayed);
  EXPECT_EQ(replayed.feedback, first.feedback);
  EXPECT_EQ(log.events().size(), events);

  EXPECT_EQ(code_of([&] { campaign.register_worker(std::string("sub-1")); }), ErrorCode::kInvalidArgument);
}

TEST(CampaignReplay, ReopeningTheLogRestoresState) {
  testing::TempDir dir;
  const GoldCorpus corpus = testing::lifecycle_corpus();
  const auto path = dir.file("log.jsonl");
  CampaignState saved;
  std::optional<Assignment> outstanding;
  WorkerId w;
  {
    EventLog log = EventLog::open(path);
    Campaign c(corpus, testing::default_config(), log, testing::fake_clock());
    w = make_active_worker(c);
    make_active_worker(c);
    outstanding = c.next_task(w);
    saved = c.state();
  }
  EventLog log = EventLog::open(path);
  Campaign c(corpus, testing::default_config(), log, testing::fake_clock());
  EXPECT_EQ(c.state(), saved);
  EXPECT_EQ(c.next_task(w), outstanding);
  EXPECT_EQ(c.register_worker(), "W0003");
}

TEST(CampaignConfig, ZeroIntervalOrTargetIsInvalid) {
  const GoldCorpus corpus = testing::lifecycle_corpus();
  EventLog log;
  EXPECT_THROW(Campaign(corpus, testing::default_config(0, 15), log), Error);
  EXPECT_THROW(Campaign(corpus, testing::default_config(10, 0), log), Error);
}

TEST(QuizBank, DefaultAndFile) {
  const auto bank = default_quiz_bank();
  ASSERT_EQ(bank.size(), 10u);
  for (const QuizQuestion& q : bank) EXPECT_FALSE(q.explanation.empty());
  testing::TempDir dir;
  const auto path = dir.file("quiz.json");
  std::ofstream(path) << R"([{"statement":"s1","expected":true},{"statement":"s2","expected":false,"explanation":"e"}])";
  const auto loaded = load_quiz_bank(path.string());
  EXPECT_EQ(quiz_key(loaded), (std::vector<bool>{true, false}));
  EXPECT_EQ(loaded[1].explanation, "e");
  std::ofstream(dir.file("empty.json")) << "[]";
  EXPECT_THROW(load_quiz_bank(dir.file("empty.json").string()), Error);
  EXPECT_THROW(load_quiz_bank(dir.file("missing.json").string()), Error);
}

TEST(CostCounts, TrainedWorkersAndPaidDocuments) {
  const GoldCorpus corpus = testing::lifecycle_corpus();
  EventLog log;
  Campaign c(corpus, testing::default_config(), log, testing::fake_clock());
  const WorkerId a = make_active_worker(c);
  const WorkerId rejected = c.register_worker();
  c.take_quiz(rejected, std::vector<bool>(10, false));
  const WorkerId surveyed = c.register_worker();
  c.take_quiz(surveyed, c.config().quiz_key);
  c.submit_survey(surveyed, testing::sample_survey());
  EXPECT_EQ(count_trained_workers(c.state()), 2);
  EXPECT_EQ(count_paid_documents(c.state(), corpus), 0);
  for (int i = 0; i < 2; ++i) {
    const auto t = c.next_task(a);
    c.submit(a, t->doc_id, {});
  }
  EXPECT_EQ(count_paid_documents(c.state(), corpus), 2);
}

}  // namespace
}  // namespace crowdspan
