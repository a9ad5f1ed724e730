#include "crowdspan/api.hpp"

#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>

#include "crowdspan/aggregate.hpp"
#include "crowdspan/errors.hpp"
#include "crowdspan/redundancy.hpp"
#include "httplib.h"
#include "json.hpp"

namespace crowdspan {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

[[noreturn]] void bad_config(const std::string& what) { throw Error(ErrorCode::kInvalidArgument, "config: " + what); }

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) bad_config(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) bad_config("unknown key '" + key + "' in " + where);
  }
}

json span_json(const SpanKey& s) { return {{"start", s.start}, {"end", s.end}}; }

json spans_json(const std::vector<SpanKey>& spans) {
  json out = json::array();
  for (const SpanKey& s : spans) out.push_back(span_json(s));
  return out;
}

json feedback_json(const Feedback& fb) {
  json out{{"kind", std::string(to_string(fb.kind))}};
  if (fb.kind == FeedbackKind::kGold) {
    out["true_positives"] = spans_json(fb.true_positives);
    out["false_positives"] = spans_json(fb.false_positives);
    out["false_negatives"] = spans_json(fb.false_negatives);
    out["f_score"] = fb.f_score.value_or(0.0);
  } else if (fb.kind == FeedbackKind::kPeer) {
    json peers = json::object();
    for (const auto& [alias, spans] : fb.peer_spans) peers[alias] = spans_json(spans);
    out["peers"] = std::move(peers);
  }
  return out;
}

json worker_json(const WorkerRecord& w) {
  json history = json::array();
  for (const GoldScore& g : w.gold_f_history) history.push_back({{"doc_id", g.doc_id}, {"f", g.f}});
  json out{{"worker_id", w.worker_id},
           {"state", w.state_name()},
           {"quiz_score", w.quiz_score},
           {"training_submissions", w.training_submissions},
           {"gold_f_history", std::move(history)},
           {"consecutive_low_gold", w.consecutive_low_gold}};
  out["pending_doc_id"] = w.pending ? json(w.pending->doc_id) : json(nullptr);
  return out;
}

json sweep_json(const std::vector<SweepPoint>& sweep) {
  json rows = json::array();
  for (const SweepPoint& p : sweep) {
    rows.push_back({{"k", p.k},
                    {"tp", p.metrics.tp},
                    {"fp", p.metrics.fp},
                    {"fn", p.metrics.fn},
                    {"precision", p.metrics.precision},
                    {"recall", p.metrics.recall},
                    {"f1", p.metrics.f1}});
  }
  return {{"rows", std::move(rows)}, {"best_k", best_point(sweep).k}};
}

std::optional<std::string> optional_token(const json& body) {
  if (!body.contains("request_token") || body["request_token"].is_null()) return std::nullopt;
  return body["request_token"].get<std::string>();
}

json parse_body(const httplib::Request& req, bool allow_empty) {
  if (req.body.empty()) {
    if (allow_empty) return json::object();
    throw Error(ErrorCode::kInvalidArgument, "request body required");
  }
  json body = json::parse(req.body);
  if (!body.is_object()) throw Error(ErrorCode::kInvalidArgument, "request body must be a JSON object");
  return body;
}

std::size_t size_param(const httplib::Request& req, const char* name, std::size_t fallback) {
  if (!req.has_param(name)) return fallback;
  const std::string v = req.get_param_value(name);
  std::size_t used = 0;
  unsigned long long n = 0;
  try {
    n = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty() || v[0] == '-') {
    throw Error(ErrorCode::kInvalidArgument, std::string("query parameter ") + name + " must be a whole number");
  }
  return static_cast<std::size_t>(n);
}

bool bool_param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return false;
  const std::string v = req.get_param_value(name);
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw Error(ErrorCode::kInvalidArgument, std::string("query parameter ") + name + " must be true or false");
}

}  // namespace

ApiConfig ApiConfig::from_json_text(const std::string& text) {
  ApiConfig c;
  try {
    const json j = json::parse(text);
    check_keys(j,
               {"host", "port", "corpus", "log", "quiz", "seed", "redundancy", "gold_interval", "cost", "partition"},
               "config");
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    c.corpus_path = j.at("corpus").get<std::string>();
    if (j.contains("log")) c.log_path = j["log"].get<std::string>();
    if (j.contains("quiz")) c.quiz_path = j["quiz"].get<std::string>();
    c.seed = j.value("seed", c.seed);
    c.redundancy = j.value("redundancy", c.redundancy);
    c.gold_interval = j.value("gold_interval", c.gold_interval);
    if (j.contains("cost")) {
      const json& cost = j["cost"];
      check_keys(cost, {"per_annotation_fee", "survey_fee", "training_fee_per_doc"}, "cost");
      if (cost.contains("per_annotation_fee")) {
        c.cost.per_annotation_fee = Money::parse(cost["per_annotation_fee"].get<std::string>());
      }
      if (cost.contains("survey_fee")) c.cost.survey_fee = Money::parse(cost["survey_fee"].get<std::string>());
      if (cost.contains("training_fee_per_doc")) {
        c.cost.training_fee_per_doc = Money::parse(cost["training_fee_per_doc"].get<std::string>());
      }
    }
    c.partition.seed = c.seed;
    if (j.contains("partition")) {
      const json& p = j["partition"];
      check_keys(p, {"training_ids", "gold_ids", "training_count", "gold_fraction", "seed"}, "partition");
      c.partition.training_ids = p.value("training_ids", c.partition.training_ids);
      c.partition.gold_ids = p.value("gold_ids", c.partition.gold_ids);
      c.partition.training_count = p.value("training_count", c.partition.training_count);
      c.partition.gold_fraction = p.value("gold_fraction", c.partition.gold_fraction);
      c.partition.seed = p.value("seed", c.partition.seed);
    }
  } catch (const json::exception& e) {
    bad_config(e.what());
  }
  c.validate();
  return c;
}

ApiConfig ApiConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

void ApiConfig::validate() const {
  if (corpus_path.empty()) bad_config("corpus path is required");
  if (redundancy == 0) bad_config("redundancy must be at least 1");
  if (gold_interval == 0) bad_config("gold_interval must be at least 1");
  if (port < 0 || port > 65535) bad_config("port out of range");
  CostParams check = cost;
  check.redundancy = static_cast<std::int64_t>(redundancy);
  check.validate();
}

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownWorker:
    case ErrorCode::kUnknownDocument:
      return 404;
    case ErrorCode::kWrongState:
    case ErrorCode::kNotAssigned:
    case ErrorCode::kAlreadySubmitted:
    case ErrorCode::kDuplicateWorker:
    case ErrorCode::kDuplicateSubmission:
      return 409;
    case ErrorCode::kStorageFailure:
    case ErrorCode::kCorruptLog:
      return 500;
    default:
      return 400;
  }
}

struct Service::Impl {
  ApiConfig config;
  GoldCorpus corpus;
  std::vector<QuizQuestion> quiz;
  EventLog log;
  std::unique_ptr<Campaign> campaign;
  CostParams cost;
  mutable std::mutex mu;
  httplib::Server server;
  bool bound = false;

  using Handler = std::function<std::pair<int, json>(const httplib::Request&)>;

  void route(const char* method, const std::string& pattern, Handler handler) {
    auto wrapped = [this, handler = std::move(handler)](const httplib::Request& req, httplib::Response& res) {
      int status = 200;
      json body;
      try {
        std::lock_guard lock(mu);
        std::tie(status, body) = handler(req);
      } catch (const Error& e) {
        status = http_status_for(e.code());
        body = {{"error", std::string(to_string(e.code()))}, {"detail", e.detail()}};
      } catch (const json::exception& e) {
        status = 400;
        body = {{"error", std::string(to_string(ErrorCode::kInvalidArgument))}, {"detail", e.what()}};
      }
      res.status = status;
      if (status != 204) res.set_content(body.dump(), kJson);
    };
    if (std::string(method) == "GET") {
      server.Get(pattern, wrapped);
    } else {
      server.Post(pattern, wrapped);
    }
  }

  static const WorkerId& worker_param(const httplib::Request& req) { return req.path_params.at("id"); }

  void install_routes() {
    route("GET", "/health", [this](const httplib::Request&) {
      return std::pair{200, json{{"status", "ok"},
                                 {"documents", corpus.size()},
                                 {"events", log.last_sequence()}}};
    });

    route("GET", "/quiz", [this](const httplib::Request&) {
      json questions = json::array();
      for (std::size_t i = 0; i < quiz.size(); ++i) {
        questions.push_back({{"index", i}, {"statement", quiz[i].statement}});
      }
      return std::pair{200, json{{"questions", std::move(questions)}}};
    });

    route("POST", "/workers", [this](const httplib::Request& req) {
      const json body = parse_body(req, true);
      const WorkerId id = campaign->register_worker(optional_token(body));
      return std::pair{201, json{{"worker_id", id}, {"state", campaign->worker(id).state_name()}}};
    });

    route("GET", "/workers/:id", [this](const httplib::Request& req) {
      return std::pair{200, worker_json(campaign->worker(worker_param(req)))};
    });

    route("POST", "/workers/:id/quiz", [this](const httplib::Request& req) {
      const json body = parse_body(req, false);
      const std::vector<bool> answers = body.at("answers").get<std::vector<bool>>();
      const WorkerId& id = worker_param(req);
      const QuizResult r = campaign->take_quiz(id, answers, optional_token(body));
      json out{{"score", r.score}, {"passed", r.passed}, {"state", campaign->worker(id).state_name()}};
      // Explanations are the teaching part of the quiz; they go back only
      // once the answers are in.
      json explanations = json::array();
      for (const QuizQuestion& q : quiz) {
        explanations.push_back({{"expected", q.expected}, {"explanation", q.explanation}});
      }
      out["explanations"] = std::move(explanations);
      return std::pair{200, std::move(out)};
    });

    route("POST", "/workers/:id/survey", [this](const httplib::Request& req) {
      const json body = parse_body(req, false);
      SurveyResponse s;
      s.gender = body.at("gender").get<std::string>();
      s.age = body.at("age").get<std::string>();
      s.occupation = body.at("occupation").get<std::string>();
      s.education = body.at("education").get<std::string>();
      s.motivations = body.at("motivations").get<std::vector<std::string>>();
      const WorkerRecord w = campaign->submit_survey(worker_param(req), std::move(s), optional_token(body));
      return std::pair{200, json{{"state", w.state_name()}}};
    });

    route("GET", "/workers/:id/next-task", [this](const httplib::Request& req) {
      const auto task = campaign->next_task(worker_param(req));
      if (!task) return std::pair{204, json()};
      const Document& doc = corpus.document(task->doc_id);
      json tokens = json::array();
      for (const TokenBoundary& t : doc.tokens()) tokens.push_back({{"start", t.start}, {"end", t.end}});
      return std::pair{200, json{{"doc_id", doc.doc_id()},
                                 {"title", doc.title()},
                                 {"body", doc.body()},
                                 {"context", std::string(to_string(task->context))},
                                 {"tokens", std::move(tokens)}}};
    });

    route("POST", "/workers/:id/submissions", [this](const httplib::Request& req) {
      const json body = parse_body(req, false);
      const DocId doc_id = body.at("doc_id").get<std::string>();
      if (!corpus.contains(doc_id)) throw Error(ErrorCode::kUnknownDocument, "document " + doc_id);
      const Document& doc = corpus.document(doc_id);
      std::vector<SpanKey> spans;
      for (const json& s : body.at("spans")) {
        spans.push_back(snap_to_tokens(doc, s.at("start").get<std::size_t>(), s.at("end").get<std::size_t>()).key());
      }
      const SubmitOutcome out = campaign->submit(worker_param(req), doc_id, std::move(spans), optional_token(body));
      return std::pair{out.replayed ? 200 : 201, json{{"feedback", feedback_json(out.feedback)},
                                                      {"state", out.worker.state_name()},
                                                      {"replayed", out.replayed}}};
    });

    route("GET", "/admin/sweep", [this](const httplib::Request& req) {
      const std::size_t k_max = size_param(req, "k_max", 15);
      if (k_max == 0) throw Error(ErrorCode::kInvalidArgument, "k_max must be at least 1");
      const auto sweep =
          sweep_k(campaign->state().submissions(), corpus, k_max, {bool_param(req, "include_training")});
      return std::pair{200, sweep_json(sweep)};
    });

    route("GET", "/admin/redundancy", [this](const httplib::Request& req) {
      RedundancyOptions options;
      options.include_training = bool_param(req, "include_training");
      if (req.has_param("mode")) {
        const std::string mode = req.get_param_value("mode");
        if (mode == "per-document") {
          options.mode = BestKMode::kPerDocument;
        } else if (mode != "global") {
          throw Error(ErrorCode::kInvalidArgument, "mode must be global or per-document");
        }
      }
      const auto& subs = campaign->state().submissions();
      const std::size_t n_max = size_param(req, "n_max", 15);
      const std::size_t reps = size_param(req, "reps", kDefaultRepetitions);
      const std::uint64_t seed = size_param(req, "seed", config.seed);
      const auto curve = redundancy_curve(subs, corpus, n_max, reps, seed, options);
      json rows = json::array();
      for (const RedundancyEstimate& e : curve) {
        rows.push_back({{"n", e.n},
                        {"mean_max_f", e.mean_max_f},
                        {"stddev_max_f", e.stddev_max_f},
                        {"best_k_mode", e.best_k_mode()}});
      }
      return std::pair{200, json{{"rows", std::move(rows)}, {"seed", seed}, {"reps", reps}}};
    });

    route("GET", "/admin/cost", [this](const httplib::Request&) {
      const std::int64_t workers = count_trained_workers(campaign->state());
      const std::int64_t docs = count_paid_documents(campaign->state(), corpus);
      const CostBreakdown b = cost_breakdown(cost, workers, docs);
      return std::pair{200, json{{"trained_workers", workers},
                                 {"paid_documents", docs},
                                 {"per_worker_training", b.per_worker_training.to_string()},
                                 {"per_abstract", b.per_abstract.to_string()},
                                 {"training_total", b.training_total.to_string()},
                                 {"annotation_total", b.annotation_total.to_string()},
                                 {"total", b.total.to_string()}}};
    });
  }
};

Service::Service(const ApiConfig& config, Clock clock) : impl_(std::make_unique<Impl>()) {
  config.validate();
  Impl& s = *impl_;
  s.config = config;
  try {
    s.corpus = load_pubtator_file(config.corpus_path);
    apply_partition(s.corpus, config.partition);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCorpusLoadError) throw;
    throw Error(ErrorCode::kCorpusLoadError, e.what());
  }
  s.quiz = config.quiz_path ? load_quiz_bank(*config.quiz_path) : default_quiz_bank();
  if (config.log_path) s.log = EventLog::open(*config.log_path);
  s.cost = config.cost;
  s.cost.redundancy = static_cast<std::int64_t>(config.redundancy);
  s.cost.training_docs = static_cast<std::int64_t>(s.corpus.training_docs().size());
  // httplib's default turns on SO_REUSEPORT, which would let a second
  // service silently share the port. Address reuse alone is enough for
  // quick restarts.
  s.server.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  LifecycleConfig lc{config.gold_interval, config.redundancy, config.seed, quiz_key(s.quiz)};
  s.campaign = std::make_unique<Campaign>(s.corpus, lc, s.log, std::move(clock));
  s.install_routes();
}

Service::~Service() = default;

int Service::bind() {
  Impl& s = *impl_;
  int port = s.config.port;
  bool ok = false;
  if (port == 0) {
    port = s.server.bind_to_any_port(s.config.host);
    ok = port > 0;
  } else {
    ok = s.server.bind_to_port(s.config.host, port);
  }
  if (!ok) {
    throw Error(ErrorCode::kBindFailure, "cannot bind " + s.config.host + ":" + std::to_string(s.config.port));
  }
  s.bound = true;
  return port;
}

void Service::run() {
  if (!impl_->bound) bind();
  impl_->server.listen_after_bind();
}

void Service::stop() { impl_->server.stop(); }

const GoldCorpus& Service::corpus() const { return impl_->corpus; }

CampaignState Service::snapshot() const {
  std::lock_guard lock(impl_->mu);
  return impl_->campaign->state();
}

}  // namespace crowdspan
