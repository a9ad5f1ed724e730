#include "crowdspan/events.hpp"

#include "crowdspan/errors.hpp"
#include "json.hpp"

namespace crowdspan {

using nlohmann::json;

namespace {

void put_token(json& j, const std::optional<std::string>& token) {
  if (token) j["request_token"] = *token;
}

std::optional<std::string> get_token(const json& j) {
  if (auto it = j.find("request_token"); it != j.end()) return it->get<std::string>();
  return std::nullopt;
}

json spans_to_json(const std::vector<SpanKey>& spans) {
  json arr = json::array();
  for (const SpanKey& s : spans) arr.push_back({s.start, s.end});
  return arr;
}

std::vector<SpanKey> spans_from_json(const json& arr) {
  std::vector<SpanKey> spans;
  for (const json& pair : arr) {
    if (!pair.is_array() || pair.size() != 2) throw std::invalid_argument("span must be [start, end]");
    spans.push_back({pair[0].get<std::size_t>(), pair[1].get<std::size_t>()});
  }
  return spans;
}

struct PayloadEncoder {
  json operator()(const WorkerRegistered& e) const {
    json j{{"worker_id", e.worker_id}};
    put_token(j, e.request_token);
    return j;
  }
  json operator()(const QuizGraded& e) const {
    json j{{"worker_id", e.worker_id}, {"correct", e.correct}, {"total", e.total}, {"passed", e.passed}};
    put_token(j, e.request_token);
    return j;
  }
  json operator()(const SurveyRecorded& e) const {
    json j{{"worker_id", e.worker_id},
           {"gender", e.response.gender},
           {"age", e.response.age},
           {"occupation", e.response.occupation},
           {"education", e.response.education},
           {"motivations", e.response.motivations}};
    put_token(j, e.request_token);
    return j;
  }
  json operator()(const Assigned& e) const {
    return {{"worker_id", e.worker_id}, {"doc_id", e.doc_id}, {"context", to_string(e.context)}};
  }
  json operator()(const Submitted& e) const {
    json j{{"worker_id", e.worker_id},
           {"doc_id", e.doc_id},
           {"context", to_string(e.context)},
           {"spans", spans_to_json(e.spans)}};
    put_token(j, e.request_token);
    if (e.imported) j["imported"] = true;
    return j;
  }
  json operator()(const Blocked& e) const {
    return {{"worker_id", e.worker_id}, {"consecutive_low_gold", e.consecutive_low_gold}};
  }
};

EventPayload decode_payload(std::string_view kind, const json& p) {
  const auto worker = p.at("worker_id").get<std::string>();
  if (kind == "WORKER_REGISTERED") return WorkerRegistered{worker, get_token(p)};
  if (kind == "QUIZ_GRADED") {
    return QuizGraded{worker, p.at("correct").get<std::size_t>(), p.at("total").get<std::size_t>(),
                      p.at("passed").get<bool>(), get_token(p)};
  }
  if (kind == "SURVEY_RECORDED") {
    SurveyResponse r{p.at("gender").get<std::string>(), p.at("age").get<std::string>(),
                     p.at("occupation").get<std::string>(), p.at("education").get<std::string>(),
                     p.at("motivations").get<std::vector<std::string>>()};
    return SurveyRecorded{worker, std::move(r), get_token(p)};
  }
  if (kind == "ASSIGNED") {
    return Assigned{worker, p.at("doc_id").get<std::string>(), context_from_string(p.at("context").get<std::string>())};
  }
  if (kind == "SUBMITTED") {
    return Submitted{worker,
                     p.at("doc_id").get<std::string>(),
                     spans_from_json(p.at("spans")),
                     context_from_string(p.at("context").get<std::string>()),
                     get_token(p),
                     p.value("imported", false)};
  }
  if (kind == "BLOCKED") return Blocked{worker, p.at("consecutive_low_gold").get<std::size_t>()};
  throw std::invalid_argument("unknown event kind '" + std::string(kind) + "'");
}

}  // namespace

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kWorkerRegistered: return "WORKER_REGISTERED";
    case EventKind::kQuizGraded: return "QUIZ_GRADED";
    case EventKind::kSurveyRecorded: return "SURVEY_RECORDED";
    case EventKind::kAssigned: return "ASSIGNED";
    case EventKind::kSubmitted: return "SUBMITTED";
    case EventKind::kBlocked: return "BLOCKED";
  }
  return "UNKNOWN";
}

std::string encode_event(const EventRecord& event) {
  json j{{"seq", event.sequence},
         {"at", event.at},
         {"kind", to_string(event.kind())},
         {"payload", std::visit(PayloadEncoder{}, event.payload)}};
  return j.dump();
}

EventRecord decode_event(std::string_view line) {
  try {
    const json j = json::parse(line);
    EventRecord e;
    e.sequence = j.at("seq").get<std::uint64_t>();
    e.at = j.at("at").get<std::int64_t>();
    e.payload = decode_payload(j.at("kind").get<std::string>(), j.at("payload"));
    return e;
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorruptLog, "bad event record: " + e.detail());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kCorruptLog, std::string("bad event record: ") + e.what());
  }
}

}  // namespace crowdspan
