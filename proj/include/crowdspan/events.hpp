#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "crowdspan/corpus.hpp"

namespace crowdspan {

struct SurveyResponse {
  std::string gender;
  std::string age;
  std::string occupation;
  std::string education;
  std::vector<std::string> motivations;  // multi-select, non-empty

  bool operator==(const SurveyResponse&) const = default;
};

struct WorkerRegistered {
  WorkerId worker_id;
  std::optional<std::string> request_token;
  bool operator==(const WorkerRegistered&) const = default;
};

struct QuizGraded {
  WorkerId worker_id;
  std::size_t correct = 0;
  std::size_t total = 0;
  bool passed = false;
  std::optional<std::string> request_token;
  bool operator==(const QuizGraded&) const = default;
};

struct SurveyRecorded {
  WorkerId worker_id;
  SurveyResponse response;
  std::optional<std::string> request_token;
  bool operator==(const SurveyRecorded&) const = default;
};

struct Assigned {
  WorkerId worker_id;
  DocId doc_id;
  DocContext context = DocContext::kRegular;
  bool operator==(const Assigned&) const = default;
};

struct Submitted {
  WorkerId worker_id;
  DocId doc_id;
  std::vector<SpanKey> spans;
  DocContext context = DocContext::kRegular;
  std::optional<std::string> request_token;
  // Loaded from an external dump; bypasses the assignment flow.
  bool imported = false;
  bool operator==(const Submitted&) const = default;
};

struct Blocked {
  WorkerId worker_id;
  std::size_t consecutive_low_gold = 0;
  bool operator==(const Blocked&) const = default;
};

using EventPayload = std::variant<WorkerRegistered, QuizGraded, SurveyRecorded, Assigned, Submitted, Blocked>;

enum class EventKind { kWorkerRegistered, kQuizGraded, kSurveyRecorded, kAssigned, kSubmitted, kBlocked };

std::string_view to_string(EventKind kind);

struct EventRecord {
  std::uint64_t sequence = 0;  // assigned by the log
  std::int64_t at = 0;         // milliseconds since the Unix epoch
  EventPayload payload;

  EventKind kind() const { return static_cast<EventKind>(payload.index()); }
  bool operator==(const EventRecord&) const = default;
};

/// One self-describing JSON object, no trailing newline.
std::string encode_event(const EventRecord& event);

/// Throws CorruptLog.
EventRecord decode_event(std::string_view line);

}  // namespace crowdspan
