#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "crowdspan/events.hpp"
#include "crowdspan/lifecycle.hpp"

namespace crowdspan {

/// Append-only event log, one JSON record per line.
///
/// A file-backed log writes each record with a single write(2) on an O_APPEND
/// descriptor and, unless sync is off, fdatasync(2) before append() returns.
/// All records also stay in memory for replay and feedback.
class EventLog {
 public:
  /// Log that lives in memory only.
  EventLog() = default;

  /// Opens or creates `path`, loading and validating existing records.
  /// Throws CorruptLog or StorageFailure.
  static EventLog open(const std::filesystem::path& path, bool sync = true);

  EventLog(EventLog&& other) noexcept;
  EventLog& operator=(EventLog&& other) noexcept;
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;
  ~EventLog();

  /// Stamps the next sequence number onto the event, persists it and returns
  /// the sequence. Throws StorageFailure.
  std::uint64_t append(EventRecord event);

  const std::vector<EventRecord>& events() const { return events_; }
  std::uint64_t last_sequence() const { return events_.empty() ? 0 : events_.back().sequence; }
  const std::optional<std::filesystem::path>& path() const { return path_; }

 private:
  std::vector<EventRecord> events_;
  std::optional<std::filesystem::path> path_;
  int fd_ = -1;
  bool sync_ = true;
};

/// Reads every record of a log file. Throws CorruptLog or StorageFailure.
std::vector<EventRecord> read_log(const std::filesystem::path& path);

/// Throws CorruptLog unless sequences run 1, 2, 3, ... without gaps.
void validate_sequence(std::span<const EventRecord> events);

/// Folds the events into a fresh state. Any inconsistency (gap, illegal
/// transition, unknown document) is reported as CorruptLog.
CampaignState replay(std::span<const EventRecord> events, const GoldCorpus& corpus);

/// The SUBMITTED events as submissions, in log order, without replaying the
/// lifecycle. Useful for offline analysis of logs from other partitions.
std::vector<Submission> submissions_from_events(std::span<const EventRecord> events);

}  // namespace crowdspan
