#include "crowdspan/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>

#include "crowdspan/errors.hpp"

namespace crowdspan {

namespace {

Error storage_failure(const std::string& what) {
  return Error(ErrorCode::kStorageFailure, what + ": " + std::strerror(errno));
}

}  // namespace

std::vector<EventRecord> read_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kStorageFailure, "cannot read log " + path.string());
  std::vector<EventRecord> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      events.push_back(decode_event(line));
    } catch (const Error& e) {
      throw Error(ErrorCode::kCorruptLog, path.string() + " line " + std::to_string(line_no) + ": " + e.detail());
    }
  }
  validate_sequence(events);
  return events;
}

void validate_sequence(std::span<const EventRecord> events) {
  std::uint64_t expected = 1;
  for (const EventRecord& e : events) {
    if (e.sequence != expected) {
      throw Error(ErrorCode::kCorruptLog,
                  "sequence gap: expected " + std::to_string(expected) + ", found " + std::to_string(e.sequence));
    }
    ++expected;
  }
}

CampaignState replay(std::span<const EventRecord> events, const GoldCorpus& corpus) {
  validate_sequence(events);
  CampaignState state;
  for (const EventRecord& e : events) {
    try {
      state.apply(e, corpus);
    } catch (const Error& err) {
      throw Error(ErrorCode::kCorruptLog, "event " + std::to_string(e.sequence) + " (" +
                                              std::string(to_string(e.kind())) + "): " + err.detail());
    }
  }
  return state;
}

std::vector<Submission> submissions_from_events(std::span<const EventRecord> events) {
  std::vector<Submission> out;
  for (const EventRecord& e : events) {
    if (const auto* s = std::get_if<Submitted>(&e.payload)) {
      out.push_back(Submission{s->worker_id, s->doc_id, normalize_spans(s->spans), e.at, s->context});
    }
  }
  return out;
}

EventLog EventLog::open(const std::filesystem::path& path, bool sync) {
  EventLog log;
  if (std::filesystem::exists(path)) log.events_ = read_log(path);
  log.fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (log.fd_ < 0) throw storage_failure("cannot open log " + path.string());
  log.path_ = path;
  log.sync_ = sync;
  return log;
}

EventLog::EventLog(EventLog&& other) noexcept
    : events_(std::move(other.events_)), path_(std::move(other.path_)), fd_(other.fd_), sync_(other.sync_) {
  other.fd_ = -1;
}

EventLog& EventLog::operator=(EventLog&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    events_ = std::move(other.events_);
    path_ = std::move(other.path_);
    fd_ = other.fd_;
    sync_ = other.sync_;
    other.fd_ = -1;
  }
  return *this;
}

EventLog::~EventLog() {
  if (fd_ >= 0) {
    ::fsync(fd_);
    ::close(fd_);
  }
}

std::uint64_t EventLog::append(EventRecord event) {
  event.sequence = last_sequence() + 1;
  if (fd_ >= 0) {
    const std::string line = encode_event(event) + "\n";
    std::size_t written = 0;
    while (written < line.size()) {
      const ssize_t n = ::write(fd_, line.data() + written, line.size() - written);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw storage_failure("append to " + path_->string());
      }
      written += static_cast<std::size_t>(n);
    }
    if (sync_ && ::fdatasync(fd_) != 0) throw storage_failure("sync " + path_->string());
  }
  events_.push_back(std::move(event));
  return events_.back().sequence;
}

}  // namespace crowdspan
