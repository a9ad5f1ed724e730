#pragma once

// HTTP front end for the annotation lifecycle and the operator analyses.
// Request and response bodies are JSON; docs/api.md lists every field.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "crowdspan/campaign.hpp"
#include "crowdspan/corpus.hpp"
#include "crowdspan/costing.hpp"
#include "crowdspan/errors.hpp"

namespace crowdspan {

struct ApiConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string corpus_path;
  std::optional<std::string> log_path;  // unset keeps events in memory
  std::optional<std::string> quiz_path;  // unset uses the built-in quiz
  std::uint64_t seed = 0;
  std::size_t redundancy = 15;
  std::size_t gold_interval = 10;
  CostParams cost;
  PartitionConfig partition;

  /// Throws InvalidArgument for unknown keys, wrong types or bad values.
  static ApiConfig from_json_text(const std::string& text);
  static ApiConfig load(const std::string& path);
  void validate() const;
};

/// HTTP status for an error code: 404 for unknown ids, 409 for requests that
/// conflict with the worker's state, 500 for storage trouble, 400 otherwise.
int http_status_for(ErrorCode code);

/// A running campaign behind an HTTP server. All requests are serialized on a
/// single mutex, which keeps the event log single-writer.
class Service {
 public:
  /// Loads the corpus (CorpusLoadError), applies the partition, opens the log
  /// and replays it (CorruptLog, StorageFailure).
  explicit Service(const ApiConfig& config, Clock clock = system_clock_ms);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds the configured host and port (BindFailure) and returns the bound
  /// port. Does not start serving.
  int bind();

  /// Serves until stop() is called. Requires bind().
  void run();

  /// Thread-safe; makes run() return after in-flight requests finish.
  void stop();

  const GoldCorpus& corpus() const;

  /// Copy of the campaign state, taken under the service lock.
  CampaignState snapshot() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace crowdspan
