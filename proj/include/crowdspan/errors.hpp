#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace crowdspan {

enum class ErrorCode {
  kMalformedLine,
  kOffsetMismatch,
  kDuplicateDocument,
  kNoTokenInRange,
  kInvalidSpan,
  kOverlappingSpans,
  kMixedDocuments,
  kUnknownDocument,
  kDuplicateSubmission,
  kDuplicateWorker,
  kNoSubmissions,
  kLengthMismatch,
  kWrongState,
  kNotAssigned,
  kAlreadySubmitted,
  kUnknownWorker,
  kInvalidDistribution,
  kInvalidArgument,
  kStorageFailure,
  kCorruptLog,
  kCorpusLoadError,
  kBindFailure,
  kImportError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// the service and the CLI can map it to a status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

  /// Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace crowdspan
