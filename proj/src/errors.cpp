#include "crowdspan/errors.hpp"

namespace crowdspan {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kOffsetMismatch: return "OffsetMismatch";
    case ErrorCode::kDuplicateDocument: return "DuplicateDocument";
    case ErrorCode::kNoTokenInRange: return "NoTokenInRange";
    case ErrorCode::kInvalidSpan: return "InvalidSpan";
    case ErrorCode::kOverlappingSpans: return "OverlappingSpans";
    case ErrorCode::kMixedDocuments: return "MixedDocuments";
    case ErrorCode::kUnknownDocument: return "UnknownDocument";
    case ErrorCode::kDuplicateSubmission: return "DuplicateSubmission";
    case ErrorCode::kDuplicateWorker: return "DuplicateWorker";
    case ErrorCode::kNoSubmissions: return "NoSubmissions";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kWrongState: return "WrongState";
    case ErrorCode::kNotAssigned: return "NotAssigned";
    case ErrorCode::kAlreadySubmitted: return "AlreadySubmitted";
    case ErrorCode::kUnknownWorker: return "UnknownWorker";
    case ErrorCode::kInvalidDistribution: return "InvalidDistribution";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kStorageFailure: return "StorageFailure";
    case ErrorCode::kCorruptLog: return "CorruptLog";
    case ErrorCode::kCorpusLoadError: return "CorpusLoadError";
    case ErrorCode::kBindFailure: return "BindFailure";
    case ErrorCode::kImportError: return "ImportError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

}  // namespace crowdspan
