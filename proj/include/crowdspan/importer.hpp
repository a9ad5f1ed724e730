#pragma once

// Bulk import of externally collected submissions into an event log.
//
// Input is tab-separated, one span per line, with a header row:
//
//   worker_id  doc_id  start  end
//
// Lines sharing (worker_id, doc_id) form one submission. Empty start and end
// record a submission with no spans. Offsets index the document's full text
// (title, one space, body) and are snapped to token boundaries.

#include <cstddef>
#include <string>
#include <string_view>

#include "crowdspan/corpus.hpp"
#include "crowdspan/store.hpp"

namespace crowdspan {

struct ImportSummary {
  std::size_t workers_registered = 0;
  std::size_t submissions = 0;
  std::size_t spans = 0;
};

/// Appends WORKER_REGISTERED for unseen workers and one imported SUBMITTED per
/// (worker, document), in first-appearance order. Validation happens before
/// anything is appended. Throws ImportError (naming the line), UnknownDocument,
/// DuplicateSubmission (pair already present in the log), OverlappingSpans.
ImportSummary import_submissions(std::string_view tsv, const GoldCorpus& corpus, EventLog& log,
                                 std::int64_t at_ms);

/// Reads `path` and calls import_submissions. Throws ImportError if unreadable.
ImportSummary import_submissions_file(const std::string& path, const GoldCorpus& corpus, EventLog& log,
                                      std::int64_t at_ms);

}  // namespace crowdspan
