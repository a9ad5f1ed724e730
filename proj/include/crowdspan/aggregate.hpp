#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "crowdspan/corpus.hpp"
#include "crowdspan/scoring.hpp"

namespace crowdspan {

/// One worker's complete span set for one document.
struct Submission {
  WorkerId worker_id;
  DocId doc_id;
  std::vector<SpanKey> spans;  // sorted, unique
  std::int64_t submitted_at = 0;  // milliseconds since the Unix epoch
  DocContext context = DocContext::kRegular;

  bool operator==(const Submission&) const = default;
};

struct VoteTally {
  DocId doc_id;
  std::map<SpanKey, std::size_t> votes;
  std::size_t annotator_count = 0;
};

/// Counts distinct workers per exact span. Throws DuplicateWorker and
/// MixedDocuments.
VoteTally tally_votes(std::span<const Submission> submissions);

/// Spans with at least k votes. Throws InvalidArgument for k == 0.
std::vector<SpanKey> apply_threshold(const VoteTally& tally, std::size_t k);

struct SweepPoint {
  std::size_t k = 0;
  Metrics metrics;
};

struct SweepOptions {
  // The universal training documents carry far more annotators than the rest
  // and are left out of the pooled evaluation unless asked for.
  bool include_training = false;
};

/// Documents evaluated by sweeps: every corpus document, minus training ones
/// unless included.
std::vector<DocId> evaluation_scope(const GoldCorpus& gold, bool include_training);

/// Submissions grouped per document, documents in id order. Throws
/// UnknownDocument.
std::map<DocId, std::vector<Submission>> group_by_document(std::span<const Submission> submissions,
                                                           const GoldCorpus& gold);

/// Aggregated hypothesis at every threshold 1..k_max, evaluated with
/// micro-averaging. Points come back in k order.
std::vector<SweepPoint> sweep_k(std::span<const Submission> submissions, const GoldCorpus& gold,
                                std::size_t k_max, const SweepOptions& options = {});

/// Point with the highest F; ties go to the smallest k.
const SweepPoint& best_point(std::span<const SweepPoint> sweep);

std::string format_sweep_tsv(std::span<const SweepPoint> sweep);

}  // namespace crowdspan
