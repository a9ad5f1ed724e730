#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "crowdspan/corpus.hpp"

namespace crowdspan {

struct Submission;

struct MatchResult {
  std::vector<SpanKey> true_positives;
  std::vector<SpanKey> false_positives;
  std::vector<SpanKey> false_negatives;
};

struct Metrics {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  bool operator==(const Metrics&) const = default;
};

/// Precision, recall and F from pooled counts. Zero denominators give 0.
Metrics score(std::size_t tp, std::size_t fp, std::size_t fn);

/// Exact (start, end) matching; overlaps earn nothing. Duplicate keys are
/// collapsed first.
MatchResult match_strict(std::vector<SpanKey> gold, std::vector<SpanKey> hypothesis);

/// Same, over full spans. Labels are ignored. Throws MixedDocuments when the
/// spans do not all reference one document.
MatchResult match_strict(std::span<const Span> gold, std::span<const Span> hypothesis);

/// Per-document hypothesis keyed by document id.
using Hypothesis = std::map<DocId, std::vector<SpanKey>, std::less<>>;

/// Micro-averaged evaluation over every corpus document. Documents missing
/// from the hypothesis contribute their gold spans as false negatives.
/// Throws UnknownDocument.
Metrics evaluate_corpus(const GoldCorpus& gold, const Hypothesis& hypothesis);

/// Same, pooled over the listed documents only.
Metrics evaluate_documents(const GoldCorpus& gold, const Hypothesis& hypothesis, std::span<const DocId> scope);

struct WorkerReport {
  WorkerId worker_id;
  std::size_t documents_completed = 0;
  double mean_f = 0.0;
  // Population standard deviation.
  double stddev_f = 0.0;
  std::map<DocId, double> per_document_f;
};

/// Throws DuplicateSubmission, UnknownDocument, InvalidArgument (submission
/// by another worker).
WorkerReport worker_report(const WorkerId& worker_id, std::span<const Submission> submissions,
                           const GoldCorpus& gold);

/// Reports for every worker appearing in the submissions, ordered by id.
std::vector<WorkerReport> worker_reports(std::span<const Submission> submissions, const GoldCorpus& gold);

/// Population mean and standard deviation. Empty input yields zeros. When all
/// values are identical the mean is that value exactly and the deviation 0.
std::pair<double, double> mean_and_stddev(std::span<const double> values);

/// "tp fp fn precision recall f1" record with six decimals.
std::string format_metrics_tsv_header();
std::string format_metrics_tsv(const Metrics& m);

}  // namespace crowdspan
