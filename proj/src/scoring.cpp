#include "crowdspan/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>

#include "crowdspan/aggregate.hpp"
#include "crowdspan/errors.hpp"

namespace crowdspan {

Metrics score(std::size_t tp, std::size_t fp, std::size_t fn) {
  Metrics m{tp, fp, fn, 0.0, 0.0, 0.0};
  if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

MatchResult match_strict(std::vector<SpanKey> gold, std::vector<SpanKey> hypothesis) {
  gold = normalize_spans(std::move(gold));
  hypothesis = normalize_spans(std::move(hypothesis));
  MatchResult r;
  std::set_intersection(hypothesis.begin(), hypothesis.end(), gold.begin(), gold.end(),
                        std::back_inserter(r.true_positives));
  std::set_difference(hypothesis.begin(), hypothesis.end(), gold.begin(), gold.end(),
                      std::back_inserter(r.false_positives));
  std::set_difference(gold.begin(), gold.end(), hypothesis.begin(), hypothesis.end(),
                      std::back_inserter(r.false_negatives));
  return r;
}

MatchResult match_strict(std::span<const Span> gold, std::span<const Span> hypothesis) {
  const std::string* doc = nullptr;
  std::vector<SpanKey> g, h;
  for (auto [list, out] : {std::pair{gold, &g}, std::pair{hypothesis, &h}}) {
    for (const Span& s : list) {
      if (doc == nullptr) doc = &s.doc_id;
      if (s.doc_id != *doc) {
        throw Error(ErrorCode::kMixedDocuments, "spans from documents " + *doc + " and " + s.doc_id);
      }
      out->push_back(s.key());
    }
  }
  return match_strict(std::move(g), std::move(h));
}

Metrics evaluate_documents(const GoldCorpus& gold, const Hypothesis& hypothesis, std::span<const DocId> scope) {
  for (const auto& [doc_id, spans] : hypothesis) {
    if (!gold.contains(doc_id)) throw Error(ErrorCode::kUnknownDocument, "hypothesis for unknown document " + doc_id);
  }
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const DocId& id : scope) {
    auto gold_keys = gold.gold_keys(id);
    auto it = hypothesis.find(id);
    if (it == hypothesis.end()) {
      fn += gold_keys.size();
      continue;
    }
    MatchResult r = match_strict(std::move(gold_keys), it->second);
    tp += r.true_positives.size();
    fp += r.false_positives.size();
    fn += r.false_negatives.size();
  }
  return score(tp, fp, fn);
}

Metrics evaluate_corpus(const GoldCorpus& gold, const Hypothesis& hypothesis) {
  return evaluate_documents(gold, hypothesis, gold.doc_ids());
}

std::pair<double, double> mean_and_stddev(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  // Accumulate deviations from the first value so identical inputs come back
  // unchanged instead of picking up summation rounding.
  const double base = values.front();
  const double n = static_cast<double>(values.size());
  double delta_sum = 0.0;
  for (double v : values) delta_sum += v - base;
  const double delta_mean = delta_sum / n;
  const double mean = base + delta_mean;
  double sq = 0.0;
  for (double v : values) {
    const double d = (v - base) - delta_mean;
    sq += d * d;
  }
  return {mean, std::sqrt(sq / n)};
}

WorkerReport worker_report(const WorkerId& worker_id, std::span<const Submission> submissions,
                           const GoldCorpus& gold) {
  WorkerReport report;
  report.worker_id = worker_id;
  std::vector<double> values;
  for (const Submission& s : submissions) {
    if (s.worker_id != worker_id) {
      throw Error(ErrorCode::kInvalidArgument, "submission by " + s.worker_id + " in report for " + worker_id);
    }
    if (report.per_document_f.count(s.doc_id)) {
      throw Error(ErrorCode::kDuplicateSubmission, worker_id + " submitted " + s.doc_id + " twice");
    }
    MatchResult r = match_strict(gold.gold_keys(s.doc_id), s.spans);
    const double f = score(r.true_positives.size(), r.false_positives.size(), r.false_negatives.size()).f1;
    report.per_document_f.emplace(s.doc_id, f);
    values.push_back(f);
  }
  report.documents_completed = values.size();
  std::tie(report.mean_f, report.stddev_f) = mean_and_stddev(values);
  return report;
}

std::vector<WorkerReport> worker_reports(std::span<const Submission> submissions, const GoldCorpus& gold) {
  std::map<WorkerId, std::vector<Submission>> by_worker;
  for (const Submission& s : submissions) by_worker[s.worker_id].push_back(s);
  std::vector<WorkerReport> out;
  for (const auto& [id, subs] : by_worker) out.push_back(worker_report(id, subs, gold));
  return out;
}

std::string format_metrics_tsv_header() { return "tp\tfp\tfn\tprecision\trecall\tf1"; }

std::string format_metrics_tsv(const Metrics& m) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%zu\t%zu\t%zu\t%.6f\t%.6f\t%.6f", m.tp, m.fp, m.fn, m.precision, m.recall, m.f1);
  return buf;
}

}  // namespace crowdspan
