#include "crowdspan/aggregate.hpp"

#include <cstdio>
#include <set>
#include <stdexcept>

#include "crowdspan/errors.hpp"

namespace crowdspan {

VoteTally tally_votes(std::span<const Submission> submissions) {
  VoteTally tally;
  std::set<WorkerId> workers;
  for (const Submission& s : submissions) {
    if (workers.empty()) tally.doc_id = s.doc_id;
    if (s.doc_id != tally.doc_id) {
      throw Error(ErrorCode::kMixedDocuments, "tally over documents " + tally.doc_id + " and " + s.doc_id);
    }
    if (!workers.insert(s.worker_id).second) {
      throw Error(ErrorCode::kDuplicateWorker, s.worker_id + " submitted " + s.doc_id + " more than once");
    }
    for (const SpanKey& key : normalize_spans(s.spans)) ++tally.votes[key];
  }
  tally.annotator_count = workers.size();
  return tally;
}

std::vector<SpanKey> apply_threshold(const VoteTally& tally, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "voting threshold must be at least 1");
  std::vector<SpanKey> kept;
  for (const auto& [key, count] : tally.votes) {
    if (count >= k) kept.push_back(key);
  }
  return kept;
}

std::vector<DocId> evaluation_scope(const GoldCorpus& gold, bool include_training) {
  std::vector<DocId> scope;
  for (const DocId& id : gold.doc_ids()) {
    if (include_training || gold.context(id) != DocContext::kTraining) scope.push_back(id);
  }
  return scope;
}

std::map<DocId, std::vector<Submission>> group_by_document(std::span<const Submission> submissions,
                                                           const GoldCorpus& gold) {
  std::map<DocId, std::vector<Submission>> grouped;
  for (const Submission& s : submissions) {
    if (!gold.contains(s.doc_id)) throw Error(ErrorCode::kUnknownDocument, "submission for unknown document " + s.doc_id);
    grouped[s.doc_id].push_back(s);
  }
  return grouped;
}

std::vector<SweepPoint> sweep_k(std::span<const Submission> submissions, const GoldCorpus& gold,
                                std::size_t k_max, const SweepOptions& options) {
  if (k_max == 0) throw Error(ErrorCode::kInvalidArgument, "k_max must be at least 1");
  const std::vector<DocId> scope = evaluation_scope(gold, options.include_training);
  const auto grouped = group_by_document(submissions, gold);

  std::vector<VoteTally> tallies;
  for (const DocId& id : scope) {
    auto it = grouped.find(id);
    if (it != grouped.end()) tallies.push_back(tally_votes(it->second));
  }

  std::vector<SweepPoint> points;
  points.reserve(k_max);
  for (std::size_t k = 1; k <= k_max; ++k) {
    Hypothesis hyp;
    for (const VoteTally& t : tallies) hyp.emplace(t.doc_id, apply_threshold(t, k));
    points.push_back({k, evaluate_documents(gold, hyp, scope)});
    if (k > 1 && points[k - 1].metrics.tp > points[k - 2].metrics.tp) {
      throw std::logic_error("sweep recall increased with the threshold");
    }
  }
  return points;
}

const SweepPoint& best_point(std::span<const SweepPoint> sweep) {
  if (sweep.empty()) throw Error(ErrorCode::kInvalidArgument, "empty sweep");
  const SweepPoint* best = &sweep.front();
  for (const SweepPoint& p : sweep) {
    if (p.metrics.f1 > best->metrics.f1) best = &p;
  }
  return *best;
}

std::string format_sweep_tsv(std::span<const SweepPoint> sweep) {
  std::string out = "k\t" + format_metrics_tsv_header() + "\n";
  for (const SweepPoint& p : sweep) {
    out += std::to_string(p.k) + "\t" + format_metrics_tsv(p.metrics) + "\n";
  }
  return out;
}

}  // namespace crowdspan
