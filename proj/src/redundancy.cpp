#include "crowdspan/redundancy.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "crowdspan/errors.hpp"
#include "crowdspan/rng.hpp"

namespace crowdspan {

namespace {

struct DocPool {
  DocId doc_id;
  std::vector<const Submission*> submissions;  // ordered by worker id
};

std::vector<DocPool> build_pools(std::span<const Submission> submissions, const GoldCorpus& gold,
                                 bool include_training) {
  std::map<DocId, std::vector<const Submission*>> by_doc;
  for (const Submission& s : submissions) {
    if (!gold.contains(s.doc_id)) throw Error(ErrorCode::kUnknownDocument, "submission for unknown document " + s.doc_id);
    if (!include_training && gold.context(s.doc_id) == DocContext::kTraining) continue;
    by_doc[s.doc_id].push_back(&s);
  }
  std::vector<DocPool> pools;
  for (auto& [id, subs] : by_doc) {
    std::sort(subs.begin(), subs.end(), [](const Submission* a, const Submission* b) {
      return a->worker_id < b->worker_id;
    });
    pools.push_back({id, std::move(subs)});
  }
  return pools;
}

struct RepetitionResult {
  double max_f = 0.0;
  std::size_t best_k = 1;
};

std::vector<Submission> sample(const std::vector<DocPool>& pools, std::size_t n, Rng& rng) {
  std::vector<Submission> sampled;
  for (const DocPool& pool : pools) {
    std::vector<const Submission*> order = pool.submissions;
    const std::size_t take = std::min(n, order.size());
    // Partial Fisher-Yates: the first `take` slots end up a uniform sample.
    for (std::size_t i = 0; i < take; ++i) {
      std::size_t j = i + rng.uniform_index(order.size() - i);
      std::swap(order[i], order[j]);
    }
    for (std::size_t i = 0; i < take; ++i) sampled.push_back(*order[i]);
  }
  return sampled;
}

RepetitionResult global_best(std::span<const Submission> sampled, const GoldCorpus& gold, std::size_t n,
                             bool include_training) {
  const auto sweep = sweep_k(sampled, gold, n, SweepOptions{include_training});
  const SweepPoint& best = best_point(sweep);
  return {best.metrics.f1, best.k};
}

RepetitionResult per_document_best(std::span<const Submission> sampled, const GoldCorpus& gold, std::size_t n,
                                   bool include_training) {
  const auto grouped = group_by_document(sampled, gold);
  std::size_t tp = 0, fp = 0, fn = 0;
  std::map<std::size_t, std::size_t> k_counts;
  for (const DocId& id : evaluation_scope(gold, include_training)) {
    const auto gold_keys = gold.gold_keys(id);
    auto it = grouped.find(id);
    if (it == grouped.end()) {
      fn += gold_keys.size();
      continue;
    }
    const VoteTally tally = tally_votes(it->second);
    MatchResult best;
    double best_f = -1.0;
    std::size_t best_k = 1;
    for (std::size_t k = 1; k <= n; ++k) {
      MatchResult r = match_strict(gold_keys, apply_threshold(tally, k));
      double f = score(r.true_positives.size(), r.false_positives.size(), r.false_negatives.size()).f1;
      if (f > best_f) {
        best_f = f;
        best = std::move(r);
        best_k = k;
      }
    }
    tp += best.true_positives.size();
    fp += best.false_positives.size();
    fn += best.false_negatives.size();
    ++k_counts[best_k];
  }
  RepetitionResult out;
  out.max_f = score(tp, fp, fn).f1;
  std::size_t top = 0;
  for (const auto& [k, count] : k_counts) {
    if (count > top) {
      top = count;
      out.best_k = k;
    }
  }
  return out;
}

}  // namespace

std::size_t RedundancyEstimate::best_k_mode() const {
  std::map<std::size_t, std::size_t> counts;
  for (std::size_t k : best_k_per_rep) ++counts[k];
  std::size_t mode = 0, top = 0;
  for (const auto& [k, c] : counts) {
    if (c > top) {
      top = c;
      mode = k;
    }
  }
  return mode;
}

RedundancyEstimate estimate_redundancy(std::span<const Submission> submissions, const GoldCorpus& gold,
                                       std::size_t n, std::size_t repetitions, std::uint64_t seed,
                                       const RedundancyOptions& options) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "workers per document must be at least 1");
  if (repetitions == 0) throw Error(ErrorCode::kInvalidArgument, "repetitions must be at least 1");
  const auto pools = build_pools(submissions, gold, options.include_training);
  if (pools.empty()) throw Error(ErrorCode::kNoSubmissions, "no submissions in the evaluation scope");

  RedundancyEstimate est;
  est.n = n;
  est.repetitions = repetitions;
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    Rng rng(derive_seed({seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep)}));
    const auto sampled = sample(pools, n, rng);
    const RepetitionResult r = options.mode == BestKMode::kGlobal
                                   ? global_best(sampled, gold, n, options.include_training)
                                   : per_document_best(sampled, gold, n, options.include_training);
    est.max_f_values.push_back(r.max_f);
    est.best_k_per_rep.push_back(r.best_k);
  }
  std::tie(est.mean_max_f, est.stddev_max_f) = mean_and_stddev(est.max_f_values);
  return est;
}

std::vector<RedundancyEstimate> redundancy_curve(std::span<const Submission> submissions, const GoldCorpus& gold,
                                                 std::size_t n_max, std::size_t repetitions, std::uint64_t seed,
                                                 const RedundancyOptions& options) {
  if (n_max == 0) throw Error(ErrorCode::kInvalidArgument, "n_max must be at least 1");
  std::vector<RedundancyEstimate> curve;
  for (std::size_t n = 1; n <= n_max; ++n) {
    curve.push_back(estimate_redundancy(submissions, gold, n, repetitions, seed, options));
  }
  return curve;
}

std::size_t max_annotators(std::span<const Submission> submissions, const GoldCorpus& gold, bool include_training) {
  std::size_t best = 0;
  for (const DocPool& p : build_pools(submissions, gold, include_training)) best = std::max(best, p.submissions.size());
  return best;
}

std::string format_redundancy_tsv(std::span<const RedundancyEstimate> curve) {
  std::string out = "n\tmean_max_f\tstddev_max_f\tbest_k_mode\n";
  char buf[128];
  for (const RedundancyEstimate& e : curve) {
    std::snprintf(buf, sizeof(buf), "%zu\t%.6f\t%.6f\t%zu\n", e.n, e.mean_max_f, e.stddev_max_f, e.best_k_mode());
    out += buf;
  }
  return out;
}

}  // namespace crowdspan
