#pragma once

// Shared fixtures and random generators for the test binaries. Generators use
// the standard library engine so they stay independent of the code under test.

#include <cstdlib>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "crowdspan/aggregate.hpp"
#include "crowdspan/campaign.hpp"
#include "crowdspan/corpus.hpp"

namespace crowdspan::testing {

class TempDir {
 public:
  TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "crowdspan-XXXXXX").string();
    path_ = ::mkdtemp(pattern.data());
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string random_word(std::mt19937_64& gen) {
  static const std::vector<std::string> kPieces{"a", "b", "c", "d", "e", "k", "m", "o", "s", "t", "x", "é", "ß", "-", "(", ")"};
  std::uniform_int_distribution<std::size_t> len(1, 6), piece(0, kPieces.size() - 1);
  std::string w;
  for (std::size_t i = len(gen); i > 0; --i) w += kPieces[piece(gen)];
  return w;
}

inline std::string random_text(std::mt19937_64& gen, std::size_t words) {
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) out += (gen() % 7 == 0) ? "  " : " ";
    out += random_word(gen);
  }
  return out;
}

/// Non-overlapping spans, each covering a run of whole tokens.
inline std::vector<SpanKey> random_token_spans(std::mt19937_64& gen, const Document& doc, std::size_t max_spans) {
  const auto& tokens = doc.tokens();
  std::vector<SpanKey> spans;
  if (tokens.empty()) return spans;
  std::size_t t = gen() % 3;
  while (t < tokens.size() && spans.size() < max_spans) {
    const std::size_t len = 1 + gen() % 3;
    const std::size_t last = std::min(tokens.size() - 1, t + len - 1);
    spans.push_back({tokens[t].start, tokens[last].end});
    t = last + 1 + gen() % 4;
  }
  return spans;
}

/// A corpus of random documents with token-aligned, non-overlapping gold.
inline GoldCorpus random_corpus(std::mt19937_64& gen, std::size_t n_docs, std::size_t words = 20) {
  GoldCorpus corpus;
  for (std::size_t d = 0; d < n_docs; ++d) {
    const std::string id = std::to_string(100000 + d * 7 + gen() % 7);
    Document doc(id, random_text(gen, 1 + gen() % 5), random_text(gen, 1 + gen() % words));
    corpus.add_document(doc);
    for (const SpanKey& k : random_token_spans(gen, doc, gen() % 6)) {
      Span s{id, k.start, k.end, std::string(doc.slice(k.start, k.end)), std::nullopt, std::nullopt};
      if (gen() % 2) s.label = "Disease";
      if (s.label && gen() % 2) s.concept_id = "D" + std::to_string(gen() % 100000);
      corpus.add_gold(std::move(s));
    }
  }
  return corpus;
}

/// Spans near the gold: exact copies, shifted copies and fresh spans.
inline std::vector<SpanKey> noisy_copy(std::mt19937_64& gen, const Document& doc, const std::vector<SpanKey>& gold) {
  std::vector<SpanKey> out;
  for (const SpanKey& g : gold) {
    const auto roll = gen() % 4;
    if (roll == 0) continue;
    if (roll == 1 && g.end + 1 <= doc.full_text().size()) {
      out.push_back({g.start, g.end + 1});
    } else {
      out.push_back(g);
    }
  }
  for (const SpanKey& s : random_token_spans(gen, doc, gen() % 3)) out.push_back(s);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline Submission make_submission(const std::string& worker, const std::string& doc, std::vector<SpanKey> spans,
                                  DocContext context = DocContext::kRegular) {
  return Submission{worker, doc, normalize_spans(std::move(spans)), 0, context};
}

/// Deterministic corpus for lifecycle tests: documents "t0".."t{n}" are
/// training, "g*" gold-feedback and "r*" regular. Every document reads
/// "Title N" + body "alpha beta gamma delta epsilon" with gold on "beta" and
/// "delta epsilon".
inline GoldCorpus lifecycle_corpus(std::size_t training = 4, std::size_t gold = 3, std::size_t regular = 6) {
  GoldCorpus c;
  std::vector<DocId> t_ids, g_ids;
  auto add = [&](const std::string& id) {
    Document doc(id, "Title " + id, "alpha beta gamma delta epsilon");
    const std::size_t base = doc.title().size() + 1;
    c.add_document(doc);
    c.add_gold({id, base + 6, base + 10, "beta", std::string("Disease"), std::nullopt});
    c.add_gold({id, base + 17, base + 30, "delta epsilon", std::string("Disease"), std::nullopt});
  };
  for (std::size_t i = 0; i < training; ++i) {
    add("t" + std::to_string(i));
    t_ids.push_back("t" + std::to_string(i));
  }
  for (std::size_t i = 0; i < gold; ++i) {
    add("g" + std::to_string(i));
    g_ids.push_back("g" + std::to_string(i));
  }
  for (std::size_t i = 0; i < regular; ++i) add("r" + std::to_string(i));
  c.set_partition(t_ids, g_ids);
  return c;
}

inline SurveyResponse sample_survey() { return {"female", "30-39", "nurse", "bachelor", {"money", "interest"}}; }

/// Registers a worker and walks them through quiz, survey and training with
/// perfect answers. Returns the new ACTIVE worker.
inline WorkerId make_active_worker(Campaign& campaign) {
  const WorkerId id = campaign.register_worker();
  campaign.take_quiz(id, campaign.config().quiz_key);
  campaign.submit_survey(id, sample_survey());
  for (std::size_t i = 0; i < campaign.corpus().training_docs().size(); ++i) {
    const auto task = campaign.next_task(id);
    campaign.submit(id, task->doc_id, campaign.corpus().gold_keys(task->doc_id));
  }
  return id;
}

/// Increasing clock starting at a fixed instant.
inline Clock fake_clock() {
  auto t = std::make_shared<std::int64_t>(1'500'000'000'000);
  return [t] { return (*t)++; };
}

inline LifecycleConfig default_config(std::size_t gold_interval = 10, std::size_t redundancy = 15) {
  LifecycleConfig cfg;
  cfg.gold_interval = gold_interval;
  cfg.redundancy_target = redundancy;
  cfg.seed = 17;
  cfg.quiz_key = quiz_key(default_quiz_bank());
  return cfg;
}

}  // namespace crowdspan::testing
