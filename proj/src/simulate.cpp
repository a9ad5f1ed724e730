#include "crowdspan/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "crowdspan/errors.hpp"
#include "json.hpp"

namespace crowdspan {

namespace {

constexpr std::int64_t kSimEpochMs = 1'400'000'000'000;  // fixed logical start time
constexpr std::size_t kSpuriousRetries = 20;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::kInvalidDistribution, what); }

Distribution distribution_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "point") return Distribution::point(j.at("value").get<double>());
  if (kind == "uniform") return Distribution::uniform(j.at("low").get<double>(), j.at("high").get<double>());
  if (kind == "beta") return Distribution::beta(j.at("a").get<double>(), j.at("b").get<double>());
  if (kind == "truncated_normal") {
    return Distribution::truncated_normal(j.at("mean").get<double>(), j.at("stddev").get<double>(),
                                          j.at("low").get<double>(), j.at("high").get<double>());
  }
  invalid("unknown distribution kind '" + kind + "'");
}

// Token index range [first, last] covered by a span, if any.
std::optional<std::pair<std::size_t, std::size_t>> token_range(const std::vector<TokenBoundary>& tokens,
                                                               const SpanKey& span) {
  auto first = std::upper_bound(tokens.begin(), tokens.end(), span.start,
                                [](std::size_t pos, const TokenBoundary& t) { return pos < t.end; });
  if (first == tokens.end() || first->start >= span.end) return std::nullopt;
  auto last = std::lower_bound(first, tokens.end(), span.end,
                               [](const TokenBoundary& t, std::size_t pos) { return t.start < pos; });
  --last;
  return std::make_pair(static_cast<std::size_t>(first - tokens.begin()),
                        static_cast<std::size_t>(last - tokens.begin()));
}

bool overlaps_any(const SpanKey& s, std::span<const SpanKey> others) {
  return std::any_of(others.begin(), others.end(), [&](const SpanKey& o) { return overlaps(s, o); });
}

std::string random_word(Rng& rng) {
  const std::size_t len = 3 + rng.uniform_index(7);
  std::string w;
  for (std::size_t i = 0; i < len; ++i) w.push_back(static_cast<char>('a' + rng.uniform_index(26)));
  return w;
}

}  // namespace

Distribution Distribution::point(double value) { return {Kind::kPoint, value, 0.0, value, value}; }

Distribution Distribution::uniform(double low, double high) { return {Kind::kUniform, 0.0, 0.0, low, high}; }

Distribution Distribution::beta(double a, double b) { return {Kind::kBeta, a, b, 0.0, 1.0}; }

Distribution Distribution::truncated_normal(double mean, double stddev, double low, double high) {
  return {Kind::kTruncatedNormal, mean, stddev, low, high};
}

void Distribution::validate(double legal_low, double legal_high) const {
  auto finite = [](double v) { return std::isfinite(v); };
  switch (kind) {
    case Kind::kPoint:
      if (!finite(a)) invalid("point value must be finite");
      break;
    case Kind::kUniform:
      if (!finite(low) || !finite(high) || low > high) invalid("uniform needs low <= high");
      break;
    case Kind::kBeta:
      if (!(a > 0.0) || !(b > 0.0) || !finite(a) || !finite(b)) invalid("beta needs positive shapes");
      break;
    case Kind::kTruncatedNormal:
      if (!finite(a) || !(b > 0.0) || !finite(b) || !finite(low) || !finite(high) || low >= high) {
        invalid("truncated normal needs stddev > 0 and low < high");
      }
      break;
  }
  if (low < legal_low || high > legal_high) {
    invalid("distribution support [" + std::to_string(low) + ", " + std::to_string(high) + "] leaves [" +
            std::to_string(legal_low) + ", " + std::to_string(legal_high) + "]");
  }
}

double Distribution::sample(Rng& rng) const {
  switch (kind) {
    case Kind::kPoint: return a;
    case Kind::kUniform: return low + (high - low) * rng.uniform01();
    case Kind::kBeta: return rng.beta(a, b);
    case Kind::kTruncatedNormal:
      for (int i = 0; i < 10'000; ++i) {
        const double v = a + b * rng.normal();
        if (v >= low && v <= high) return v;
      }
      invalid("truncated normal support has negligible mass");
  }
  return a;
}

PopulationParams PopulationParams::heterogeneous(std::size_t n_workers) {
  PopulationParams p;
  p.miss = Distribution::beta(1.5, 12.0);
  p.spurious = Distribution::uniform(0.3, 1.5);
  p.boundary = Distribution::beta(1.2, 12.0);
  p.n_workers = n_workers;
  p.quiz_fail_miss_above = 0.8;
  return p;
}

PopulationParams PopulationParams::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open population file " + path);
  try {
    const auto j = nlohmann::json::parse(in);
    PopulationParams p;
    p.n_workers = j.at("n_workers").get<std::size_t>();
    p.miss = distribution_from_json(j.at("miss"));
    p.spurious = distribution_from_json(j.at("spurious"));
    p.boundary = distribution_from_json(j.at("boundary"));
    if (j.contains("quiz_fail_miss_above") && !j.at("quiz_fail_miss_above").is_null()) {
      p.quiz_fail_miss_above = j.at("quiz_fail_miss_above").get<double>();
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, "population file " + path + ": " + e.what());
  }
}

std::vector<SimWorkerProfile> sample_population(const PopulationParams& params, std::uint64_t seed) {
  if (params.n_workers == 0) throw Error(ErrorCode::kInvalidArgument, "population needs at least one worker");
  params.miss.validate(0.0, 1.0);
  params.boundary.validate(0.0, 1.0);
  params.spurious.validate(0.0, 100.0);
  std::vector<SimWorkerProfile> out;
  out.reserve(params.n_workers);
  for (std::size_t i = 0; i < params.n_workers; ++i) {
    Rng rng(derive_seed({seed, hash_string("population"), static_cast<std::uint64_t>(i)}));
    SimWorkerProfile p;
    char id[32];
    std::snprintf(id, sizeof(id), "S%04zu", i + 1);
    p.worker_id = id;
    p.p_miss = params.miss.sample(rng);
    p.p_spurious = params.spurious.sample(rng);
    p.p_boundary = params.boundary.sample(rng);
    p.ability_seed = rng.next();
    p.quiz_accuracy = params.quiz_fail_miss_above && p.p_miss > *params.quiz_fail_miss_above ? 0.7 : 1.0;
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<SpanKey> simulate_annotation(const SimWorkerProfile& profile, const Document& doc,
                                         std::span<const SpanKey> gold, Rng& rng) {
  const auto& tokens = doc.tokens();
  std::vector<SpanKey> sorted_gold(gold.begin(), gold.end());
  sorted_gold = normalize_spans(std::move(sorted_gold));

  std::vector<SpanKey> kept;
  for (const SpanKey& g : sorted_gold) {
    if (!rng.bernoulli(profile.p_miss)) kept.push_back(g);
  }

  std::vector<SpanKey> output;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    SpanKey span = kept[i];
    if (rng.bernoulli(profile.p_boundary)) {
      const std::size_t move = rng.uniform_index(4);
      if (auto range = token_range(tokens, span)) {
        auto [first, last] = *range;
        bool moved = true;
        switch (move) {
          case 0: moved = first > 0; if (moved) --first; break;            // start left
          case 1: moved = first < last; if (moved) ++first; break;         // start right
          case 2: moved = last > first; if (moved) --last; break;          // end left
          default: moved = last + 1 < tokens.size(); if (moved) ++last;    // end right
        }
        if (moved) span = {tokens[first].start, tokens[last].end};
      }
      if (span != kept[i]) {
        // Collides with a neighbour: the worker loses this mention.
        if (overlaps_any(span, output) || overlaps_any(span, std::span(kept).subspan(i + 1))) continue;
      }
    }
    output.push_back(span);
  }

  if (!tokens.empty() && profile.p_spurious > 0.0) {
    const double lambda = profile.p_spurious * static_cast<double>(tokens.size()) / 100.0;
    const std::size_t count = rng.poisson(lambda);
    for (std::size_t c = 0; c < count; ++c) {
      for (std::size_t attempt = 0; attempt < kSpuriousRetries; ++attempt) {
        const std::size_t len = 1 + rng.uniform_index(3);
        if (len > tokens.size()) continue;
        const std::size_t first = rng.uniform_index(tokens.size() - len + 1);
        const SpanKey span{tokens[first].start, tokens[first + len - 1].end};
        if (overlaps_any(span, sorted_gold) || overlaps_any(span, output)) continue;
        output.push_back(span);
        break;
      }
    }
  }
  return normalize_spans(std::move(output));
}

std::vector<bool> SimCampaignOptions::quiz_key_default() { return crowdspan::quiz_key(default_quiz_bank()); }

SimCampaignResult run_campaign(const GoldCorpus& corpus, const PopulationParams& params, std::size_t redundancy,
                               std::uint64_t seed, EventLog& log, const SimCampaignOptions& options) {
  if (redundancy == 0) throw Error(ErrorCode::kInvalidArgument, "redundancy must be at least 1");
  std::vector<SimWorkerProfile> profiles = sample_population(params, seed);
  profiles.insert(profiles.end(), options.extra_profiles.begin(), options.extra_profiles.end());

  std::int64_t tick = 0;
  Clock clock = [&tick] { return kSimEpochMs + 1000 * tick++; };
  LifecycleConfig config{options.gold_interval, redundancy, seed, options.quiz_key};
  Campaign campaign(corpus, config, log, clock);

  static const std::vector<std::string> kGenders{"female", "male"};
  static const std::vector<std::string> kAges{"18-20", "21-35", "36-45", "46+"};
  static const std::vector<std::string> kOccupations{"technical", "science", "student", "unemployed", "other"};
  static const std::vector<std::string> kEducation{"high school", "some college", "bachelor", "master", "phd"};
  static const std::vector<std::string> kMotivations{"money", "help science", "entertainment"};

  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    SimWorkerProfile& p = profiles[i];
    p.worker_id = campaign.register_worker();
    Rng rng(derive_seed({seed, hash_string(p.worker_id), hash_string("onboarding")}));

    std::vector<bool> answers = options.quiz_key;
    std::vector<std::size_t> order(answers.size());
    for (std::size_t q = 0; q < order.size(); ++q) order[q] = q;
    rng.shuffle(order);
    const auto wrong = answers.size() -
                       static_cast<std::size_t>(std::llround(p.quiz_accuracy * static_cast<double>(answers.size())));
    for (std::size_t q = 0; q < wrong; ++q) answers[order[q]] = !answers[order[q]];
    if (!campaign.take_quiz(p.worker_id, answers).passed) continue;

    SurveyResponse survey{kGenders[rng.uniform_index(kGenders.size())], kAges[rng.uniform_index(kAges.size())],
                          kOccupations[rng.uniform_index(kOccupations.size())],
                          kEducation[rng.uniform_index(kEducation.size())],
                          {kMotivations[rng.uniform_index(kMotivations.size())]}};
    campaign.submit_survey(p.worker_id, std::move(survey));
    pool.push_back(i);
  }

  std::vector<DocId> targets;
  for (const DocId& id : corpus.doc_ids()) {
    if (corpus.context(id) != DocContext::kTraining) targets.push_back(id);
  }
  auto saturated = [&] {
    return std::all_of(targets.begin(), targets.end(),
                       [&](const DocId& id) { return campaign.state().submission_count(id) >= redundancy; });
  };

  while (!pool.empty() && !saturated()) {
    std::vector<std::size_t> still_working;
    for (std::size_t idx : pool) {
      if (saturated()) break;
      const SimWorkerProfile& p = profiles[idx];
      auto task = campaign.next_task(p.worker_id);
      if (!task) continue;
      const Document& doc = corpus.document(task->doc_id);
      Rng rng(derive_seed({p.ability_seed, hash_string(task->doc_id)}));
      auto spans = simulate_annotation(p, doc, corpus.gold_keys(task->doc_id), rng);
      const SubmitOutcome outcome = campaign.submit(p.worker_id, task->doc_id, std::move(spans));
      if (outcome.worker.stage != WorkerStage::kBlocked) still_working.push_back(idx);
    }
    pool = std::move(still_working);
  }
  return {std::move(profiles), campaign.state()};
}

GoldCorpus make_synthetic_corpus(const SyntheticCorpusParams& params, std::uint64_t seed) {
  const std::size_t total = params.training_docs + params.gold_feedback_docs + params.regular_docs;
  GoldCorpus corpus;
  std::vector<DocId> training, gold;
  for (std::size_t d = 0; d < total; ++d) {
    Rng rng(derive_seed({seed, hash_string("synthetic-doc"), static_cast<std::uint64_t>(d)}));
    const DocId id = std::to_string(9'000'001 + d);
    std::string title;
    for (std::size_t t = 0; t < params.title_tokens; ++t) title += (t ? " " : "") + random_word(rng);

    std::vector<std::string> words;
    for (std::size_t t = 0; t < params.body_tokens; ++t) words.push_back(random_word(rng));
    // Mentions sit on token runs with at least one free token between them.
    std::vector<std::pair<std::size_t, std::size_t>> mentions;
    const std::size_t wanted = rng.poisson(params.mentions_per_100_tokens * params.body_tokens / 100.0);
    std::vector<bool> used(params.body_tokens, false);
    for (std::size_t m = 0; m < wanted; ++m) {
      for (int attempt = 0; attempt < 20; ++attempt) {
        const std::size_t len = 1 + rng.uniform_index(4);
        if (len + 2 > params.body_tokens) break;
        const std::size_t first = 1 + rng.uniform_index(params.body_tokens - len - 1);
        bool clear = true;
        for (std::size_t t = first - 1; t <= first + len && t < params.body_tokens; ++t) clear = clear && !used[t];
        if (!clear) continue;
        for (std::size_t t = first; t < first + len; ++t) used[t] = true;
        mentions.emplace_back(first, first + len - 1);
        break;
      }
    }
    std::string body;
    std::vector<std::size_t> offsets;
    for (std::size_t t = 0; t < words.size(); ++t) {
      if (t) body += ' ';
      offsets.push_back(body.size());
      body += words[t];
    }
    const std::size_t body_base = title.size() + 1;
    corpus.add_document(Document(id, title, body));
    std::sort(mentions.begin(), mentions.end());
    for (auto [first, last] : mentions) {
      Span s;
      s.doc_id = id;
      s.start = body_base + offsets[first];
      s.end = body_base + offsets[last] + words[last].size();
      s.surface = std::string(corpus.document(id).slice(s.start, s.end));
      s.label = "Disease";
      corpus.add_gold(std::move(s));
    }
    if (d < params.training_docs) {
      training.push_back(id);
    } else if (d < params.training_docs + params.gold_feedback_docs) {
      gold.push_back(id);
    }
  }
  corpus.set_partition(training, gold);
  return corpus;
}

}  // namespace crowdspan
