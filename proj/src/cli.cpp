#include "crowdspan/cli.hpp"

#include <signal.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "crowdspan/aggregate.hpp"
#include "crowdspan/api.hpp"
#include "crowdspan/errors.hpp"
#include "crowdspan/importer.hpp"
#include "crowdspan/redundancy.hpp"
#include "crowdspan/scoring.hpp"
#include "crowdspan/simulate.hpp"
#include "json.hpp"

namespace crowdspan {

namespace {

// Sends a table to --out when given, else to the tool's stdout.
class Output {
 public:
  Output(std::ostream& fallback, const std::string& path) : fallback_(fallback), path_(path) {}

  void write(const std::string& text) {
    if (path_.empty()) {
      fallback_ << text;
      return;
    }
    std::ofstream f(path_, std::ios::binary | std::ios::trunc);
    if (!f || !(f << text)) throw Error(ErrorCode::kStorageFailure, "cannot write " + path_);
  }

 private:
  std::ostream& fallback_;
  const std::string& path_;
};

std::string read_file(const std::string& path, ErrorCode code) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(code, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

PartitionConfig load_partition(const std::string& path) {
  try {
    const auto j = nlohmann::json::parse(read_file(path, ErrorCode::kInvalidArgument));
    PartitionConfig p;
    p.training_ids = j.value("training_ids", p.training_ids);
    p.gold_ids = j.value("gold_ids", p.gold_ids);
    p.training_count = j.value("training_count", p.training_count);
    p.gold_fraction = j.value("gold_fraction", p.gold_fraction);
    p.seed = j.value("seed", p.seed);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, "partition file " + path + ": " + e.what());
  }
}

std::string partition_json(const GoldCorpus& corpus) {
  nlohmann::json j{{"training_ids", corpus.training_docs()},
                   {"gold_ids", corpus.docs_in_context(DocContext::kGoldFeedback)}};
  return j.dump(2) + "\n";
}

// Documents keep the role recorded with their submissions: the first
// TRAINING or GOLD_FEEDBACK context seen for a document wins.
void partition_from_submissions(GoldCorpus& corpus, std::span<const Submission> submissions) {
  std::vector<DocId> training, gold;
  std::set<DocId> placed;
  for (const Submission& s : submissions) {
    if (s.context == DocContext::kRegular || !corpus.contains(s.doc_id) || !placed.insert(s.doc_id).second) continue;
    (s.context == DocContext::kTraining ? training : gold).push_back(s.doc_id);
  }
  corpus.set_partition(training, gold);
}

struct AnalysisInput {
  GoldCorpus corpus;
  std::vector<EventRecord> events;
  std::vector<Submission> submissions;
};

AnalysisInput load_analysis(const std::string& corpus_path, const std::string& log_path,
                            const std::string& partition_path) {
  AnalysisInput in{load_pubtator_file(corpus_path), read_log(log_path), {}};
  in.submissions = submissions_from_events(in.events);
  for (const Submission& s : in.submissions) {
    if (!in.corpus.contains(s.doc_id)) {
      throw Error(ErrorCode::kUnknownDocument, log_path + ": document " + s.doc_id + " is not in " + corpus_path);
    }
  }
  if (partition_path.empty()) {
    partition_from_submissions(in.corpus, in.submissions);
  } else {
    apply_partition(in.corpus, load_partition(partition_path));
  }
  return in;
}

// doc_id<TAB>start<TAB>end with a header row; every listed document is part
// of the hypothesis even when it has no spans (empty start and end).
Hypothesis load_hypothesis(const std::string& path, const GoldCorpus& corpus) {
  std::istringstream in(read_file(path, ErrorCode::kInvalidArgument));
  Hypothesis hyp;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "doc_id\tstart\tend") {
        throw Error(ErrorCode::kMalformedLine, path + " line 1: expected header doc_id<TAB>start<TAB>end");
      }
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string field;
    while (std::getline(ls, field, '\t')) f.push_back(field);
    if (line.back() == '\t') f.emplace_back();
    if (f.size() != 3) throw Error(ErrorCode::kMalformedLine, path + " line " + std::to_string(line_no));
    auto& spans = hyp[f[0]];
    if (f[1].empty() && f[2].empty()) continue;
    try {
      std::size_t a = 0, b = 0;
      const std::size_t start = std::stoull(f[1], &a), end = std::stoull(f[2], &b);
      if (a != f[1].size() || b != f[2].size()) throw std::invalid_argument("trailing text");
      spans.push_back({start, end});
    } catch (const std::exception&) {
      throw Error(ErrorCode::kMalformedLine, path + " line " + std::to_string(line_no) + ": bad offsets");
    }
  }
  for (auto& [doc, spans] : hyp) {
    if (!corpus.contains(doc)) throw Error(ErrorCode::kUnknownDocument, path + ": document " + doc);
    spans = normalize_spans(std::move(spans));
  }
  return hyp;
}

BestKMode parse_mode(const std::string& mode) { return mode == "per-document" ? BestKMode::kPerDocument : BestKMode::kGlobal; }

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

int serve(const ApiConfig& config, std::ostream& out) {
  // Block the shutdown signals before any thread starts so that only the
  // waiter below receives them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Service service(config);
  const int port = service.bind();
  out << "listening on " << config.host << ":" << port << std::endl;
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    service.stop();
  });
  service.run();
  // run() only returns after stop(); wake the waiter if something else
  // stopped the server.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Crowdsourced span annotation: campaign service and offline analysis", "crowdspan"};
  app.require_subcommand(1);
  std::string out_path;

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP annotation service");
  std::string config_path, corpus_path, log_path, host = "127.0.0.1", partition_path;
  int port = 8080;
  std::optional<std::uint64_t> seed;
  std::size_t redundancy = 15, gold_interval = 10;
  serve_cmd->add_option("--config", config_path, "JSON service config; other flags are ignored when given");
  serve_cmd->add_option("--corpus", corpus_path, "PubTator corpus");
  serve_cmd->add_option("--log", log_path, "Event log (created if missing)");
  serve_cmd->add_option("--host", host, "Listen address")->capture_default_str();
  serve_cmd->add_option("--port", port, "Listen port, 0 for any")->capture_default_str();
  serve_cmd->add_option("--seed", seed, "Seed for routing and partition");
  serve_cmd->add_option("--redundancy", redundancy, "Submissions wanted per document")->capture_default_str();
  serve_cmd->add_option("--gold-interval", gold_interval, "Every n-th task is a gold check")->capture_default_str();
  serve_cmd->add_option("--partition", partition_path, "JSON partition file");

  // validate-corpus
  auto* validate_cmd = app.add_subcommand("validate-corpus", "Parse a corpus and report its size");
  validate_cmd->add_option("--corpus", corpus_path, "PubTator corpus")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Score a hypothesis, an aggregate or each worker against gold");
  std::string hypothesis_path, submissions_path;
  std::optional<std::size_t> k;
  bool per_worker = false, include_training = false;
  eval_cmd->add_option("--corpus", corpus_path, "PubTator corpus")->required();
  auto* hyp_opt = eval_cmd->add_option("--hypothesis", hypothesis_path, "TSV doc_id, start, end");
  auto* subs_opt = eval_cmd->add_option("--submissions", submissions_path, "Event log");
  eval_cmd->add_option("--k", k, "Vote threshold for the aggregate");
  eval_cmd->add_flag("--per-worker", per_worker, "One row per worker");
  eval_cmd->add_flag("--include-training", include_training, "Score training documents too");
  eval_cmd->add_option("--partition", partition_path, "JSON partition file");
  eval_cmd->add_option("--out", out_path, "Write the table here");
  hyp_opt->excludes(subs_opt);

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Precision, recall and F for each vote threshold");
  std::size_t k_max = 15;
  sweep_cmd->add_option("--corpus", corpus_path, "PubTator corpus")->required();
  sweep_cmd->add_option("--submissions", submissions_path, "Event log")->required();
  sweep_cmd->add_option("--k-max", k_max, "Largest threshold")->capture_default_str();
  sweep_cmd->add_flag("--include-training", include_training, "Score training documents too");
  sweep_cmd->add_option("--partition", partition_path, "JSON partition file");
  sweep_cmd->add_option("--out", out_path, "Write the table here");

  // redundancy
  auto* red_cmd = app.add_subcommand("redundancy", "Best achievable F when fewer workers annotate each document");
  std::optional<std::size_t> n_max;
  std::size_t reps = kDefaultRepetitions;
  std::string mode = "global";
  red_cmd->add_option("--corpus", corpus_path, "PubTator corpus")->required();
  red_cmd->add_option("--submissions", submissions_path, "Event log")->required();
  red_cmd->add_option("--seed", seed, "Subsampling seed")->required();
  red_cmd->add_option("--n-max", n_max, "Largest sample size (default: most workers on any document)");
  red_cmd->add_option("--reps", reps, "Repetitions per sample size")->capture_default_str();
  red_cmd->add_option("--mode", mode, "Threshold choice")->check(CLI::IsMember({"global", "per-document"}))
      ->capture_default_str();
  red_cmd->add_flag("--include-training", include_training, "Score training documents too");
  red_cmd->add_option("--partition", partition_path, "JSON partition file");
  red_cmd->add_option("--out", out_path, "Write the table here");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Run a campaign with synthetic workers");
  std::string population_path, write_corpus, write_partition;
  std::size_t n_workers = 15;
  SyntheticCorpusParams synth;
  sim_cmd->add_option("--seed", seed, "Seed for everything random")->required();
  sim_cmd->add_option("--corpus", corpus_path, "PubTator corpus (default: synthetic)");
  sim_cmd->add_option("--partition", partition_path, "JSON partition file for --corpus");
  sim_cmd->add_option("--population", population_path, "JSON population file");
  sim_cmd->add_option("--workers", n_workers, "Workers in the default population")->capture_default_str();
  sim_cmd->add_option("--redundancy", redundancy, "Submissions wanted per document")->capture_default_str();
  sim_cmd->add_option("--gold-interval", gold_interval, "Every n-th task is a gold check")->capture_default_str();
  sim_cmd->add_option("--regular-docs", synth.regular_docs, "Synthetic regular documents")->capture_default_str();
  sim_cmd->add_option("--gold-docs", synth.gold_feedback_docs, "Synthetic gold-check documents")
      ->capture_default_str();
  sim_cmd->add_option("--log", log_path, "Write the event log here (must not exist)");
  sim_cmd->add_option("--write-corpus", write_corpus, "Save the corpus used");
  sim_cmd->add_option("--write-partition", write_partition, "Save the partition used");
  sim_cmd->add_option("--out", out_path, "Write the worker table here");

  // cost
  auto* cost_cmd = app.add_subcommand("cost", "Campaign cost");
  std::optional<std::int64_t> cost_workers, cost_documents;
  std::string annotation_fee = "0.06", survey_fee = "0.06", training_fee = "0.06";
  std::int64_t training_docs = 4;
  std::int64_t cost_redundancy = 15;
  cost_cmd->add_option("--workers", cost_workers, "Workers paid for survey and training");
  cost_cmd->add_option("--documents", cost_documents, "Documents annotated");
  cost_cmd->add_option("--corpus", corpus_path, "Count from a campaign: corpus");
  cost_cmd->add_option("--submissions", submissions_path, "Count from a campaign: event log");
  cost_cmd->add_option("--partition", partition_path, "JSON partition file");
  cost_cmd->add_option("--annotation-fee", annotation_fee, "Per annotation")->capture_default_str();
  cost_cmd->add_option("--survey-fee", survey_fee, "Per worker")->capture_default_str();
  cost_cmd->add_option("--training-fee", training_fee, "Per training document")->capture_default_str();
  cost_cmd->add_option("--training-docs", training_docs, "Training documents per worker")->capture_default_str();
  cost_cmd->add_option("--redundancy", cost_redundancy, "Workers per document")->capture_default_str();
  cost_cmd->add_option("--out", out_path, "Write the table here");

  // import
  auto* import_cmd = app.add_subcommand("import", "Append externally collected submissions to an event log");
  std::string input_path;
  std::optional<std::int64_t> timestamp;
  import_cmd->add_option("--corpus", corpus_path, "PubTator corpus")->required();
  import_cmd->add_option("--input", input_path, "TSV worker_id, doc_id, start, end")->required();
  import_cmd->add_option("--log", log_path, "Event log (created if missing)")->required();
  import_cmd->add_option("--partition", partition_path, "JSON partition file");
  import_cmd->add_option("--timestamp-ms", timestamp, "Time stamped on the events (default: now)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const CLI::App* scope = &app;
    for (const CLI::App* sub : app.get_subcommands()) scope = sub;
    err << scope->help();
    return kExitUsage;
  }

  Output sink(out, out_path);
  try {
    if (*serve_cmd) {
      ApiConfig config;
      if (!config_path.empty()) {
        config = ApiConfig::load(config_path);
      } else {
        if (corpus_path.empty() || !seed) {
          err << "error: serve needs --config, or --corpus and --seed\n" << serve_cmd->help();
          return kExitUsage;
        }
        config.corpus_path = corpus_path;
        if (!log_path.empty()) config.log_path = log_path;
        config.host = host;
        config.port = port;
        config.seed = *seed;
        config.redundancy = redundancy;
        config.gold_interval = gold_interval;
        config.partition.seed = *seed;
        if (!partition_path.empty()) config.partition = load_partition(partition_path);
        config.validate();
      }
      return serve(config, out);
    }

    if (*validate_cmd) {
      const GoldCorpus corpus = load_pubtator_file(corpus_path);
      out << corpus.size() << " documents, " << corpus.gold_count() << " gold spans\n";
      return kExitOk;
    }

    if (*eval_cmd) {
      if (hypothesis_path.empty() == submissions_path.empty()) {
        err << "error: eval needs exactly one of --hypothesis and --submissions\n" << eval_cmd->help();
        return kExitUsage;
      }
      if (!hypothesis_path.empty()) {
        GoldCorpus corpus = load_pubtator_file(corpus_path);
        if (!partition_path.empty()) apply_partition(corpus, load_partition(partition_path));
        const Hypothesis hyp = load_hypothesis(hypothesis_path, corpus);
        const Metrics m = evaluate_documents(corpus, hyp, evaluation_scope(corpus, include_training));
        sink.write(format_metrics_tsv_header() + "\n" + format_metrics_tsv(m) + "\n");
        return kExitOk;
      }
      AnalysisInput in = load_analysis(corpus_path, submissions_path, partition_path);
      if (per_worker) {
        std::string table = "worker_id\tdocuments\tmean_f\tstddev_f\n";
        for (const WorkerReport& r : worker_reports(in.submissions, in.corpus)) {
          table += r.worker_id + "\t" + std::to_string(r.documents_completed) + "\t" + fmt6(r.mean_f) + "\t" +
                   fmt6(r.stddev_f) + "\n";
        }
        sink.write(table);
        return kExitOk;
      }
      if (!k) {
        err << "error: eval --submissions needs --k or --per-worker\n";
        return kExitUsage;
      }
      const auto sweep = sweep_k(in.submissions, in.corpus, *k, {include_training});
      sink.write(format_metrics_tsv_header() + "\n" + format_metrics_tsv(sweep.back().metrics) + "\n");
      return kExitOk;
    }

    if (*sweep_cmd) {
      if (k_max == 0) {
        err << "error: --k-max must be at least 1\n";
        return kExitUsage;
      }
      AnalysisInput in = load_analysis(corpus_path, submissions_path, partition_path);
      sink.write(format_sweep_tsv(sweep_k(in.submissions, in.corpus, k_max, {include_training})));
      return kExitOk;
    }

    if (*red_cmd) {
      AnalysisInput in = load_analysis(corpus_path, submissions_path, partition_path);
      RedundancyOptions options{parse_mode(mode), include_training};
      const std::size_t n = n_max ? *n_max : max_annotators(in.submissions, in.corpus, include_training);
      if (n == 0) throw Error(ErrorCode::kNoSubmissions, submissions_path + " has no scorable submissions");
      sink.write(format_redundancy_tsv(redundancy_curve(in.submissions, in.corpus, n, reps, *seed, options)));
      return kExitOk;
    }

    if (*sim_cmd) {
      GoldCorpus corpus;
      if (corpus_path.empty()) {
        corpus = make_synthetic_corpus(synth, *seed);
      } else {
        corpus = load_pubtator_file(corpus_path);
        PartitionConfig p;
        p.seed = *seed;
        apply_partition(corpus, partition_path.empty() ? p : load_partition(partition_path));
      }
      const PopulationParams params =
          population_path.empty() ? PopulationParams::heterogeneous(n_workers) : PopulationParams::load(population_path);
      EventLog log;
      if (!log_path.empty()) {
        if (std::filesystem::exists(log_path)) {
          throw Error(ErrorCode::kInvalidArgument, log_path + " already exists");
        }
        log = EventLog::open(log_path, false);
      }
      SimCampaignOptions options;
      options.gold_interval = gold_interval;
      const SimCampaignResult result = run_campaign(corpus, params, redundancy, *seed, log, options);
      if (!write_corpus.empty()) Output(out, write_corpus).write(serialize_pubtator(corpus));
      if (!write_partition.empty()) Output(out, write_partition).write(partition_json(corpus));

      std::map<WorkerId, WorkerReport> reports;
      for (WorkerReport& r : worker_reports(result.state.submissions(), corpus)) reports[r.worker_id] = std::move(r);
      std::string table = "worker_id\tp_miss\tp_spurious\tp_boundary\tstate\tdocuments\tmean_f\n";
      for (const SimWorkerProfile& p : result.profiles) {
        const WorkerRecord* w = result.state.find_worker(p.worker_id);
        const auto it = reports.find(p.worker_id);
        table += p.worker_id + "\t" + fmt6(p.p_miss) + "\t" + fmt6(p.p_spurious) + "\t" + fmt6(p.p_boundary) + "\t" +
                 (w ? w->state_name() : "-") + "\t" +
                 std::to_string(it == reports.end() ? 0 : it->second.documents_completed) + "\t" +
                 (it == reports.end() ? std::string("-") : fmt6(it->second.mean_f)) + "\n";
      }
      sink.write(table);
      return kExitOk;
    }

    if (*cost_cmd) {
      CostParams params;
      params.per_annotation_fee = Money::parse(annotation_fee);
      params.survey_fee = Money::parse(survey_fee);
      params.training_fee_per_doc = Money::parse(training_fee);
      params.training_docs = training_docs;
      params.redundancy = cost_redundancy;
      std::int64_t workers = 0, documents = 0;
      if (!submissions_path.empty() || !corpus_path.empty()) {
        if (submissions_path.empty() || corpus_path.empty() || cost_workers || cost_documents) {
          err << "error: cost takes either --workers and --documents, or --corpus and --submissions\n";
          return kExitUsage;
        }
        const AnalysisInput in = load_analysis(corpus_path, submissions_path, partition_path);
        const CampaignState state = replay(in.events, in.corpus);
        workers = count_trained_workers(state);
        documents = count_paid_documents(state, in.corpus);
      } else {
        if (!cost_workers || !cost_documents) {
          err << "error: cost needs --workers and --documents\n" << cost_cmd->help();
          return kExitUsage;
        }
        workers = *cost_workers;
        documents = *cost_documents;
      }
      const CostBreakdown b = cost_breakdown(params, workers, documents);
      std::string table = "item\tamount\n";
      table += "workers\t" + std::to_string(workers) + "\n";
      table += "documents\t" + std::to_string(documents) + "\n";
      table += "per_worker_training\t" + b.per_worker_training.to_string() + "\n";
      table += "per_abstract\t" + b.per_abstract.to_string() + "\n";
      table += "training_total\t" + b.training_total.to_string() + "\n";
      table += "annotation_total\t" + b.annotation_total.to_string() + "\n";
      table += "total\t" + b.total.to_string() + "\n";
      sink.write(table);
      return kExitOk;
    }

    if (*import_cmd) {
      GoldCorpus corpus = load_pubtator_file(corpus_path);
      if (!partition_path.empty()) apply_partition(corpus, load_partition(partition_path));
      EventLog log = EventLog::open(log_path);
      const ImportSummary s =
          import_submissions_file(input_path, corpus, log, timestamp ? *timestamp : system_clock_ms());
      out << "imported " << s.submissions << " submissions (" << s.spans << " spans), registered "
          << s.workers_registered << " workers\n";
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    const bool runtime = e.code() == ErrorCode::kBindFailure || e.code() == ErrorCode::kStorageFailure;
    return runtime ? kExitRuntime : kExitData;
  } catch (const std::logic_error& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace crowdspan
