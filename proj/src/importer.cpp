#include "crowdspan/importer.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "crowdspan/errors.hpp"
#include "crowdspan/lifecycle.hpp"

namespace crowdspan {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    const std::size_t tab = line.find('\t', pos);
    fields.push_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
    if (tab == std::string_view::npos) break;
    pos = tab + 1;
  }
  return fields;
}

std::size_t parse_offset(std::string_view text, std::size_t line_no) {
  std::size_t value = 0;
  if (text.empty()) throw Error(ErrorCode::kImportError, "line " + std::to_string(line_no) + ": empty offset");
  for (char c : text) {
    if (c < '0' || c > '9') {
      throw Error(ErrorCode::kImportError,
                  "line " + std::to_string(line_no) + ": offset '" + std::string(text) + "' is not a number");
    }
    value = value * 10 + static_cast<std::size_t>(c - '0');
  }
  return value;
}

struct Pending {
  WorkerId worker_id;
  DocId doc_id;
  std::vector<SpanKey> spans;
};

}  // namespace

ImportSummary import_submissions(std::string_view tsv, const GoldCorpus& corpus, EventLog& log,
                                 std::int64_t at_ms) {
  const CampaignState existing = replay(log.events(), corpus);

  std::vector<Pending> pending;
  std::map<std::pair<WorkerId, DocId>, std::size_t> index;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos < tsv.size()) {
    std::size_t nl = tsv.find('\n', pos);
    if (nl == std::string_view::npos) nl = tsv.size();
    std::string_view line = tsv.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() != 4 || fields[0] != "worker_id" || fields[1] != "doc_id" || fields[2] != "start" ||
          fields[3] != "end") {
        throw Error(ErrorCode::kImportError, "line " + std::to_string(line_no) +
                                                 ": expected header worker_id<TAB>doc_id<TAB>start<TAB>end");
      }
      continue;
    }
    if (fields.size() != 4) {
      throw Error(ErrorCode::kImportError,
                  "line " + std::to_string(line_no) + ": expected 4 fields, found " + std::to_string(fields.size()));
    }
    const WorkerId worker(fields[0]);
    const DocId doc(fields[1]);
    if (worker.empty() || doc.empty()) {
      throw Error(ErrorCode::kImportError, "line " + std::to_string(line_no) + ": empty worker or document id");
    }
    if (!corpus.contains(doc)) {
      throw Error(ErrorCode::kUnknownDocument, "line " + std::to_string(line_no) + ": document " + doc);
    }
    auto [it, inserted] = index.emplace(std::make_pair(worker, doc), pending.size());
    if (inserted) pending.push_back({worker, doc, {}});
    Pending& p = pending[it->second];
    if (fields[2].empty() && fields[3].empty()) continue;
    const std::size_t start = parse_offset(fields[2], line_no);
    const std::size_t end = parse_offset(fields[3], line_no);
    try {
      const Span snapped = snap_to_tokens(corpus.document(doc), start, end);
      p.spans.push_back(snapped.key());
    } catch (const Error& e) {
      throw Error(ErrorCode::kImportError, "line " + std::to_string(line_no) + ": " + e.detail());
    }
  }

  for (Pending& p : pending) {
    p.spans = normalize_spans(std::move(p.spans));
    if (!non_overlapping(p.spans)) {
      throw Error(ErrorCode::kOverlappingSpans, "worker " + p.worker_id + " document " + p.doc_id);
    }
    for (std::size_t i : existing.submissions_for(p.doc_id)) {
      if (existing.submissions()[i].worker_id == p.worker_id) {
        throw Error(ErrorCode::kDuplicateSubmission, "worker " + p.worker_id + " document " + p.doc_id +
                                                         " is already in the log");
      }
    }
  }

  // Replaying a scratch copy first means a failure cannot leave a half import.
  std::vector<EventRecord> planned;
  ImportSummary summary;
  std::set<WorkerId> known;
  for (const auto& [id, w] : existing.workers()) known.insert(id);
  std::uint64_t seq = log.last_sequence();
  for (const Pending& p : pending) {
    if (known.insert(p.worker_id).second) {
      planned.push_back({++seq, at_ms, WorkerRegistered{p.worker_id, std::nullopt}});
      ++summary.workers_registered;
    }
    planned.push_back(
        {++seq, at_ms, Submitted{p.worker_id, p.doc_id, p.spans, corpus.context(p.doc_id), std::nullopt, true}});
    ++summary.submissions;
    summary.spans += p.spans.size();
  }
  CampaignState check = existing;
  for (const EventRecord& e : planned) check.apply(e, corpus);
  for (EventRecord& e : planned) log.append(std::move(e));
  return summary;
}

ImportSummary import_submissions_file(const std::string& path, const GoldCorpus& corpus, EventLog& log,
                                      std::int64_t at_ms) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kImportError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return import_submissions(buf.str(), corpus, log, at_ms);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.detail());
  }
}

}  // namespace crowdspan
