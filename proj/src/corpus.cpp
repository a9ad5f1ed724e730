#include "crowdspan/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "crowdspan/errors.hpp"
#include "crowdspan/rng.hpp"

namespace crowdspan {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string describe(std::string_view doc_id, std::size_t start, std::size_t end) {
  std::ostringstream os;
  os << "document " << doc_id << " [" << start << "," << end << ")";
  return os.str();
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  for (;;) {
    std::size_t next = line.find(delim, pos);
    if (next == std::string_view::npos) {
      fields.push_back(line.substr(pos));
      return fields;
    }
    fields.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
}

std::optional<std::size_t> parse_offset(std::string_view text) {
  std::size_t value = 0;
  if (text.empty()) return std::nullopt;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

[[noreturn]] void malformed(std::size_t line_no, const std::string& what) {
  throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": " + what);
}

// Title or abstract line: "<pmid>|t|<text>" / "<pmid>|a|<text>".
std::pair<std::string_view, std::string_view> parse_text_line(std::string_view line, char tag,
                                                              std::size_t line_no) {
  const std::size_t first = line.find('|');
  if (first == std::string_view::npos || first == 0 || line.size() < first + 3 || line[first + 1] != tag ||
      line[first + 2] != '|') {
    malformed(line_no, std::string("expected '<pmid>|") + tag + "|<text>'");
  }
  return {line.substr(0, first), line.substr(first + 3)};
}

}  // namespace

bool overlaps(const SpanKey& a, const SpanKey& b) { return a.start < b.end && b.start < a.end; }

std::vector<SpanKey> normalize_spans(std::vector<SpanKey> spans) {
  std::sort(spans.begin(), spans.end());
  spans.erase(std::unique(spans.begin(), spans.end()), spans.end());
  return spans;
}

bool non_overlapping(const std::vector<SpanKey>& sorted_spans) {
  for (std::size_t i = 1; i < sorted_spans.size(); ++i) {
    if (sorted_spans[i].start < sorted_spans[i - 1].end) return false;
  }
  return true;
}

Document::Document(DocId doc_id, std::string title, std::string body)
    : doc_id_(std::move(doc_id)), title_(std::move(title)), body_(std::move(body)) {
  full_text_.reserve(title_.size() + 1 + body_.size());
  full_text_.append(title_).append(" ").append(body_);
  tokens_ = tokenize(full_text_);
}

std::string_view Document::slice(std::size_t start, std::size_t end) const {
  return std::string_view(full_text_).substr(start, end - start);
}

std::string_view to_string(DocContext context) {
  switch (context) {
    case DocContext::kTraining: return "TRAINING";
    case DocContext::kGoldFeedback: return "GOLD_FEEDBACK";
    case DocContext::kRegular: return "REGULAR";
  }
  return "REGULAR";
}

DocContext context_from_string(std::string_view text) {
  if (text == "TRAINING") return DocContext::kTraining;
  if (text == "GOLD_FEEDBACK") return DocContext::kGoldFeedback;
  if (text == "REGULAR") return DocContext::kRegular;
  throw Error(ErrorCode::kInvalidArgument, "unknown document context '" + std::string(text) + "'");
}

void GoldCorpus::add_document(Document doc) {
  const DocId id = doc.doc_id();
  if (entries_.count(id)) throw Error(ErrorCode::kDuplicateDocument, "document " + id + " appears twice");
  entries_.emplace(id, Entry{std::move(doc), {}, DocContext::kRegular});
  order_.push_back(id);
}

void GoldCorpus::add_gold(Span span) {
  auto it = entries_.find(span.doc_id);
  if (it == entries_.end()) throw Error(ErrorCode::kUnknownDocument, "gold span for unknown document " + span.doc_id);
  Entry& e = it->second;
  const std::size_t len = e.doc.full_text().size();
  if (span.start >= span.end || span.end > len) {
    throw Error(ErrorCode::kInvalidSpan, describe(span.doc_id, span.start, span.end) + " is outside the text");
  }
  if (e.doc.slice(span.start, span.end) != span.surface) {
    throw Error(ErrorCode::kOffsetMismatch, describe(span.doc_id, span.start, span.end) + ": text is '" +
                                                std::string(e.doc.slice(span.start, span.end)) +
                                                "' but annotation says '" + span.surface + "'");
  }
  auto pos = std::lower_bound(e.gold.begin(), e.gold.end(), span.key(),
                              [](const Span& s, const SpanKey& k) { return s.key() < k; });
  if ((pos != e.gold.end() && overlaps(pos->key(), span.key())) ||
      (pos != e.gold.begin() && overlaps(std::prev(pos)->key(), span.key()))) {
    throw Error(ErrorCode::kOverlappingSpans, describe(span.doc_id, span.start, span.end) +
                                                  " overlaps another gold annotation");
  }
  e.gold.insert(pos, std::move(span));
}

bool GoldCorpus::contains(std::string_view doc_id) const { return entries_.find(doc_id) != entries_.end(); }

const GoldCorpus::Entry& GoldCorpus::entry(std::string_view doc_id) const {
  auto it = entries_.find(doc_id);
  if (it == entries_.end()) throw Error(ErrorCode::kUnknownDocument, "unknown document " + std::string(doc_id));
  return it->second;
}

const Document& GoldCorpus::document(std::string_view doc_id) const { return entry(doc_id).doc; }

const std::vector<Span>& GoldCorpus::gold(std::string_view doc_id) const { return entry(doc_id).gold; }

std::vector<SpanKey> GoldCorpus::gold_keys(std::string_view doc_id) const {
  const auto& spans = gold(doc_id);
  std::vector<SpanKey> keys;
  keys.reserve(spans.size());
  for (const auto& s : spans) keys.push_back(s.key());
  return keys;
}

std::size_t GoldCorpus::gold_count() const {
  std::size_t n = 0;
  for (const auto& [id, e] : entries_) n += e.gold.size();
  return n;
}

DocContext GoldCorpus::context(std::string_view doc_id) const { return entry(doc_id).context; }

void GoldCorpus::set_partition(const std::vector<DocId>& training_in_order, const std::vector<DocId>& gold_feedback) {
  std::set<DocId> listed;
  for (const auto* list : {&training_in_order, &gold_feedback}) {
    for (const auto& id : *list) {
      entry(id);
      if (!listed.insert(id).second) {
        throw Error(ErrorCode::kInvalidArgument, "document " + id + " listed twice in the partition");
      }
    }
  }
  for (auto& [id, e] : entries_) e.context = DocContext::kRegular;
  for (const auto& id : training_in_order) entries_.find(id)->second.context = DocContext::kTraining;
  for (const auto& id : gold_feedback) entries_.find(id)->second.context = DocContext::kGoldFeedback;
  training_order_ = training_in_order;
}

std::vector<DocId> GoldCorpus::docs_in_context(DocContext context) const {
  std::vector<DocId> out;
  for (const auto& id : order_) {
    if (entries_.find(id)->second.context == context) out.push_back(id);
  }
  return out;
}

bool GoldCorpus::operator==(const GoldCorpus& other) const {
  if (order_ != other.order_ || training_order_ != other.training_order_) return false;
  for (const auto& id : order_) {
    const Entry& a = entries_.find(id)->second;
    const Entry& b = other.entries_.find(id)->second;
    if (!(a.doc == b.doc) || a.gold != b.gold || a.context != b.context) return false;
  }
  return true;
}

std::vector<TokenBoundary> tokenize(std::string_view text) {
  std::vector<TokenBoundary> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && is_space(text[i])) ++i;
    if (i == n) break;
    const std::size_t start = i;
    while (i < n && !is_space(text[i])) ++i;
    tokens.push_back({start, i});
  }
  return tokens;
}

Span snap_to_tokens(const Document& doc, std::size_t raw_start, std::size_t raw_end) {
  if (raw_start >= raw_end || raw_end > doc.full_text().size()) {
    throw Error(ErrorCode::kInvalidSpan, describe(doc.doc_id(), raw_start, raw_end) + " is not a valid selection");
  }
  const auto& tokens = doc.tokens();
  // First token whose end lies past raw_start.
  auto first = std::upper_bound(tokens.begin(), tokens.end(), raw_start,
                                [](std::size_t pos, const TokenBoundary& t) { return pos < t.end; });
  if (first == tokens.end() || first->start >= raw_end) {
    throw Error(ErrorCode::kNoTokenInRange, describe(doc.doc_id(), raw_start, raw_end) + " covers only whitespace");
  }
  // Last token starting before raw_end.
  auto last = std::lower_bound(first, tokens.end(), raw_end,
                               [](const TokenBoundary& t, std::size_t pos) { return t.start < pos; });
  --last;
  Span span;
  span.doc_id = doc.doc_id();
  span.start = first->start;
  span.end = last->end;
  span.surface = std::string(doc.slice(span.start, span.end));
  return span;
}

GoldCorpus parse_pubtator(std::string_view text) {
  GoldCorpus corpus;
  std::vector<std::string_view> lines = split(text, '\n');
  std::size_t i = 0;
  const std::size_t n = lines.size();
  auto strip_cr = [](std::string_view l) {
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    return l;
  };
  while (i < n) {
    std::string_view line = strip_cr(lines[i]);
    if (line.empty()) {
      ++i;
      continue;
    }
    const std::size_t title_line_no = i + 1;
    auto [pmid, title] = parse_text_line(line, 't', title_line_no);
    if (i + 1 >= n) malformed(title_line_no + 1, "missing abstract line for document " + std::string(pmid));
    std::string_view abstract_line = strip_cr(lines[i + 1]);
    auto [pmid_a, body] = parse_text_line(abstract_line, 'a', title_line_no + 1);
    if (pmid_a != pmid) {
      malformed(title_line_no + 1, "abstract line id " + std::string(pmid_a) + " does not match title id " +
                                       std::string(pmid));
    }
    corpus.add_document(Document(std::string(pmid), std::string(title), std::string(body)));
    i += 2;
    for (; i < n; ++i) {
      std::string_view ann = strip_cr(lines[i]);
      if (ann.empty()) break;
      const std::size_t line_no = i + 1;
      auto fields = split(ann, '\t');
      if (fields.size() < 4 || fields.size() > 6) {
        malformed(line_no, "annotation needs 4 to 6 tab-separated fields, got " + std::to_string(fields.size()));
      }
      if (fields[0] != pmid) {
        malformed(line_no, "annotation id " + std::string(fields[0]) + " outside its block " + std::string(pmid));
      }
      auto start = parse_offset(fields[1]);
      auto end = parse_offset(fields[2]);
      if (!start || !end) malformed(line_no, "offsets must be non-negative integers");
      Span span;
      span.doc_id = std::string(pmid);
      span.start = *start;
      span.end = *end;
      span.surface = std::string(fields[3]);
      if (fields.size() > 4 && !fields[4].empty()) span.label = std::string(fields[4]);
      if (fields.size() > 5 && !fields[5].empty()) span.concept_id = std::string(fields[5]);
      try {
        corpus.add_gold(std::move(span));
      } catch (const Error& e) {
        throw Error(e.code(), "line " + std::to_string(line_no) + ": " +
                                  e.detail());
      }
    }
  }
  return corpus;
}

GoldCorpus load_pubtator_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kCorpusLoadError, "cannot open corpus file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_pubtator(buf.str());
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.detail());
  }
}

std::string serialize_pubtator(const GoldCorpus& corpus) {
  std::string out;
  for (const auto& id : corpus.doc_ids()) {
    const Document& doc = corpus.document(id);
    out.append(id).append("|t|").append(doc.title()).append("\n");
    out.append(id).append("|a|").append(doc.body()).append("\n");
    for (const Span& s : corpus.gold(id)) {
      out.append(id).append("\t").append(std::to_string(s.start)).append("\t").append(std::to_string(s.end));
      out.append("\t").append(s.surface);
      if (s.label || s.concept_id) out.append("\t").append(s.label.value_or(""));
      if (s.concept_id) out.append("\t").append(*s.concept_id);
      out.append("\n");
    }
    out.append("\n");
  }
  return out;
}

void apply_partition(GoldCorpus& corpus, const PartitionConfig& config) {
  std::vector<DocId> shuffled = corpus.doc_ids();
  std::sort(shuffled.begin(), shuffled.end());
  Rng rng(derive_seed({config.seed, hash_string("partition")}));
  rng.shuffle(shuffled);

  std::set<DocId> taken;
  std::vector<DocId> training = config.training_ids;
  if (training.empty()) {
    if (config.training_count > shuffled.size()) {
      throw Error(ErrorCode::kInvalidArgument, "corpus has fewer documents than the training count");
    }
    training.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(config.training_count));
  }
  taken.insert(training.begin(), training.end());

  std::vector<DocId> gold = config.gold_ids;
  if (gold.empty() && config.gold_fraction > 0.0) {
    if (config.gold_fraction > 1.0) throw Error(ErrorCode::kInvalidArgument, "gold fraction above 1");
    const double raw = config.gold_fraction * static_cast<double>(corpus.size());
    auto wanted = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    for (const auto& id : shuffled) {
      if (gold.size() >= wanted) break;
      if (!taken.count(id)) gold.push_back(id);
    }
  }
  corpus.set_partition(training, gold);
}

}  // namespace crowdspan
