#pragma once

// Documents, spans and gold annotations in PubTator format.
//
// Offsets are zero-based, half-open, and count bytes of the UTF-8 full text
// (title, one space, body). The NCBI disease corpus is ASCII, where bytes and
// characters coincide.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crowdspan {

using DocId = std::string;
using WorkerId = std::string;

struct TokenBoundary {
  std::size_t start = 0;
  std::size_t end = 0;

  auto operator<=>(const TokenBoundary&) const = default;
};

/// Position of a span inside one document. Strict matching compares these only.
struct SpanKey {
  std::size_t start = 0;
  std::size_t end = 0;

  auto operator<=>(const SpanKey&) const = default;
};

bool overlaps(const SpanKey& a, const SpanKey& b);

/// Sorts, removes identical duplicates. Does not reject overlaps.
std::vector<SpanKey> normalize_spans(std::vector<SpanKey> spans);

/// True when the sorted, deduplicated set has no two overlapping members.
bool non_overlapping(const std::vector<SpanKey>& sorted_spans);

class Document {
 public:
  Document() = default;
  Document(DocId doc_id, std::string title, std::string body);

  const DocId& doc_id() const { return doc_id_; }
  const std::string& title() const { return title_; }
  const std::string& body() const { return body_; }
  const std::string& full_text() const { return full_text_; }
  const std::vector<TokenBoundary>& tokens() const { return tokens_; }

  std::string_view slice(std::size_t start, std::size_t end) const;

  bool operator==(const Document& other) const {
    return doc_id_ == other.doc_id_ && title_ == other.title_ && body_ == other.body_;
  }

 private:
  DocId doc_id_;
  std::string title_;
  std::string body_;
  std::string full_text_;
  std::vector<TokenBoundary> tokens_;
};

struct Span {
  DocId doc_id;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string surface;
  // Mention type and concept id are carried through parse/serialize only.
  std::optional<std::string> label;
  std::optional<std::string> concept_id;

  SpanKey key() const { return {start, end}; }

  bool operator==(const Span&) const = default;
};

enum class DocContext { kTraining, kGoldFeedback, kRegular };

std::string_view to_string(DocContext context);
DocContext context_from_string(std::string_view text);

class GoldCorpus {
 public:
  /// Throws DuplicateDocument.
  void add_document(Document doc);

  /// Validates bounds and slice equality (OffsetMismatch) and non-overlap
  /// with the document's existing gold spans (OverlappingSpans).
  void add_gold(Span span);

  bool contains(std::string_view doc_id) const;
  std::size_t size() const { return order_.size(); }
  bool empty() const { return order_.empty(); }

  /// Documents in load order.
  const std::vector<DocId>& doc_ids() const { return order_; }

  /// Throws UnknownDocument.
  const Document& document(std::string_view doc_id) const;

  /// Gold spans sorted by position. Throws UnknownDocument.
  const std::vector<Span>& gold(std::string_view doc_id) const;
  std::vector<SpanKey> gold_keys(std::string_view doc_id) const;
  std::size_t gold_count() const;

  DocContext context(std::string_view doc_id) const;

  /// Training documents in the fixed order every worker sees them.
  const std::vector<DocId>& training_docs() const { return training_order_; }

  /// Sets the partition. Every listed id must exist; unlisted documents become
  /// REGULAR. Throws UnknownDocument or InvalidArgument (id listed twice).
  void set_partition(const std::vector<DocId>& training_in_order, const std::vector<DocId>& gold_feedback);

  std::vector<DocId> docs_in_context(DocContext context) const;

  /// Field-wise equality over documents, spans and partition.
  bool operator==(const GoldCorpus& other) const;

 private:
  struct Entry {
    Document doc;
    std::vector<Span> gold;
    DocContext context = DocContext::kRegular;
  };

  const Entry& entry(std::string_view doc_id) const;

  std::map<DocId, Entry, std::less<>> entries_;
  std::vector<DocId> order_;
  std::vector<DocId> training_order_;
};

/// Maximal runs of non-whitespace bytes.
std::vector<TokenBoundary> tokenize(std::string_view text);

/// Expands a raw selection to the tokens it touches.
/// Throws InvalidSpan for out-of-range input and NoTokenInRange for a
/// whitespace-only selection.
Span snap_to_tokens(const Document& doc, std::size_t raw_start, std::size_t raw_end);

/// Throws MalformedLine, OffsetMismatch, DuplicateDocument, OverlappingSpans.
GoldCorpus parse_pubtator(std::string_view text);
GoldCorpus load_pubtator_file(const std::string& path);

std::string serialize_pubtator(const GoldCorpus& corpus);

struct PartitionConfig {
  // Explicit lists win over the seeded draw.
  std::vector<DocId> training_ids;
  std::vector<DocId> gold_ids;
  std::size_t training_count = 4;
  double gold_fraction = 0.10;
  std::uint64_t seed = 0;
};

/// Training docs: explicit list or the first training_count of a seeded
/// shuffle. Gold-feedback docs: explicit list or the next
/// ceil(gold_fraction * corpus size) of that shuffle (60 of 593 for the NCBI
/// training set). Everything else is REGULAR.
void apply_partition(GoldCorpus& corpus, const PartitionConfig& config);

}  // namespace crowdspan
