#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rumourkit/corpus_store.hpp"
#include "rumourkit/time.hpp"

namespace rumourkit {

/// Half-open UTC interval [start, end).
struct DateRange {
  Timestamp start;
  Timestamp end;

  bool contains(Timestamp t) const { return t >= start && t < end; }
};

struct IngestFilter {
  /// Unset disables keyword filtering; when set it must be non-empty.
  std::optional<std::vector<std::string>> keywords;
  /// Records lacking a language are "und" and fail an active filter.
  std::optional<std::set<std::string>> languages;
  std::optional<DateRange> date_range;

  /// Throws std::invalid_argument.
  void validate() const;
};

struct CorpusStats {
  std::size_t total_read = 0;
  std::size_t kept = 0;
  std::size_t dropped_duplicate = 0;
  std::size_t dropped_language = 0;
  std::size_t dropped_keyword = 0;
  std::size_t dropped_date = 0;
  std::size_t dropped_malformed = 0;

  std::size_t dropped() const {
    return dropped_duplicate + dropped_language + dropped_keyword + dropped_date +
           dropped_malformed;
  }
  bool conserved() const { return total_read == kept + dropped(); }
  nlohmann::json to_json() const;
};

/// Case-insensitive substring match of any keyword (simple Unicode folding).
bool keyword_match(std::string_view text, std::span<const std::string> keywords);

/// Keyword matcher with the keywords folded once up front.
class KeywordMatcher {
 public:
  explicit KeywordMatcher(std::span<const std::string> keywords);
  bool operator()(std::string_view text) const;

 private:
  std::vector<std::string> folded_;
};

/// Line-oriented record stream; a live adapter can implement this too.
class RecordSource {
 public:
  virtual ~RecordSource() = default;
  /// Next raw line, or nullopt at end of input.
  virtual std::optional<std::string> next_line() = 0;
};

class StreamRecordSource : public RecordSource {
 public:
  explicit StreamRecordSource(std::istream& in) : in_(in) {}
  std::optional<std::string> next_line() override;

 private:
  std::istream& in_;
};

/// Reads several JSON-lines files in order. Throws StorageError if a file
/// cannot be opened or read.
class FileRecordSource : public RecordSource {
 public:
  explicit FileRecordSource(std::vector<std::filesystem::path> paths);
  std::optional<std::string> next_line() override;

 private:
  std::vector<std::filesystem::path> paths_;
  std::size_t next_path_ = 0;
  std::ifstream current_;
};

/// Thrown when the store fails mid-ingest; carries what was done so far.
class IngestAborted : public StorageError {
 public:
  IngestAborted(const std::string& what, CorpusStats progress)
      : StorageError(what), progress_(progress) {}
  const CorpusStats& progress() const { return progress_; }

 private:
  CorpusStats progress_;
};

/// Filters, deduplicates and stores records, then commits the store.
/// Malformed lines are counted; storage failures throw IngestAborted.
CorpusStats ingest_corpus(RecordSource& input, const IngestFilter& filter, CorpusStore& store);

}  // namespace rumourkit
