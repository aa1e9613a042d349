#include "rumourkit/ingest.hpp"

#include <stdexcept>

#include "rumourkit/text.hpp"

namespace rumourkit {

void IngestFilter::validate() const {
  if (keywords) {
    if (keywords->empty()) throw std::invalid_argument("keyword filter enabled with no keywords");
    for (const auto& k : *keywords) {
      if (k.empty()) throw std::invalid_argument("empty keyword");
    }
  }
  if (date_range && !(date_range->start < date_range->end)) {
    throw std::invalid_argument("date range start must precede end");
  }
}

nlohmann::json CorpusStats::to_json() const {
  return {
      {"total_read", total_read},
      {"kept", kept},
      {"dropped_duplicate", dropped_duplicate},
      {"dropped_language", dropped_language},
      {"dropped_keyword", dropped_keyword},
      {"dropped_date", dropped_date},
      {"dropped_malformed", dropped_malformed},
  };
}

KeywordMatcher::KeywordMatcher(std::span<const std::string> keywords) {
  folded_.reserve(keywords.size());
  for (const auto& k : keywords) folded_.push_back(fold_case(k));
}

bool KeywordMatcher::operator()(std::string_view text) const {
  if (text.empty()) return false;
  const auto haystack = fold_case(text);
  for (const auto& k : folded_) {
    if (!k.empty() && haystack.find(k) != std::string::npos) return true;
  }
  return false;
}

bool keyword_match(std::string_view text, std::span<const std::string> keywords) {
  return KeywordMatcher(keywords)(text);
}

std::optional<std::string> StreamRecordSource::next_line() {
  std::string line;
  if (!std::getline(in_, line)) return std::nullopt;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

FileRecordSource::FileRecordSource(std::vector<std::filesystem::path> paths)
    : paths_(std::move(paths)) {}

std::optional<std::string> FileRecordSource::next_line() {
  std::string line;
  while (true) {
    if (current_.is_open()) {
      if (std::getline(current_, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      if (current_.bad()) throw StorageError("read error in " + paths_[next_path_ - 1].string());
      current_.close();
    }
    if (next_path_ >= paths_.size()) return std::nullopt;
    current_.clear();
    current_.open(paths_[next_path_], std::ios::binary);
    if (!current_) throw StorageError("cannot open input " + paths_[next_path_].string());
    ++next_path_;
  }
}

CorpusStats ingest_corpus(RecordSource& input, const IngestFilter& filter, CorpusStore& store) {
  filter.validate();
  std::optional<KeywordMatcher> matcher;
  if (filter.keywords) matcher.emplace(*filter.keywords);

  CorpusStats stats;
  try {
    while (auto line = input.next_line()) {
      ++stats.total_read;
      TweetRecord record;
      try {
        record = parse_record(*line);
      } catch (const MalformedRecord&) {
        ++stats.dropped_malformed;
        continue;
      }

      if (store.has_seen(record.id)) {
        ++stats.dropped_duplicate;
        store.raise_retweet_count(record.id, record.retweet_count);
        continue;
      }
      if (filter.date_range && !filter.date_range->contains(record.created_at)) {
        ++stats.dropped_date;
        store.note_seen(std::move(record.id));
        continue;
      }
      if (filter.languages && !filter.languages->contains(record.lang)) {
        ++stats.dropped_language;
        store.note_seen(std::move(record.id));
        continue;
      }
      if (matcher && !(*matcher)(record.text)) {
        ++stats.dropped_keyword;
        store.note_seen(std::move(record.id));
        continue;
      }
      store.append(std::move(record));
      ++stats.kept;
    }
    store.commit();
  } catch (const StorageError& e) {
    throw IngestAborted(e.what(), stats);
  } catch (const std::ios_base::failure& e) {
    throw IngestAborted(e.what(), stats);
  }
  return stats;
}

}  // namespace rumourkit
