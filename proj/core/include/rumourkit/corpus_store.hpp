#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "rumourkit/time.hpp"
#include "rumourkit/tweet.hpp"

namespace rumourkit {

class StorageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// On-disk layout of a corpus directory:
//
//   MANIFEST             "#rumourkit-corpus v1", then `generation N`,
//                        one `segment <file>` line per segment, `index <file>`
//   seg-NNNNNN.jsonl     "#rumourkit-segment v1", then canonical records
//   index-NNNNNN.idx     "#rumourkit-index v1", then
//                          K <segment> <row> <retweet_count> <id>
//                          S <id>        (seen, dropped by a filter)
//
// Segments are immutable. Each commit writes one new segment and a new
// index generation, then swaps MANIFEST atomically, so readers that
// opened an older generation keep a consistent view.
class CorpusStore {
 public:
  /// Opens (creating if needed) a persistent store. Throws StorageError.
  static CorpusStore open(const std::filesystem::path& dir);
  static CorpusStore in_memory();

  CorpusStore(CorpusStore&&) noexcept;
  CorpusStore& operator=(CorpusStore&&) noexcept;
  ~CorpusStore();

  bool persistent() const;
  const std::filesystem::path& dir() const;

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::span<const TweetRecord> records() const { return records_; }
  const TweetRecord* find(std::string_view id) const;

  /// True for every id ever offered to the store, kept or not.
  bool has_seen(std::string_view id) const;

  std::vector<CivilDate> days() const;
  std::vector<const TweetRecord*> on_day(CivilDate day) const;

  /// Records whose in_reply_to equals `id`, in timeline order.
  std::vector<const TweetRecord*> replies_to(std::string_view id) const;
  /// Records whose in_reply_to refers to an id that is not stored.
  std::vector<const TweetRecord*> dangling_replies() const;

  // -- single writer ------------------------------------------------------
  /// Adds a record; its id must not have been seen.
  void append(TweetRecord record);
  /// Remembers an id that was read but filtered out.
  void note_seen(std::string id);
  /// Keeps the maximum retweet count observed for a stored record.
  void raise_retweet_count(std::string_view id, std::uint64_t count);
  /// Persists pending changes (no-op for in-memory stores).
  void commit();

 private:
  CorpusStore() = default;

  struct Location {
    std::uint32_t segment = 0;
    std::uint32_t row = 0;
  };

  void index_record(std::size_t pos);
  void load();

  std::filesystem::path dir_;
  bool persistent_ = false;

  std::vector<TweetRecord> records_;
  std::vector<Location> locations_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_set<std::string> seen_only_;
  std::map<std::chrono::sys_days, std::vector<std::size_t>> by_day_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_parent_;

  std::uint64_t generation_ = 0;
  std::vector<std::string> segments_;
  std::size_t committed_ = 0;
  bool dirty_ = false;
};

}  // namespace rumourkit
