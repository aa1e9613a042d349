#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "rumourkit/corpus_store.hpp"
#include "rumourkit/tweet.hpp"

namespace rumourkit {

class ProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Source of direct replies. Every returned record must have in_reply_to
/// equal to the queried id.
class ReplyProvider {
 public:
  virtual ~ReplyProvider() = default;

  virtual std::vector<TweetRecord> direct_replies(std::string_view id) const = 0;

  /// One BFS level at a time. The default forwards to direct_replies.
  virtual std::vector<std::vector<TweetRecord>> direct_replies_batch(
      std::span<const std::string> ids) const;

  /// Replies whose parent the provider cannot resolve, excluding replies to
  /// `roots`. Providers that cannot enumerate return 0.
  virtual std::size_t count_orphans(const std::unordered_set<std::string>& roots) const;
};

/// Serves reply edges stored in a corpus.
class CorpusReplyProvider : public ReplyProvider {
 public:
  explicit CorpusReplyProvider(const CorpusStore& store) : store_(store) {}

  std::vector<TweetRecord> direct_replies(std::string_view id) const override;
  std::size_t count_orphans(const std::unordered_set<std::string>& roots) const override;

 private:
  const CorpusStore& store_;
};

struct ThreadNode {
  TweetRecord record;
  std::size_t depth = 0;  // >= 1; the source sits at depth 0
  std::string parent;

  friend bool operator==(const ThreadNode&, const ThreadNode&) = default;
};

/// A source tweet and its reply tree. Nodes are in breadth-first order:
/// by depth, then parent position, then timeline order among siblings.
struct Thread {
  TweetRecord source;
  std::vector<ThreadNode> nodes;

  std::size_t reply_count() const { return nodes.size(); }
  std::size_t max_depth() const;
  const std::string& id() const { return source.id; }

  friend bool operator==(const Thread&, const Thread&) = default;
};

struct BuildFailure {
  std::string source_id;
  std::string message;
};

struct ThreadBuildStats {
  std::size_t sources_processed = 0;
  std::size_t replies_collected = 0;
  std::size_t orphans_dropped = 0;
  std::size_t cycles_broken = 0;
  std::vector<BuildFailure> failures;

  double avg_replies_per_source() const {
    return sources_processed == 0 ? 0.0
                                  : static_cast<double>(replies_collected) /
                                        static_cast<double>(sources_processed);
  }
  nlohmann::json to_json() const;
};

/// Breadth-first expansion until the frontier is empty or `max_depth` is
/// reached. Edges that revisit a node are skipped and added to
/// `cycles_broken`. Throws std::invalid_argument if the source is a reply,
/// ProviderError on provider failure or contract violation.
Thread build_thread(const TweetRecord& source, const ReplyProvider& provider,
                    std::optional<std::size_t> max_depth = std::nullopt,
                    std::size_t* cycles_broken = nullptr);

struct ThreadBuildResult {
  std::vector<Thread> threads;
  ThreadBuildStats stats;
};

/// One thread per source; per-source failures are recorded and skipped.
ThreadBuildResult build_all(std::span<const TweetRecord> sources, const ReplyProvider& provider,
                            std::optional<std::size_t> max_depth = std::nullopt);

inline constexpr int kThreadFormatVersion = 1;

nlohmann::json thread_to_json(const Thread& thread);
/// Throws std::invalid_argument on a malformed or inconsistent document.
Thread thread_from_json(const nlohmann::json& doc);
/// Nested children form, for viewers.
nlohmann::json thread_tree_json(const Thread& thread);
/// One line per tweet, indented two spaces per depth level.
std::string render_indented(const Thread& thread);

std::filesystem::path thread_file_name(std::string_view source_id);

/// Threads of one dataset, indexed by source id and by UTC day.
class ThreadSet {
 public:
  ThreadSet() = default;
  explicit ThreadSet(std::vector<Thread> threads);

  /// Reads every `*.json` thread document in `dir`.
  static ThreadSet load(const std::filesystem::path& dir);
  /// Writes `<dir>/<source-id>.json` for every thread.
  void save(const std::filesystem::path& dir) const;

  std::size_t size() const { return threads_.size(); }
  bool empty() const { return threads_.empty(); }
  /// Timeline order of sources.
  std::span<const Thread> all() const { return threads_; }
  const Thread* find(std::string_view id) const;

  std::vector<CivilDate> days() const;
  std::vector<const Thread*> on_day(CivilDate day) const;
  std::unordered_set<std::string> ids() const;

 private:
  std::vector<Thread> threads_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::map<std::chrono::sys_days, std::vector<std::size_t>> by_day_;
};

}  // namespace rumourkit
