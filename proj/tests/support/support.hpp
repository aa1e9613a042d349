#pragma once

// Fixture generators and brute-force oracles shared by the unit and
// acceptance tests. Oracles deliberately avoid the library's algorithms.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rumourkit/annostore.hpp"
#include "rumourkit/threads.hpp"
#include "rumourkit/tweet.hpp"

namespace rumourkit::testing {

/// Deterministic across standard libraries, unlike std::uniform_*.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return unit() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

/// Unique directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);
std::string read_text(const std::filesystem::path& path);

TweetRecord tweet(std::string id, std::int64_t epoch_s, std::uint64_t retweets = 0,
                  std::optional<std::string> parent = std::nullopt, std::string text = "");

/// 2014-08-DD at HH:MM:SS UTC.
Timestamp aug2014(unsigned day, unsigned hour = 0, unsigned minute = 0, unsigned second = 0);

// -- reference dataset -------------------------------------------------

/// Four days of threads and one annotator's judgments, shaped to the
/// target per-day counts, story totals, retweet split and timing means.
struct ReferenceFixture {
  ThreadSet threads;
  std::vector<Event> events;
  AnnotationState state;
};
const ReferenceFixture& reference_fixture();

/// Writes `<dir>/threads/*.json` and `<dir>/annotations.log`.
void write_reference_fixture(const std::filesystem::path& dir);

/// Names of the stories with fixed target sizes.
inline constexpr const char* kRobberyStory = "robbery involvement";
inline constexpr const char* kOfficerStory = "officer name announcement";
inline constexpr const char* kShootingStory = "new shooting claim";
inline constexpr const char* kPentagonStory = "pentagon military-grade weapons";
inline constexpr const char* kIsraelStory = "police trained by israel";

/// Duration pools (milliseconds) that the fixture feeds to rumour and
/// non-rumour judgments.
std::vector<std::int64_t> reference_rumour_durations_ms();
std::vector<std::int64_t> reference_nonrumour_durations_ms();

// -- generators -----------------------------------------------------------

struct ForestShape {
  std::size_t max_nodes = 1000;
  double source_probability = 0.05;
  double orphan_probability = 0.01;
  double retweet_probability = 0.02;
};

/// Sources, replies attached to random earlier nodes, some replies to
/// unknown ids, some retweets. Timestamps are random, not causal.
std::vector<TweetRecord> random_forest(Rng& rng, const ForestShape& shape = {});

/// Power-law retweet counts, mixed languages, some replies and retweets.
std::vector<TweetRecord> random_corpus(Rng& rng, std::size_t n);

/// 12,595 sources with 262,495 replies in total.
std::vector<TweetRecord> average_replies_fixture();

// -- oracles --------------------------------------------------------------

struct ClosureEntry {
  std::size_t depth = 0;
  std::string parent;
  friend bool operator==(const ClosureEntry&, const ClosureEntry&) = default;
};

/// Every record reachable from `source_id` by reply edges, found by
/// repeated relaxation over the whole list.
std::map<std::string, ClosureEntry> closure_oracle(const std::vector<TweetRecord>& records,
                                                   const std::string& source_id);

double trimmed_mean_oracle(std::vector<double> values, double fraction);
/// Linear interpolation between closest ranks.
double quantile_oracle(std::vector<double> values, double p);

/// Latest judgment per thread by scanning the log.
std::map<std::string, Judgment> current_view_oracle(const std::vector<Event>& events);

/// (thread, label, seconds), recomputed by sorting events per annotator.
struct DurationRow {
  std::string thread_id;
  Label label;
  double seconds;
  friend bool operator==(const DurationRow&, const DurationRow&) = default;
};
std::vector<DurationRow> durations_oracle(const std::vector<Event>& events,
                                          std::int64_t session_gap_ms);

}  // namespace rumourkit::testing
