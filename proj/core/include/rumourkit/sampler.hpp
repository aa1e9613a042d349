#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rumourkit/annostore.hpp"
#include "rumourkit/corpus_store.hpp"
#include "rumourkit/tweet.hpp"

namespace rumourkit {

class EmptyCorpus : public std::runtime_error {
 public:
  EmptyCorpus() : std::runtime_error("corpus is empty") {}
};

struct RetweetDistribution {
  /// (bucket lower bound, records in [bound, next bound)); last bucket is open.
  std::vector<std::pair<std::uint64_t, std::size_t>> histogram;
  /// (threshold, records with retweet_count >= threshold), thresholds ascending.
  std::vector<std::pair<std::uint64_t, std::size_t>> ccdf;
  std::size_t total = 0;

  nlohmann::json to_json() const;
};

/// 0, 1, 2, 5, 10, 20, 50, ... up to the first point above `max_count`.
std::vector<std::uint64_t> decade_thresholds(std::uint64_t max_count);

RetweetDistribution compute_distribution(std::span<const TweetRecord> records,
                                         std::span<const std::uint64_t> extra_thresholds = {});
/// Throws EmptyCorpus.
RetweetDistribution compute_distribution(const CorpusStore& store,
                                         std::span<const std::uint64_t> extra_thresholds = {});

struct SamplePlan {
  std::uint64_t min_retweets = 100;
  std::optional<std::set<std::string>> languages;
  bool exclude_replies = true;
  bool exclude_retweets = true;

  /// Throws std::invalid_argument.
  void validate() const;
  bool admits(const TweetRecord& r) const;
};

/// Records passing the plan (retweet_count >= min_retweets inclusive), in
/// timeline order.
std::vector<TweetRecord> sample_sources(std::span<const TweetRecord> records,
                                        const SamplePlan& plan);
std::vector<TweetRecord> sample_sources(const CorpusStore& store, const SamplePlan& plan);

struct ThresholdRow {
  std::uint64_t threshold = 0;
  std::size_t sampled = 0;
  std::size_t annotated = 0;  // rumour + non-rumour; unsure excluded
  std::size_t rumours = 0;
  /// Unset when no sampled tweet at this threshold is annotated.
  std::optional<double> rumour_fraction;

  /// rumour_fraction as a percentage rounded to two decimals.
  std::optional<double> rumour_pct() const;
};

/// Thresholds must be strictly increasing (std::invalid_argument).
/// `base` supplies the non-threshold plan fields.
std::vector<ThresholdRow> threshold_sensitivity(std::span<const TweetRecord> records,
                                                const AnnotationState& judgments,
                                                std::span<const std::uint64_t> thresholds,
                                                const SamplePlan& base = {});
std::vector<ThresholdRow> threshold_sensitivity(const CorpusStore& store,
                                                const AnnotationState& judgments,
                                                std::span<const std::uint64_t> thresholds,
                                                const SamplePlan& base = {});

nlohmann::json to_json(std::span<const ThresholdRow> rows);

}  // namespace rumourkit
