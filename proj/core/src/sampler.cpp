#include "rumourkit/sampler.hpp"

#include <algorithm>
#include <cmath>

namespace rumourkit {

std::vector<std::uint64_t> decade_thresholds(std::uint64_t max_count) {
  std::vector<std::uint64_t> out{0};
  constexpr std::uint64_t kSteps[] = {1, 2, 5};
  for (std::uint64_t scale = 1;; scale *= 10) {
    for (auto step : kSteps) {
      out.push_back(step * scale);
      if (step * scale > max_count) return out;
    }
  }
}

nlohmann::json RetweetDistribution::to_json() const {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& [bound, count] : histogram) hist.push_back({{"lower", bound}, {"count", count}});
  nlohmann::json tail = nlohmann::json::array();
  for (const auto& [threshold, count] : ccdf) {
    tail.push_back({{"threshold", threshold}, {"count", count}});
  }
  return {{"total", total}, {"histogram", std::move(hist)}, {"ccdf", std::move(tail)}};
}

RetweetDistribution compute_distribution(std::span<const TweetRecord> records,
                                         std::span<const std::uint64_t> extra_thresholds) {
  if (records.empty()) throw EmptyCorpus();

  std::vector<std::uint64_t> counts;
  counts.reserve(records.size());
  for (const auto& r : records) counts.push_back(r.retweet_count);
  std::sort(counts.begin(), counts.end());

  const auto grid = decade_thresholds(counts.back());
  auto at_least = [&counts](std::uint64_t t) {
    return static_cast<std::size_t>(counts.end() -
                                    std::lower_bound(counts.begin(), counts.end(), t));
  };

  RetweetDistribution dist;
  dist.total = counts.size();

  std::vector<std::uint64_t> thresholds = grid;
  thresholds.insert(thresholds.end(), extra_thresholds.begin(), extra_thresholds.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  for (auto t : thresholds) dist.ccdf.emplace_back(t, at_least(t));

  // Buckets share the grid's lower bounds; the top grid point lies above every count.
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    dist.histogram.emplace_back(grid[i], at_least(grid[i]) - at_least(grid[i + 1]));
  }
  return dist;
}

RetweetDistribution compute_distribution(const CorpusStore& store,
                                         std::span<const std::uint64_t> extra_thresholds) {
  return compute_distribution(store.records(), extra_thresholds);
}

void SamplePlan::validate() const {
  if (min_retweets < 1) throw std::invalid_argument("min_retweets must be at least 1");
}

bool SamplePlan::admits(const TweetRecord& r) const {
  if (r.retweet_count < min_retweets) return false;
  if (exclude_replies && r.is_reply()) return false;
  if (exclude_retweets && r.is_retweet()) return false;
  if (languages && !languages->contains(r.lang)) return false;
  return true;
}

std::vector<TweetRecord> sample_sources(std::span<const TweetRecord> records,
                                        const SamplePlan& plan) {
  plan.validate();
  std::vector<TweetRecord> out;
  for (const auto& r : records) {
    if (plan.admits(r)) out.push_back(r);
  }
  std::sort(out.begin(), out.end(), chronological);
  return out;
}

std::vector<TweetRecord> sample_sources(const CorpusStore& store, const SamplePlan& plan) {
  return sample_sources(store.records(), plan);
}

std::optional<double> ThresholdRow::rumour_pct() const {
  if (!rumour_fraction) return std::nullopt;
  return std::round(*rumour_fraction * 10000.0) / 100.0;
}

std::vector<ThresholdRow> threshold_sensitivity(std::span<const TweetRecord> records,
                                                const AnnotationState& judgments,
                                                std::span<const std::uint64_t> thresholds,
                                                const SamplePlan& base) {
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    if (thresholds[i] <= thresholds[i - 1]) {
      throw std::invalid_argument("thresholds must be strictly increasing");
    }
  }
  std::vector<ThresholdRow> rows;
  rows.reserve(thresholds.size());
  for (auto t : thresholds) {
    SamplePlan plan = base;
    plan.min_retweets = t;
    plan.validate();
    ThresholdRow row;
    row.threshold = t;
    for (const auto& r : records) {
      if (!plan.admits(r)) continue;
      ++row.sampled;
      const auto label = judgments.label_of(r.id);
      if (!label || *label == Label::unsure) continue;
      ++row.annotated;
      if (*label == Label::rumour) ++row.rumours;
    }
    if (row.annotated > 0) {
      row.rumour_fraction = static_cast<double>(row.rumours) / static_cast<double>(row.annotated);
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<ThresholdRow> threshold_sensitivity(const CorpusStore& store,
                                                const AnnotationState& judgments,
                                                std::span<const std::uint64_t> thresholds,
                                                const SamplePlan& base) {
  return threshold_sensitivity(store.records(), judgments, thresholds, base);
}

nlohmann::json to_json(std::span<const ThresholdRow> rows) {
  auto out = nlohmann::json::array();
  for (const auto& row : rows) {
    const auto pct = row.rumour_pct();
    out.push_back({{"threshold", row.threshold},
                   {"sampled", row.sampled},
                   {"annotated", row.annotated},
                   {"rumours", row.rumours},
                   {"rumour_pct", pct ? nlohmann::json(*pct) : nlohmann::json(nullptr)}});
  }
  return out;
}

}  // namespace rumourkit
