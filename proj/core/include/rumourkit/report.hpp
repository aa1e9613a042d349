#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rumourkit/annostore.hpp"
#include "rumourkit/corpus_store.hpp"
#include "rumourkit/threads.hpp"

namespace rumourkit {

/// Rounds half away from zero to one decimal.
double round1(double value);

/// One row of the per-day rumour table. Rows cover annotated threads only;
/// unsure threads count towards total_threads but not towards rumour_pct.
struct DayRow {
  std::optional<CivilDate> date;  // unset for the overall row
  std::size_t rumour_count = 0;
  std::size_t nonrumour_count = 0;
  std::size_t unsure_count = 0;
  std::size_t total_threads = 0;
  std::optional<double> rumour_pct;  // over rumour + non-rumour, 1 decimal
  double avg_thread_size = 0.0;      // 1 decimal
  double median_thread_size = 0.0;
  std::size_t story_count = 0;

  std::size_t annotated_threads() const { return rumour_count + nonrumour_count; }
  /// e.g. "15 Aug: 241 (45.0%), 535, avg 20.5, med 16, 17 stories".
  std::string render() const;
  nlohmann::json to_json() const;
};

struct DayTable {
  std::vector<DayRow> days;
  DayRow overall;  // story_count deduplicates stories spanning days

  std::string csv() const;
};

DayTable day_table(const ThreadSet& threads, const AnnotationState& state);

class EmptyInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Drops floor(trim_fraction * n) values from each end of the sorted
/// input and averages the rest. Requires 0 <= trim_fraction < 0.5.
double trimmed_mean(std::span<const double> values, double trim_fraction);

struct TimingStats {
  std::optional<double> overall_mean_s;
  std::optional<double> rumour_mean_s;
  std::optional<double> nonrumour_mean_s;
  std::size_t n_durations = 0;
  double trim_fraction = 0.05;

  nlohmann::json to_json() const;
};

TimingStats timing_stats(const AnnotationState& state, std::chrono::milliseconds session_gap,
                         double trim_fraction = 0.05);

/// Hourly UTC bins from 00:00 of `date`; at least 24 bins, extended to
/// cover replies posted after midnight.
struct HourHistogram {
  CivilDate date;
  std::vector<std::size_t> sources;
  std::vector<std::size_t> replies;

  nlohmann::json to_json() const;
};

/// Counts only threads whose current label is rumour. Throws
/// std::out_of_range for a date without threads.
HourHistogram hourly_histogram(const ThreadSet& threads, const AnnotationState& state,
                               CivilDate date);

struct SizeSummary {
  std::size_t n = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;

  nlohmann::json to_json() const;
};

/// Linear interpolation between closest ranks on sorted input.
double quantile(std::span<const double> sorted, double p);
SizeSummary summarize(std::vector<double> values);

/// Reply-count summaries per requested label. Throws EmptyInput when a
/// requested label has no annotated thread.
std::map<Label, SizeSummary> size_distribution(const ThreadSet& threads,
                                               const AnnotationState& state,
                                               std::span<const Label> labels);

struct ReportOptions {
  double trim_fraction = 0.05;
  std::chrono::milliseconds session_gap = std::chrono::minutes(10);
  std::vector<std::uint64_t> thresholds = {100, 250};
};

/// The report.json document. Threshold sensitivity runs over `corpus` when
/// given, otherwise over the thread sources.
nlohmann::json build_report(const ThreadSet& threads, const AnnotationState& state,
                            const ReportOptions& options, const CorpusStore* corpus = nullptr);

}  // namespace rumourkit
