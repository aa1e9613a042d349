#include "rumourkit/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "rumourkit/sampler.hpp"

namespace rumourkit {
namespace {

using nlohmann::json;

std::string fixed1(double v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.1f", v);
  return buf.data();
}

// Medians of even-sized sets can land on .5.
std::string compact(double v) {
  if (v == std::floor(v)) return std::to_string(static_cast<long long>(v));
  return fixed1(v);
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

struct RowBuilder {
  DayRow row;
  std::vector<double> sizes;
  std::set<std::string> stories;

  void add(const Thread& t, const Judgment& jd) {
    ++row.total_threads;
    switch (jd.label) {
      case Label::rumour:
        ++row.rumour_count;
        break;
      case Label::non_rumour:
        ++row.nonrumour_count;
        break;
      case Label::unsure:
        ++row.unsure_count;
        break;
    }
    if (jd.story_id) stories.insert(*jd.story_id);
    sizes.push_back(static_cast<double>(t.reply_count()));
  }

  DayRow finish() {
    if (row.annotated_threads() > 0) {
      row.rumour_pct = round1(100.0 * static_cast<double>(row.rumour_count) /
                              static_cast<double>(row.annotated_threads()));
    }
    if (!sizes.empty()) {
      std::sort(sizes.begin(), sizes.end());
      row.avg_thread_size =
          round1(std::accumulate(sizes.begin(), sizes.end(), 0.0) / static_cast<double>(sizes.size()));
      row.median_thread_size = quantile(sizes, 0.5);
    }
    row.story_count = stories.size();
    return row;
  }
};

}  // namespace

double round1(double value) { return std::round(value * 10.0) / 10.0; }

std::string DayRow::render() const {
  const std::string label = date ? format_day_label(*date) : "Overall";
  const std::string pct = rumour_pct ? fixed1(*rumour_pct) + "%" : "n/a";
  return label + ": " + std::to_string(rumour_count) + " (" + pct + "), " +
         std::to_string(total_threads) + ", avg " + fixed1(avg_thread_size) + ", med " +
         compact(median_thread_size) + ", " + std::to_string(story_count) +
         (story_count == 1 ? " story" : " stories");
}

json DayRow::to_json() const {
  return {{"date", date ? json(format_date(*date)) : json(nullptr)},
          {"label", date ? format_day_label(*date) : std::string("Overall")},
          {"rumour_count", rumour_count},
          {"nonrumour_count", nonrumour_count},
          {"unsure_count", unsure_count},
          {"annotated_threads", annotated_threads()},
          {"total_threads", total_threads},
          {"rumour_pct", optional_number(rumour_pct)},
          {"avg_thread_size", avg_thread_size},
          {"median_thread_size", median_thread_size},
          {"story_count", story_count}};
}

std::string DayTable::csv() const {
  std::string out = "day,rumours,rumour_pct,threads,avg_size,median_size,stories\n";
  auto line = [&out](const DayRow& r) {
    out += (r.date ? format_date(*r.date) : std::string("overall")) + ',' +
           std::to_string(r.rumour_count) + ',' + (r.rumour_pct ? fixed1(*r.rumour_pct) : "") +
           ',' + std::to_string(r.total_threads) + ',' + fixed1(r.avg_thread_size) + ',' +
           compact(r.median_thread_size) + ',' + std::to_string(r.story_count) + '\n';
  };
  for (const auto& r : days) line(r);
  line(overall);
  return out;
}

DayTable day_table(const ThreadSet& threads, const AnnotationState& state) {
  DayTable table;
  RowBuilder overall;
  for (const auto day : threads.days()) {
    RowBuilder builder;
    builder.row.date = day;
    for (const auto* t : threads.on_day(day)) {
      const auto it = state.current.find(t->id());
      if (it == state.current.end()) continue;
      builder.add(*t, it->second);
      overall.add(*t, it->second);
    }
    if (builder.row.total_threads > 0) table.days.push_back(builder.finish());
  }
  table.overall = overall.finish();
  return table;
}

double trimmed_mean(std::span<const double> values, double trim_fraction) {
  if (values.empty()) throw EmptyInput("trimmed mean of an empty sample");
  if (!(trim_fraction >= 0.0 && trim_fraction < 0.5)) {
    throw std::invalid_argument("trim fraction must lie in [0, 0.5)");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = sorted.size();
  // The epsilon keeps products such as 0.05 * 60 from flooring to 2.
  const auto k = static_cast<std::size_t>(std::floor(trim_fraction * static_cast<double>(n) + 1e-9));
  const auto first = sorted.begin() + static_cast<std::ptrdiff_t>(k);
  const auto last = sorted.end() - static_cast<std::ptrdiff_t>(k);
  return std::accumulate(first, last, 0.0) / static_cast<double>(n - 2 * k);
}

json TimingStats::to_json() const {
  return {{"overall_mean_s", optional_number(overall_mean_s)},
          {"rumour_mean_s", optional_number(rumour_mean_s)},
          {"nonrumour_mean_s", optional_number(nonrumour_mean_s)},
          {"n_durations", n_durations},
          {"trim_fraction", trim_fraction}};
}

TimingStats timing_stats(const AnnotationState& state, std::chrono::milliseconds session_gap,
                         double trim_fraction) {
  TimingStats stats;
  stats.trim_fraction = trim_fraction;
  std::vector<double> all, rumour, nonrumour;
  for (const auto& d : annotation_durations(state, session_gap)) {
    all.push_back(d.seconds);
    if (d.label == Label::rumour) rumour.push_back(d.seconds);
    if (d.label == Label::non_rumour) nonrumour.push_back(d.seconds);
  }
  stats.n_durations = all.size();
  if (!all.empty()) stats.overall_mean_s = trimmed_mean(all, trim_fraction);
  if (!rumour.empty()) stats.rumour_mean_s = trimmed_mean(rumour, trim_fraction);
  if (!nonrumour.empty()) stats.nonrumour_mean_s = trimmed_mean(nonrumour, trim_fraction);
  return stats;
}

json HourHistogram::to_json() const {
  return {{"date", format_date(date)},
          {"start", format_iso8601(start_of_day(date))},
          {"step_s", 3600},
          {"rumour_sources", sources},
          {"rumour_replies", replies}};
}

HourHistogram hourly_histogram(const ThreadSet& threads, const AnnotationState& state,
                               CivilDate date) {
  const auto on_day = threads.on_day(date);
  if (on_day.empty()) throw std::out_of_range("no threads on " + format_date(date));

  const auto start = start_of_day(date);
  auto bin = [start](Timestamp t) -> std::size_t {
    if (t < start) return 0;
    return static_cast<std::size_t>(std::chrono::floor<std::chrono::hours>(t - start).count());
  };

  HourHistogram h{date, std::vector<std::size_t>(24, 0), std::vector<std::size_t>(24, 0)};
  auto bump = [](std::vector<std::size_t>& series, std::vector<std::size_t>& other, std::size_t b) {
    if (b >= series.size()) {
      series.resize(b + 1, 0);
      other.resize(b + 1, 0);
    }
    ++series[b];
  };
  for (const auto* t : on_day) {
    if (state.label_of(t->id()) != Label::rumour) continue;
    bump(h.sources, h.replies, bin(t->source.created_at));
    for (const auto& node : t->nodes) bump(h.replies, h.sources, bin(node.record.created_at));
  }
  return h;
}

json SizeSummary::to_json() const {
  return {{"n", n}, {"min", min}, {"q1", q1}, {"median", median},
          {"q3", q3}, {"max", max}, {"mean", mean}};
}

double quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw EmptyInput("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

SizeSummary summarize(std::vector<double> values) {
  if (values.empty()) throw EmptyInput("summary of an empty sample");
  std::sort(values.begin(), values.end());
  SizeSummary s;
  s.n = values.size();
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile(values, 0.25);
  s.median = quantile(values, 0.5);
  s.q3 = quantile(values, 0.75);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return s;
}

std::map<Label, SizeSummary> size_distribution(const ThreadSet& threads,
                                               const AnnotationState& state,
                                               std::span<const Label> labels) {
  std::map<Label, std::vector<double>> sizes;
  for (const auto& t : threads.all()) {
    if (const auto label = state.label_of(t.id())) {
      sizes[*label].push_back(static_cast<double>(t.reply_count()));
    }
  }
  std::map<Label, SizeSummary> out;
  for (const auto label : labels) {
    auto it = sizes.find(label);
    if (it == sizes.end()) {
      throw EmptyInput("no annotated threads labelled " + std::string(to_string(label)));
    }
    out[label] = summarize(it->second);
  }
  return out;
}

json build_report(const ThreadSet& threads, const AnnotationState& state,
                  const ReportOptions& options, const CorpusStore* corpus) {
  const auto table = day_table(threads, state);
  json rows = json::array();
  json text = json::array();
  for (const auto& r : table.days) {
    rows.push_back(r.to_json());
    text.push_back(r.render());
  }
  text.push_back(table.overall.render());

  json hourly = json::array();
  for (const auto& r : table.days) hourly.push_back(hourly_histogram(threads, state, *r.date).to_json());

  json sizes = json::object();
  for (const auto label : {Label::rumour, Label::non_rumour}) {
    const std::array<Label, 1> one{label};
    try {
      sizes[std::string(to_string(label))] = size_distribution(threads, state, one).at(label).to_json();
    } catch (const EmptyInput&) {
      sizes[std::string(to_string(label))] = nullptr;
    }
  }

  std::vector<TweetRecord> sources;
  if (!corpus) {
    sources.reserve(threads.size());
    for (const auto& t : threads.all()) sources.push_back(t.source);
  }
  const auto sensitivity =
      corpus ? threshold_sensitivity(*corpus, state, options.thresholds)
             : threshold_sensitivity(sources, state, options.thresholds);

  return {
      {"schema_version", 1},
      {"parameters",
       {{"trim_fraction", options.trim_fraction},
        {"session_gap_s", std::chrono::duration<double>(options.session_gap).count()},
        {"thresholds", options.thresholds}}},
      {"day_table", {{"rows", std::move(rows)}, {"overall", table.overall.to_json()}, {"text", std::move(text)}}},
      {"timing", timing_stats(state, options.session_gap, options.trim_fraction).to_json()},
      {"hourly", std::move(hourly)},
      {"sizes", std::move(sizes)},
      {"threshold_sensitivity", to_json(sensitivity)},
  };
}

}  // namespace rumourkit
