#include "support.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace rumourkit::testing {

namespace fs = std::filesystem;
using namespace std::chrono;

TempDir::TempDir() {
  static std::atomic<unsigned> counter{0};
  Rng rng(static_cast<std::uint64_t>(steady_clock::now().time_since_epoch().count()));
  path_ = fs::temp_directory_path() /
          ("rumourkit-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" +
           std::to_string(rng.below(1'000'000)));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  for (const auto& l : lines) out << l << "\n";
  if (!out.flush()) throw std::runtime_error("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TweetRecord tweet(std::string id, std::int64_t epoch_s, std::uint64_t retweets,
                  std::optional<std::string> parent, std::string text) {
  TweetRecord r;
  r.id = std::move(id);
  r.author = "user" + std::to_string(epoch_s % 97);
  r.text = text.empty() ? "tweet " + r.id : std::move(text);
  r.created_at = from_epoch_ms(epoch_s * 1000);
  r.retweet_count = retweets;
  r.lang = "en";
  r.in_reply_to = std::move(parent);
  return r;
}

Timestamp aug2014(unsigned day, unsigned hour, unsigned minute, unsigned second) {
  return start_of_day(CivilDate{year{2014}, August, std::chrono::day{day}}) + hours(hour) +
         minutes(minute) + seconds(second);
}

namespace {

std::vector<std::int64_t> spread(std::size_t n, std::int64_t base, std::int64_t step,
                                 std::size_t wrap) {
  std::vector<std::int64_t> v;
  for (std::size_t k = 0; k < n / 2; ++k) {
    const auto d = step * static_cast<std::int64_t>(k % wrap + 1);
    v.push_back(base - d);
    v.push_back(base + d);
  }
  if (n % 2 == 1) v.push_back(base);
  return v;
}

/// n values averaging exactly `sum / n`, the remainder as +1s up front.
std::vector<std::int64_t> spread_sum(std::size_t n, std::int64_t sum, std::int64_t step,
                                     std::size_t wrap) {
  const auto count = static_cast<std::int64_t>(n);
  auto v = spread(n, sum / count, step, wrap);
  for (std::int64_t i = 0; i < sum % count; ++i) v[static_cast<std::size_t>(i)] += 1;
  return v;
}

std::int64_t total(const std::vector<std::int64_t>& v) {
  return std::accumulate(v.begin(), v.end(), std::int64_t{0});
}

// With 5% trimming the lowest 59 overall durations are the two small
// rumour pools and the highest 59 are both high pools plus the largest
// main rumour value, so each trimmed mean is fixed by construction.
struct DurationPools {
  std::vector<std::int64_t> rumour, nonrumour;
};

DurationPools duration_pools() {
  const auto r_low = spread(14, 1000, 20, 7);
  const auto r_small = spread(45, 2000, 10, 20);
  const auto r_high = spread(14, 240000, 5000, 7);
  const auto r_main = spread_sum(218, 263 * 31800 - total(r_small), 40, 90);

  const auto nr_mid = spread(802, 20700, 25, 380);
  const auto nr_high = spread(44, 45000, 50, 22);
  const auto r_main_max = *std::max_element(r_main.begin(), r_main.end());
  const auto nr_low =
      spread_sum(44, 1063 * 23500 - total(nr_mid) - total(r_main) + r_main_max, 10, 22);

  DurationPools p;
  for (const auto* part : {&r_low, &r_small, &r_main, &r_high}) {
    p.rumour.insert(p.rumour.end(), part->begin(), part->end());
  }
  for (const auto* part : {&nr_low, &nr_mid, &nr_high}) {
    p.nonrumour.insert(p.nonrumour.end(), part->begin(), part->end());
  }
  return p;
}

/// Sizes with median `m` and the given total: symmetric around m, then the
/// surplus added above the middle.
std::vector<std::size_t> day_sizes(std::size_t n, std::size_t sum, std::size_t m) {
  std::vector<std::size_t> v(n, m);
  for (std::size_t k = 0; k + 1 < n / 2; ++k) {
    const auto d = (k * 7) % (m + 1);
    v[k] = m - d;
    v[n - 1 - k] = m + d;
  }
  const std::size_t upper_begin = n / 2 + 1;
  auto surplus = sum - std::accumulate(v.begin(), v.end(), std::size_t{0});
  for (std::size_t i = n - 1; surplus > 0; --surplus) {
    v[i] += 1;
    i = i == upper_begin ? n - 1 : i - 1;
  }
  return v;
}

struct DayPlan {
  unsigned day;
  std::size_t threads;
  std::size_t rumours;
  std::vector<std::size_t> sizes;
  std::vector<std::pair<std::string, std::size_t>> stories;  // name, threads that day
};

std::string generic_story(int n) {
  return std::string("story ") + (n < 10 ? "0" : "") + std::to_string(n);
}

std::vector<std::pair<std::string, std::size_t>> quota(std::vector<std::string> names,
                                                       std::size_t threads) {
  std::vector<std::pair<std::string, std::size_t>> out;
  const auto n = names.size();
  for (std::size_t i = 0; i < n; ++i) {
    out.emplace_back(names[i], threads / n + (i < threads % n ? 1 : 0));
  }
  return out;
}

std::vector<std::string> generic_range(int from, int to) {
  std::vector<std::string> out;
  for (int i = from; i <= to; ++i) out.push_back(generic_story(i));
  return out;
}

std::vector<DayPlan> day_plans() {
  std::vector<DayPlan> plans;

  DayPlan d9{9, 14, 2, {0, 0, 0, 0, 0, 42, 42, 42, 42, 42, 42, 42, 42, 98}, {}};
  d9.stories = {{generic_story(1), 1}, {generic_story(2), 1}};
  plans.push_back(d9);

  DayPlan d10{10, 206, 18, day_sizes(206, 3399, 16), {}};
  d10.stories = {{kPentagonStory, 1}, {kIsraelStory, 1}};
  for (auto& q : quota(generic_range(3, 13), 16)) d10.stories.push_back(q);
  plans.push_back(d10);

  // Stories 14-19 and the robbery story continue on 15 Aug.
  DayPlan d13{13, 430, 30, day_sizes(430, 7009, 15), {}};
  d13.stories = {{kRobberyStory, 5}};
  auto names13 = generic_range(14, 29);
  for (auto& q : quota(names13, 25)) d13.stories.push_back(q);
  plans.push_back(d13);

  DayPlan d15{15, 535, 241, day_sizes(535, 10968, 16), {}};
  d15.stories = {{kRobberyStory, 84}, {kOfficerStory, 26}, {kShootingStory, 40}};
  auto names15 = generic_range(14, 19);
  for (auto& n : generic_range(30, 37)) names15.push_back(n);
  for (auto& q : quota(names15, 91)) d15.stories.push_back(q);
  plans.push_back(d15);
  return plans;
}

std::string pad(std::size_t value, int width) {
  auto s = std::to_string(value);
  return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))),
                     '0') +
         s;
}

struct PlannedThread {
  Thread thread;
  bool rumour = false;
  std::string story;
};

ReferenceFixture build_reference_fixture() {
  Rng rng(20140809);
  const auto plans = day_plans();
  const auto pools = duration_pools();
  std::size_t next_r = 0, next_nr = 0;

  // 99 of 291 rumours and 262 of 894 non-rumours reach 250 retweets.
  std::size_t rumour_index = 0, nonrumour_index = 0;
  auto retweets_for = [&](bool rumour) -> std::uint64_t {
    const auto k = rumour ? rumour_index++ : nonrumour_index++;
    const bool high =
        rumour ? k % 2 == 0 && k / 2 < 99 : k % 24 < 7 && (k / 24) * 7 + k % 24 < 262;
    if (high) return 250 + (k * 37) % 5000;
    return 100 + (k * 13) % 150;
  };

  std::vector<Thread> all;
  std::vector<std::vector<PlannedThread>> per_day;
  for (const auto& plan : plans) {
    std::vector<char> is_rumour(plan.threads, 0);
    for (std::size_t i = 0; i < plan.rumours; ++i) is_rumour[i] = 1;
    rng.shuffle(is_rumour);
    auto sizes = plan.sizes;
    rng.shuffle(sizes);

    std::vector<std::string> story_slots;
    for (const auto& [name, count] : plan.stories) story_slots.insert(story_slots.end(), count, name);
    if (story_slots.size() != plan.rumours) throw std::logic_error("story quota mismatch");
    rng.shuffle(story_slots);

    // Rumours on 15 Aug cluster in the afternoon; everything else is spread
    // over the day.
    std::vector<PlannedThread> day;
    std::size_t r_seen = 0, nr_seen = 0, slot = 0;
    const auto nr_total = plan.threads - plan.rumours;
    for (std::size_t i = 0; i < plan.threads; ++i) {
      const bool rumour = is_rumour[i] != 0;
      Timestamp at;
      if (plan.day == 15 && rumour) {
        at = aug2014(15, 12) + seconds(r_seen++ * 11 * 3600 / plan.rumours);
      } else if (plan.day == 15) {
        at = aug2014(15, 0, 20) + seconds(nr_seen++ * 23 * 3600 / nr_total);
      } else {
        at = aug2014(plan.day, 0, 30) + seconds(i * 23 * 3600 / plan.threads);
      }
      const auto id = "50" + pad(plan.day, 2) + pad(i, 5);

      PlannedThread pt;
      pt.rumour = rumour;
      if (rumour) pt.story = story_slots[slot++];
      pt.thread.source = tweet(id, to_epoch_ms(at) / 1000, retweets_for(rumour));
      pt.thread.source.text = (rumour ? "unconfirmed: " : "update: ") + pt.thread.source.text;

      std::vector<std::string> reply_ids;
      std::vector<std::size_t> reply_depth;
      for (std::size_t k = 0; k < sizes[i]; ++k) {
        std::string parent = id;
        std::size_t depth = 1;
        if (k >= 3 && k % 2 == 1) {
          const auto p = (k - 1) / 2;
          parent = reply_ids[p];
          depth = reply_depth[p] + 1;
        }
        reply_ids.push_back(id + "-" + pad(k, 3));
        reply_depth.push_back(depth);
        auto reply = tweet(reply_ids.back(), to_epoch_ms(at) / 1000 + 90 * static_cast<std::int64_t>(k + 1), 0, parent);
        pt.thread.nodes.push_back({std::move(reply), depth, parent});
      }
      std::stable_sort(pt.thread.nodes.begin(), pt.thread.nodes.end(),
                       [](const ThreadNode& a, const ThreadNode& b) { return a.depth < b.depth; });
      day.push_back(std::move(pt));
    }
    per_day.push_back(std::move(day));
  }

  // One annotator, one session per day. Each session opens on a
  // non-rumour, which has no predecessor and so no duration.
  AnnotationStore store;
  for (std::size_t d = 0; d < per_day.size(); ++d) {
    auto& sessions = per_day[d];
    std::vector<std::size_t> order(sessions.size());
    std::iota(order.begin(), order.end(), 0);
    const auto first_nr = static_cast<std::size_t>(
        std::find_if(sessions.begin(), sessions.end(),
                     [](const PlannedThread& p) { return !p.rumour; }) -
        sessions.begin());
    std::rotate(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(first_nr),
                order.begin() + static_cast<std::ptrdiff_t>(first_nr) + 1);

    auto clock = start_of_day(CivilDate{year{2014}, September, day{static_cast<unsigned>(d + 1)}}) +
                 hours(9);
    bool first = true;
    for (const auto i : order) {
      const auto& pt = sessions[i];
      if (!first) {
        clock += milliseconds(pt.rumour ? pools.rumour.at(next_r++) : pools.nonrumour.at(next_nr++));
      }
      first = false;
      if (pt.rumour) {
        store.record_judgment(pt.thread.id(), Label::rumour, StoryRef::by_name(pt.story), "ann1",
                              clock);
      } else {
        store.record_judgment(pt.thread.id(), Label::non_rumour, std::nullopt, "ann1", clock);
      }
    }
    for (auto& pt : sessions) all.push_back(std::move(pt.thread));
  }
  if (next_r != pools.rumour.size() || next_nr != pools.nonrumour.size()) {
    throw std::logic_error("duration pools not fully used");
  }

  ReferenceFixture f;
  f.threads = ThreadSet(std::move(all));
  f.state = *store.snapshot();
  f.events = f.state.history;
  return f;
}

}  // namespace

const ReferenceFixture& reference_fixture() {
  static const ReferenceFixture fixture = build_reference_fixture();
  return fixture;
}

void write_reference_fixture(const fs::path& dir) {
  const auto& f = reference_fixture();
  f.threads.save(dir / "threads");
  std::ofstream log(dir / "annotations.log", std::ios::binary | std::ios::trunc);
  for (const auto& e : f.events) log << event_to_json(e).dump() << "\n";
  if (!log.flush()) throw std::runtime_error("cannot write fixture log");
}

std::vector<std::int64_t> reference_rumour_durations_ms() { return duration_pools().rumour; }
std::vector<std::int64_t> reference_nonrumour_durations_ms() { return duration_pools().nonrumour; }

std::vector<TweetRecord> random_forest(Rng& rng, const ForestShape& shape) {
  const auto n = 1 + rng.below(shape.max_nodes);
  const std::int64_t t0 = 1407542400;  // 2014-08-09
  std::vector<TweetRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = "n" + std::to_string(i);
    const auto when = t0 + static_cast<std::int64_t>(rng.below(86400 * 3));
    if (i == 0 || rng.chance(shape.source_probability)) {
      out.push_back(tweet(id, when, rng.below(500)));
    } else if (rng.chance(shape.orphan_probability)) {
      out.push_back(tweet(id, when, 0, "missing" + std::to_string(i)));
    } else if (rng.chance(shape.retweet_probability)) {
      auto rt = tweet(id, when, 0);
      rt.retweet_of = out[rng.below(out.size())].id;
      out.push_back(std::move(rt));
    } else {
      // Bias towards recent nodes for deeper chains.
      const auto span = std::min<std::size_t>(out.size(), rng.chance(0.5) ? 8 : out.size());
      const auto parent = out[out.size() - 1 - rng.below(span)].id;
      out.push_back(tweet(id, when, 0, parent));
    }
  }
  return out;
}

std::vector<TweetRecord> random_corpus(Rng& rng, std::size_t n) {
  static const char* langs[] = {"en", "en", "en", "es", "fr", "und"};
  const std::int64_t t0 = 1407542400;
  std::vector<TweetRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Pareto with alpha 1.5, shifted so zero is common.
    const double u = 1.0 - rng.unit();
    const auto count = static_cast<std::uint64_t>(std::floor(std::pow(u, -1.0 / 1.5))) - 1;
    auto r = tweet("c" + std::to_string(i), t0 + static_cast<std::int64_t>(rng.below(86400 * 7)),
                   std::min<std::uint64_t>(count, 1'000'000));
    r.lang = langs[rng.below(6)];
    if (i > 0 && rng.chance(0.15)) {
      r.in_reply_to = "c" + std::to_string(rng.below(i));
    } else if (i > 0 && rng.chance(0.1)) {
      r.retweet_of = "c" + std::to_string(rng.below(i));
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TweetRecord> average_replies_fixture() {
  constexpr std::size_t kSources = 12595;
  constexpr std::size_t kReplies = 262495;
  Rng rng(208);
  std::vector<std::size_t> sizes(kSources);
  for (auto& s : sizes) s = rng.below(42);  // mean 20.5
  auto sum = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  for (std::size_t i = 0; sum != kReplies; i = (i + 1) % kSources) {
    if (sum < kReplies) {
      ++sizes[i];
      ++sum;
    } else if (sizes[i] > 0) {
      --sizes[i];
      --sum;
    }
  }

  std::vector<TweetRecord> out;
  out.reserve(kSources + kReplies);
  const std::int64_t t0 = 1407542400;
  for (std::size_t s = 0; s < kSources; ++s) {
    const auto id = "a" + std::to_string(s);
    const auto when = t0 + static_cast<std::int64_t>(s) * 20;
    out.push_back(tweet(id, when, 100 + s % 400));
    const auto first = out.size();
    for (std::size_t k = 0; k < sizes[s]; ++k) {
      const auto parent = k == 0 || rng.chance(0.6) ? id : out[first + rng.below(k)].id;
      out.push_back(tweet(id + "." + std::to_string(k), when + 1 + static_cast<std::int64_t>(k), 0,
                          parent));
    }
  }
  return out;
}

std::map<std::string, ClosureEntry> closure_oracle(const std::vector<TweetRecord>& records,
                                                   const std::string& source_id) {
  std::map<std::string, ClosureEntry> reached;
  std::map<std::string, std::size_t> depth_of{{source_id, 0}};
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& r : records) {
      if (!r.in_reply_to || depth_of.count(r.id)) continue;
      const auto parent = depth_of.find(*r.in_reply_to);
      if (parent == depth_of.end()) continue;
      depth_of[r.id] = parent->second + 1;
      reached[r.id] = {parent->second + 1, *r.in_reply_to};
      changed = true;
    }
  }
  return reached;
}

double trimmed_mean_oracle(std::vector<double> values, double fraction) {
  std::sort(values.begin(), values.end());
  std::size_t drop = 0;
  while (static_cast<double>(drop + 1) <= fraction * static_cast<double>(values.size()) + 1e-9) ++drop;
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t i = drop; i + drop < values.size(); ++i, ++n) sum += values[i];
  return sum / static_cast<double>(n);
}

double quantile_oracle(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] * (1.0 - (h - static_cast<double>(lo))) +
         values[lo + 1] * (h - static_cast<double>(lo));
}

std::map<std::string, Judgment> current_view_oracle(const std::vector<Event>& events) {
  std::map<std::string, Judgment> view;
  for (const auto& e : events) {
    if (const auto* j = std::get_if<Judgment>(&e.body)) {
      auto it = view.find(j->thread_id);
      if (it == view.end() || it->second.seq < j->seq) view[j->thread_id] = *j;
    }
  }
  return view;
}

std::vector<DurationRow> durations_oracle(const std::vector<Event>& events,
                                          std::int64_t session_gap_ms) {
  std::vector<const Event*> sorted;
  for (const auto& e : events) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->seq < b->seq; });

  std::map<std::string, std::size_t> first_seq;  // thread -> seq of first non-move judgment
  std::map<std::string, std::vector<const Event*>> by_annotator;
  for (const auto* e : sorted) {
    const auto* j = std::get_if<Judgment>(&e->body);
    if (!j || j->moved) continue;
    first_seq.emplace(j->thread_id, e->seq);
    by_annotator[e->annotator].push_back(e);
  }
  std::vector<std::pair<std::uint64_t, DurationRow>> rows;
  for (const auto& [annotator, list] : by_annotator) {
    for (std::size_t k = 1; k < list.size(); ++k) {
      const auto& j = std::get<Judgment>(list[k]->body);
      if (first_seq.at(j.thread_id) != list[k]->seq) continue;
      const auto delta = to_epoch_ms(list[k]->at) - to_epoch_ms(list[k - 1]->at);
      if (delta < 0 || delta > session_gap_ms) continue;
      rows.push_back({list[k]->seq, {j.thread_id, j.label, static_cast<double>(delta) / 1000.0}});
    }
  }
  std::sort(rows.begin(), rows.end(), [](auto& a, auto& b) { return a.first < b.first; });
  std::vector<DurationRow> out;
  for (auto& r : rows) out.push_back(std::move(r.second));
  return out;
}

}  // namespace rumourkit::testing
