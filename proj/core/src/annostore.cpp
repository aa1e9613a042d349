#include "rumourkit/annostore.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdio>

#include "rumourkit/text.hpp"

namespace rumourkit {
namespace {

using nlohmann::json;

std::string story_id_for(std::uint64_t seq) {
  std::array<char, 24> buf{};
  std::snprintf(buf.data(), buf.size(), "s%06llu", static_cast<unsigned long long>(seq));
  return buf.data();
}

std::string required_string(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw std::invalid_argument(std::string("event field '") + key + "' missing or not a string");
  }
  return it->get<std::string>();
}

Timestamp required_time(const json& j, const char* key) {
  const auto raw = required_string(j, key);
  if (auto t = parse_iso8601(raw)) return *t;
  throw std::invalid_argument(std::string("event field '") + key + "' is not ISO-8601");
}

json judgment_json(const Judgment& jd) {
  json j = {
      {"thread_id", jd.thread_id},
      {"label", to_string(jd.label)},
      {"annotator", jd.annotator},
      {"at", format_iso8601(jd.at)},
      {"seq", jd.seq},
  };
  j["story_id"] = jd.story_id ? json(*jd.story_id) : json(nullptr);
  if (jd.moved) j["moved"] = true;
  return j;
}

}  // namespace

std::string_view to_string(Label label) {
  switch (label) {
    case Label::rumour:
      return "rumour";
    case Label::non_rumour:
      return "nonrumour";
    case Label::unsure:
      return "unsure";
  }
  return "unsure";
}

std::optional<Label> parse_label(std::string_view text) {
  if (text == "rumour") return Label::rumour;
  if (text == "nonrumour" || text == "non-rumour" || text == "non_rumour") return Label::non_rumour;
  if (text == "unsure") return Label::unsure;
  return std::nullopt;
}

std::string_view to_string(AnnotationError::Code code) {
  using C = AnnotationError::Code;
  switch (code) {
    case C::unknown_thread:
      return "unknown_thread";
    case C::missing_story:
      return "missing_story";
    case C::story_on_nonrumour:
      return "story_on_nonrumour";
    case C::unknown_story:
      return "unknown_story";
    case C::name_collision:
      return "name_collision";
    case C::not_a_rumour:
      return "not_a_rumour";
    case C::invalid_name:
      return "invalid_name";
  }
  return "error";
}

json event_to_json(const Event& e) {
  json j = {{"seq", e.seq}, {"at", format_iso8601(e.at)}, {"annotator", e.annotator}};
  std::visit(
      [&j](const auto& body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, Judgment>) {
          j["type"] = "judgment";
          j["thread_id"] = body.thread_id;
          j["label"] = to_string(body.label);
          j["story_id"] = body.story_id ? json(*body.story_id) : json(nullptr);
          if (body.moved) j["moved"] = true;
        } else if constexpr (std::is_same_v<T, StoryCreated>) {
          j["type"] = "story_created";
          j["story_id"] = body.story.story_id;
          j["name"] = body.story.name;
        } else {
          j["type"] = "story_renamed";
          j["story_id"] = body.story_id;
          j["name"] = body.name;
        }
      },
      e.body);
  return j;
}

Event event_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("event is not an object");
  Event e;
  const auto seq = j.find("seq");
  if (seq == j.end() || !seq->is_number_unsigned()) {
    throw std::invalid_argument("event seq missing or not a non-negative integer");
  }
  e.seq = seq->get<std::uint64_t>();
  e.at = required_time(j, "at");
  e.annotator = required_string(j, "annotator");
  const auto type = required_string(j, "type");
  if (type == "judgment") {
    Judgment jd;
    jd.thread_id = required_string(j, "thread_id");
    const auto label = parse_label(required_string(j, "label"));
    if (!label) throw std::invalid_argument("unknown label");
    jd.label = *label;
    if (const auto it = j.find("story_id"); it != j.end() && !it->is_null()) {
      if (!it->is_string()) throw std::invalid_argument("story_id must be a string");
      jd.story_id = it->get<std::string>();
    }
    if (const auto it = j.find("moved"); it != j.end()) jd.moved = it->is_boolean() && it->get<bool>();
    jd.annotator = e.annotator;
    jd.at = e.at;
    jd.seq = e.seq;
    e.body = std::move(jd);
  } else if (type == "story_created") {
    e.body = StoryCreated{Story{required_string(j, "story_id"), required_string(j, "name"), e.at}};
  } else if (type == "story_renamed") {
    e.body = StoryRenamed{required_string(j, "story_id"), required_string(j, "name")};
  } else {
    throw std::invalid_argument("unknown event type '" + type + "'");
  }
  return e;
}

std::optional<Label> AnnotationState::label_of(std::string_view thread_id) const {
  const auto it = current.find(std::string(thread_id));
  if (it == current.end()) return std::nullopt;
  return it->second.label;
}

const Story* AnnotationState::story(std::string_view story_id) const {
  const auto it = stories.find(std::string(story_id));
  return it == stories.end() ? nullptr : &it->second;
}

std::vector<std::string> AnnotationState::members(std::string_view story_id) const {
  std::vector<std::string> out;
  for (const auto& [thread, jd] : current) {
    if (jd.story_id && *jd.story_id == story_id) out.push_back(thread);
  }
  return out;
}

std::map<std::string, std::size_t> AnnotationState::member_counts() const {
  std::map<std::string, std::size_t> counts;
  for (const auto& [id, _] : stories) counts[id] = 0;
  for (const auto& [thread, jd] : current) {
    if (jd.story_id) ++counts[*jd.story_id];
  }
  return counts;
}

void apply_event(AnnotationState& state, const Event& event) {
  if (event.seq <= state.last_seq) {
    throw std::invalid_argument("event seq " + std::to_string(event.seq) +
                                " is not after " + std::to_string(state.last_seq));
  }
  std::visit(
      [&state, &event](const auto& body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, Judgment>) {
          const bool is_rumour = body.label == Label::rumour;
          if (is_rumour != body.story_id.has_value()) {
            throw std::invalid_argument("judgment for " + body.thread_id +
                                        " breaks story/label coupling");
          }
          if (body.story_id && !state.stories.contains(*body.story_id)) {
            throw std::invalid_argument("judgment references unknown story " + *body.story_id);
          }
          Judgment jd = body;
          jd.seq = event.seq;
          jd.at = event.at;
          jd.annotator = event.annotator;
          state.current[jd.thread_id] = std::move(jd);
        } else if constexpr (std::is_same_v<T, StoryCreated>) {
          if (state.stories.contains(body.story.story_id)) {
            throw std::invalid_argument("story created twice: " + body.story.story_id);
          }
          Story s = body.story;
          s.created_at = event.at;
          state.stories.emplace(s.story_id, std::move(s));
        } else {
          const auto it = state.stories.find(body.story_id);
          if (it == state.stories.end()) {
            throw std::invalid_argument("rename of unknown story " + body.story_id);
          }
          it->second.name = body.name;
        }
      },
      event.body);
  state.history.push_back(event);
  state.last_seq = event.seq;
}

AnnotationState replay(std::span<const Event> events) {
  AnnotationState state;
  state.history.reserve(events.size());
  for (const auto& e : events) apply_event(state, e);
  return state;
}

json snapshot_json(const AnnotationState& state) {
  json current = json::array();
  for (const auto& [_, jd] : state.current) current.push_back(judgment_json(jd));
  json stories = json::array();
  const auto counts = state.member_counts();
  for (const auto& [id, s] : state.stories) {
    const auto members = counts.at(id);
    stories.push_back({{"story_id", s.story_id},
                       {"name", s.name},
                       {"created_at", format_iso8601(s.created_at)},
                       {"member_count", members},
                       {"empty", members == 0}});
  }
  return {{"schema_version", 1},
          {"last_seq", state.last_seq},
          {"current", std::move(current)},
          {"stories", std::move(stories)}};
}

std::vector<Event> read_event_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open annotation log " + path.string());
  std::vector<Event> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      events.push_back(event_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return events;
}

AnnotationStore::AnnotationStore(std::optional<std::unordered_set<std::string>> known_threads)
    : known_threads_(std::move(known_threads)),
      state_(std::make_shared<const AnnotationState>()) {}

std::unique_ptr<AnnotationStore> AnnotationStore::open(
    const std::filesystem::path& log, std::optional<std::unordered_set<std::string>> known_threads) {
  auto store = std::make_unique<AnnotationStore>(std::move(known_threads));
  if (std::filesystem::exists(log)) {
    const auto events = read_event_log(log);
    store->state_ = std::make_shared<const AnnotationState>(replay(events));
  } else if (log.has_parent_path()) {
    std::filesystem::create_directories(log.parent_path());
  }
  store->log_path_ = log;
  store->log_.emplace(log, std::ios::binary | std::ios::app);
  if (!*store->log_) throw std::runtime_error("cannot open annotation log " + log.string());
  return store;
}

std::shared_ptr<const AnnotationState> AnnotationStore::snapshot() const {
  return std::atomic_load(&state_);
}

bool AnnotationStore::knows_thread(std::string_view thread_id) const {
  return !known_threads_ || known_threads_->contains(std::string(thread_id));
}

const Story* AnnotationStore::find_story_by_name(const AnnotationState& s,
                                                 std::string_view name) const {
  const auto folded = fold_case(name);
  for (const auto& [_, story] : s.stories) {
    if (fold_case(story.name) == folded) return &story;
  }
  return nullptr;
}

void AnnotationStore::commit(std::vector<Event> events) {
  auto next = std::make_shared<AnnotationState>(*std::atomic_load(&state_));
  for (const auto& e : events) apply_event(*next, e);
  if (log_) {
    for (const auto& e : events) *log_ << event_to_json(e).dump() << '\n';
    log_->flush();
    if (!*log_) throw std::runtime_error("cannot append to annotation log " + log_path_.string());
  }
  std::atomic_store(&state_, std::shared_ptr<const AnnotationState>(std::move(next)));
}

Judgment AnnotationStore::record_judgment(const std::string& thread_id, Label label,
                                          const std::optional<StoryRef>& story,
                                          const std::string& annotator, Timestamp at) {
  std::lock_guard lock(write_mutex_);
  const auto state = std::atomic_load(&state_);
  if (!knows_thread(thread_id)) {
    throw AnnotationError(AnnotationError::Code::unknown_thread, "unknown thread " + thread_id);
  }
  if (label != Label::rumour && story) {
    throw AnnotationError(AnnotationError::Code::story_on_nonrumour,
                          "a story can only be attached to a rumour");
  }
  if (label == Label::rumour && !story) {
    throw AnnotationError(AnnotationError::Code::missing_story,
                          "a rumour judgment needs a story");
  }

  std::vector<Event> events;
  auto seq = state->last_seq;
  std::optional<std::string> story_id;
  if (story) {
    if (story->kind == StoryRef::Kind::id) {
      if (!state->story(story->value)) {
        throw AnnotationError(AnnotationError::Code::unknown_story,
                              "unknown story " + story->value);
      }
      story_id = story->value;
    } else {
      const auto name = std::string(trim(story->value));
      if (name.empty()) {
        throw AnnotationError(AnnotationError::Code::invalid_name, "story name is empty");
      }
      if (const auto* existing = find_story_by_name(*state, name)) {
        story_id = existing->story_id;
      } else {
        ++seq;
        Story created{story_id_for(seq), name, at};
        story_id = created.story_id;
        events.push_back(Event{seq, at, annotator, StoryCreated{std::move(created)}});
      }
    }
  }

  ++seq;
  Judgment jd{thread_id, label, story_id, annotator, at, seq, false};
  events.push_back(Event{seq, at, annotator, jd});
  commit(std::move(events));
  return jd;
}

Story AnnotationStore::rename_story(const std::string& story_id, const std::string& new_name,
                                    const std::string& annotator, Timestamp at) {
  std::lock_guard lock(write_mutex_);
  const auto state = std::atomic_load(&state_);
  const auto* story = state->story(story_id);
  if (!story) {
    throw AnnotationError(AnnotationError::Code::unknown_story, "unknown story " + story_id);
  }
  const auto name = std::string(trim(new_name));
  if (name.empty()) {
    throw AnnotationError(AnnotationError::Code::invalid_name, "story name is empty");
  }
  if (name == story->name) return *story;
  if (const auto* other = find_story_by_name(*state, name); other && other->story_id != story_id) {
    throw AnnotationError(AnnotationError::Code::name_collision,
                          "story name already used by " + other->story_id);
  }
  Story renamed = *story;
  renamed.name = name;
  commit({Event{state->last_seq + 1, at, annotator, StoryRenamed{story_id, name}}});
  return renamed;
}

Judgment AnnotationStore::move_thread(const std::string& thread_id,
                                      const std::string& target_story_id,
                                      const std::string& annotator, Timestamp at) {
  std::lock_guard lock(write_mutex_);
  const auto state = std::atomic_load(&state_);
  if (!knows_thread(thread_id)) {
    throw AnnotationError(AnnotationError::Code::unknown_thread, "unknown thread " + thread_id);
  }
  const auto it = state->current.find(thread_id);
  if (it == state->current.end() || it->second.label != Label::rumour) {
    throw AnnotationError(AnnotationError::Code::not_a_rumour,
                          "thread " + thread_id + " is not annotated as a rumour");
  }
  if (!state->story(target_story_id)) {
    throw AnnotationError(AnnotationError::Code::unknown_story,
                          "unknown story " + target_story_id);
  }
  const auto seq = state->last_seq + 1;
  Judgment jd{thread_id, Label::rumour, target_story_id, annotator, at, seq, true};
  commit({Event{seq, at, annotator, jd}});
  return jd;
}

std::vector<AnnotationDuration> annotation_durations(const AnnotationState& state,
                                                     std::chrono::milliseconds session_gap) {
  std::vector<AnnotationDuration> out;
  std::unordered_set<std::string> judged;
  std::map<std::string, Timestamp> previous;
  for (const auto& event : state.history) {
    const auto* jd = std::get_if<Judgment>(&event.body);
    if (!jd || jd->moved) continue;
    const bool first_time = judged.insert(jd->thread_id).second;
    const auto prev = previous.find(event.annotator);
    if (prev != previous.end() && first_time) {
      const auto delta = event.at - prev->second;
      // Negative deltas (clock skew in imported logs) are treated as a session break.
      if (delta >= Millis{0} && delta <= session_gap) {
        out.push_back({jd->thread_id, jd->label,
                       std::chrono::duration<double>(delta).count(), event.annotator, event.seq});
      }
    }
    previous[event.annotator] = event.at;
  }
  return out;
}

}  // namespace rumourkit
