#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "rumourkit/time.hpp"

namespace rumourkit {

enum class Label { rumour, non_rumour, unsure };

/// "rumour", "nonrumour", "unsure".
std::string_view to_string(Label label);
/// Also accepts "non-rumour" and "non_rumour".
std::optional<Label> parse_label(std::string_view text);

struct Judgment {
  std::string thread_id;
  Label label = Label::unsure;
  std::optional<std::string> story_id;  // present iff label == rumour
  std::string annotator;
  Timestamp at{};
  std::uint64_t seq = 0;
  bool moved = false;  // produced by the review screen, not a timeline selection

  friend bool operator==(const Judgment&, const Judgment&) = default;
};

struct Story {
  std::string story_id;
  std::string name;
  Timestamp created_at{};

  friend bool operator==(const Story&, const Story&) = default;
};

struct StoryCreated {
  Story story;
};
struct StoryRenamed {
  std::string story_id;
  std::string name;
};

/// One entry in the append-only annotation log.
struct Event {
  std::uint64_t seq = 0;
  Timestamp at{};
  std::string annotator;
  std::variant<Judgment, StoryCreated, StoryRenamed> body;
};

nlohmann::json event_to_json(const Event& e);
/// Throws std::invalid_argument on a malformed event.
Event event_from_json(const nlohmann::json& j);

/// Current view plus full history; a pure fold over the events.
struct AnnotationState {
  std::map<std::string, Judgment> current;
  std::vector<Event> history;
  std::map<std::string, Story> stories;
  std::uint64_t last_seq = 0;

  std::optional<Label> label_of(std::string_view thread_id) const;
  const Story* story(std::string_view story_id) const;
  /// Threads whose current judgment points at the story.
  std::vector<std::string> members(std::string_view story_id) const;
  std::map<std::string, std::size_t> member_counts() const;
};

/// Applies one already-validated event. Throws std::invalid_argument if the
/// event breaks sequencing or references a missing story.
void apply_event(AnnotationState& state, const Event& event);
AnnotationState replay(std::span<const Event> events);

/// Current view and stories, deterministic key order.
nlohmann::json snapshot_json(const AnnotationState& state);

std::vector<Event> read_event_log(const std::filesystem::path& path);

class AnnotationError : public std::runtime_error {
 public:
  enum class Code {
    unknown_thread,
    missing_story,
    story_on_nonrumour,
    unknown_story,
    name_collision,
    not_a_rumour,
    invalid_name,
  };

  AnnotationError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

std::string_view to_string(AnnotationError::Code code);

/// Story reference supplied with a Rumour judgment.
struct StoryRef {
  enum class Kind { id, name };
  Kind kind = Kind::name;
  std::string value;

  static StoryRef by_id(std::string id) { return {Kind::id, std::move(id)}; }
  static StoryRef by_name(std::string name) { return {Kind::name, std::move(name)}; }
};

/// Serialised writer over the event log. Readers take immutable snapshots
/// and never block writers.
class AnnotationStore {
 public:
  /// `known_threads` unset accepts any thread id.
  explicit AnnotationStore(std::optional<std::unordered_set<std::string>> known_threads = {});

  /// Replays `log` if it exists and appends new events to it.
  static std::unique_ptr<AnnotationStore> open(
      const std::filesystem::path& log,
      std::optional<std::unordered_set<std::string>> known_threads = {});

  Judgment record_judgment(const std::string& thread_id, Label label,
                           const std::optional<StoryRef>& story, const std::string& annotator,
                           Timestamp at);
  Story rename_story(const std::string& story_id, const std::string& new_name,
                     const std::string& annotator, Timestamp at);
  Judgment move_thread(const std::string& thread_id, const std::string& target_story_id,
                       const std::string& annotator, Timestamp at);

  std::shared_ptr<const AnnotationState> snapshot() const;

  bool knows_thread(std::string_view thread_id) const;

 private:
  void commit(std::vector<Event> events);  // requires write_mutex_
  const Story* find_story_by_name(const AnnotationState& s, std::string_view name) const;

  std::optional<std::unordered_set<std::string>> known_threads_;
  std::mutex write_mutex_;
  std::shared_ptr<const AnnotationState> state_;
  std::optional<std::ofstream> log_;
  std::filesystem::path log_path_;
};

/// Seconds spent on a thread's first judgment.
struct AnnotationDuration {
  std::string thread_id;
  Label label = Label::unsure;
  double seconds = 0.0;
  std::string annotator;
  std::uint64_t seq = 0;
};

/// Per annotator, in seq order: the delta to the previous selection of the
/// same annotator, when within `session_gap`. Only a thread's first
/// judgment gets a duration; moves and story edits are not selections.
std::vector<AnnotationDuration> annotation_durations(const AnnotationState& state,
                                                     std::chrono::milliseconds session_gap);

}  // namespace rumourkit
