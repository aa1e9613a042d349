#include "rumourkit/service.hpp"

#include <vector>

#include "rumourkit/bundle.hpp"

namespace rumourkit {
namespace {

using nlohmann::json;

ApiResponse ok(json body, int status = 200) {
  body["schema_version"] = kApiSchemaVersion;
  return {status, std::move(body)};
}

ApiResponse error(int status, std::string_view code, const std::string& message) {
  return {status,
          {{"schema_version", kApiSchemaVersion},
           {"error", {{"code", code}, {"message", message}}}}};
}

int status_for(AnnotationError::Code code) {
  using C = AnnotationError::Code;
  switch (code) {
    case C::unknown_thread:
    case C::unknown_story:
      return 404;
    case C::name_collision:
      return 409;
    case C::missing_story:
    case C::story_on_nonrumour:
    case C::not_a_rumour:
    case C::invalid_name:
      return 422;
  }
  return 400;
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos <= path.size()) {
    const auto slash = path.find('/', pos);
    const auto end = slash == std::string_view::npos ? path.size() : slash;
    if (end > pos) parts.emplace_back(path.substr(pos, end - pos));
    if (slash == std::string_view::npos) break;
    pos = slash + 1;
  }
  return parts;
}

json story_json(const Story& s, std::size_t members) {
  return {{"story_id", s.story_id},
          {"name", s.name},
          {"created_at", format_iso8601(s.created_at)},
          {"member_count", members},
          {"empty", members == 0}};
}

json judgment_json(const Judgment& jd) {
  return {{"thread_id", jd.thread_id},
          {"label", to_string(jd.label)},
          {"story_id", jd.story_id ? json(*jd.story_id) : json(nullptr)},
          {"annotator", jd.annotator},
          {"at", format_iso8601(jd.at)},
          {"seq", jd.seq},
          {"moved", jd.moved}};
}

json thread_summary(const Thread& t, const AnnotationState& state) {
  json s = {{"id", t.id()},
            {"text", t.source.text},
            {"author", t.source.author},
            {"created_at", format_iso8601(t.source.created_at)},
            {"retweet_count", t.source.retweet_count},
            {"reply_count", t.reply_count()},
            {"label", "unannotated"},
            {"story_id", nullptr},
            {"story", nullptr}};
  if (const auto it = state.current.find(t.id()); it != state.current.end()) {
    s["label"] = to_string(it->second.label);
    if (it->second.story_id) {
      s["story_id"] = *it->second.story_id;
      if (const auto* story = state.story(*it->second.story_id)) s["story"] = story->name;
    }
  }
  return s;
}

std::optional<json> parse_body(const std::string& body) {
  if (body.empty()) return std::nullopt;
  auto parsed = json::parse(body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) return std::nullopt;
  return parsed;
}

std::optional<std::string> string_field(const json& body, const char* key, bool& bad) {
  const auto it = body.find(key);
  if (it == body.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    bad = true;
    return std::nullopt;
  }
  return it->get<std::string>();
}

}  // namespace

std::optional<std::string> ApiRequest::header(std::string_view lower_name) const {
  const auto it = headers.find(std::string(lower_name));
  if (it == headers.end()) return std::nullopt;
  return it->second;
}

AnnotationService::AnnotationService(ThreadSet threads, AnnotationStore& store,
                                     ServiceOptions options)
    : threads_(std::move(threads)), store_(store), options_(std::move(options)) {
  if (!options_.clock) {
    options_.clock = [] {
      return std::chrono::floor<Millis>(std::chrono::system_clock::now());
    };
  }
}

json AnnotationService::days_json(const ThreadSet& threads, const AnnotationState& state) {
  json days = json::array();
  for (const auto day : threads.days()) {
    std::size_t total = 0, annotated = 0;
    for (const auto* t : threads.on_day(day)) {
      ++total;
      if (state.current.contains(t->id())) ++annotated;
    }
    days.push_back({{"date", format_date(day)}, {"threads", total}, {"annotated", annotated}});
  }
  return {{"schema_version", kApiSchemaVersion}, {"days", std::move(days)}};
}

json AnnotationService::review_json(const ThreadSet& threads, const AnnotationState& state) {
  std::map<std::string, json> members;
  std::size_t rumours = 0, non_rumours = 0, unsure = 0, unannotated = 0;
  for (const auto& t : threads.all()) {
    const auto it = state.current.find(t.id());
    if (it == state.current.end()) {
      ++unannotated;
      continue;
    }
    switch (it->second.label) {
      case Label::rumour:
        ++rumours;
        members[*it->second.story_id].push_back(thread_summary(t, state));
        break;
      case Label::non_rumour:
        ++non_rumours;
        break;
      case Label::unsure:
        ++unsure;
        break;
    }
  }
  json stories = json::array();
  for (const auto& [id, story] : state.stories) {
    auto m = members.contains(id) ? members[id] : json::array();
    auto entry = story_json(story, m.size());
    entry["threads"] = std::move(m);
    stories.push_back(std::move(entry));
  }
  return {{"schema_version", kApiSchemaVersion},
          {"stories", std::move(stories)},
          {"counts",
           {{"rumours", rumours},
            {"non_rumours", non_rumours},
            {"unsure", unsure},
            {"unannotated", unannotated},
            {"total", threads.size()}}}};
}

std::optional<std::string> AnnotationService::authenticate(const ApiRequest& request) const {
  const auto token = request.header(kTokenHeader);
  if (!token || token->empty()) return std::nullopt;
  if (options_.annotator_tokens.empty()) return *token;
  const auto it = options_.annotator_tokens.find(*token);
  if (it == options_.annotator_tokens.end()) return std::nullopt;
  return it->second;
}

ApiResponse AnnotationService::handle(const ApiRequest& request) {
  try {
    return route(request);
  } catch (const AnnotationError& e) {
    return error(status_for(e.code()), to_string(e.code()), e.what());
  } catch (const std::exception& e) {
    return error(500, "internal", e.what());
  }
}

ApiResponse AnnotationService::route(const ApiRequest& request) {
  const auto parts = split_path(request.path);
  if (parts.size() < 2 || parts[0] != "api") {
    return error(404, "not_found", "no route for " + request.path);
  }
  const bool get = request.method == "GET";
  const bool post = request.method == "POST";
  auto method_not_allowed = [&] {
    return error(405, "method_not_allowed", request.method + " not allowed on " + request.path);
  };

  const auto& resource = parts[1];
  const auto n = parts.size();
  const bool mutating_route =
      (resource == "threads" && n == 4 && (parts[3] == "judgment" || parts[3] == "move")) ||
      (resource == "stories" && n == 4 && parts[3] == "rename");

  if (mutating_route) {
    if (!post) return method_not_allowed();
    const auto annotator = authenticate(request);
    if (!annotator) return error(401, "unauthorized", "missing or unknown annotator token");

    const auto key = request.header(kIdempotencyHeader);
    if (!key) return mutate(request, *annotator);
    const auto cache_key = *annotator + '\n' + *key;
    // Held across the mutation so a concurrent retry waits for the first answer.
    std::lock_guard lock(idempotency_mutex_);
    if (const auto it = replies_by_key_.find(cache_key); it != replies_by_key_.end()) {
      return it->second;
    }
    auto response = mutate(request, *annotator);
    replies_by_key_.emplace(cache_key, response);
    return response;
  }

  const auto state = store_.snapshot();
  if (resource == "days" && n == 2) {
    if (!get) return method_not_allowed();
    return {200, days_json(threads_, *state)};
  }
  if (resource == "days" && n == 4 && parts[3] == "threads") {
    if (!get) return method_not_allowed();
    const auto date = parse_date(parts[2]);
    if (!date) return error(404, "unknown_date", "not a date: " + parts[2]);
    const auto on_day = threads_.on_day(*date);
    if (on_day.empty()) return error(404, "unknown_date", "no threads on " + parts[2]);
    json items = json::array();
    for (const auto* t : on_day) items.push_back(thread_summary(*t, *state));
    return ok({{"date", format_date(*date)}, {"threads", std::move(items)}});
  }
  if (resource == "threads" && n == 3) {
    if (!get) return method_not_allowed();
    const auto* t = threads_.find(parts[2]);
    if (!t) return error(404, "unknown_thread", "unknown thread " + parts[2]);
    return ok({{"thread", thread_to_json(*t)},
               {"tree", thread_tree_json(*t)},
               {"summary", thread_summary(*t, *state)}});
  }
  if (resource == "stories" && n == 2) {
    if (!get) return method_not_allowed();
    json stories = json::array();
    const auto counts = state->member_counts();
    for (const auto& [id, s] : state->stories) stories.push_back(story_json(s, counts.at(id)));
    return ok({{"stories", std::move(stories)}});
  }
  if (resource == "review" && n == 2) {
    if (!get) return method_not_allowed();
    return {200, review_json(threads_, *state)};
  }
  if (resource == "export" && n == 2) {
    if (!get) return method_not_allowed();
    return {200, export_bundle(threads_, *state)};
  }
  if (resource == "report" && n == 2) {
    if (!get) return method_not_allowed();
    return report();
  }
  return error(404, "not_found", "no route for " + request.path);
}

ApiResponse AnnotationService::mutate(const ApiRequest& request, const std::string& annotator) {
  const auto parts = split_path(request.path);
  const auto body = parse_body(request.body);
  if (!body) return error(400, "invalid_body", "request body must be a JSON object");
  bool bad = false;
  const auto now = options_.clock();

  if (parts[1] == "threads" && parts[3] == "judgment") {
    const auto label_text = string_field(*body, "label", bad);
    const auto story_id = string_field(*body, "story_id", bad);
    const auto story_name = string_field(*body, "story", bad);
    if (bad || !label_text) return error(400, "invalid_body", "label is required");
    const auto label = parse_label(*label_text);
    if (!label) return error(400, "invalid_label", "label must be rumour, nonrumour or unsure");
    if (story_id && story_name) {
      return error(400, "invalid_body", "give either story_id or story, not both");
    }
    std::optional<StoryRef> story;
    if (story_id) story = StoryRef::by_id(*story_id);
    if (story_name) story = StoryRef::by_name(*story_name);

    const auto jd = store_.record_judgment(parts[2], *label, story, annotator, now);
    const auto state = store_.snapshot();
    json story_body = nullptr;
    if (jd.story_id) {
      const auto counts = state->member_counts();
      story_body = story_json(*state->story(*jd.story_id), counts.at(*jd.story_id));
    }
    return ok({{"judgment", judgment_json(jd)}, {"story", std::move(story_body)}});
  }

  if (parts[1] == "threads" && parts[3] == "move") {
    const auto target = string_field(*body, "story_id", bad);
    if (bad || !target) return error(400, "invalid_body", "story_id is required");
    const auto jd = store_.move_thread(parts[2], *target, annotator, now);
    return ok({{"judgment", judgment_json(jd)}});
  }

  // stories/{id}/rename
  const auto name = string_field(*body, "name", bad);
  if (bad || !name) return error(400, "invalid_body", "name is required");
  const auto story = store_.rename_story(parts[2], *name, annotator, now);
  const auto counts = store_.snapshot()->member_counts();
  return ok({{"story", story_json(story, counts.at(story.story_id))}});
}

ApiResponse AnnotationService::report() {
  // Built from a snapshot without holding the writer; other requests proceed.
  const auto state = store_.snapshot();
  {
    std::lock_guard lock(report_mutex_);
    if (report_seq_ == state->last_seq) return ok({{"report", report_cache_}});
  }
  auto built = build_report(threads_, *state, options_.report, options_.corpus);
  std::lock_guard lock(report_mutex_);
  report_seq_ = state->last_seq;
  report_cache_ = built;
  return ok({{"report", std::move(built)}});
}

}  // namespace rumourkit
