#include "rumourkit/bundle.hpp"

#include <fstream>

namespace rumourkit {
namespace fs = std::filesystem;
using nlohmann::json;

json export_bundle(const ThreadSet& threads, const AnnotationState& state) {
  json thread_docs = json::array();
  for (const auto& t : threads.all()) thread_docs.push_back(thread_to_json(t));
  json events = json::array();
  for (const auto& e : state.history) events.push_back(event_to_json(e));
  return {{"format", "rumourkit-bundle"},
          {"schema_version", kBundleSchemaVersion},
          {"threads", std::move(thread_docs)},
          {"events", std::move(events)},
          {"snapshot", snapshot_json(state)}};
}

std::vector<std::string> validate_bundle(const json& bundle) {
  std::vector<std::string> problems;
  if (!bundle.is_object()) return {"bundle is not an object"};
  if (bundle.value("format", "") != "rumourkit-bundle") problems.emplace_back("format must be rumourkit-bundle");
  if (!bundle.contains("schema_version") || bundle["schema_version"] != kBundleSchemaVersion) {
    problems.emplace_back("unsupported schema_version");
  }
  for (const char* key : {"threads", "events"}) {
    if (!bundle.contains(key) || !bundle[key].is_array()) {
      problems.push_back(std::string(key) + " must be an array");
    }
  }
  if (!bundle.contains("snapshot") || !bundle["snapshot"].is_object()) {
    problems.emplace_back("snapshot must be an object");
  }
  if (!problems.empty()) return problems;

  for (std::size_t i = 0; i < bundle["threads"].size(); ++i) {
    const auto& t = bundle["threads"][i];
    if (!t.is_object() || !t.contains("source") || !t.contains("nodes") || !t["nodes"].is_array()) {
      problems.push_back("threads[" + std::to_string(i) + "] is not a thread document");
    }
  }
  for (std::size_t i = 0; i < bundle["events"].size(); ++i) {
    const auto& e = bundle["events"][i];
    if (!e.is_object() || !e.contains("seq") || !e.contains("type") || !e.contains("at")) {
      problems.push_back("events[" + std::to_string(i) + "] lacks seq/type/at");
    }
  }
  return problems;
}

BundleContents read_bundle(const json& bundle) {
  if (const auto problems = validate_bundle(bundle); !problems.empty()) {
    throw std::invalid_argument("invalid bundle: " + problems.front());
  }
  std::vector<Thread> threads;
  for (const auto& doc : bundle["threads"]) threads.push_back(thread_from_json(doc));
  BundleContents out{ThreadSet(std::move(threads)), {}};
  for (const auto& e : bundle["events"]) out.events.push_back(event_from_json(e));

  const auto state = replay(out.events);
  for (const auto& [thread_id, _] : state.current) {
    if (!out.threads.find(thread_id)) {
      throw std::invalid_argument("bundle judges unknown thread " + thread_id);
    }
  }
  if (snapshot_json(state) != bundle["snapshot"]) {
    throw std::invalid_argument("bundle snapshot does not match its event log");
  }
  return out;
}

void import_bundle(const json& bundle, const fs::path& threads_dir, const fs::path& log_path) {
  auto contents = read_bundle(bundle);
  if (fs::exists(log_path) && fs::file_size(log_path) > 0) {
    throw std::runtime_error("refusing to import over non-empty log " + log_path.string());
  }
  for (const auto& t : contents.threads.all()) {
    if (fs::exists(threads_dir / thread_file_name(t.id()))) {
      throw std::runtime_error("refusing to overwrite thread file for " + t.id());
    }
  }
  contents.threads.save(threads_dir);
  if (log_path.has_parent_path()) fs::create_directories(log_path.parent_path());
  std::ofstream log(log_path, std::ios::binary | std::ios::trunc);
  for (const auto& e : contents.events) log << event_to_json(e).dump() << '\n';
  if (!log) throw std::runtime_error("cannot write " + log_path.string());
}

}  // namespace rumourkit
