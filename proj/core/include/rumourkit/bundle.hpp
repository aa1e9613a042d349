#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rumourkit/annostore.hpp"
#include "rumourkit/threads.hpp"

namespace rumourkit {

inline constexpr int kBundleSchemaVersion = 1;

/// Threads, the full event log and the current view in one document.
nlohmann::json export_bundle(const ThreadSet& threads, const AnnotationState& state);

/// Structural check against the bundle schema in docs/; empty when valid.
std::vector<std::string> validate_bundle(const nlohmann::json& bundle);

struct BundleContents {
  ThreadSet threads;
  std::vector<Event> events;
};

/// Throws std::invalid_argument when the bundle fails validation or its
/// events do not replay cleanly.
BundleContents read_bundle(const nlohmann::json& bundle);

/// Materialises a bundle as a threads directory plus an annotation log.
/// Refuses to overwrite a non-empty log or existing thread files.
void import_bundle(const nlohmann::json& bundle, const std::filesystem::path& threads_dir,
                   const std::filesystem::path& log_path);

}  // namespace rumourkit
