#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "rumourkit/annostore.hpp"
#include "rumourkit/corpus_store.hpp"
#include "rumourkit/report.hpp"
#include "rumourkit/threads.hpp"

namespace rumourkit {

inline constexpr int kApiSchemaVersion = 1;
inline constexpr std::string_view kTokenHeader = "x-annotator-token";
inline constexpr std::string_view kIdempotencyHeader = "idempotency-key";

struct ApiRequest {
  std::string method;
  std::string path;  // percent-decoded, no query string
  std::map<std::string, std::string> headers;  // lower-case names
  std::string body;

  std::optional<std::string> header(std::string_view lower_name) const;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

struct ServiceOptions {
  /// Token -> annotator id. When empty, the token itself is the annotator id.
  std::map<std::string, std::string> annotator_tokens;
  /// Judgment timestamps come from here, never from the client.
  std::function<Timestamp()> clock;
  ReportOptions report;
  const CorpusStore* corpus = nullptr;
};

/// JSON API over one dataset. Transport-agnostic: HttpServer feeds it, and
/// tests can call handle() directly.
///
///   GET  /api/days
///   GET  /api/days/{date}/threads
///   GET  /api/threads/{id}
///   POST /api/threads/{id}/judgment   {label, story_id? | story?}
///   POST /api/threads/{id}/move       {story_id}
///   GET  /api/stories
///   POST /api/stories/{id}/rename     {name}
///   GET  /api/review
///   GET  /api/report
///   GET  /api/export
class AnnotationService {
 public:
  AnnotationService(ThreadSet threads, AnnotationStore& store, ServiceOptions options = {});

  ApiResponse handle(const ApiRequest& request);

  const ThreadSet& threads() const { return threads_; }

  /// Bodies shared with offline tools so exported and served views agree.
  static nlohmann::json review_json(const ThreadSet& threads, const AnnotationState& state);
  static nlohmann::json days_json(const ThreadSet& threads, const AnnotationState& state);

 private:
  ApiResponse route(const ApiRequest& request);
  ApiResponse mutate(const ApiRequest& request, const std::string& annotator);
  std::optional<std::string> authenticate(const ApiRequest& request) const;
  ApiResponse report();

  ThreadSet threads_;
  AnnotationStore& store_;
  ServiceOptions options_;

  std::mutex idempotency_mutex_;
  std::map<std::string, ApiResponse> replies_by_key_;

  std::mutex report_mutex_;
  std::optional<std::uint64_t> report_seq_;
  nlohmann::json report_cache_;
};

/// HTTP/1.1 front end for AnnotationService.
class HttpServer {
 public:
  explicit HttpServer(AnnotationService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds without serving; port 0 picks a free port. Returns the bound
  /// port or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop(); requires a successful bind().
  bool listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace rumourkit
