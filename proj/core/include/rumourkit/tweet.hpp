#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "rumourkit/time.hpp"

namespace rumourkit {

/// One social-media post as stored in a corpus.
struct TweetRecord {
  std::string id;
  std::string author;
  std::string text;
  Timestamp created_at{};
  std::uint64_t retweet_count = 0;
  std::string lang = "und";
  std::optional<std::string> in_reply_to;
  std::optional<std::string> retweet_of;  // set only for pure retweets

  bool is_reply() const { return in_reply_to.has_value(); }
  bool is_retweet() const { return retweet_of.has_value(); }

  friend bool operator==(const TweetRecord&, const TweetRecord&) = default;
};

class MalformedRecord : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses one JSON-lines record. Unknown fields are ignored; `created_at`
/// may be epoch milliseconds or an ISO-8601 string. Throws MalformedRecord.
TweetRecord parse_record(std::string_view line);
TweetRecord record_from_json(const nlohmann::json& j);

/// Canonical form: fixed key set, created_at as ISO-8601 UTC with millis.
nlohmann::json to_json(const TweetRecord& r);
std::string to_json_line(const TweetRecord& r);

/// Timeline order: created_at ascending, ties broken by id.
inline bool chronological(const TweetRecord& a, const TweetRecord& b) {
  if (a.created_at != b.created_at) return a.created_at < b.created_at;
  return a.id < b.id;
}

}  // namespace rumourkit
