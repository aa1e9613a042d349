#include "rumourkit/tweet.hpp"

#include <algorithm>

#include "rumourkit/text.hpp"

namespace rumourkit {
namespace {

using nlohmann::json;

bool has_control_chars(std::string_view s) {
  return std::any_of(s.begin(), s.end(),
                     [](char c) { return static_cast<unsigned char>(c) < 0x20; });
}

// Ids arrive as strings or as bare integers depending on the exporter.
std::optional<std::string> read_id(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_unsigned()) return std::to_string(it->get<std::uint64_t>());
  if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
  throw MalformedRecord(std::string(key) + " must be a string or integer");
}

std::string read_string(const json& j, const char* key, std::string fallback) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_string()) throw MalformedRecord(std::string(key) + " must be a string");
  return it->get<std::string>();
}

Timestamp read_created_at(const json& j) {
  const auto it = j.find("created_at");
  if (it == j.end() || it->is_null()) throw MalformedRecord("missing created_at");
  if (it->is_number_integer()) return from_epoch_ms(it->get<std::int64_t>());
  if (it->is_string()) {
    if (auto t = parse_iso8601(it->get_ref<const std::string&>())) return *t;
    throw MalformedRecord("created_at is not ISO-8601");
  }
  throw MalformedRecord("created_at must be epoch milliseconds or ISO-8601");
}

}  // namespace

TweetRecord record_from_json(const json& j) {
  if (!j.is_object()) throw MalformedRecord("record is not a JSON object");

  TweetRecord r;
  auto id = read_id(j, "id");
  if (!id || id->empty()) throw MalformedRecord("missing id");
  if (has_control_chars(*id)) throw MalformedRecord("id contains control characters");
  r.id = std::move(*id);

  if (!j.contains("text") || j["text"].is_null()) throw MalformedRecord("missing text");
  r.text = read_string(j, "text", "");
  r.created_at = read_created_at(j);
  r.author = read_string(j, "author", "");
  r.lang = read_string(j, "lang", "und");
  if (r.lang.empty()) r.lang = "und";

  if (const auto it = j.find("retweet_count"); it != j.end() && !it->is_null()) {
    if (it->is_number_unsigned()) {
      r.retweet_count = it->get<std::uint64_t>();
    } else if (it->is_number_integer()) {
      throw MalformedRecord("retweet_count must be non-negative");
    } else {
      throw MalformedRecord("retweet_count must be an integer");
    }
  }

  r.in_reply_to = read_id(j, "in_reply_to");
  r.retweet_of = read_id(j, "retweet_of");
  if (r.in_reply_to && r.in_reply_to->empty()) r.in_reply_to.reset();
  if (r.retweet_of && r.retweet_of->empty()) r.retweet_of.reset();
  if (r.in_reply_to && *r.in_reply_to == r.id) throw MalformedRecord("self-reply");
  if (r.in_reply_to && r.retweet_of) {
    throw MalformedRecord("record cannot be both a reply and a retweet");
  }
  for (const auto* s : {&r.text, &r.author, &r.id}) {
    if (!is_valid_utf8(*s)) throw MalformedRecord("invalid UTF-8");
  }
  return r;
}

TweetRecord parse_record(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw MalformedRecord(std::string("unparseable JSON: ") + e.what());
  }
  return record_from_json(j);
}

json to_json(const TweetRecord& r) {
  json j = {
      {"id", r.id},
      {"author", r.author},
      {"text", r.text},
      {"created_at", format_iso8601(r.created_at)},
      {"retweet_count", r.retweet_count},
      {"lang", r.lang},
  };
  if (r.in_reply_to) j["in_reply_to"] = *r.in_reply_to;
  if (r.retweet_of) j["retweet_of"] = *r.retweet_of;
  return j;
}

std::string to_json_line(const TweetRecord& r) { return to_json(r).dump(); }

}  // namespace rumourkit
