#include "rumourkit/corpus_store.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rumourkit {
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kManifestMagic = "#rumourkit-corpus v1";
constexpr std::string_view kSegmentMagic = "#rumourkit-segment v1";
constexpr std::string_view kIndexMagic = "#rumourkit-index v1";

std::string numbered(std::string_view prefix, std::uint64_t n, std::string_view ext) {
  std::array<char, 16> digits{};
  std::snprintf(digits.data(), digits.size(), "%06llu", static_cast<unsigned long long>(n));
  return std::string(prefix) + digits.data() + std::string(ext);
}

std::ifstream open_with_magic(const fs::path& path, std::string_view magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header) || header != magic) {
    throw StorageError(path.string() + ": bad magic header (expected '" + std::string(magic) + "')");
  }
  return in;
}

// Writes to a temporary sibling and renames into place.
void write_atomically(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw StorageError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw StorageError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::vector<std::string_view> split_tabs(std::string_view line, std::size_t max_parts) {
  std::vector<std::string_view> parts;
  while (parts.size() + 1 < max_parts) {
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) break;
    parts.push_back(line.substr(0, tab));
    line.remove_prefix(tab + 1);
  }
  parts.push_back(line);
  return parts;
}

bool parse_u64(std::string_view s, std::uint64_t& out) {
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace

CorpusStore::CorpusStore(CorpusStore&&) noexcept = default;
CorpusStore& CorpusStore::operator=(CorpusStore&&) noexcept = default;
CorpusStore::~CorpusStore() = default;

CorpusStore CorpusStore::in_memory() { return CorpusStore{}; }

CorpusStore CorpusStore::open(const fs::path& dir) {
  CorpusStore store;
  store.dir_ = dir;
  store.persistent_ = true;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw StorageError("cannot create store directory " + dir.string() + ": " + ec.message());
  if (fs::exists(dir / "MANIFEST")) store.load();
  return store;
}

bool CorpusStore::persistent() const { return persistent_; }
const fs::path& CorpusStore::dir() const { return dir_; }

void CorpusStore::load() {
  auto in = open_with_magic(dir_ / "MANIFEST", kManifestMagic);
  std::string line;
  std::string index_file;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string key, value;
    fields >> key >> value;
    if (key == "generation") {
      generation_ = std::stoull(value);
    } else if (key == "segment") {
      segments_.push_back(value);
    } else if (key == "index") {
      index_file = value;
    } else {
      throw StorageError("MANIFEST: unknown entry '" + key + "'");
    }
  }

  for (std::uint32_t seg = 0; seg < segments_.size(); ++seg) {
    auto seg_in = open_with_magic(dir_ / segments_[seg], kSegmentMagic);
    std::uint32_t row = 0;
    while (std::getline(seg_in, line)) {
      TweetRecord r;
      try {
        r = parse_record(line);
      } catch (const MalformedRecord& e) {
        throw StorageError(segments_[seg] + ":" + std::to_string(row + 2) + ": " + e.what());
      }
      records_.push_back(std::move(r));
      locations_.push_back({seg, row});
      index_record(records_.size() - 1);
      ++row;
    }
  }

  if (!index_file.empty()) {
    auto idx = open_with_magic(dir_ / index_file, kIndexMagic);
    while (std::getline(idx, line)) {
      if (line.empty()) continue;
      if (line.rfind("S\t", 0) == 0) {
        seen_only_.insert(line.substr(2));
        continue;
      }
      const auto parts = split_tabs(line, 5);
      std::uint64_t seg = 0, row = 0, count = 0;
      const bool parsed = parts.size() == 5 && parts[0] == "K" && parse_u64(parts[1], seg) &&
                          parse_u64(parts[2], row) && parse_u64(parts[3], count);
      const auto it = parsed ? by_id_.find(std::string(parts[4])) : by_id_.end();
      if (it == by_id_.end() || locations_[it->second].segment != seg ||
          locations_[it->second].row != row) {
        throw StorageError(index_file + ": entry does not match segments: " + line);
      }
      records_[it->second].retweet_count = count;
    }
  }
  committed_ = records_.size();
}

void CorpusStore::index_record(std::size_t pos) {
  const auto& r = records_[pos];
  by_id_.emplace(r.id, pos);
  by_day_[std::chrono::floor<std::chrono::days>(r.created_at)].push_back(pos);
  if (r.in_reply_to) {
    auto& siblings = by_parent_[*r.in_reply_to];
    const auto at = std::upper_bound(siblings.begin(), siblings.end(), pos,
                                     [this](std::size_t a, std::size_t b) {
                                       return chronological(records_[a], records_[b]);
                                     });
    siblings.insert(at, pos);
  }
}

const TweetRecord* CorpusStore::find(std::string_view id) const {
  const auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

bool CorpusStore::has_seen(std::string_view id) const {
  const std::string key(id);
  return by_id_.contains(key) || seen_only_.contains(key);
}

std::vector<CivilDate> CorpusStore::days() const {
  std::vector<CivilDate> out;
  out.reserve(by_day_.size());
  for (const auto& [day, _] : by_day_) out.emplace_back(day);
  return out;
}

std::vector<const TweetRecord*> CorpusStore::on_day(CivilDate day) const {
  std::vector<const TweetRecord*> out;
  if (const auto it = by_day_.find(std::chrono::sys_days{day}); it != by_day_.end()) {
    for (auto pos : it->second) out.push_back(&records_[pos]);
  }
  std::sort(out.begin(), out.end(),
            [](const TweetRecord* a, const TweetRecord* b) { return chronological(*a, *b); });
  return out;
}

std::vector<const TweetRecord*> CorpusStore::replies_to(std::string_view id) const {
  std::vector<const TweetRecord*> out;
  if (const auto it = by_parent_.find(std::string(id)); it != by_parent_.end()) {
    out.reserve(it->second.size());
    for (auto pos : it->second) out.push_back(&records_[pos]);
  }
  return out;
}

std::vector<const TweetRecord*> CorpusStore::dangling_replies() const {
  std::vector<const TweetRecord*> out;
  for (const auto& [parent, children] : by_parent_) {
    if (by_id_.contains(parent)) continue;
    for (auto pos : children) out.push_back(&records_[pos]);
  }
  std::sort(out.begin(), out.end(),
            [](const TweetRecord* a, const TweetRecord* b) { return chronological(*a, *b); });
  return out;
}

void CorpusStore::append(TweetRecord record) {
  if (has_seen(record.id)) throw StorageError("duplicate id appended: " + record.id);
  records_.push_back(std::move(record));
  locations_.push_back({static_cast<std::uint32_t>(segments_.size()),
                        static_cast<std::uint32_t>(records_.size() - 1 - committed_)});
  index_record(records_.size() - 1);
  dirty_ = true;
}

void CorpusStore::note_seen(std::string id) {
  if (by_id_.contains(id)) return;
  if (seen_only_.insert(std::move(id)).second) dirty_ = true;
}

void CorpusStore::raise_retweet_count(std::string_view id, std::uint64_t count) {
  const auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return;
  auto& stored = records_[it->second].retweet_count;
  if (count > stored) {
    stored = count;
    dirty_ = true;
  }
}

void CorpusStore::commit() {
  if (!persistent_ || !dirty_) {
    dirty_ = false;
    return;
  }
  const auto next_gen = generation_ + 1;
  auto segments = segments_;

  if (records_.size() > committed_) {
    const auto name = numbered("seg-", next_gen, ".jsonl");
    std::string body(kSegmentMagic);
    body += '\n';
    for (std::size_t i = committed_; i < records_.size(); ++i) {
      body += to_json_line(records_[i]);
      body += '\n';
    }
    // Segments are never rewritten; a leftover from a failed commit is replaced.
    write_atomically(dir_ / name, body);
    segments.push_back(name);
  }

  const auto index_name = numbered("index-", next_gen, ".idx");
  {
    std::string body(kIndexMagic);
    body += '\n';
    for (std::size_t i = 0; i < records_.size(); ++i) {
      const auto seg = i < committed_ ? locations_[i].segment
                                      : static_cast<std::uint32_t>(segments.size() - 1);
      body += "K\t" + std::to_string(seg) + '\t' + std::to_string(locations_[i].row) + '\t' +
              std::to_string(records_[i].retweet_count) + '\t' + records_[i].id + '\n';
    }
    std::vector<std::string> seen(seen_only_.begin(), seen_only_.end());
    std::sort(seen.begin(), seen.end());
    for (const auto& id : seen) body += "S\t" + id + '\n';
    write_atomically(dir_ / index_name, body);
  }

  std::string manifest(kManifestMagic);
  manifest += "\ngeneration " + std::to_string(next_gen) + '\n';
  for (const auto& s : segments) manifest += "segment " + s + '\n';
  manifest += "index " + index_name + '\n';
  write_atomically(dir_ / "MANIFEST", manifest);

  // Generation N-1 stays for readers that opened it before the swap.
  if (generation_ >= 1) {
    std::error_code ec;
    fs::remove(dir_ / numbered("index-", generation_ - 1, ".idx"), ec);
  }
  for (std::size_t i = committed_; i < records_.size(); ++i) {
    locations_[i].segment = static_cast<std::uint32_t>(segments.size() - 1);
  }
  segments_ = std::move(segments);
  generation_ = next_gen;
  committed_ = records_.size();
  dirty_ = false;
}

}  // namespace rumourkit
