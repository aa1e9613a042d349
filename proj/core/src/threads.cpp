#include "rumourkit/threads.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace rumourkit {
namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::vector<TweetRecord>> ReplyProvider::direct_replies_batch(
    std::span<const std::string> ids) const {
  std::vector<std::vector<TweetRecord>> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(direct_replies(id));
  return out;
}

std::size_t ReplyProvider::count_orphans(const std::unordered_set<std::string>&) const {
  return 0;
}

std::vector<TweetRecord> CorpusReplyProvider::direct_replies(std::string_view id) const {
  std::vector<TweetRecord> out;
  for (const auto* r : store_.replies_to(id)) out.push_back(*r);
  return out;
}

std::size_t CorpusReplyProvider::count_orphans(
    const std::unordered_set<std::string>& roots) const {
  std::size_t n = 0;
  for (const auto* r : store_.dangling_replies()) {
    if (!roots.contains(*r->in_reply_to)) ++n;
  }
  return n;
}

std::size_t Thread::max_depth() const {
  std::size_t d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

nlohmann::json ThreadBuildStats::to_json() const {
  json fails = json::array();
  for (const auto& f : failures) fails.push_back({{"source_id", f.source_id}, {"error", f.message}});
  return {{"sources_processed", sources_processed},
          {"replies_collected", replies_collected},
          {"orphans_dropped", orphans_dropped},
          {"cycles_broken", cycles_broken},
          {"avg_replies_per_source", avg_replies_per_source()},
          {"failures", std::move(fails)}};
}

Thread build_thread(const TweetRecord& source, const ReplyProvider& provider,
                    std::optional<std::size_t> max_depth, std::size_t* cycles_broken) {
  if (source.is_reply()) {
    throw std::invalid_argument("source " + source.id + " is itself a reply");
  }
  Thread thread{source, {}};
  std::unordered_set<std::string> visited{source.id};
  std::vector<std::string> frontier{source.id};
  std::size_t depth = 0;
  std::size_t skipped = 0;

  while (!frontier.empty() && (!max_depth || depth < *max_depth)) {
    ++depth;
    auto batches = provider.direct_replies_batch(frontier);
    if (batches.size() != frontier.size()) {
      throw ProviderError("provider returned " + std::to_string(batches.size()) +
                          " reply lists for " + std::to_string(frontier.size()) + " ids");
    }
    std::vector<std::string> next;
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      auto& replies = batches[i];
      std::sort(replies.begin(), replies.end(), chronological);
      for (auto& reply : replies) {
        if (!reply.in_reply_to || *reply.in_reply_to != frontier[i]) {
          throw ProviderError("reply " + reply.id + " returned for " + frontier[i] +
                              " does not reply to it");
        }
        if (!visited.insert(reply.id).second) {
          ++skipped;
          continue;
        }
        next.push_back(reply.id);
        thread.nodes.push_back({std::move(reply), depth, frontier[i]});
      }
    }
    frontier = std::move(next);
  }
  if (cycles_broken) *cycles_broken += skipped;
  return thread;
}

ThreadBuildResult build_all(std::span<const TweetRecord> sources, const ReplyProvider& provider,
                            std::optional<std::size_t> max_depth) {
  ThreadBuildResult result;
  std::unordered_set<std::string> roots;
  for (const auto& s : sources) roots.insert(s.id);

  for (const auto& source : sources) {
    try {
      auto thread = build_thread(source, provider, max_depth, &result.stats.cycles_broken);
      ++result.stats.sources_processed;
      result.stats.replies_collected += thread.reply_count();
      result.threads.push_back(std::move(thread));
    } catch (const std::exception& e) {
      result.stats.failures.push_back({source.id, e.what()});
    }
  }
  result.stats.orphans_dropped = provider.count_orphans(roots);
  return result;
}

json thread_to_json(const Thread& thread) {
  json nodes = json::array();
  for (const auto& n : thread.nodes) {
    nodes.push_back({{"record", to_json(n.record)}, {"depth", n.depth}, {"parent", n.parent}});
  }
  return {{"format", "rumourkit-thread"},
          {"version", kThreadFormatVersion},
          {"source", to_json(thread.source)},
          {"nodes", std::move(nodes)},
          {"reply_count", thread.reply_count()},
          {"max_depth", thread.max_depth()}};
}

Thread thread_from_json(const json& doc) {
  if (!doc.is_object() || doc.value("format", "") != "rumourkit-thread") {
    throw std::invalid_argument("not a rumourkit thread document");
  }
  if (doc.value("version", 0) != kThreadFormatVersion) {
    throw std::invalid_argument("unsupported thread document version");
  }
  Thread t;
  try {
    t.source = record_from_json(doc.at("source"));
    std::unordered_map<std::string, std::size_t> depth_of{{t.source.id, 0}};
    for (const auto& n : doc.at("nodes")) {
      ThreadNode node{record_from_json(n.at("record")), n.at("depth").get<std::size_t>(),
                      n.at("parent").get<std::string>()};
      const auto parent = depth_of.find(node.parent);
      if (parent == depth_of.end() || parent->second + 1 != node.depth ||
          !depth_of.emplace(node.record.id, node.depth).second) {
        throw std::invalid_argument("node " + node.record.id + " breaks the tree structure");
      }
      t.nodes.push_back(std::move(node));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed thread document: ") + e.what());
  } catch (const MalformedRecord& e) {
    throw std::invalid_argument(std::string("malformed record in thread: ") + e.what());
  }
  return t;
}

json thread_tree_json(const Thread& thread) {
  // Children lists in node order keep sibling order.
  std::unordered_map<std::string, std::vector<std::size_t>> children;
  for (std::size_t i = 0; i < thread.nodes.size(); ++i) {
    children[thread.nodes[i].parent].push_back(i);
  }
  auto build = [&](auto&& self, const TweetRecord& rec, std::size_t depth) -> json {
    json node = {{"record", to_json(rec)}, {"depth", depth}, {"replies", json::array()}};
    if (const auto it = children.find(rec.id); it != children.end()) {
      for (auto idx : it->second) {
        node["replies"].push_back(self(self, thread.nodes[idx].record, depth + 1));
      }
    }
    return node;
  };
  return build(build, thread.source, 0);
}

std::string render_indented(const Thread& thread) {
  std::unordered_map<std::string, std::vector<std::size_t>> children;
  for (std::size_t i = 0; i < thread.nodes.size(); ++i) {
    children[thread.nodes[i].parent].push_back(i);
  }
  std::ostringstream out;
  auto emit = [&](auto&& self, const TweetRecord& rec, std::size_t depth) -> void {
    out << std::string(depth * 2, ' ') << '@' << rec.author << ": " << rec.text << '\n';
    if (const auto it = children.find(rec.id); it != children.end()) {
      for (auto idx : it->second) self(self, thread.nodes[idx].record, depth + 1);
    }
  };
  emit(emit, thread.source, 0);
  return out.str();
}

fs::path thread_file_name(std::string_view source_id) {
  if (source_id.empty() || source_id == "." || source_id == ".." ||
      source_id.find_first_of("/\\") != std::string_view::npos) {
    throw std::invalid_argument("thread id cannot be used as a file name: " +
                                std::string(source_id));
  }
  return fs::path(std::string(source_id) + ".json");
}

ThreadSet::ThreadSet(std::vector<Thread> threads) : threads_(std::move(threads)) {
  std::sort(threads_.begin(), threads_.end(),
            [](const Thread& a, const Thread& b) { return chronological(a.source, b.source); });
  for (std::size_t i = 0; i < threads_.size(); ++i) {
    if (!by_id_.emplace(threads_[i].id(), i).second) {
      throw std::invalid_argument("duplicate thread " + threads_[i].id());
    }
    by_day_[std::chrono::floor<std::chrono::days>(threads_[i].source.created_at)].push_back(i);
  }
}

ThreadSet ThreadSet::load(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("threads directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Thread> threads;
  threads.reserve(files.size());
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    try {
      threads.push_back(thread_from_json(json::parse(in)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ": " + e.what());
    }
  }
  return ThreadSet(std::move(threads));
}

void ThreadSet::save(const fs::path& dir) const {
  fs::create_directories(dir);
  for (const auto& t : threads_) {
    const auto path = dir / thread_file_name(t.id());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << thread_to_json(t).dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + path.string());
  }
}

const Thread* ThreadSet::find(std::string_view id) const {
  const auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &threads_[it->second];
}

std::vector<CivilDate> ThreadSet::days() const {
  std::vector<CivilDate> out;
  for (const auto& [d, _] : by_day_) out.emplace_back(d);
  return out;
}

std::vector<const Thread*> ThreadSet::on_day(CivilDate day) const {
  std::vector<const Thread*> out;
  if (const auto it = by_day_.find(std::chrono::sys_days{day}); it != by_day_.end()) {
    for (auto i : it->second) out.push_back(&threads_[i]);
  }
  return out;
}

std::unordered_set<std::string> ThreadSet::ids() const {
  std::unordered_set<std::string> out;
  for (const auto& t : threads_) out.insert(t.id());
  return out;
}

}  // namespace rumourkit
