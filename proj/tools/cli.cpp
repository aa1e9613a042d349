#include "rumourkit/cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "rumourkit/annostore.hpp"
#include "rumourkit/bundle.hpp"
#include "rumourkit/corpus_store.hpp"
#include "rumourkit/ingest.hpp"
#include "rumourkit/report.hpp"
#include "rumourkit/sampler.hpp"
#include "rumourkit/service.hpp"
#include "rumourkit/text.hpp"
#include "rumourkit/threads.hpp"

namespace rumourkit::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IngestArgs {
  std::vector<std::string> inputs;
  std::vector<std::string> keywords;
  std::vector<std::string> languages;
  std::string from, to;
  std::string store;
};

struct DistributionArgs {
  std::string store;
  std::string out;
  std::vector<std::uint64_t> thresholds;
};

struct SampleArgs {
  std::string store;
  std::uint64_t min_retweets = 100;
  bool exclude_replies = true;
  bool exclude_retweets = true;
  std::vector<std::string> languages;
  std::string out;
};

struct ThreadsArgs {
  std::string store;
  std::string sample;
  std::string out;
  std::optional<std::size_t> max_depth;
};

struct ServeArgs {
  std::string threads_dir;
  std::string log = "annotations.log";
  std::string store;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::vector<std::string> tokens;
  double trim = 0.05;
  double session_gap = 600;
  std::vector<std::uint64_t> thresholds = {100, 250};
};

struct ReportArgs {
  std::string threads_dir;
  std::string log = "annotations.log";
  std::string store;
  std::string out;
  std::string csv;
  double trim = 0.05;
  double session_gap = 600;
  std::vector<std::uint64_t> thresholds = {100, 250};
};

struct ExportArgs {
  std::string threads_dir;
  std::string log = "annotations.log";
  std::string out;
};

struct ImportArgs {
  std::string bundle;
  std::string threads_dir;
  std::string log = "annotations.log";
};

Timestamp parse_instant(const std::string& text, bool end_of_day) {
  if (const auto t = parse_iso8601(text)) return *t;
  if (const auto d = parse_date(text)) {
    const auto start = start_of_day(*d);
    return end_of_day ? start + std::chrono::days(1) : start;
  }
  throw UsageError("not an ISO-8601 time or date: " + text);
}

std::optional<std::set<std::string>> language_set(const std::vector<std::string>& codes) {
  if (codes.empty()) return std::nullopt;
  return std::set<std::string>(codes.begin(), codes.end());
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out.flush()) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  auto doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw std::runtime_error(path.string() + " is not valid JSON");
  return doc;
}

std::vector<Event> events_at(const fs::path& log) {
  if (!fs::exists(log)) return {};
  return read_event_log(log);
}

ReportOptions report_options(double trim, double gap_s, std::vector<std::uint64_t> thresholds) {
  if (!(trim >= 0.0 && trim < 0.5)) throw UsageError("--trim must be in [0, 0.5)");
  if (!(gap_s >= 0.0)) throw UsageError("--session-gap must be non-negative");
  ReportOptions o;
  o.trim_fraction = trim;
  o.session_gap = std::chrono::milliseconds(static_cast<std::int64_t>(gap_s * 1000.0 + 0.5));
  o.thresholds = std::move(thresholds);
  return o;
}

int do_ingest(const IngestArgs& a, std::ostream& out, std::ostream& err) {
  IngestFilter filter;
  if (!a.keywords.empty()) filter.keywords = a.keywords;
  filter.languages = language_set(a.languages);
  if (!a.from.empty() || !a.to.empty()) {
    filter.date_range = DateRange{
        a.from.empty() ? Timestamp::min() : parse_instant(a.from, false),
        a.to.empty() ? Timestamp::max() : parse_instant(a.to, true)};
  }
  try {
    filter.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  auto store = CorpusStore::open(a.store);
  CorpusStats stats;
  bool from_stdin = a.inputs.size() == 1 && a.inputs.front() == "-";
  if (from_stdin) {
    StreamRecordSource source(std::cin);
    stats = ingest_corpus(source, filter, store);
  } else {
    FileRecordSource source({a.inputs.begin(), a.inputs.end()});
    stats = ingest_corpus(source, filter, store);
  }
  err << "ingested " << stats.kept << " of " << stats.total_read << " records into " << a.store
      << "\n";
  out << stats.to_json().dump() << "\n";
  return 0;
}

int do_distribution(const DistributionArgs& a, std::ostream& out, std::ostream&) {
  const auto store = CorpusStore::open(a.store);
  const auto dist = compute_distribution(store, a.thresholds);
  const auto doc = dist.to_json();
  if (a.out.empty()) {
    out << doc.dump() << "\n";
  } else {
    write_file(a.out, doc.dump(2) + "\n");
    out << json{{"records", dist.total}, {"out", a.out}}.dump() << "\n";
  }
  return 0;
}

int do_sample(const SampleArgs& a, std::ostream& out, std::ostream& err) {
  SamplePlan plan;
  plan.min_retweets = a.min_retweets;
  plan.exclude_replies = a.exclude_replies;
  plan.exclude_retweets = a.exclude_retweets;
  plan.languages = language_set(a.languages);
  try {
    plan.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto store = CorpusStore::open(a.store);
  const auto sampled = sample_sources(store, plan);
  if (!a.out.empty()) {
    std::string lines;
    for (const auto& r : sampled) lines += to_json_line(r) + "\n";
    write_file(a.out, lines);
  }
  err << "sampled " << sampled.size() << " of " << store.records().size() << " records\n";
  out << json{{"sampled", sampled.size()},
              {"corpus", store.records().size()},
              {"min_retweets", plan.min_retweets},
              {"exclude_replies", plan.exclude_replies},
              {"exclude_retweets", plan.exclude_retweets},
              {"out", a.out.empty() ? json(nullptr) : json(a.out)}}
             .dump()
      << "\n";
  return 0;
}

std::vector<TweetRecord> read_sample(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open sample " + path.string());
  std::vector<TweetRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (rumourkit::trim(line).empty()) continue;
    try {
      records.push_back(parse_record(line));
    } catch (const MalformedRecord& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return records;
}

int do_threads(const ThreadsArgs& a, std::ostream& out, std::ostream& err) {
  const auto store = CorpusStore::open(a.store);
  const auto sources = read_sample(a.sample);
  const CorpusReplyProvider provider(store);
  auto result = build_all(sources, provider, a.max_depth);
  for (const auto& f : result.stats.failures) {
    err << "skipped " << f.source_id << ": " << f.message << "\n";
  }
  ThreadSet(std::move(result.threads)).save(a.out);
  out << result.stats.to_json().dump() << "\n";
  return 0;
}

std::map<std::string, std::string> token_map(const std::vector<std::string>& specs) {
  std::map<std::string, std::string> tokens;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      throw UsageError("--token expects TOKEN=ANNOTATOR, got " + spec);
    }
    tokens[spec.substr(0, eq)] = spec.substr(eq + 1);
  }
  return tokens;
}

int do_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
  auto threads = ThreadSet::load(a.threads_dir);
  auto store = AnnotationStore::open(a.log, threads.ids());
  std::optional<CorpusStore> corpus;
  if (!a.store.empty()) corpus = CorpusStore::open(a.store);

  ServiceOptions options;
  options.annotator_tokens = token_map(a.tokens);
  options.report = report_options(a.trim, a.session_gap, a.thresholds);
  options.corpus = corpus ? &*corpus : nullptr;
  AnnotationService service(std::move(threads), *store, std::move(options));

  // Block the shutdown signals before the listener thread exists so only
  // sigwait below sees them.
  sigset_t signals, previous;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, &previous);

  HttpServer server(service);
  const int port = server.bind(a.host, a.port);
  if (port < 0) {
    pthread_sigmask(SIG_SETMASK, &previous, nullptr);
    throw std::runtime_error("cannot bind " + a.host + ":" + std::to_string(a.port));
  }
  std::thread listener([&server] { server.listen(); });
  server.wait_until_ready();
  out << json{{"listening", true},
              {"host", a.host},
              {"port", port},
              {"threads", service.threads().size()},
              {"events", store->snapshot()->last_seq}}
             .dump()
      << std::endl;
  err << "serving " << service.threads().size() << " threads on http://" << a.host << ":" << port
      << "\n";

  int received = 0;
  sigwait(&signals, &received);
  server.stop();
  listener.join();
  pthread_sigmask(SIG_SETMASK, &previous, nullptr);
  err << "stopped on signal " << received << "\n";
  return 0;
}

int do_report(const ReportArgs& a, std::ostream& out, std::ostream& err) {
  const auto options = report_options(a.trim, a.session_gap, a.thresholds);
  const auto threads = ThreadSet::load(a.threads_dir);
  const auto state = replay(events_at(a.log));
  std::optional<CorpusStore> corpus;
  if (!a.store.empty()) corpus = CorpusStore::open(a.store);

  const auto doc = build_report(threads, state, options, corpus ? &*corpus : nullptr);
  for (const auto& line : doc["day_table"]["text"]) err << line.get<std::string>() << "\n";
  if (!a.csv.empty()) write_file(a.csv, day_table(threads, state).csv());
  if (a.out.empty()) {
    out << doc.dump(2) << "\n";
  } else {
    write_file(a.out, doc.dump(2) + "\n");
    out << json{{"out", a.out},
                {"threads", threads.size()},
                {"events", state.last_seq},
                {"csv", a.csv.empty() ? json(nullptr) : json(a.csv)}}
               .dump()
        << "\n";
  }
  return 0;
}

int do_export(const ExportArgs& a, std::ostream& out, std::ostream& err) {
  const auto threads = ThreadSet::load(a.threads_dir);
  const auto state = replay(events_at(a.log));
  const auto bundle = export_bundle(threads, state);
  if (a.out.empty()) {
    out << bundle.dump() << "\n";
  } else {
    write_file(a.out, bundle.dump() + "\n");
    out << json{{"out", a.out}, {"threads", threads.size()}, {"events", state.history.size()}}
               .dump()
        << "\n";
  }
  err << "exported " << threads.size() << " threads and " << state.history.size()
      << " events\n";
  return 0;
}

int do_import(const ImportArgs& a, std::ostream& out, std::ostream& err) {
  const auto bundle = read_json_file(a.bundle);
  import_bundle(bundle, a.threads_dir, a.log);
  const auto threads = bundle["threads"].size();
  const auto events = bundle["events"].size();
  err << "imported " << threads << " threads and " << events << " events\n";
  out << json{{"threads", threads},
              {"events", events},
              {"threads_dir", a.threads_dir},
              {"log", a.log}}
             .dump()
      << "\n";
  return 0;
}

void add_report_params(CLI::App* sub, double& trim, double& gap,
                       std::vector<std::uint64_t>& thresholds) {
  sub->add_option("--trim", trim, "Fraction trimmed from each tail of the duration list")
      ->capture_default_str();
  sub->add_option("--session-gap", gap, "Seconds between selections that start a new session")
      ->capture_default_str();
  sub->add_option("--thresholds", thresholds, "Retweet thresholds for the sensitivity table")
      ->delimiter(',')
      ->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rumour dataset curation toolkit", "rumourkit"};
  app.set_config("--config", "", "INI/TOML file with option defaults; flags take precedence");
  app.require_subcommand(1, 1);
  app.fallthrough();

  IngestArgs ingest;
  auto* s_ingest = app.add_subcommand("ingest", "Filter JSON-lines tweets into a corpus store");
  s_ingest->add_option("--input", ingest.inputs, "JSON-lines files, or - for stdin")->required();
  s_ingest->add_option("--keywords", ingest.keywords, "Keep records containing any keyword")
      ->delimiter(',');
  s_ingest->add_option("--languages", ingest.languages, "Keep these language codes")
      ->delimiter(',');
  s_ingest->add_option("--from", ingest.from, "Earliest created_at kept (inclusive)");
  s_ingest->add_option("--to", ingest.to, "Latest created_at kept (exclusive; a date means its end)");
  s_ingest->add_option("--store", ingest.store, "Corpus store directory")->required();

  DistributionArgs dist;
  auto* s_dist = app.add_subcommand("distribution", "Retweet-count histogram and CCDF");
  s_dist->add_option("--store", dist.store, "Corpus store directory")->required();
  s_dist->add_option("--out", dist.out, "Write the distribution here instead of stdout");
  s_dist->add_option("--thresholds", dist.thresholds, "Extra CCDF thresholds")->delimiter(',');

  SampleArgs sample;
  auto* s_sample = app.add_subcommand("sample", "Select source tweets by retweet threshold");
  s_sample->add_option("--store", sample.store, "Corpus store directory")->required();
  s_sample->add_option("--min-retweets", sample.min_retweets, "Inclusive retweet threshold")
      ->capture_default_str();
  s_sample->add_flag("--exclude-replies,!--include-replies", sample.exclude_replies,
                     "Drop replies (default on)");
  s_sample->add_flag("--exclude-retweets,!--include-retweets", sample.exclude_retweets,
                     "Drop retweets (default on)");
  s_sample->add_option("--languages", sample.languages, "Keep these language codes")
      ->delimiter(',');
  s_sample->add_option("--out", sample.out, "Sample as JSON lines");

  ThreadsArgs threads;
  auto* s_threads = app.add_subcommand("threads", "Reconstruct reply trees for sampled sources");
  s_threads->add_option("--store", threads.store, "Corpus store directory")->required();
  s_threads->add_option("--sample", threads.sample, "Sample JSON lines from `sample`")->required();
  s_threads->add_option("--out", threads.out, "Directory for thread documents")->required();
  s_threads->add_option("--max-depth", threads.max_depth, "Stop expanding below this depth");

  ServeArgs serve;
  auto* s_serve = app.add_subcommand("serve", "Run the annotation HTTP API until signalled");
  s_serve->add_option("--threads-dir", serve.threads_dir, "Thread documents")->required();
  s_serve->add_option("--log", serve.log, "Annotation event log")->capture_default_str();
  s_serve->add_option("--store", serve.store, "Corpus store for threshold sensitivity");
  s_serve->add_option("--host", serve.host, "Bind address")->capture_default_str();
  s_serve->add_option("--port", serve.port, "Port; 0 picks a free one")
      ->check(CLI::Range(0, 65535))
      ->capture_default_str();
  s_serve->add_option("--token", serve.tokens, "TOKEN=ANNOTATOR; repeatable");
  add_report_params(s_serve, serve.trim, serve.session_gap, serve.thresholds);

  ReportArgs report;
  auto* s_report = app.add_subcommand("report", "Compute report.json from threads and the log");
  s_report->add_option("--threads-dir", report.threads_dir, "Thread documents")->required();
  s_report->add_option("--log", report.log, "Annotation event log")->capture_default_str();
  s_report->add_option("--store", report.store, "Corpus store for threshold sensitivity");
  s_report->add_option("--out", report.out, "Write report.json here instead of stdout");
  s_report->add_option("--csv", report.csv, "Also write the day table as CSV");
  add_report_params(s_report, report.trim, report.session_gap, report.thresholds);

  ExportArgs exp;
  auto* s_export = app.add_subcommand("export", "Write threads and annotations as one bundle");
  s_export->add_option("--threads-dir", exp.threads_dir, "Thread documents")->required();
  s_export->add_option("--log", exp.log, "Annotation event log")->capture_default_str();
  s_export->add_option("--out", exp.out, "Bundle path instead of stdout");

  ImportArgs imp;
  auto* s_import = app.add_subcommand("import", "Materialise an exported bundle");
  s_import->add_option("--bundle", imp.bundle, "Bundle from `export`")->required();
  s_import->add_option("--threads-dir", imp.threads_dir, "Destination for thread documents")
      ->required();
  s_import->add_option("--log", imp.log, "Destination event log")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  auto* chosen = app.get_subcommands().front();
  err << "# effective configuration\n[" << chosen->get_name() << "]\n"
      << chosen->config_to_str(true, false);

  try {
    if (chosen == s_ingest) return do_ingest(ingest, out, err);
    if (chosen == s_dist) return do_distribution(dist, out, err);
    if (chosen == s_sample) return do_sample(sample, out, err);
    if (chosen == s_threads) return do_threads(threads, out, err);
    if (chosen == s_serve) return do_serve(serve, out, err);
    if (chosen == s_report) return do_report(report, out, err);
    if (chosen == s_export) return do_export(exp, out, err);
    if (chosen == s_import) return do_import(imp, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const IngestAborted& e) {
    err << "error: " << e.what() << "\n";
    out << e.progress().to_json().dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace rumourkit::cli
