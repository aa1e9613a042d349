#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "rumourkit/service.hpp"
#include "support.hpp"

using namespace rumourkit;
using namespace rumourkit::testing;
using nlohmann::json;

namespace {

ThreadSet four_threads() {
  std::vector<Thread> ts;
  for (int i = 0; i < 4; ++i) {
    const auto id = "t" + std::to_string(i);
    const unsigned day = i < 3 ? 9 : 10;
    Thread t{tweet(id, to_epoch_ms(aug2014(day, 1 + i)) / 1000, 120), {}};
    for (int k = 0; k < i; ++k) {
      t.nodes.push_back({tweet(id + "r" + std::to_string(k), to_epoch_ms(aug2014(day, 1 + i, 5 + k)) / 1000, 0, id), 1, id});
    }
    ts.push_back(std::move(t));
  }
  return ThreadSet(std::move(ts));
}

struct Harness {
  AnnotationStore store{four_threads().ids()};
  std::atomic<std::int64_t> tick{0};
  AnnotationService service{four_threads(), store, ServiceOptions{{}, [this] { return aug2014(20) + std::chrono::seconds(tick++); }, {}, nullptr}};

  ApiResponse get(const std::string& path) { return service.handle({"GET", path, {}, ""}); }
  ApiResponse post(const std::string& path, const json& body, const std::string& token = "ann1",
                   std::map<std::string, std::string> headers = {}) {
    if (!token.empty()) headers[std::string(kTokenHeader)] = token;
    return service.handle({"POST", path, headers, body.is_null() ? "" : body.dump()});
  }
};

std::string error_code(const ApiResponse& r) { return r.body.at("error").at("code"); }

}  // namespace

TEST(Service, DaysListing) {
  Harness h;
  const auto r = h.get("/api/days");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["schema_version"], kApiSchemaVersion);
  ASSERT_EQ(r.body["days"].size(), 2u);
  EXPECT_EQ(r.body["days"][0], json({{"date", "2014-08-09"}, {"threads", 3}, {"annotated", 0}}));
}

TEST(Service, EmptyDatasetHasNoDays) {
  AnnotationStore store;
  AnnotationService service(ThreadSet(std::vector<Thread>{}), store);
  const auto r = service.handle({"GET", "/api/days", {}, ""});
  EXPECT_EQ(r.body["days"], json::array());
  const auto review = service.handle({"GET", "/api/review", {}, ""});
  EXPECT_EQ(review.body["counts"]["total"], 0);
}

TEST(Service, DayThreadsAreChronological) {
  Harness h;
  const auto r = h.get("/api/days/2014-08-09/threads");
  ASSERT_EQ(r.status, 200);
  const auto& items = r.body["threads"];
  ASSERT_EQ(items.size(), 3u);
  EXPECT_EQ(items[0]["id"], "t0");
  EXPECT_EQ(items[2]["id"], "t2");
  EXPECT_EQ(items[2]["reply_count"], 2);
  EXPECT_EQ(items[0]["label"], "unannotated");
  EXPECT_EQ(error_code(h.get("/api/days/2014-08-11/threads")), "unknown_date");
  EXPECT_EQ(h.get("/api/days/not-a-date/threads").status, 404);
}

TEST(Service, ThreadDetailHasTree) {
  Harness h;
  const auto r = h.get("/api/threads/t2");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["tree"]["replies"].size(), 2u);
  EXPECT_EQ(r.body["thread"]["format"], "rumourkit-thread");
  EXPECT_EQ(r.body["summary"]["id"], "t2");
  EXPECT_EQ(error_code(h.get("/api/threads/zz")), "unknown_thread");
}

TEST(Service, JudgmentCreatesStoryWithServerTime) {
  Harness h;
  const auto r = h.post("/api/threads/t0/judgment", {{"label", "rumour"}, {"story", "Ferguson"}, {"at", "1999-01-01T00:00:00Z"}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["judgment"]["label"], "rumour");
  EXPECT_EQ(r.body["judgment"]["annotator"], "ann1");
  EXPECT_EQ(r.body["judgment"]["at"], "2014-08-20T00:00:00.000Z");
  EXPECT_EQ(r.body["story"]["name"], "Ferguson");
  EXPECT_EQ(r.body["story"]["member_count"], 1);
  const auto story_id = r.body["story"]["story_id"].get<std::string>();

  const auto again = h.post("/api/threads/t1/judgment", {{"label", "rumour"}, {"story", "ferguson"}});
  EXPECT_EQ(again.body["story"]["story_id"], story_id);
  EXPECT_EQ(again.body["story"]["member_count"], 2);

  const auto by_id = h.post("/api/threads/t2/judgment", {{"label", "rumour"}, {"story_id", story_id}});
  EXPECT_EQ(by_id.body["story"]["member_count"], 3);

  const auto listed = h.get("/api/days/2014-08-09/threads");
  EXPECT_EQ(listed.body["threads"][1]["story"], "Ferguson");
}

TEST(Service, JudgmentValidation) {
  Harness h;
  EXPECT_EQ(error_code(h.post("/api/threads/t0/judgment", {{"label", "maybe"}})), "invalid_label");
  EXPECT_EQ(error_code(h.post("/api/threads/t0/judgment", {{"story", "x"}})), "invalid_body");
  EXPECT_EQ(error_code(h.post("/api/threads/t0/judgment", {{"label", 3}})), "invalid_body");
  EXPECT_EQ(h.service.handle({"POST", "/api/threads/t0/judgment", {{std::string(kTokenHeader), "a"}}, "{not json"}).status, 400);
  EXPECT_EQ(error_code(h.post("/api/threads/t0/judgment", {{"label", "rumour"}, {"story", "a"}, {"story_id", "s000001"}})), "invalid_body");

  auto r = h.post("/api/threads/t0/judgment", {{"label", "rumour"}});
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(error_code(r), "missing_story");
  r = h.post("/api/threads/t0/judgment", {{"label", "nonrumour"}, {"story", "x"}});
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(error_code(r), "story_on_nonrumour");
  r = h.post("/api/threads/nope/judgment", {{"label", "unsure"}});
  EXPECT_EQ(r.status, 404);
  EXPECT_EQ(error_code(r), "unknown_thread");
  r = h.post("/api/threads/t0/judgment", {{"label", "rumour"}, {"story_id", "s999999"}});
  EXPECT_EQ(r.status, 404);
  EXPECT_EQ(error_code(r), "unknown_story");
  EXPECT_EQ(h.store.snapshot()->history.size(), 0u);
}

TEST(Service, AuthRequiredForMutations) {
  Harness h;
  const auto r = h.post("/api/threads/t0/judgment", {{"label", "unsure"}}, "");
  EXPECT_EQ(r.status, 401);
  EXPECT_EQ(error_code(r), "unauthorized");
  EXPECT_EQ(h.get("/api/review").status, 200);
}

TEST(Service, TokenTableMapsToAnnotator) {
  AnnotationStore store;
  AnnotationService service(four_threads(), store, ServiceOptions{{{"secret", "alice"}}, {}, {}, nullptr});
  auto req = ApiRequest{"POST", "/api/threads/t0/judgment", {{std::string(kTokenHeader), "secret"}}, R"({"label":"unsure"})"};
  const auto r = service.handle(req);
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["judgment"]["annotator"], "alice");
  req.headers[std::string(kTokenHeader)] = "alice";
  EXPECT_EQ(service.handle(req).status, 401);
}

TEST(Service, MoveAndRename) {
  Harness h;
  const auto a = h.post("/api/threads/t0/judgment", {{"label", "rumour"}, {"story", "A"}}).body["story"]["story_id"].get<std::string>();
  const auto b = h.post("/api/threads/t1/judgment", {{"label", "rumour"}, {"story", "B"}}).body["story"]["story_id"].get<std::string>();
  auto r = h.post("/api/threads/t1/move", {{"story_id", a}});
  ASSERT_EQ(r.status, 200);
  EXPECT_TRUE(r.body["judgment"]["moved"].get<bool>());

  const auto stories = h.get("/api/stories").body["stories"];
  ASSERT_EQ(stories.size(), 2u);
  EXPECT_EQ(stories[0]["member_count"], 2);
  EXPECT_TRUE(stories[1]["empty"].get<bool>());

  EXPECT_EQ(h.post("/api/stories/" + b + "/rename", {{"name", "a"}}).status, 409);
  r = h.post("/api/stories/" + b + "/rename", {{"name", "Bee"}});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["story"]["name"], "Bee");
  EXPECT_EQ(h.post("/api/stories/" + b + "/rename", {{"name", "  "}}).status, 422);
  EXPECT_EQ(h.post("/api/stories/nope/rename", {{"name", "x"}}).status, 404);

  h.post("/api/threads/t2/judgment", {{"label", "nonrumour"}});
  r = h.post("/api/threads/t2/move", {{"story_id", a}});
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(error_code(r), "not_a_rumour");
  EXPECT_EQ(error_code(h.post("/api/threads/t0/move", json::object())), "invalid_body");
}

TEST(Service, ReviewGroupsAndCounts) {
  Harness h;
  h.post("/api/threads/t0/judgment", {{"label", "rumour"}, {"story", "A"}});
  h.post("/api/threads/t1/judgment", {{"label", "nonrumour"}});
  h.post("/api/threads/t2/judgment", {{"label", "unsure"}});
  const auto r = h.get("/api/review");
  EXPECT_EQ(r.body["counts"], json({{"rumours", 1}, {"non_rumours", 1}, {"unsure", 1}, {"unannotated", 1}, {"total", 4}}));
  ASSERT_EQ(r.body["stories"].size(), 1u);
  EXPECT_EQ(r.body["stories"][0]["threads"][0]["id"], "t0");
}

TEST(Service, IdempotencyKeyReplaysFirstAnswer) {
  Harness h;
  const std::map<std::string, std::string> key{{std::string(kIdempotencyHeader), "k1"}};
  const auto first = h.post("/api/threads/t0/judgment", {{"label", "unsure"}}, "ann1", key);
  const auto second = h.post("/api/threads/t0/judgment", {{"label", "unsure"}}, "ann1", key);
  EXPECT_EQ(first.body, second.body);
  EXPECT_EQ(h.store.snapshot()->history.size(), 1u);
  h.post("/api/threads/t0/judgment", {{"label", "unsure"}}, "ann2", key);
  EXPECT_EQ(h.store.snapshot()->history.size(), 2u);
  h.post("/api/threads/t0/judgment", {{"label", "unsure"}});
  EXPECT_EQ(h.store.snapshot()->history.size(), 3u);
}

TEST(Service, RoutingErrors) {
  Harness h;
  EXPECT_EQ(h.get("/nope").status, 404);
  EXPECT_EQ(h.get("/api/nope").status, 404);
  EXPECT_EQ(h.get("/api/threads/t0/judgment").status, 405);
  EXPECT_EQ(h.service.handle({"DELETE", "/api/days", {}, ""}).status, 405);
  EXPECT_EQ(h.service.handle({"POST", "/api/review", {}, ""}).status, 405);
}

TEST(Service, ExportMatchesStore) {
  Harness h;
  h.post("/api/threads/t0/judgment", {{"label", "unsure"}});
  const auto r = h.get("/api/export");
  EXPECT_EQ(r.body["format"], "rumourkit-bundle");
  EXPECT_EQ(r.body["events"].size(), 1u);
  EXPECT_EQ(r.body["snapshot"], snapshot_json(*h.store.snapshot()));
}

TEST(Service, ReportTracksNewJudgments) {
  Harness h;
  h.post("/api/threads/t0/judgment", {{"label", "rumour"}, {"story", "A"}});
  h.post("/api/threads/t1/judgment", {{"label", "nonrumour"}});
  auto r = h.get("/api/report");
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["report"]["day_table"]["overall"]["rumour_count"], 1);
  EXPECT_EQ(h.get("/api/report").body, r.body);
  h.post("/api/threads/t2/judgment", {{"label", "rumour"}, {"story", "A"}});
  r = h.get("/api/report");
  EXPECT_EQ(r.body["report"]["day_table"]["overall"]["rumour_count"], 2);
}

TEST(Service, ConcurrentJudgmentsAllLand) {
  Harness h;
  std::vector<std::thread> workers;
  std::atomic<int> failures{0};
  for (int w = 0; w < 8; ++w) {
    workers.emplace_back([&, w] {
      for (int i = 0; i < 50; ++i) {
        const auto thread_id = "t" + std::to_string((w + i) % 4);
        const auto r = h.post("/api/threads/" + thread_id + "/judgment",
                              {{"label", "rumour"}, {"story", "story " + std::to_string(i % 5)}},
                              "ann" + std::to_string(w));
        if (r.status != 200) ++failures;
        if (h.get("/api/review").status != 200) ++failures;
      }
    });
  }
  for (auto& t : workers) t.join();
  EXPECT_EQ(failures.load(), 0);
  const auto state = h.store.snapshot();
  EXPECT_EQ(state->stories.size(), 5u);
  EXPECT_EQ(replay(state->history).current, state->current);
}
