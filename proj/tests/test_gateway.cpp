#include <gtest/gtest.h>

#include <filesystem>
#include <thread>

#include "core/error.hpp"
#include "gateway/gateway.hpp"
#include "util/io.hpp"

using namespace policysimp;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("psimp_gw_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

Json chat_body(const std::string& content) {
  return Json{{"choices", Json::array({Json{{"message", Json{{"role", "assistant"}, {"content", content}}}}})}};
}

// Serves a fixed script of responses, one per call, repeating the last.
class ScriptedTransport : public Transport {
 public:
  explicit ScriptedTransport(std::vector<HttpResponse> script) : script_(std::move(script)) {}
  HttpResponse post(const EndpointProfile&, const std::string& path, const Json& body, int) override {
    last_path = path;
    last_body = body;
    const auto i = std::min(calls++, script_.size() - 1);
    if (script_[i].status == 0) throw Error(ErrorCode::Transport, "connection refused");
    return script_[i];
  }
  std::size_t calls = 0;
  std::string last_path;
  Json last_body;

 private:
  std::vector<HttpResponse> script_;
};

EndpointProfile profile(const std::string& model = "m") {
  EndpointProfile p;
  p.model_name = model;
  p.base_url = "http://localhost:1";
  p.backoff_initial = 0.0;
  return p;
}

PromptBundle prompt(const std::string& user = "Simplify: The cat sat.") {
  PromptBundle b;
  b.system = "You simplify sentences.";
  b.user = user;
  return b;
}

}  // namespace

TEST(SplitReasoning, DelimitedSegment) {
  auto [text, reasoning] = split_reasoning("<think>steps…</think>Final answer.");
  EXPECT_EQ(text, "Final answer.");
  ASSERT_TRUE(reasoning);
  EXPECT_EQ(*reasoning, "steps…");
}

TEST(SplitReasoning, NoSegment) {
  auto [text, reasoning] = split_reasoning("  plain answer \n");
  EXPECT_EQ(text, "plain answer");
  EXPECT_FALSE(reasoning);
}

TEST(SplitReasoning, UsesLastClosingMarker) {
  auto [text, reasoning] = split_reasoning("<think>a</think> b </think>c");
  EXPECT_EQ(text, "c");
  EXPECT_EQ(*reasoning, "a</think> b");
}

TEST(RequestBody, CarriesDecodeAndThinking) {
  auto p = profile();
  p.decode = DecodeParams::think(512);
  auto b = prompt();
  b.shots = {{"u1", "a1"}};
  b.enable_thinking = true;
  const Json body = chat_request_body(p, b);
  EXPECT_EQ(body["messages"].size(), 4u);
  EXPECT_EQ(body["messages"][2]["role"], "assistant");
  EXPECT_EQ(body["top_k"], 20);
  EXPECT_EQ(body["temperature"], 0.6);
  EXPECT_EQ(body["chat_template_kwargs"]["enable_thinking"], true);
  EXPECT_FALSE(chat_request_body(profile(), prompt()).contains("top_k"));
}

TEST(RequestKey, IgnoresKeyOrder) {
  Json a = Json::parse(R"({"b":1,"a":{"y":2,"x":3}})");
  Json b = Json::parse(R"({"a":{"x":3,"y":2},"b":1})");
  EXPECT_EQ(request_key("m", a), request_key("m", b));
  EXPECT_NE(request_key("m", a), request_key("n", a));
}

TEST(Gateway, RetriesServerErrorThenSucceeds) {
  auto t = std::make_shared<ScriptedTransport>(
      std::vector<HttpResponse>{{500, "oops"}, {200, chat_body("Done.").dump()}});
  Gateway gw(t);
  std::vector<double> sleeps;
  gw.set_sleeper([&](double s) { sleeps.push_back(s); });
  auto p = profile();
  p.backoff_initial = 0.5;
  const auto ex = gw.chat(p, prompt());
  EXPECT_EQ(ex.response_text, "Done.");
  EXPECT_EQ(ex.attempts, 2);
  EXPECT_EQ(gw.stats().retries, 1);
  EXPECT_EQ(sleeps, std::vector<double>{0.5});
  EXPECT_EQ(t->last_path, "/v1/chat/completions");
}

TEST(Gateway, BackoffDoubles) {
  auto t = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{{0, ""}, {429, ""}, {503, ""}, {200, chat_body("x").dump()}});
  Gateway gw(t);
  std::vector<double> sleeps;
  gw.set_sleeper([&](double s) { sleeps.push_back(s); });
  auto p = profile();
  p.backoff_initial = 0.25;
  EXPECT_EQ(gw.chat(p, prompt()).attempts, 4);
  EXPECT_EQ(sleeps, (std::vector<double>{0.25, 0.5, 1.0}));
}

TEST(Gateway, ClientErrorIsNotRetried) {
  auto t = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{{400, "bad request"}});
  Gateway gw(t);
  try {
    gw.chat(profile(), prompt());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Endpoint);
  }
  EXPECT_EQ(t->calls, 1u);
}

TEST(Gateway, ExhaustsRetries) {
  auto t = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{{0, ""}});
  Gateway gw(t);
  auto p = profile();
  p.max_retries = 2;
  try {
    gw.chat(p, prompt());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ExhaustedRetries);
  }
  EXPECT_EQ(t->calls, 3u);
}

TEST(Gateway, MalformedBodies) {
  for (const std::string body : {"not json", R"({"choices":[]})", R"({"choices":[{"message":{"content":null}}]})"}) {
    Gateway gw(std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{{200, body}}));
    try {
      gw.chat(profile(), prompt());
      FAIL() << body;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::MalformedResponse) << body;
    }
  }
}

TEST(Gateway, EmptyPromptRejected) {
  Gateway gw(std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{{200, chat_body("x").dump()}}));
  EXPECT_THROW(gw.chat(profile(), PromptBundle{}), Error);
}

TEST(Gateway, ReasoningSplitOnResponse) {
  Gateway gw(std::make_shared<ScriptedTransport>(
      std::vector<HttpResponse>{{200, chat_body("<think>hmm</think>\nLexical: prefer 1, disprefer 0").dump()}}));
  const auto ex = gw.chat(profile(), prompt());
  EXPECT_EQ(ex.response_text, "Lexical: prefer 1, disprefer 0");
  EXPECT_EQ(ex.reasoning_text, "hmm");
}

TEST(Gateway, ResponseCacheAvoidsSecondCall) {
  const auto cache = fresh_dir("cache");
  auto t = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{{200, chat_body("Cached.").dump()}});
  {
    Gateway gw(t, cache);
    EXPECT_EQ(gw.chat(profile(), prompt()).response_text, "Cached.");
  }
  Gateway again(t, cache);
  const auto ex = again.chat(profile(), prompt());
  EXPECT_EQ(ex.response_text, "Cached.");
  EXPECT_EQ(ex.attempts, 0);
  EXPECT_EQ(again.stats().endpoint_calls, 0);
  EXPECT_EQ(again.stats().cache_hits, 1);
  EXPECT_EQ(t->calls, 1u);
}

TEST(Fixtures, RecordThenReplay) {
  const auto dir = fresh_dir("fixtures");
  auto scripted = std::make_shared<ScriptedTransport>(
      std::vector<HttpResponse>{{500, "boom"}, {200, chat_body("<think>r</think>Answer.").dump()}});
  {
    Gateway rec(std::make_shared<RecordingTransport>(scripted, dir));
    EXPECT_EQ(rec.chat(profile(), prompt()).response_text, "Answer.");
  }
  ASSERT_EQ(std::distance(fs::directory_iterator(dir), fs::directory_iterator()), 1);

  for (int run = 0; run < 2; ++run) {
    Gateway replay(std::make_shared<FixtureTransport>(dir));
    const auto ex = replay.chat(profile(), prompt());
    EXPECT_EQ(ex.response_text, "Answer.");
    EXPECT_EQ(ex.reasoning_text, "r");
    EXPECT_EQ(ex.attempts, 2);
    EXPECT_EQ(replay.stats().retries, 1);
  }
}

TEST(Fixtures, MissingFixture) {
  Gateway gw(std::make_shared<FixtureTransport>(fresh_dir("empty")));
  try {
    gw.chat(profile(), prompt());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FixtureMissing);
  }
}

TEST(Fixtures, KeyFileNameMatchesRequestKey) {
  const auto dir = fresh_dir("keyed");
  auto p = profile("qwen3-32b");
  const Json body = chat_request_body(p, prompt());
  Json fx{{"model", p.model_name}, {"responses", Json::array({Json{{"status", 200}, {"body", chat_body("ok")}}})}};
  write_file_atomic(dir / (request_key(p.model_name, body) + ".json"), fx.dump());
  Gateway gw(std::make_shared<FixtureTransport>(dir));
  EXPECT_EQ(gw.chat(p, prompt()).response_text, "ok");
}

TEST(Embed, RejectsEmptyInputBeforeAnyRequest) {
  auto t = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{{200, "{}"}});
  Gateway gw(t);
  try {
    gw.embed(profile(), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Precondition);
  }
  EXPECT_EQ(t->calls, 0u);
}

TEST(Embed, ShapeAndOrder) {
  Json data = Json::array();
  for (int i = 3; i >= 0; --i) {
    std::vector<double> v(8, 0.0);
    v[static_cast<std::size_t>(i)] = 1.0;
    data.push_back(Json{{"index", i}, {"embedding", v}});
  }
  auto t = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{{200, Json{{"data", data}}.dump()}});
  Gateway gw(t);
  const auto out = gw.embed(profile(), {"a", "b", "a", "c"});
  ASSERT_EQ(out.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    ASSERT_EQ(out[i].size(), 8u);
    EXPECT_EQ(out[i][i], 1.0);
  }
  EXPECT_EQ(t->last_path, "/v1/embeddings");
  EXPECT_EQ(t->last_body["input"].size(), 4u);
}

TEST(Embed, RaggedVectorsAreMalformed) {
  Json data = Json::array({Json{{"embedding", {1.0, 2.0}}}, Json{{"embedding", {1.0}}}});
  Gateway gw(std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{{200, Json{{"data", data}}.dump()}}));
  EXPECT_THROW(gw.embed(profile(), {"a", "b"}), Error);
}

namespace {

class CountingTransport : public Transport {
 public:
  HttpResponse post(const EndpointProfile&, const std::string&, const Json&, int) override {
    const int now = ++in_flight;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {}
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --in_flight;
    return {200, chat_body("ok").dump()};
  }
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
};

}  // namespace

TEST(Gateway, ConcurrencyLimitHolds) {
  auto t = std::make_shared<CountingTransport>();
  Gateway gw(t);
  auto p = profile();
  p.concurrency_limit = 3;
  std::vector<std::thread> workers;
  for (int i = 0; i < 16; ++i)
    workers.emplace_back([&, i] { gw.chat(p, prompt("sentence " + std::to_string(i))); });
  for (auto& w : workers) w.join();
  EXPECT_LE(t->peak.load(), 3);
  EXPECT_GE(t->peak.load(), 2);
  EXPECT_EQ(gw.stats().endpoint_calls, 16);
}

TEST(EndpointProfile, FromJson) {
  const auto p = endpoint_profile_from_json(Json::parse(
      R"({"model":"phi4-14b","base_url":"http://h:8000","decode":{"max_tokens":300,"top_k":-1},"concurrency_limit":2})"));
  EXPECT_EQ(p.model_name, "phi4-14b");
  EXPECT_EQ(p.decode.max_tokens, 300);
  EXPECT_FALSE(p.decode.top_k);
  EXPECT_EQ(p.concurrency_limit, 2);
  try {
    endpoint_profile_from_json(Json::parse(R"({"base_url":"x"})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Config);
  }
  EXPECT_THROW(endpoint_profile_from_json(Json::parse(R"({"model":"m","concurrency_limit":0})")), Error);
}
