#include <doctest.h>

#include <json.hpp>
#include <thread>

#include "dsforge/llm.hpp"
#include "stub_server.hpp"
#include "support.hpp"

using namespace dsforge;
using nlohmann::json;

TEST_CASE("in-flight limiter caps concurrency") {
  InFlightLimiter lim(2);
  std::atomic<int> active{0}, worst{0};
  std::vector<std::thread> ts;
  for (int t = 0; t < 8; ++t)
    ts.emplace_back([&] {
      for (int k = 0; k < 20; ++k) {
        auto slot = lim.acquire();
        const int now = ++active;
        int w = worst;
        while (now > w && !worst.compare_exchange_weak(w, now)) {
        }
        std::this_thread::sleep_for(std::chrono::microseconds(200));
        --active;
      }
    });
  for (auto& t : ts) t.join();
  CHECK(worst <= 2);
  CHECK(lim.peak() <= 2);
  CHECK(lim.peak() >= 1);
  CHECK_THROWS_AS(InFlightLimiter(0), InvalidArgument);
}

TEST_CASE("fixture backend") {
  testing::TempDir dir("fixture");
  testing::write_text(dir / "f.json", R"({"responses": {"q1": "1. a"}, "default": "Sorry."})");
  auto fx = FixtureLlmBackend::load(dir / "f.json");
  CHECK(fx.complete("q1") == "1. a");
  CHECK(fx.complete("other") == "Sorry.");
  FixtureLlmBackend strict(std::map<std::string, std::string>{{"q", "r"}});
  CHECK_THROWS_AS(strict.complete("x"), LlmError);
  testing::write_text(dir / "bad.json", R"({"responses": [1]})");
  CHECK_THROWS_AS(FixtureLlmBackend::load(dir / "bad.json"), SchemaError);
  CHECK_THROWS_AS(FixtureLlmBackend::load(dir / "none.json"), IoError);
}

TEST_CASE("HTTP chat client") {
  std::atomic<int> concurrent{0}, worst{0};
  std::string last_auth;
  std::mutex mu;
  testing::StubServer srv([&](httplib::Server& s) {
    s.Post("/v1/chat/completions", [&](const httplib::Request& rq, httplib::Response& rs) {
      const int now = ++concurrent;
      int w = worst;
      while (now > w && !worst.compare_exchange_weak(w, now)) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
      const auto body = json::parse(rq.body);
      {
        std::lock_guard lk(mu);
        last_auth = rq.get_header_value("Authorization");
      }
      const std::string q = body["messages"][0]["content"];
      --concurrent;
      if (q == "boom") {
        rs.status = 503;
        return;
      }
      if (q == "weird") {
        rs.set_content(R"({"nothing": true})", "application/json");
        return;
      }
      rs.set_content(json{{"model", body["model"]},
                          {"choices", {{{"message", {{"role", "assistant"}, {"content", "echo: " + q}}}}}}}
                         .dump(),
                     "application/json");
    });
  });
  HttpLlmOptions o;
  o.endpoint = srv.url("/v1/chat/completions");
  o.api_key = "sk-test";
  o.max_in_flight = 2;
  HttpLlmBackend llm(o);
  CHECK(llm.complete("hello") == "echo: hello");
  CHECK(last_auth == "Bearer sk-test");
  CHECK_THROWS_AS(llm.complete("boom"), LlmError);
  CHECK_THROWS_AS(llm.complete("weird"), LlmError);

  std::vector<std::thread> ts;
  for (int t = 0; t < 6; ++t) ts.emplace_back([&, t] { CHECK(llm.complete(std::to_string(t)) == "echo: " + std::to_string(t)); });
  for (auto& t : ts) t.join();
  CHECK(worst <= 2);
  CHECK(llm.limiter().peak() <= 2);
}

TEST_CASE("backend factory") {
  LlmSettings s;
  s.kind = "bogus";
  CHECK_THROWS_AS(make_llm_backend(s), InvalidArgument);
  s.kind = "http";
  s.endpoint = "http://127.0.0.1:1/x";
  CHECK(make_llm_backend(s)->name() == "http");
}
