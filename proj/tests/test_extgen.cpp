#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <string>

#include "lambada/extgen.hpp"
#include "lambada/lambada.hpp"
#include "support/toy_grammar.hpp"

using namespace lambada;
using namespace std::chrono_literals;

namespace {

std::string adapter(const std::string& mode = "ok") { return std::string(FAKE_ADAPTER) + " " + mode; }

Dataset two_class() {
  Dataset d;
  const ClassId a = d.labels.intern("flight");
  const ClassId b = d.labels.intern("fare");
  d.add("show me flights to boston", a);
  d.add("list flights from denver", a);
  d.add("how much is the fare", b);
  d.add("cheapest fare to dallas", b);
  return d;
}

}  // namespace

TEST_CASE("handshake and protocol version") {
  ExternalGenerator g(adapter());
  CHECK(g.handshake_response()["protocol"] == 1);
  CHECK(g.name() == "external");
  CHECK_FALSE(g.covers(1));
  CHECK_THROWS_AS(ExternalGenerator(adapter("proto")), GeneratorError);
  CHECK_THROWS_AS(ExternalGenerator(""), GeneratorError);
}

TEST_CASE("fit then generate returns count sentences with the class label") {
  ExternalGenerator g(adapter());
  const Dataset d = two_class();
  g.fit(d);
  CHECK(g.covers(1));
  CHECK(g.covers(2));
  CHECK_FALSE(g.covers(3));
  GenerationParams p;
  const auto out = g.generate(2, 7, 99, p);
  REQUIRE(out.size() == 7);
  for (const auto& s : out) {
    CHECK(s.label == 2);
    CHECK_FALSE(s.tokens.empty());
    CHECK_FALSE(s.truncated);
    const std::string text = detokenize(s.tokens);
    CHECK((text.find("fare") != std::string::npos));
  }
  CHECK(g.generate(1, 0, 5, p).empty());
  CHECK_THROWS_AS(g.generate(3, 1, 5, p), GeneratorError);
}

TEST_CASE("same seed, same sentences; truncation flags pass through") {
  ExternalGenerator g(adapter());
  g.fit(two_class());
  GenerationParams p;
  const auto a = g.generate(1, 5, 1234, p);
  const auto b = g.generate(1, 5, 1234, p);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].tokens == b[i].tokens);
  p.max_len = 3;
  const auto cut = g.generate(1, 4, 1234, p);
  for (const auto& s : cut) {
    CHECK(s.tokens.size() == 3);
    CHECK(s.truncated);
  }
}

TEST_CASE("one response per request") {
  ExternalGenerator g(adapter());
  g.fit(two_class());
  GenerationParams p;
  for (int i = 0; i < 5; ++i) g.generate(1, 2, static_cast<std::uint64_t>(i), p);
  // handshake + fit + 5 generate + this one
  CHECK(g.request({{"command", "stats"}})["served"] == 8);
}

TEST_CASE("adapter failures surface as GeneratorError") {
  GenerationParams p;
  SUBCASE("crash") {
    ExternalGenerator g(adapter("crash"));
    g.fit(two_class());
    CHECK_THROWS_AS(g.generate(1, 3, 1, p), GeneratorError);
  }
  SUBCASE("hang hits the timeout") {
    ExternalGenerator g(adapter("hang"), 300ms);
    g.fit(two_class());
    const auto t0 = std::chrono::steady_clock::now();
    CHECK_THROWS_WITH_AS(g.generate(1, 3, 1, p), doctest::Contains("timed out"), GeneratorError);
    CHECK(std::chrono::steady_clock::now() - t0 < 5s);
  }
  SUBCASE("malformed line") {
    ExternalGenerator g(adapter("garbage"));
    g.fit(two_class());
    CHECK_THROWS_WITH_AS(g.generate(1, 3, 1, p), doctest::Contains("malformed"), GeneratorError);
  }
  SUBCASE("error status") {
    ExternalGenerator g(adapter("error"));
    CHECK_THROWS_WITH_AS(g.fit(two_class()), doctest::Contains("fit refused"), GeneratorError);
  }
  SUBCASE("wrong sentence count") {
    ExternalGenerator g(adapter("short"));
    g.fit(two_class());
    CHECK_THROWS_AS(g.generate(1, 3, 1, p), GeneratorError);
  }
  SUBCASE("command that does not exist") {
    CHECK_THROWS_AS(ExternalGenerator("/nonexistent/adapter-binary", 2000ms), GeneratorError);
  }
}

TEST_CASE("external generator drives the pipeline") {
  const Dataset d = toy::make_dataset(5, 3);
  ExternalGenerator g(adapter());
  AugmentationPlan plan = plan_uniform(d.labels.size(), 4);
  plan.seed = 8;
  ClassifierSpec spec;
  const LambadaResult a = run_lambada(d, spec, g, plan);
  CHECK(a.pool.candidates.size() == 4 * 10 * d.labels.size());
  CHECK(a.report.total_retained() <= 4 * d.labels.size());
  CHECK(a.report.total_retained() == a.synthesized.size());
  const LambadaResult b = run_lambada(d, spec, g, plan);
  REQUIRE(a.synthesized.size() == b.synthesized.size());
  for (std::size_t i = 0; i < a.synthesized.size(); ++i)
    CHECK(a.synthesized.items[i].text == b.synthesized.items[i].text);
}

TEST_CASE("shutdown is idempotent") {
  ExternalGenerator g(adapter());
  g.shutdown();
  g.shutdown();
  CHECK_THROWS_AS(g.request({{"command", "stats"}}), GeneratorError);
}
