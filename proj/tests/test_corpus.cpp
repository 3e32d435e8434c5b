#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "lambada/corpus.hpp"
#include "support/temp_dir.hpp"

using namespace lambada;

namespace {

Dataset single_class(std::size_t n) {
  Dataset d;
  d.labels.intern("only");
  for (std::size_t i = 0; i < n; ++i) d.add("sentence number " + std::to_string(i), 1);
  return d;
}

Dataset two_classes(std::size_t each) {
  Dataset d;
  d.labels.intern("a");
  d.labels.intern("b");
  for (std::size_t i = 0; i < each; ++i) {
    d.add("alpha " + std::to_string(i), 1);
    d.add("beta " + std::to_string(i), 2);
  }
  return d;
}

std::multiset<std::string> texts(const Dataset& d) {
  std::multiset<std::string> out;
  for (const auto& it : d.items) out.insert(it.text + "|" + d.labels.name(it.label));
  return out;
}

}  // namespace

TEST_CASE("tokenize lowercases and peels punctuation") {
  CHECK(tokenize("Book a Flight, please!") == std::vector<std::string>{"book", "a", "flight", ",", "please", "!"});
  CHECK(tokenize("  \"quoted\"  ") == std::vector<std::string>{"\"", "quoted", "\""});
  CHECK(tokenize("don't") == std::vector<std::string>{"don't"});
  CHECK(tokenize("a b") == std::vector<std::string>{"a", "b"});
  CHECK(tokenize("   ").empty());
}

TEST_CASE("tokenize is a fixed point on its own detokenized output") {
  for (const char* s : {"Hello, World!", "what's the fare (one-way)?", "...wait...", "A  b\tc\nd", "¿Qué?"}) {
    const auto once = tokenize(s);
    CHECK(tokenize(detokenize(once)) == once);
  }
}

TEST_CASE("label names are normalized and mapped first-appearance") {
  CHECK(normalize_label_name("  flight time ") == "flight_time");
  LabelMap m;
  CHECK(m.intern("b") == 1);
  CHECK(m.intern("a") == 2);
  CHECK(m.intern("b") == 1);
  CHECK(m.name(2) == "a");
  CHECK_THROWS_AS(m.name(3), Error);
}

TEST_CASE("CSV loading") {
  std::istringstream in("text,label\nbook a flight,flight\n\"what time, exactly\",flight_time\n");
  const Dataset d = read_dataset(in, DataFormat::csv);
  CHECK(d.num_classes() == 2);
  CHECK(d.size() == 2);
  CHECK(d.items[1].text == "what time, exactly");
  CHECK(d.labels.name(d.items[1].label) == "flight_time");
}

TEST_CASE("CSV with quoted newline and escaped quote") {
  std::istringstream in("label,text\nx,\"say \"\"hi\"\"\nthere\"\ny,plain\n");
  const Dataset d = read_dataset(in, DataFormat::csv);
  REQUIRE(d.size() == 2);
  CHECK(d.items[0].text == "say \"hi\"\nthere");
  CHECK(d.labels.names() == std::vector<std::string>{"x", "y"});
}

TEST_CASE("CSV empty field reports its line") {
  std::istringstream in("text,label\nok,a\n,b\n");
  try {
    read_dataset(in, DataFormat::csv);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("JSONL record missing label names line 1") {
  std::istringstream in("{\"text\":\"hello\"}\n{\"text\":\"x\",\"label\":\"y\"}\n");
  try {
    read_dataset(in, DataFormat::jsonl);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
}

TEST_CASE("zero usable records is a dataset-level error") {
  std::istringstream csv("text,label\n");
  CHECK_THROWS_AS(read_dataset(csv, DataFormat::csv), ParseError);
  std::istringstream jsonl("\n\n");
  CHECK_THROWS_AS(read_dataset(jsonl, DataFormat::jsonl), ParseError);
}

TEST_CASE("duplicate rows are kept") {
  std::istringstream in("text,label\nsame,a\nsame,a\n");
  CHECK(read_dataset(in, DataFormat::csv).size() == 2);
}

TEST_CASE("fixed label map rejects unknown names") {
  const LabelMap fixed({"a", "b"});
  std::istringstream ok("{\"text\":\"t\",\"label\":\"b\"}\n");
  const Dataset d = read_dataset(ok, DataFormat::jsonl, &fixed);
  CHECK(d.items[0].label == 2);
  CHECK(d.num_classes() == 2);
  std::istringstream bad("{\"text\":\"t\",\"label\":\"c\"}\n");
  CHECK_THROWS_AS(read_dataset(bad, DataFormat::jsonl, &fixed), ParseError);
}

TEST_CASE("JSONL write/read round trip") {
  const Dataset d = two_classes(3);
  std::stringstream buf;
  write_jsonl(buf, d);
  const Dataset back = read_dataset(buf, DataFormat::jsonl);
  CHECK(texts(back) == texts(d));
  CHECK(back.labels == d.labels);
}

TEST_CASE("split sizes follow floor-then-train-first") {
  SplitSpec spec;
  spec.seed = 3;
  auto s = split_dataset(single_class(100), spec);
  CHECK(s.train.size() == 80);
  CHECK(s.validation.size() == 10);
  CHECK(s.test.size() == 10);
  s = split_dataset(single_class(10), spec);
  CHECK(s.train.size() == 8);
  CHECK(s.validation.size() == 1);
  CHECK(s.test.size() == 1);
  s = split_dataset(single_class(7), spec);
  CHECK(s.train.size() + s.validation.size() + s.test.size() == 7);
  CHECK(s.train.size() >= 5);
}

TEST_CASE("split is stratified, exhaustive and disjoint") {
  const Dataset d = two_classes(50);
  SplitSpec spec;
  spec.seed = 11;
  const Splits s = split_dataset(d, spec);
  CHECK(s.train.class_counts() == std::vector<std::size_t>{40, 40});
  CHECK(s.validation.class_counts() == std::vector<std::size_t>{5, 5});
  CHECK(s.test.class_counts() == std::vector<std::size_t>{5, 5});
  auto all = texts(s.train);
  for (const auto& t : texts(s.validation)) all.insert(t);
  for (const auto& t : texts(s.test)) all.insert(t);
  CHECK(all == texts(d));
  for (const auto& t : texts(s.test)) {
    CHECK(texts(s.train).count(t) == 0);
    CHECK(texts(s.validation).count(t) == 0);
  }
}

TEST_CASE("split is deterministic and seed-sensitive") {
  const Dataset d = two_classes(30);
  SplitSpec spec;
  spec.seed = 5;
  const Splits a = split_dataset(d, spec), b = split_dataset(d, spec);
  std::stringstream sa, sb;
  write_jsonl(sa, a.test);
  write_jsonl(sb, b.test);
  CHECK(sa.str() == sb.str());
  spec.seed = 6;
  std::stringstream sc;
  write_jsonl(sc, split_dataset(d, spec).test);
  CHECK(sc.str() != sa.str());
}

TEST_CASE("tiny class goes to train with a warning") {
  Dataset d = two_classes(20);
  d.labels.intern("rare");
  d.add("lonely one", 3);
  d.add("lonely two", 3);
  const Splits s = split_dataset(d, SplitSpec{});
  CHECK(s.train.class_counts()[2] == 2);
  CHECK(s.validation.class_counts()[2] == 0);
  REQUIRE(s.warnings.size() == 1);
  CHECK(s.warnings[0].find("rare") != std::string::npos);
}

TEST_CASE("invalid split specs") {
  SplitSpec spec{0.5, 0.1, 0.1, 0};
  CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("sum to 1.0"), Error);
  spec = {1.2, -0.1, -0.1, 0};
  CHECK_THROWS_AS(spec.validate(), Error);
  CHECK_THROWS_AS(split_dataset(single_class(2), SplitSpec{}), Error);
}

TEST_CASE("subsample per class") {
  Dataset d = two_classes(30);
  d.labels.intern("small");
  for (int i = 0; i < 3; ++i) d.add("small " + std::to_string(i), 3);
  const Subsample s = subsample_per_class(d, 5, 9);
  CHECK(s.data.class_counts() == std::vector<std::size_t>{5, 5, 3});
  REQUIRE(s.notes.size() == 1);
  CHECK(s.notes[0].find("small") != std::string::npos);
  CHECK(std::is_sorted(s.indices.begin(), s.indices.end()));

  const Subsample again = subsample_per_class(d, 5, 9);
  CHECK(again.indices == s.indices);
  const Subsample other = subsample_per_class(d, 5, 10);
  CHECK(other.indices != s.indices);

  const Dataset rest = complement(d, s.indices);
  CHECK(rest.size() + s.data.size() == d.size());
  CHECK_THROWS_AS(subsample_per_class(d, 0, 1), Error);
}

TEST_CASE("subsampling is idempotent under the same seed") {
  const Dataset d = two_classes(40);
  const Subsample once = subsample_per_class(d, 5, 21);
  const Subsample twice = subsample_per_class(once.data, 5, 21);
  CHECK(texts(twice.data) == texts(once.data));
}

TEST_CASE("write_splits produces files and manifest") {
  testing::TempDir dir;
  const Dataset d = two_classes(10);
  SplitSpec spec;
  spec.seed = 7;
  const Splits s = split_dataset(d, spec);
  write_splits(dir.path(), s, spec, "input.csv");
  for (const char* f : {"train.jsonl", "validation.jsonl", "test.jsonl", "manifest.json"})
    CHECK(std::filesystem::exists(dir / f));
  const LabelMap labels = read_manifest_labels(dir / "manifest.json");
  CHECK(labels == d.labels);
  const Dataset train = load_dataset(dir / "train.jsonl", &labels);
  CHECK(texts(train) == texts(s.train));
}

TEST_CASE("load_dataset names the file in parse errors") {
  testing::TempDir dir;
  testing::write_file(dir / "bad.jsonl", "{\"text\":\"a\",\"label\":\"x\"}\nnot json\n");
  try {
    load_dataset(dir / "bad.jsonl");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("bad.jsonl") != std::string::npos);
  }
}

TEST_CASE("load_texts reads plain lines and dataset files") {
  testing::TempDir dir;
  testing::write_file(dir / "plain.txt", "one line\n\nsecond line\n");
  CHECK(load_texts(dir / "plain.txt") == std::vector<std::string>{"one line", "second line"});
  testing::write_file(dir / "d.jsonl", "{\"text\":\"t1\",\"label\":\"a\"}\n{\"text\":\"t2\"}\n");
  CHECK(load_texts(dir / "d.jsonl") == std::vector<std::string>{"t1", "t2"});
}
