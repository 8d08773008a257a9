#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "predset/config.hpp"
#include "predset/csv.hpp"
#include "predset/errors.hpp"
#include "predset/ingest.hpp"

using namespace predset;
namespace fs = std::filesystem;

namespace {

template <typename F>
std::size_t parse_error_line(F&& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

RealData tiny_real_data() {
  RealData d;
  d.num_labels = 3;
  d.sample_ids = {"a", "b", "c", "d"};
  d.labels = {0, 2, 1, 2};
  d.classifier_names = {"net"};
  d.scores.emplace_back(4, 3,
                        std::vector<double>{0.7, 0.2, 0.1, 0.1, 0.1, 0.8, 0.3, 0.6, 0.1, 0.125, 0.5, 0.375});
  d.predictions = {{0, 0, 1}, {2}, {1, 1}, {0, 2}};
  return d;
}

}  // namespace

TEST_CASE("config parsing") {
  std::istringstream in(
      "# comment\n"
      "n = 10\n"
      "\n"
      "expert_accuracies = 0.3, 0.5 ,0.7   # trailing comment\n"
      "flag = true\n"
      "name = hello world\n");
  Config c = Config::parse(in, "t.conf");
  CHECK(c.get_size("n", 0) == 10);
  CHECK(c.get_doubles("expert_accuracies", {}) == std::vector<double>{0.3, 0.5, 0.7});
  CHECK(c.get_bool("flag", false));
  CHECK(c.get_string("name", "") == "hello world");
  CHECK(c.get_double("missing", 2.5) == 2.5);
  CHECK(c.unused_keys().empty());
  c.set("n", "12");
  CHECK(c.get_size("n", 0) == 12);
}

TEST_CASE("config errors carry line numbers") {
  CHECK(parse_error_line([] {
          std::istringstream in("a = 1\nnot a pair\n");
          Config::parse(in, "x");
        }) == 2);
  CHECK(parse_error_line([] {
          std::istringstream in("a = 1\n\na = 2\n");
          Config::parse(in, "x");
        }) == 3);
  CHECK(parse_error_line([] {
          std::istringstream in("a = 1\nb = zero\n");
          Config::parse(in, "x").get_double("b", 0.0);
        }) == 2);
  std::istringstream in("n = -3\ntypo = 1\n");
  const Config c = Config::parse(in, "x");
  CHECK_THROWS_AS(c.get_size("n", 0), ParseError);
  CHECK(c.unused_keys() == std::vector<std::string>{"typo"});
  CHECK_THROWS_AS(Config::load("/nonexistent/file.conf"), UsageError);
}

TEST_CASE("config paths resolve against the file") {
  const fs::path dir = fs::temp_directory_path() / "predset_cfg_test";
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "a.conf");
    f << "labels = data/labels.csv\nabs = /tmp/x.csv\n";
  }
  const Config c = Config::load(dir / "a.conf");
  CHECK(c.get_path("labels", {}) == dir / "data/labels.csv");
  CHECK(c.get_path("abs", {}) == fs::path("/tmp/x.csv"));
  fs::remove_all(dir);
}

TEST_CASE("double formatting round trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5, 0.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_double(std::nan("")) == "nan");
}

TEST_CASE("csv reader and writer") {
  std::ostringstream out;
  {
    CsvWriter w(out, {"a", "b"});
    w << 1.5 << std::size_t{3};
    w.end_row();
    w << "x";
    CHECK_THROWS_AS(w.end_row(), UsageError);
  }
  std::istringstream in("a,b\n\n 1.5 , 2\r\n3,oops\n");
  CsvReader r(in, "f.csv");
  CHECK(r.header() == std::vector<std::string>{"a", "b"});
  std::vector<std::string> f;
  REQUIRE(r.next(f));
  CHECK(r.line() == 3);
  CHECK(r.to_double(f[0]) == 1.5);
  CHECK(r.to_int(f[1]) == 2);
  REQUIRE(r.next(f));
  CHECK(parse_error_line([&] { r.to_int(f[1]); }) == 4);
  CHECK(parse_error_line([&] { r.to_int("2.5"); }) == 4);
  CHECK_FALSE(r.next(f));
  CHECK(split_csv_line("a,,b") == std::vector<std::string>{"a", "", "b"});
}

TEST_CASE("real-format round trip") {
  const RealData d = tiny_real_data();
  const fs::path dir = fs::temp_directory_path() / "predset_real_test";
  fs::remove_all(dir);
  const RealDataPaths paths = write_real_data(d, dir);
  const RealData back = ingest_real_data(paths);
  CHECK(back.num_labels == 3);
  CHECK(back.sample_ids == d.sample_ids);
  CHECK(back.labels == d.labels);
  CHECK(back.classifier_names == std::vector<std::string>{"net"});
  CHECK(back.scores[0].values() == d.scores[0].values());
  CHECK(back.predictions == d.predictions);
  fs::remove_all(dir);
}

TEST_CASE("real-data helpers") {
  const RealData d = tiny_real_data();
  const auto frac = d.correct_fractions();
  CHECK(frac[0] == doctest::Approx(2.0 / 3.0));
  CHECK(frac[1] == 1.0);
  CHECK(frac[3] == 0.5);
  const std::vector<std::size_t> rows{0, 3};
  CHECK(d.expert_accuracy(rows) == doctest::Approx((2.0 / 3.0 + 0.5) / 2));
  CHECK(d.prediction_pairs(rows).size() == 5);
  CHECK(d.prediction_pairs().size() == 8);
  const LabeledScores ls = d.labeled(0);
  CHECK(ls.size() == 4);
  CHECK(ls.label(1) == 2);
  CHECK_THROWS_AS(d.labeled(1), UsageError);
}

TEST_CASE("score rows are matched by sample id") {
  RealData d;
  std::istringstream labels("sample_id,label\nx,1\ny,0\n");
  read_labels_csv(labels, "labels.csv", d);
  std::istringstream scores("sample_id,p0,p1\ny,0.9,0.1\nx,0.2,0.8\n");
  read_scores_csv(scores, "s.csv", "clf", d);
  CHECK(d.scores[0].at(0, 1) == 0.8);
  CHECK(d.scores[0].at(1, 0) == 0.9);
}

TEST_CASE("malformed real-format files are rejected with line numbers") {
  auto labels = [](RealData& d) {
    std::istringstream in("sample_id,label\na,0\nb,1\nc,1\n");
    read_labels_csv(in, "labels.csv", d);
  };
  auto scores_line = [&](const std::string& text) {
    RealData d;
    labels(d);
    std::istringstream in(text);
    return parse_error_line([&] { read_scores_csv(in, "s.csv", "clf", d); });
  };
  CHECK(scores_line("sample_id,p0,p1\na,0.5,0.5\nb,0.5\n") == 3);         // short row
  CHECK(scores_line("sample_id,p0,p1\na,0.5,0.5\nz,0.5,0.5\n") == 3);     // unknown id
  CHECK(scores_line("sample_id,p0,p1\na,0.5,0.5\na,0.5,0.5\n") == 3);     // duplicate
  CHECK(scores_line("sample_id,p0,p1\na,0.5,0.5\nb,1.5,0.5\n") == 3);     // out of [0,1]
  CHECK(scores_line("sample_id,p0,p1\na,0.5,0.5\nb,0.5,0.5\n") >= 3);     // c missing
  CHECK(scores_line("id,p0,p1\n") == 1);

  RealData d;
  std::istringstream bad_labels("sample_id,label\na,0\nb,-1\n");
  CHECK(parse_error_line([&] { read_labels_csv(bad_labels, "labels.csv", d); }) == 3);
  std::istringstream three("sample_id,label\na,0\nb,5\n");
  RealData e;
  read_labels_csv(three, "labels.csv", e);
  std::istringstream narrow("sample_id,p0,p1\na,0.5,0.5\nb,0.5,0.5\n");
  CHECK_THROWS_AS(read_scores_csv(narrow, "s.csv", "clf", e), ParseError);

  RealData p;
  labels(p);
  std::istringstream s("sample_id,p0,p1\na,0.5,0.5\nb,0.5,0.5\nc,0.5,0.5\n");
  read_scores_csv(s, "s.csv", "clf", p);
  std::istringstream preds("sample_id,predicted_label\na,0\nb,2\n");
  CHECK(parse_error_line([&] { read_predictions_csv(preds, "p.csv", p); }) == 3);
  std::istringstream unknown("sample_id,predicted_label\na,0\n\nq,1\n");
  CHECK(parse_error_line([&] { read_predictions_csv(unknown, "p.csv", p); }) == 4);
}

TEST_CASE("missing files are usage errors") {
  RealDataPaths paths;
  paths.labels = "/nonexistent/labels.csv";
  paths.scores = {"/nonexistent/s.csv"};
  paths.predictions = "/nonexistent/p.csv";
  CHECK_THROWS_AS(ingest_real_data(paths), UsageError);
  paths.scores.clear();
  CHECK_THROWS_AS(ingest_real_data(paths), UsageError);
}
