#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "pratyaya/eval.hpp"
#include "tests/support/paths.hpp"

using namespace pratyaya;
using namespace pratyaya::eval;

TEST_CASE("exact_match_accuracy") {
  std::vector<std::string> golds{"a", "b", "c", "d", "e"};
  std::vector<std::string> preds{"a", "b", "c", "d", "x"};
  auto count = exact_match_accuracy(preds, golds);
  CHECK(count.successes == 4);
  CHECK(count.total == 5);
  CHECK(count.ratio == doctest::Approx(0.8));

  CHECK(exact_match_accuracy(golds, golds).ratio == 1.0);
  CHECK_THROWS_AS(exact_match_accuracy({"a"}, golds), length_mismatch);

  // codepoint-strict: vowel length differences are misses
  auto strict = exact_match_accuracy({"tUlanam"}, {"tulanam"});
  CHECK(strict.successes == 0);
}

TEST_CASE("exact_match_accuracy is permutation invariant") {
  std::vector<std::pair<std::string, std::string>> pairs{
      {"tolanam", "tolanam"}, {"kartum", "kartun"}, {"netf", "netf"},
      {"gatvA", "gatva"},     {"Endra", "Endra"},
  };
  std::mt19937_64 rng(5);
  auto baseline = [&] {
    std::vector<std::string> p, g;
    for (auto& [pred, gold] : pairs) {
      p.push_back(pred);
      g.push_back(gold);
    }
    return exact_match_accuracy(p, g);
  }();
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(pairs.begin(), pairs.end(), rng);
    std::vector<std::string> p, g;
    for (auto& [pred, gold] : pairs) {
      p.push_back(pred);
      g.push_back(gold);
    }
    auto shuffled = exact_match_accuracy(p, g);
    CHECK(shuffled.successes == baseline.successes);
    CHECK(shuffled.ratio == baseline.ratio);
  }
}

TEST_CASE("char_accuracy") {
  CHECK(char_accuracy({"tolanam"}, {"tolanam"}) == doctest::Approx(1.0));
  CHECK(char_accuracy({"tolanam"}, {"tolanan"}) == doctest::Approx(6.0 / 7.0));
  // length mismatch pads against the longer string
  CHECK(char_accuracy({"tolana"}, {"tolanam"}) == doctest::Approx(6.0 / 7.0));
  CHECK(char_accuracy({""}, {""}) == doctest::Approx(1.0));
  CHECK(char_accuracy({"", "ab"}, {"ab", "ab"}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(char_accuracy({"a", "b"}, {"a"}), length_mismatch);
}

TEST_CASE("char_accuracy_levenshtein") {
  CHECK(char_accuracy_levenshtein({"tolanam"}, {"tolanam"}) == doctest::Approx(1.0));
  CHECK(char_accuracy_levenshtein({"tolanam"}, {"tolanan"}) == doctest::Approx(6.0 / 7.0));
  // one deletion: positional alignment punishes the shift, edit distance not
  CHECK(char_accuracy_levenshtein({"tlanam"}, {"tolanam"}) == doctest::Approx(6.0 / 7.0));
  CHECK(char_accuracy({"tlanam"}, {"tolanam"}) < 6.0 / 7.0);
  CHECK(char_accuracy_levenshtein({""}, {""}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(char_accuracy_levenshtein({"a"}, {}), length_mismatch);

  CHECK(char_metric_from_string("positional") == char_metric::positional);
  CHECK(char_metric_from_string("levenshtein") == char_metric::levenshtein);
  CHECK_THROWS_AS(char_metric_from_string("fuzzy"), pratyaya::config_error);
}

TEST_CASE("split_success is strict about both parts") {
  split_parts gold{"tul", "lyuw", false};
  CHECK(split_success({"tul", "lyuw", false}, gold));
  CHECK(!split_success({"tUl", "lyuw", false}, gold));  // vowel-length miss
  CHECK(!split_success({"tul", "lyow", false}, gold));
  CHECK(!split_success({"tul", "", true}, gold));  // malformed always fails

  // stronger than suffix-only matching
  std::vector<split_parts> predictions{
      {"tul", "lyuw", false}, {"tUl", "lyuw", false}, {"xx", "lyuw", false}};
  std::size_t full = 0, suffix_only = 0;
  for (const auto& p : predictions) {
    full += split_success(p, gold) ? 1 : 0;
    suffix_only += (!p.malformed && p.suffix_name == gold.suffix_name) ? 1 : 0;
  }
  CHECK(full <= suffix_only);
  CHECK(full == 1);
  CHECK(suffix_only == 3);
}

TEST_CASE("percent formatting rounds half-up to two decimals") {
  CHECK(format_result_cell(3903, 4396) == "3903 / 4396 (88.79%)");
  CHECK(format_result_cell(3718, 4396) == "3718 / 4396 (84.58%)");
  CHECK(format_result_cell(255, 618) == "255 / 618 (41.26%)");
  CHECK(format_result_cell(495, 618) == "495 / 618 (80.10%)");  // 80.0971 rounds up
  CHECK(format_result_cell(1, 8) == "1 / 8 (12.50%)");
  CHECK(format_result_cell(1, 3) == "1 / 3 (33.33%)");
  CHECK(format_result_cell(0, 0) == "0 / 0 (0.00%)");
  CHECK(percent_half_up(9, 16) == doctest::Approx(56.25));
  CHECK(percent_half_up(1, 16000) == doctest::Approx(0.01));  // 0.00625% rounds up
}

TEST_CASE("benchmark_report lists computed rows then verbatim reference rows") {
  std::vector<benchmark_row> computed{
      {"this repo", "kridanta_split", format_result_cell(3903, 4396)}};
  auto reference = load_reference_rows(tests::data_file("reference_results.tsv"));
  REQUIRE(reference.size() == 7);

  auto text = benchmark_report(computed, reference);
  CHECK(text.find("this repo") != std::string::npos);
  CHECK(text.find("3903 / 4396 (88.79%)") != std::string::npos);
  // reference cells stay byte-for-byte as published, including "(38.9%)"
  CHECK(text.find("1710 / 4396 (38.9%)") != std::string::npos);
  CHECK(text.find("3492 / 4396 (79.43%)") != std::string::npos);

  auto header_only = benchmark_report({}, {});
  CHECK(header_only == "model  task  result\n");
}

TEST_CASE("report formatting") {
  eval_report report;
  report.direction = corpus::task_direction::split;
  report.category = corpus::suffix_category::krit;
  report.successes = 7;
  report.total = 10;
  report.accuracy = 0.7;
  report.char_accuracy = 0.93;
  report.per_suffix["lyuw"] = {4, 5};
  report.per_suffix["tavya"] = {3, 5};
  report.encode_failures = 1;

  auto text = format_report(report);
  CHECK(text.find("krit split") != std::string::npos);
  CHECK(text.find("7 / 10 (70.00%)") != std::string::npos);
  CHECK(text.find("lyuw") != std::string::npos);
  CHECK(text.find("unencodable") != std::string::npos);

  auto kv = format_report_kv(report);
  CHECK(kv.find("task=krit_split\n") != std::string::npos);
  CHECK(kv.find("successes=7\n") != std::string::npos);
  CHECK(kv.find("suffix.lyuw=4/5\n") != std::string::npos);
}
