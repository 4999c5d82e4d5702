#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "pratyaya/corpus.hpp"
#include "tests/support/paths.hpp"

using namespace pratyaya;
using namespace pratyaya::corpus;

namespace {

const translit::transliteration_table& table() {
  static auto t = translit::transliteration_table::load(tests::data_file("itrans_slp1.tsv"));
  return t;
}

struct temp_file {
  std::string path;
  explicit temp_file(const std::string& contents) {
    static int counter = 0;
    path = "corpus_test_" + std::to_string(counter++) + ".tsv";
    std::ofstream out(path, std::ios::binary);
    out << contents;
  }
  ~temp_file() { std::remove(path.c_str()); }
};

std::string chars_of(const std::vector<int>& indices, const vocabulary& vocab) {
  std::string s;
  for (int i : indices) s.push_back(vocab.char_at(i));
  return s;
}

std::vector<derivation_record> dummy_records(std::size_t n) {
  std::vector<derivation_record> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    records.push_back({"s" + std::to_string(i), "x", "p" + std::to_string(i),
                       suffix_category::krit});
  }
  return records;
}

}  // namespace

TEST_CASE("load_corpus reads the sample file") {
  auto records = load_corpus(table(), tests::data_file("sample_corpus.tsv"));
  REQUIRE(records.size() == 12);
  CHECK(records[0] == derivation_record{"tul", "lyuw", "tolanam", suffix_category::krit});
  CHECK(records[8] == derivation_record{"Indra", "aR", "Endra", suffix_category::taddhit});
}

TEST_CASE("load_corpus on an empty file") {
  temp_file file("");
  CHECK(load_corpus(table(), file.path).empty());
}

TEST_CASE("load_corpus skips comments and blank lines") {
  temp_file file("# heading\n\ntul\tlyuw\ttolanam\tkrit\n");
  CHECK(load_corpus(table(), file.path).size() == 1);
}

TEST_CASE("load_corpus parse errors carry line numbers") {
  temp_file bad_fields("tul\tlyuw\ttolanam\tkrit\nonly\tthree\tfields\n");
  try {
    load_corpus(table(), bad_fields.path);
    FAIL("expected parse_error");
  } catch (const parse_error& e) {
    CHECK(e.line == 2);
  }

  temp_file bad_category("tul\tlyuw\ttolanam\tprimary\n");
  CHECK_THROWS_AS(load_corpus(table(), bad_category.path), parse_error);
}

TEST_CASE("load_corpus validation errors") {
  temp_file empty_field("tul\t\ttolanam\tkrit\n");
  try {
    load_corpus(table(), empty_field.path);
    FAIL("expected validation_error");
  } catch (const validation_error& e) {
    CHECK(e.field == "suffix_name");
  }

  temp_file bad_char("tuZ\tlyuw\ttolanam\tkrit\n");  // 'Z' is not SLP1
  CHECK_THROWS_AS(load_corpus(table(), bad_char.path), validation_error);

  temp_file control_char("tul+a\tlyuw\ttolanam\tkrit\n");
  CHECK_THROWS_AS(load_corpus(table(), control_char.path), validation_error);

  temp_file overlong("tulatulatula\tlyuw\ttolanam\tkrit\n");
  load_limits limits;
  limits.max_input_length = 10;
  CHECK_THROWS_AS(load_corpus(table(), overlong.path, limits), validation_error);

  CHECK_THROWS_AS(load_corpus(table(), "no_such_file.tsv"), config_error);
}

TEST_CASE("filter_krit_suffixes") {
  auto records = load_corpus(table(), tests::data_file("sample_corpus.tsv"));
  auto kept = filter_krit_suffixes(records);
  CHECK(kept.size() == records.size() - 2);  // one Satf~, one SAnac in the sample
  for (const auto& r : kept) {
    CHECK(r.suffix_name != "Satf~");
    CHECK(r.suffix_name != "SAnac");
  }

  CHECK(filter_krit_suffixes(records, {}).size() == records.size());

  // taddhit records keep excluded names; the filter is krit-only
  std::vector<derivation_record> mixed{{"a", "Satf~", "b", suffix_category::taddhit}};
  CHECK(filter_krit_suffixes(mixed).size() == 1);

  std::vector<derivation_record> ten;
  for (int i = 0; i < 10; ++i) {
    ten.push_back({"s", i < 3 ? "Satf~" : "kta", "p", suffix_category::krit});
  }
  CHECK(filter_krit_suffixes(ten).size() == 7);
}

TEST_CASE("make_split reproduces the published partition sizes") {
  auto split_krit = make_split(dummy_records(21980), 0.8, 13);
  CHECK(split_krit.train.size() == 17584);
  CHECK(split_krit.test.size() == 4396);

  auto split_taddhit = make_split(dummy_records(3088), 0.8, 13);
  CHECK(split_taddhit.train.size() == 2470);
  CHECK(split_taddhit.test.size() == 618);
}

TEST_CASE("make_split determinism and partition laws") {
  auto records = dummy_records(101);
  auto a = make_split(records, 0.8, 7);
  auto b = make_split(records, 0.8, 7);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);

  auto c = make_split(records, 0.8, 8);
  CHECK(c.train.size() == a.train.size());
  CHECK(c.train != a.train);  // different seed, different shuffle (overwhelmingly)

  // disjoint and exhaustive
  std::set<std::string> train_stems, test_stems;
  for (const auto& r : a.train) train_stems.insert(r.stem);
  for (const auto& r : a.test) test_stems.insert(r.stem);
  CHECK(train_stems.size() + test_stems.size() == records.size());

  auto tiny = make_split(dummy_records(2), 0.5, 3);
  CHECK(tiny.train.size() == 1);
  CHECK(tiny.test.size() == 1);

  CHECK_THROWS_AS(make_split({}, 0.8, 1), empty_corpus);
  CHECK_THROWS_AS(make_split(records, 1.0, 1), error);
}

TEST_CASE("build_vocabulary") {
  std::vector<derivation_record> one{{"a", "a", "a", suffix_category::krit}};
  auto vocab = build_vocabulary(one);
  CHECK(vocab.size() == 5);
  CHECK(vocab.index_to_char == "$&*+a");  // sorted by code point

  CHECK_THROWS_AS(build_vocabulary({}), empty_corpus);

  auto records = load_corpus(table(), tests::data_file("sample_corpus.tsv"));
  auto full = build_vocabulary(records);
  for (const auto& r : records) {
    for (char c : r.stem + r.suffix_name + r.pada) CHECK(full.contains(c));
  }
  CHECK_THROWS_AS(full.index_of('!'), unknown_character);
}

TEST_CASE("encode_formation_pair matches the documented layout") {
  auto records = load_corpus(table(), tests::data_file("sample_corpus.tsv"));
  auto vocab = build_vocabulary(records);

  auto pair = encode_formation_pair(records[0], vocab, 17, 18);
  CHECK(pair.direction == task_direction::formation);
  CHECK(pair.source_indices.size() == 17);
  CHECK(chars_of(pair.source_indices, vocab) == "tul+lyuw*********");
  CHECK(pair.target_indices.size() == 20);
  CHECK(chars_of(pair.target_indices, vocab) == "&tolanam$***********");

  auto paW = encode_formation_pair(records[1], vocab, 17, 18);
  CHECK(chars_of(paW.source_indices, vocab).substr(0, 9) == "paW+tavya");

  // boundary: source exactly fills source_max -> zero pads
  auto exact = encode_formation_pair(records[0], vocab, 8, 7);
  CHECK(chars_of(exact.source_indices, vocab) == "tul+lyuw");

  CHECK_THROWS_AS(encode_formation_pair(records[0], vocab, 7, 18), length_overflow);
  CHECK_THROWS_AS(encode_formation_pair(records[0], vocab, 17, 6), length_overflow);

  derivation_record alien{"qqq", "zz", "qz", suffix_category::krit};
  vocabulary tiny = build_vocabulary({{"a", "a", "a", suffix_category::krit}});
  CHECK_THROWS_AS(encode_formation_pair(alien, tiny, 17, 18), unknown_character);
}

TEST_CASE("encode_split_pair swaps the roles") {
  auto records = load_corpus(table(), tests::data_file("sample_corpus.tsv"));
  auto vocab = build_vocabulary(records);

  auto pair = encode_split_pair(records[0], vocab, 10, 12);
  CHECK(pair.direction == task_direction::split);
  CHECK(chars_of(pair.source_indices, vocab) == "tolanam***");
  CHECK(chars_of(pair.target_indices, vocab) == "&tul+lyuw$****");

  auto taddhit = encode_split_pair(records[10], vocab, 12, 14);
  CHECK(chars_of(taddhit.source_indices, vocab).substr(0, 10) == "sOrasenyaH");
  CHECK(chars_of(taddhit.target_indices, vocab).substr(0, 14) == "&sUrasena+Rya$");

  derivation_record single{"a", "a", "a", suffix_category::krit};
  auto tiny = encode_split_pair(single, build_vocabulary({single}), 3, 4);
  CHECK(chars_of(tiny.source_indices, build_vocabulary({single})) == "a**");
  CHECK(chars_of(tiny.target_indices, build_vocabulary({single})) == "&a+a$*");
}

TEST_CASE("encoded pair structural invariants") {
  auto records = load_corpus(table(), tests::data_file("sample_corpus.tsv"));
  auto vocab = build_vocabulary(records);
  auto maxima = compute_maxima(records, task_direction::formation);

  for (const auto& r : records) {
    auto pair = encode_formation_pair(r, vocab, maxima.source_max, maxima.target_max);
    int starts = 0, ends = 0;
    for (int idx : pair.source_indices) {
      CHECK(idx < vocab.size());
      CHECK(idx != vocab.start_index());
      CHECK(idx != vocab.end_index());
    }
    for (std::size_t i = 0; i < pair.target_indices.size(); ++i) {
      int idx = pair.target_indices[i];
      if (idx == vocab.start_index()) {
        ++starts;
        CHECK(i == 0);
      }
      if (idx == vocab.end_index()) ++ends;
    }
    CHECK(starts == 1);
    CHECK(ends == 1);
    // no content after the first pad
    for (const auto& seq : {pair.source_indices, pair.target_indices}) {
      bool padding = false;
      for (int idx : seq) {
        if (idx == vocab.pad_index()) padding = true;
        else CHECK(!padding);
      }
    }
  }
}

TEST_CASE("decode_output_string") {
  auto records = load_corpus(table(), tests::data_file("sample_corpus.tsv"));
  auto vocab = build_vocabulary(records);
  auto encode = [&](const std::string& s) {
    std::vector<int> out;
    for (char c : s) out.push_back(vocab.index_of(c));
    return out;
  };

  CHECK(decode_output_string(encode("&tolanam$***"), vocab) == "tolanam");
  CHECK(decode_output_string(encode("&$"), vocab) == "");
  CHECK(decode_output_string(encode("&tul+lyuw$"), vocab) == "tul+lyuw");
  // decoder ran to max length without '$'
  CHECK(decode_output_string(encode("&tolana"), vocab) == "tolana");
  CHECK(decode_output_string(encode(""), vocab) == "");
}

TEST_CASE("encode/decode round trip over the corpus") {
  auto records = load_corpus(table(), tests::data_file("sample_corpus.tsv"));
  auto vocab = build_vocabulary(records);
  auto formation = compute_maxima(records, task_direction::formation);
  auto split = compute_maxima(records, task_direction::split);

  for (const auto& r : records) {
    auto f = encode_formation_pair(r, vocab, formation.source_max, formation.target_max);
    CHECK(decode_output_string(f.target_indices, vocab) == r.pada);
    auto s = encode_split_pair(r, vocab, split.source_max, split.target_max);
    CHECK(decode_output_string(s.target_indices, vocab) == r.stem + "+" + r.suffix_name);
  }
}

TEST_CASE("corpus_stats") {
  auto records = load_corpus(table(), tests::data_file("sample_corpus.tsv"));
  auto stats = corpus_stats(records);
  CHECK(stats.krit_total == 8);
  CHECK(stats.taddhit_total == 4);
  CHECK(stats.krit.at("tumun") == 2);
  CHECK(stats.taddhit.at("aR") == 1);

  CHECK(corpus_stats({}) == corpus_stats_table{});

  auto kv = format_stats_kv(stats);
  CHECK(kv.find("krit.tumun=2\n") != std::string::npos);
  CHECK(kv.find("krit.total=8\n") != std::string::npos);
  CHECK(kv.find("taddhit.total=4\n") != std::string::npos);

  auto text = format_stats(stats);
  CHECK(text.find("lyuw") != std::string::npos);
}

TEST_CASE("count conservation: filter plus split sizes sum to input") {
  auto records = load_corpus(table(), tests::data_file("sample_corpus.tsv"));
  auto kept = filter_krit_suffixes(records);
  std::size_t removed = records.size() - kept.size();
  CHECK(kept.size() + removed == records.size());

  auto split = make_split(kept, 0.8, 5);
  CHECK(split.train.size() + split.test.size() == kept.size());
}

TEST_CASE("compute_maxima") {
  auto records = load_corpus(table(), tests::data_file("sample_corpus.tsv"));
  auto formation = compute_maxima(records, task_direction::formation);
  CHECK(formation.source_max == 12);  // "sUrasena+Rya"
  CHECK(formation.target_max == 10);  // "paWitavyam", "sOrasenyaH"
  auto split = compute_maxima(records, task_direction::split);
  CHECK(split.source_max == formation.target_max);
  CHECK(split.target_max == formation.source_max);
}
