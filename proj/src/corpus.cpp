#include "pratyaya/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace pratyaya::corpus {

std::string to_string(suffix_category category) {
  return category == suffix_category::krit ? "krit" : "taddhit";
}

std::string to_string(task_direction direction) {
  return direction == task_direction::formation ? "formation" : "split";
}

suffix_category category_from_string(std::string_view text) {
  if (text == "krit") return suffix_category::krit;
  if (text == "taddhit") return suffix_category::taddhit;
  throw error("unknown suffix category: \"" + std::string(text) + "\" (expected krit or taddhit)");
}

task_direction direction_from_string(std::string_view text) {
  if (text == "formation") return task_direction::formation;
  if (text == "split") return task_direction::split;
  throw error("unknown direction: \"" + std::string(text) + "\" (expected formation or split)");
}

parse_error::parse_error(std::size_t line_no, const std::string& reason)
    : error("line " + std::to_string(line_no) + ": " + reason), line(line_no) {}

validation_error::validation_error(std::size_t line_no, const std::string& field_name,
                                   const std::string& reason)
    : error("line " + std::to_string(line_no) + ", field " + field_name + ": " + reason),
      line(line_no),
      field(field_name) {}

empty_corpus::empty_corpus() : error("corpus is empty") {}

unknown_character::unknown_character(char c)
    : error(std::string("character not in vocabulary: '") + c + "'"), character(c) {}

length_overflow::length_overflow(const std::string& field_name, std::size_t length,
                                 std::size_t limit)
    : error(field_name + " length " + std::to_string(length) + " exceeds maximum " +
            std::to_string(limit)),
      field(field_name) {}

int vocabulary::index_of(char c) const {
  auto it = char_to_index.find(c);
  if (it == char_to_index.end()) throw unknown_character(c);
  return it->second;
}

char vocabulary::char_at(int index) const {
  if (index < 0 || index >= size()) {
    throw error("vocabulary index out of range: " + std::to_string(index));
  }
  return index_to_char[static_cast<std::size_t>(index)];
}

const std::set<std::string>& default_excluded_krit_suffixes() {
  static const std::set<std::string> excluded{"Satf~", "SAnac"};
  return excluded;
}

namespace {

void validate_field(const translit::transliteration_table& table, std::size_t line_no,
                    const std::string& field_name, const std::string& value) {
  if (value.empty()) {
    throw validation_error(line_no, field_name, "must not be empty");
  }
  auto violations = translit::validate_slp1(table, value, /*allow_control=*/false);
  if (!violations.empty()) {
    throw validation_error(line_no, field_name,
                           "not SLP1 at offset " + std::to_string(violations[0].position) +
                               ": '" + std::string(1, violations[0].character) + "'");
  }
}

}  // namespace

std::vector<derivation_record> load_corpus(const translit::transliteration_table& table,
                                           const std::string& path, const load_limits& limits) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw config_error("cannot open corpus file: " + path);
  }

  std::vector<derivation_record> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;

    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 4) {
      throw parse_error(line_no, "expected 4 tab-separated fields, got " +
                                     std::to_string(fields.size()));
    }

    derivation_record record;
    record.stem = fields[0];
    record.suffix_name = fields[1];
    record.pada = fields[2];
    try {
      record.category = category_from_string(fields[3]);
    } catch (const error& e) {
      throw parse_error(line_no, e.what());
    }

    validate_field(table, line_no, "stem", record.stem);
    validate_field(table, line_no, "suffix_name", record.suffix_name);
    validate_field(table, line_no, "pada", record.pada);

    std::size_t input_len = record.stem.size() + 1 + record.suffix_name.size();
    if (input_len > limits.max_input_length) {
      throw validation_error(line_no, "stem+suffix_name",
                             "length " + std::to_string(input_len) + " exceeds limit " +
                                 std::to_string(limits.max_input_length));
    }
    if (record.pada.size() > limits.max_output_length) {
      throw validation_error(line_no, "pada",
                             "length " + std::to_string(record.pada.size()) + " exceeds limit " +
                                 std::to_string(limits.max_output_length));
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<derivation_record> filter_krit_suffixes(const std::vector<derivation_record>& records,
                                                    const std::set<std::string>& excluded) {
  std::vector<derivation_record> kept;
  kept.reserve(records.size());
  for (const auto& record : records) {
    if (record.category == suffix_category::krit && excluded.count(record.suffix_name) != 0) {
      continue;
    }
    kept.push_back(record);
  }
  return kept;
}

std::vector<derivation_record> filter_category(const std::vector<derivation_record>& records,
                                               suffix_category category) {
  std::vector<derivation_record> kept;
  for (const auto& record : records) {
    if (record.category == category) kept.push_back(record);
  }
  return kept;
}

corpus_split make_split(const std::vector<derivation_record>& records, double fraction,
                        std::uint64_t seed) {
  if (records.empty()) throw empty_corpus();
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw error("split fraction must be in (0, 1), got " + std::to_string(fraction));
  }

  // Fisher-Yates, descending, j = next() % (i + 1). mt19937_64 is pinned by
  // the C++ standard, so any implementation of this recipe reproduces the
  // same partition.
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(order[i], order[j]);
  }

  std::size_t train_count =
      static_cast<std::size_t>(std::floor(fraction * static_cast<double>(records.size()) + 1e-9));
  train_count = std::min(train_count, records.size());

  corpus_split split;
  split.seed = seed;
  split.fraction = fraction;
  split.train.reserve(train_count);
  split.test.reserve(records.size() - train_count);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < train_count ? split.train : split.test).push_back(records[order[i]]);
  }
  return split;
}

vocabulary build_vocabulary(const std::vector<derivation_record>& train) {
  if (train.empty()) throw empty_corpus();

  std::set<char> chars(control_chars.begin(), control_chars.end());
  for (const auto& record : train) {
    chars.insert(record.stem.begin(), record.stem.end());
    chars.insert(record.suffix_name.begin(), record.suffix_name.end());
    chars.insert(record.pada.begin(), record.pada.end());
  }

  vocabulary vocab;
  vocab.index_to_char.assign(chars.begin(), chars.end());
  for (int i = 0; i < vocab.size(); ++i) {
    vocab.char_to_index.emplace(vocab.index_to_char[static_cast<std::size_t>(i)], i);
  }
  return vocab;
}

namespace {

std::vector<int> encode_padded_source(const std::string& text, const vocabulary& vocab,
                                      std::size_t source_max, const std::string& field_name) {
  if (text.size() > source_max) {
    throw length_overflow(field_name, text.size(), source_max);
  }
  std::vector<int> indices;
  indices.reserve(source_max);
  for (char c : text) indices.push_back(vocab.index_of(c));
  indices.resize(source_max, vocab.pad_index());
  return indices;
}

std::vector<int> encode_padded_target(const std::string& text, const vocabulary& vocab,
                                      std::size_t target_max, const std::string& field_name) {
  if (text.size() > target_max) {
    throw length_overflow(field_name, text.size(), target_max);
  }
  std::vector<int> indices;
  indices.reserve(target_max + 2);
  indices.push_back(vocab.start_index());
  for (char c : text) indices.push_back(vocab.index_of(c));
  indices.push_back(vocab.end_index());
  indices.resize(target_max + 2, vocab.pad_index());
  return indices;
}

}  // namespace

encoded_pair encode_formation_pair(const derivation_record& record, const vocabulary& vocab,
                                   std::size_t source_max, std::size_t target_max) {
  encoded_pair pair;
  pair.direction = task_direction::formation;
  pair.source_indices = encode_padded_source(record.stem + join_char + record.suffix_name, vocab,
                                             source_max, "stem+suffix_name");
  pair.target_indices = encode_padded_target(record.pada, vocab, target_max, "pada");
  return pair;
}

encoded_pair encode_split_pair(const derivation_record& record, const vocabulary& vocab,
                               std::size_t source_max, std::size_t target_max) {
  encoded_pair pair;
  pair.direction = task_direction::split;
  pair.source_indices = encode_padded_source(record.pada, vocab, source_max, "pada");
  pair.target_indices = encode_padded_target(record.stem + join_char + record.suffix_name, vocab,
                                             target_max, "stem+suffix_name");
  return pair;
}

std::string decode_output_string(const std::vector<int>& indices, const vocabulary& vocab) {
  std::string out;
  out.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    char c = vocab.char_at(indices[i]);
    if (i == 0 && c == start_char) continue;
    if (c == end_char) break;
    if (c == pad_char) continue;
    out.push_back(c);
  }
  return out;
}

sequence_maxima compute_maxima(const std::vector<derivation_record>& records,
                               task_direction direction) {
  sequence_maxima maxima;
  for (const auto& record : records) {
    std::size_t input = record.stem.size() + 1 + record.suffix_name.size();
    std::size_t output = record.pada.size();
    if (direction == task_direction::split) std::swap(input, output);
    maxima.source_max = std::max(maxima.source_max, input);
    maxima.target_max = std::max(maxima.target_max, output);
  }
  return maxima;
}

corpus_stats_table corpus_stats(const std::vector<derivation_record>& records) {
  corpus_stats_table stats;
  for (const auto& record : records) {
    if (record.category == suffix_category::krit) {
      ++stats.krit[record.suffix_name];
      ++stats.krit_total;
    } else {
      ++stats.taddhit[record.suffix_name];
      ++stats.taddhit_total;
    }
  }
  return stats;
}

std::string format_stats(const corpus_stats_table& stats) {
  std::ostringstream os;
  auto section = [&os](const char* title, const std::map<std::string, std::size_t>& counts,
                       std::size_t total) {
    os << title << " suffix      count\n";
    for (const auto& [suffix, count] : counts) {
      os << "  " << suffix;
      for (std::size_t i = suffix.size(); i < 12; ++i) os << ' ';
      os << count << '\n';
    }
    os << "  total";
    for (std::size_t i = 5; i < 12; ++i) os << ' ';
    os << total << '\n';
  };
  section("krit", stats.krit, stats.krit_total);
  section("taddhit", stats.taddhit, stats.taddhit_total);
  return os.str();
}

std::string format_stats_kv(const corpus_stats_table& stats) {
  std::ostringstream os;
  for (const auto& [suffix, count] : stats.krit) {
    os << "krit." << suffix << "=" << count << '\n';
  }
  os << "krit.total=" << stats.krit_total << '\n';
  for (const auto& [suffix, count] : stats.taddhit) {
    os << "taddhit." << suffix << "=" << count << '\n';
  }
  os << "taddhit.total=" << stats.taddhit_total << '\n';
  return os.str();
}

}  // namespace pratyaya::corpus
