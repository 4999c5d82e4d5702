#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pratyaya/common.hpp"
#include "pratyaya/translit.hpp"

namespace pratyaya::corpus {

enum class suffix_category { krit, taddhit };
enum class task_direction { formation, split };

std::string to_string(suffix_category category);
std::string to_string(task_direction direction);
suffix_category category_from_string(std::string_view text);
task_direction direction_from_string(std::string_view text);

// One corpus tuple: (tul, lyuw, tolanam, krit) or (Indra, aR, Endra, taddhit).
struct derivation_record {
  std::string stem;
  std::string suffix_name;
  std::string pada;
  suffix_category category = suffix_category::krit;

  bool operator==(const derivation_record&) const = default;
};

// Sanity bounds applied while loading; model maxima are computed later
// from the training partition (or pinned via config).
struct load_limits {
  std::size_t max_input_length = 64;   // len(stem) + 1 + len(suffix_name)
  std::size_t max_output_length = 64;  // len(pada)
};

class parse_error : public error {
 public:
  parse_error(std::size_t line, const std::string& reason);
  std::size_t line;
};

class validation_error : public error {
 public:
  validation_error(std::size_t line, const std::string& field, const std::string& reason);
  std::size_t line;
  std::string field;
};

class empty_corpus : public error {
 public:
  empty_corpus();
};

class unknown_character : public error {
 public:
  explicit unknown_character(char character);
  char character;
};

class length_overflow : public error {
 public:
  length_overflow(const std::string& field, std::size_t length, std::size_t limit);
  std::string field;
};

// Shared character<->index table over SLP1 symbols plus the four control
// characters, sorted by code point so rebuilds are order-independent.
struct vocabulary {
  std::string index_to_char;
  std::map<char, int> char_to_index;

  int size() const { return static_cast<int>(index_to_char.size()); }
  bool contains(char c) const { return char_to_index.count(c) != 0; }
  int index_of(char c) const;
  char char_at(int index) const;

  int pad_index() const { return index_of(pad_char); }
  int start_index() const { return index_of(start_char); }
  int end_index() const { return index_of(end_char); }
  int join_index() const { return index_of(join_char); }

  bool operator==(const vocabulary&) const = default;
};

// Padded index sequences for one example. Source is padded with '*' to
// source_max; target is '&' + text + '$' padded with '*' to target_max + 2.
struct encoded_pair {
  std::vector<int> source_indices;
  std::vector<int> target_indices;
  task_direction direction = task_direction::formation;
};

struct corpus_split {
  std::vector<derivation_record> train;
  std::vector<derivation_record> test;
  std::uint64_t seed = 0;
  double fraction = 0.8;
};

struct corpus_stats_table {
  std::map<std::string, std::size_t> krit;
  std::map<std::string, std::size_t> taddhit;
  std::size_t krit_total = 0;
  std::size_t taddhit_total = 0;

  bool operator==(const corpus_stats_table&) const = default;
};

// Suffixes dropped from the krit data before training; both have too few
// records relative to the other ten.
const std::set<std::string>& default_excluded_krit_suffixes();

std::vector<derivation_record> load_corpus(const translit::transliteration_table& table,
                                           const std::string& path,
                                           const load_limits& limits = {});

std::vector<derivation_record> filter_krit_suffixes(
    const std::vector<derivation_record>& records,
    const std::set<std::string>& excluded = default_excluded_krit_suffixes());

std::vector<derivation_record> filter_category(const std::vector<derivation_record>& records,
                                               suffix_category category);

// Deterministic Fisher-Yates shuffle under mt19937_64(seed), then a
// train = first floor(fraction * n) partition.
corpus_split make_split(const std::vector<derivation_record>& records, double fraction,
                        std::uint64_t seed);

vocabulary build_vocabulary(const std::vector<derivation_record>& train);

encoded_pair encode_formation_pair(const derivation_record& record, const vocabulary& vocab,
                                   std::size_t source_max, std::size_t target_max);
encoded_pair encode_split_pair(const derivation_record& record, const vocabulary& vocab,
                               std::size_t source_max, std::size_t target_max);

std::string decode_output_string(const std::vector<int>& indices, const vocabulary& vocab);

// Longest source/target strings a record list needs in a given direction.
struct sequence_maxima {
  std::size_t source_max = 0;
  std::size_t target_max = 0;
};
sequence_maxima compute_maxima(const std::vector<derivation_record>& records,
                               task_direction direction);

corpus_stats_table corpus_stats(const std::vector<derivation_record>& records);

std::string format_stats(const corpus_stats_table& stats);     // aligned table
std::string format_stats_kv(const corpus_stats_table& stats);  // machine-readable key=value

}  // namespace pratyaya::corpus
