#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pratyaya/common.hpp"

namespace pratyaya::translit {

// One line of the mapping data file. The first entry seen for a given SLP1
// character is its canonical ITRANS spelling; later entries for the same
// character are accepted ITRANS alternates (e.g. "aa" next to "A").
struct table_entry {
  std::string itrans;
  char slp1 = '\0';
  bool canonical = false;
};

class unknown_token : public error {
 public:
  unknown_token(std::size_t position, std::string_view context);
  std::size_t position;
};

class invalid_slp1_char : public error {
 public:
  invalid_slp1_char(std::size_t position, char character);
  std::size_t position;
  char character;
};

struct violation {
  std::size_t position = 0;
  char character = '\0';
  bool operator==(const violation&) const = default;
};

// Immutable ITRANS/SLP1 mapping, loaded once from the shipped data file.
// Lookup is greedy longest-match on the ITRANS side; the SLP1 side is a
// plain per-character function (each SLP1 char has exactly one canonical
// spelling).
class transliteration_table {
 public:
  static transliteration_table load(const std::string& path);
  static transliteration_table parse(std::string_view text, const std::string& origin = "<memory>");

  const std::vector<table_entry>& entries() const { return entries_; }
  std::size_t longest_token() const { return longest_token_; }

  bool is_slp1_char(char c) const;
  // Canonical spelling of one SLP1 character; throws invalid_slp1_char.
  const std::string& canonical_itrans(char slp1) const;
  // ITRANS token -> SLP1 char, or '\0' when the token is not in the table.
  char lookup(std::string_view itrans_token) const;

 private:
  std::vector<table_entry> entries_;
  std::unordered_map<std::string, char> token_to_slp1_;
  std::unordered_map<char, std::string> slp1_to_canonical_;
  std::size_t longest_token_ = 0;
};

std::string itrans_to_slp1(const transliteration_table& table, std::string_view itrans);
std::string slp1_to_itrans(const transliteration_table& table, std::string_view slp1);
std::vector<violation> validate_slp1(const transliteration_table& table, std::string_view text,
                                     bool allow_control = false);

// Line-oriented wrapper for stream filtering: whitespace and '+' pass
// through unchanged, everything between them is converted.
std::string convert_line(const transliteration_table& table, std::string_view line, bool to_slp1);

}  // namespace pratyaya::translit
