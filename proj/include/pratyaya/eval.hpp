#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pratyaya/common.hpp"
#include "pratyaya/corpus.hpp"

namespace pratyaya::eval {

class length_mismatch : public error {
 public:
  length_mismatch(std::size_t predictions, std::size_t golds);
};

struct accuracy_count {
  std::size_t successes = 0;
  std::size_t total = 0;
  double ratio = 0.0;
};

// Success iff the strings are equal codepoint for codepoint, so SLP1
// 'a' vs 'A' is a miss.
accuracy_count exact_match_accuracy(const std::vector<std::string>& predictions,
                                    const std::vector<std::string>& golds);

// Positional alignment: per pair, matching positions / max(len_pred,
// len_gold); mean over pairs. Two empty strings count as a full match.
double char_accuracy(const std::vector<std::string>& predictions,
                     const std::vector<std::string>& golds);

// Sensitivity-analysis alternative: per pair, 1 - edit_distance /
// max(len_pred, len_gold); mean over pairs.
double char_accuracy_levenshtein(const std::vector<std::string>& predictions,
                                 const std::vector<std::string>& golds);

enum class char_metric { positional, levenshtein };
char_metric char_metric_from_string(std::string_view text);

struct split_parts {
  std::string stem;
  std::string suffix_name;
  bool malformed = false;
};

// Strict: stem and suffix must both match exactly; malformed predictions
// (no '+' in the decoder output) always fail.
bool split_success(const split_parts& predicted, const split_parts& gold);

struct suffix_tally {
  std::size_t successes = 0;
  std::size_t total = 0;
};

struct eval_report {
  corpus::task_direction direction = corpus::task_direction::formation;
  corpus::suffix_category category = corpus::suffix_category::krit;
  std::size_t successes = 0;
  std::size_t total = 0;
  double accuracy = 0.0;
  // character accuracy over all rows, and over mispredicted rows only
  // (whether the published ~98% figure meant one or the other is
  // ambiguous, so both are shown)
  double char_accuracy = 0.0;
  double char_accuracy_failures = 0.0;
  std::map<std::string, suffix_tally> per_suffix;
  std::size_t encode_failures = 0;  // rows unencodable under the model maxima/vocab
};

// "3903 / 4396 (88.79%)" with the percentage rounded half-up to 2 decimals.
std::string format_result_cell(std::size_t successes, std::size_t total);
double percent_half_up(std::size_t successes, std::size_t total);

struct benchmark_row {
  std::string model;
  std::string task;  // e.g. "kridanta_split"
  std::string cell;  // displayed verbatim; never recomputed for reference rows
};

// Published numbers of tools that cannot be rerun ship as a data file:
// model<TAB>task<TAB>cell, '#' comments.
std::vector<benchmark_row> load_reference_rows(const std::string& path);

std::string benchmark_report(const std::vector<benchmark_row>& computed,
                             const std::vector<benchmark_row>& reference);

std::string format_report(const eval_report& report);     // aligned, human-readable
std::string format_report_kv(const eval_report& report);  // machine-readable key=value

}  // namespace pratyaya::eval
