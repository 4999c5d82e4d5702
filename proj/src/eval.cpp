#include "pratyaya/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pratyaya::eval {

length_mismatch::length_mismatch(std::size_t predictions, std::size_t golds)
    : error("prediction list has " + std::to_string(predictions) + " entries, gold list has " +
            std::to_string(golds)) {}

accuracy_count exact_match_accuracy(const std::vector<std::string>& predictions,
                                    const std::vector<std::string>& golds) {
  if (predictions.size() != golds.size()) throw length_mismatch(predictions.size(), golds.size());
  accuracy_count count;
  count.total = golds.size();
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (predictions[i] == golds[i]) ++count.successes;
  }
  count.ratio = count.total == 0
                    ? 0.0
                    : static_cast<double>(count.successes) / static_cast<double>(count.total);
  return count;
}

double char_accuracy(const std::vector<std::string>& predictions,
                     const std::vector<std::string>& golds) {
  if (predictions.size() != golds.size()) throw length_mismatch(predictions.size(), golds.size());
  if (golds.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const std::string& p = predictions[i];
    const std::string& g = golds[i];
    const std::size_t longest = std::max(p.size(), g.size());
    if (longest == 0) {
      total += 1.0;  // both empty
      continue;
    }
    std::size_t matches = 0;
    for (std::size_t j = 0; j < std::min(p.size(), g.size()); ++j) {
      if (p[j] == g[j]) ++matches;
    }
    total += static_cast<double>(matches) / static_cast<double>(longest);
  }
  return total / static_cast<double>(golds.size());
}

double char_accuracy_levenshtein(const std::vector<std::string>& predictions,
                                 const std::vector<std::string>& golds) {
  if (predictions.size() != golds.size()) throw length_mismatch(predictions.size(), golds.size());
  if (golds.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const std::string& p = predictions[i];
    const std::string& g = golds[i];
    const std::size_t longest = std::max(p.size(), g.size());
    if (longest == 0) {
      total += 1.0;
      continue;
    }
    std::vector<std::size_t> previous(g.size() + 1), current(g.size() + 1);
    for (std::size_t j = 0; j <= g.size(); ++j) previous[j] = j;
    for (std::size_t a = 1; a <= p.size(); ++a) {
      current[0] = a;
      for (std::size_t b = 1; b <= g.size(); ++b) {
        const std::size_t substitution = previous[b - 1] + (p[a - 1] == g[b - 1] ? 0 : 1);
        current[b] = std::min({previous[b] + 1, current[b - 1] + 1, substitution});
      }
      std::swap(previous, current);
    }
    total += 1.0 - static_cast<double>(previous[g.size()]) / static_cast<double>(longest);
  }
  return total / static_cast<double>(golds.size());
}

char_metric char_metric_from_string(std::string_view text) {
  if (text == "positional") return char_metric::positional;
  if (text == "levenshtein") return char_metric::levenshtein;
  throw config_error("char metric must be positional or levenshtein, got \"" +
                     std::string(text) + "\"");
}

bool split_success(const split_parts& predicted, const split_parts& gold) {
  if (predicted.malformed) return false;
  return predicted.stem == gold.stem && predicted.suffix_name == gold.suffix_name;
}

double percent_half_up(std::size_t successes, std::size_t total) {
  if (total == 0) return 0.0;
  const double ratio = static_cast<double>(successes) / static_cast<double>(total);
  return std::floor(ratio * 10000.0 + 0.5) / 100.0;
}

std::string format_result_cell(std::size_t successes, std::size_t total) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%zu / %zu (%.2f%%)", successes, total,
                percent_half_up(successes, total));
  return buffer;
}

std::vector<benchmark_row> load_reference_rows(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open reference results: " + path);
  std::vector<benchmark_row> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::size_t first = line.find('\t');
    std::size_t second = first == std::string::npos ? std::string::npos
                                                    : line.find('\t', first + 1);
    if (second == std::string::npos) {
      throw config_error(path + ":" + std::to_string(line_no) +
                         ": expected model<TAB>task<TAB>cell");
    }
    rows.push_back({line.substr(0, first), line.substr(first + 1, second - first - 1),
                    line.substr(second + 1)});
  }
  return rows;
}

std::string benchmark_report(const std::vector<benchmark_row>& computed,
                             const std::vector<benchmark_row>& reference) {
  std::vector<benchmark_row> rows;
  rows.insert(rows.end(), computed.begin(), computed.end());
  rows.insert(rows.end(), reference.begin(), reference.end());

  std::size_t model_width = std::string("model").size();
  std::size_t task_width = std::string("task").size();
  for (const auto& row : rows) {
    model_width = std::max(model_width, row.model.size());
    task_width = std::max(task_width, row.task.size());
  }

  std::ostringstream os;
  auto emit = [&](const std::string& model, const std::string& task, const std::string& cell) {
    os << model << std::string(model_width - model.size() + 2, ' ') << task
       << std::string(task_width - task.size() + 2, ' ') << cell << '\n';
  };
  emit("model", "task", "result");
  for (const auto& row : rows) emit(row.model, row.task, row.cell);
  return os.str();
}

std::string format_report(const eval_report& report) {
  std::ostringstream os;
  os << "task: " << corpus::to_string(report.category) << " "
     << corpus::to_string(report.direction) << '\n';
  os << "result: " << format_result_cell(report.successes, report.total) << '\n';
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.4f", report.char_accuracy);
  os << "char accuracy: " << buffer << '\n';
  std::snprintf(buffer, sizeof(buffer), "%.4f", report.char_accuracy_failures);
  os << "char accuracy (failed rows only): " << buffer << '\n';
  if (report.encode_failures > 0) {
    os << "unencodable rows (counted as failures): " << report.encode_failures << '\n';
  }
  os << "per suffix:\n";
  for (const auto& [suffix, tally] : report.per_suffix) {
    os << "  " << suffix;
    for (std::size_t i = suffix.size(); i < 12; ++i) os << ' ';
    os << format_result_cell(tally.successes, tally.total) << '\n';
  }
  return os.str();
}

std::string format_report_kv(const eval_report& report) {
  std::ostringstream os;
  os << "task=" << corpus::to_string(report.category) << "_"
     << corpus::to_string(report.direction) << '\n';
  os << "successes=" << report.successes << '\n';
  os << "total=" << report.total << '\n';
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.6f", report.accuracy);
  os << "accuracy=" << buffer << '\n';
  std::snprintf(buffer, sizeof(buffer), "%.6f", report.char_accuracy);
  os << "char_accuracy=" << buffer << '\n';
  std::snprintf(buffer, sizeof(buffer), "%.6f", report.char_accuracy_failures);
  os << "char_accuracy_failures=" << buffer << '\n';
  os << "encode_failures=" << report.encode_failures << '\n';
  for (const auto& [suffix, tally] : report.per_suffix) {
    os << "suffix." << suffix << "=" << tally.successes << "/" << tally.total << '\n';
  }
  return os.str();
}

}  // namespace pratyaya::eval
