#include "pratyaya/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "pratyaya/checkpoint.hpp"
#include "pratyaya/corpus.hpp"
#include "pratyaya/eval.hpp"
#include "pratyaya/seq2seq.hpp"
#include "pratyaya/translit.hpp"

namespace pratyaya::cli {

std::string default_data_dir() {
  if (const char* env = std::getenv("PRATYAYA_DATA")) return env;
  return PRATYAYA_SOURCE_DATA_DIR;
}

namespace {

constexpr int exit_ok = 0;
constexpr int exit_runtime = 1;
constexpr int exit_usage = 2;

// Everything one run needs; flags override config-file values override
// these defaults (CLI11 applies config values only to options not set on
// the command line).
struct run_options {
  std::string corpus_path;
  std::string category = "krit";
  std::string direction = "formation";
  std::vector<std::string> excluded;
  bool keep_all_suffixes = false;
  double fraction = 0.8;
  std::uint64_t seed = 0;  // drives the corpus split and training
  int latent_dim = 128;
  int batch_size = 32;
  int epochs = 70;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  double validation_fraction = 0.1;
  double init_scale = 0.05;
  int source_max = 0;  // 0 = compute from the training partition
  int target_max = 0;
  std::string checkpoint_path;
  std::string history_path;
  std::string report_path;
  std::string report_kv_path;
  std::string reference_path;
  std::string table_path;
  double min_accuracy = 0.0;
  std::string char_metric = "positional";
  bool itrans = false;
  bool machine = false;
};

translit::transliteration_table load_table(const run_options& options) {
  std::string path = options.table_path.empty()
                         ? default_data_dir() + "/itrans_slp1.tsv"
                         : options.table_path;
  return translit::transliteration_table::load(path);
}

std::set<std::string> excluded_suffixes(const run_options& options, bool flag_given) {
  if (options.keep_all_suffixes) return {};
  if (flag_given) return {options.excluded.begin(), options.excluded.end()};
  if (options.category == "krit") return corpus::default_excluded_krit_suffixes();
  return {};
}

std::vector<corpus::derivation_record> load_and_filter(
    const translit::transliteration_table& table, const run_options& options,
    const std::set<std::string>& excluded) {
  auto records = corpus::load_corpus(table, options.corpus_path);
  records = corpus::filter_category(records, corpus::category_from_string(options.category));
  return corpus::filter_krit_suffixes(records, excluded);
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw config_error("cannot write: " + path);
  out << contents;
}

// Injects "--key=value" tokens for config-file keys that are absent from
// the command line. Lines are key=value; blanks and '#' comments ignored.
void apply_config_file(std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      break;
    }
  }
  if (path.empty()) return;

  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open config file: " + path);

  auto given = [&](const std::string& flag) {
    for (const auto& arg : args) {
      if (arg == flag || arg.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::size_t equals = line.find('=');
    if (equals == std::string::npos || equals == 0) {
      throw config_error(path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    const std::string flag = "--" + line.substr(0, equals);
    if (!given(flag)) args.push_back(flag + "=" + line.substr(equals + 1));
  }
}

int cmd_train(const run_options& options, bool exclude_given, std::ostream& output,
              std::ostream& errors) {
  auto table = load_table(options);
  auto excluded = excluded_suffixes(options, exclude_given);
  auto records = load_and_filter(table, options, excluded);
  if (records.empty()) throw corpus::empty_corpus();

  auto split = corpus::make_split(records, options.fraction, options.seed);
  auto vocab = corpus::build_vocabulary(split.train);
  const auto direction = corpus::direction_from_string(options.direction);

  seq2seq::model_config mconfig;
  mconfig.latent_dim = options.latent_dim;
  mconfig.vocab_size = vocab.size();
  auto maxima = corpus::compute_maxima(split.train, direction);
  mconfig.source_max = options.source_max > 0 ? options.source_max
                                              : static_cast<int>(maxima.source_max);
  mconfig.target_max = options.target_max > 0 ? options.target_max
                                              : static_cast<int>(maxima.target_max);

  seq2seq::train_config tconfig;
  tconfig.batch_size = options.batch_size;
  tconfig.epochs = options.epochs;
  tconfig.seed = options.seed;
  tconfig.adam.learning_rate = static_cast<float>(options.learning_rate);
  tconfig.adam.beta1 = static_cast<float>(options.beta1);
  tconfig.adam.beta2 = static_cast<float>(options.beta2);
  tconfig.adam.epsilon = static_cast<float>(options.epsilon);
  tconfig.validation_fraction = options.validation_fraction;
  tconfig.init_scale = options.init_scale;

  errors << "training " << split.train.size() << " records (" << split.test.size()
         << " held out), vocabulary " << vocab.size() << ", source_max " << mconfig.source_max
         << ", target_max " << mconfig.target_max << "\n";
  auto result = seq2seq::train(split.train, direction, vocab, mconfig, tconfig, &errors);

  seq2seq::checkpoint ckpt;
  ckpt.config = mconfig;
  ckpt.vocab = vocab;
  ckpt.params = result.params;
  ckpt.metadata.direction = options.direction;
  ckpt.metadata.category = options.category;
  ckpt.metadata.split_seed = options.seed;
  ckpt.metadata.split_fraction = options.fraction;
  ckpt.metadata.record_count = records.size();
  ckpt.metadata.excluded_suffixes.assign(excluded.begin(), excluded.end());
  ckpt.metadata.train_seed = options.seed;
  ckpt.metadata.epochs_run = static_cast<int>(result.history.size());
  ckpt.metadata.best_epoch = result.best_epoch;
  ckpt.metadata.final_train_loss = result.history.back().train_loss;
  ckpt.metadata.final_validation_loss = result.history.back().validation_loss;
  seq2seq::save_checkpoint(options.checkpoint_path, ckpt);

  std::string history_path = options.history_path.empty()
                                 ? options.checkpoint_path + ".history.tsv"
                                 : options.history_path;
  std::ostringstream history;
  history << "# epoch\ttrain_loss\tvalidation_loss\n";
  for (const auto& stats : result.history) {
    history << stats.epoch << '\t' << stats.train_loss << '\t' << stats.validation_loss << '\n';
  }
  write_text_file(history_path, history.str());

  output << "checkpoint: " << options.checkpoint_path << "\n";
  output << "history: " << history_path << "\n";
  output << "best epoch: " << result.best_epoch << " (validation loss "
         << result.best_validation_loss << ")\n";
  return exit_ok;
}

int cmd_predict(const run_options& options, std::istream& input, std::ostream& output,
                std::ostream& errors) {
  auto ckpt = seq2seq::load_checkpoint(options.checkpoint_path);
  const auto direction = corpus::direction_from_string(ckpt.metadata.direction);
  std::optional<translit::transliteration_table> table;
  if (options.itrans) table = load_table(options);

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(input, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    try {
      std::string source = line;
      if (table) source = translit::convert_line(*table, line, /*to_slp1=*/true);
      if (source.empty()) {
        output << "\n";
        continue;
      }
      if (direction == corpus::task_direction::formation) {
        output << seq2seq::predict_string(ckpt.params, ckpt.config, ckpt.vocab, source) << "\n";
      } else {
        auto prediction = seq2seq::predict_split(ckpt.params, ckpt.config, ckpt.vocab, source);
        output << prediction.raw << "\n";
        if (prediction.malformed) {
          errors << "line " << line_no << ": output has no '+', treating whole string as stem\n";
        }
      }
    } catch (const error& e) {
      // keep stdout line-aligned with stdin; details go to stderr
      output << "\n";
      errors << "line " << line_no << ": " << e.what() << "\n";
    }
  }
  return exit_ok;
}

eval::eval_report evaluate_checkpoint(const seq2seq::checkpoint& ckpt,
                                      const std::vector<corpus::derivation_record>& test,
                                      eval::char_metric metric) {
  const auto direction = corpus::direction_from_string(ckpt.metadata.direction);
  eval::eval_report report;
  report.direction = direction;
  report.category = corpus::category_from_string(ckpt.metadata.category);
  report.total = test.size();

  std::vector<std::string> predictions, golds;
  std::vector<std::string> failed_predictions, failed_golds;
  predictions.reserve(test.size());
  golds.reserve(test.size());
  for (const auto& record : test) {
    auto& tally = report.per_suffix[record.suffix_name];
    ++tally.total;
    const std::string gold = direction == corpus::task_direction::formation
                                 ? record.pada
                                 : record.stem + join_char + record.suffix_name;
    golds.push_back(gold);
    bool success = false;
    std::string predicted;
    try {
      if (direction == corpus::task_direction::formation) {
        predicted = seq2seq::predict_formation(ckpt.params, ckpt.config, ckpt.vocab, record.stem,
                                               record.suffix_name);
        success = predicted == gold;
      } else {
        auto prediction = seq2seq::predict_split(ckpt.params, ckpt.config, ckpt.vocab,
                                                 record.pada);
        predicted = prediction.raw;
        success = eval::split_success(
            {prediction.stem, prediction.suffix_name, prediction.malformed},
            {record.stem, record.suffix_name, false});
      }
    } catch (const corpus::unknown_character&) {
      ++report.encode_failures;
    } catch (const corpus::length_overflow&) {
      ++report.encode_failures;
    }
    predictions.push_back(predicted);
    if (success) {
      ++report.successes;
      ++tally.successes;
    } else {
      failed_predictions.push_back(predicted);
      failed_golds.push_back(gold);
    }
  }

  report.accuracy = report.total == 0 ? 0.0
                                      : static_cast<double>(report.successes) /
                                            static_cast<double>(report.total);
  auto score = metric == eval::char_metric::positional ? eval::char_accuracy
                                                       : eval::char_accuracy_levenshtein;
  report.char_accuracy = score(predictions, golds);
  report.char_accuracy_failures =
      failed_golds.empty() ? 1.0 : score(failed_predictions, failed_golds);
  return report;
}

int cmd_evaluate(const run_options& options, bool seed_given, bool fraction_given,
                 std::ostream& output, std::ostream& errors) {
  auto ckpt = seq2seq::load_checkpoint(options.checkpoint_path);

  if (seed_given && options.seed != ckpt.metadata.split_seed) {
    throw split_mismatch("requested split seed " + std::to_string(options.seed) +
                         " but the checkpoint was trained with seed " +
                         std::to_string(ckpt.metadata.split_seed));
  }
  if (fraction_given && options.fraction != ckpt.metadata.split_fraction) {
    throw split_mismatch("requested split fraction does not match the checkpoint");
  }

  auto table = load_table(options);
  run_options corpus_options = options;
  corpus_options.category = ckpt.metadata.category;
  std::set<std::string> excluded(ckpt.metadata.excluded_suffixes.begin(),
                                 ckpt.metadata.excluded_suffixes.end());
  auto records = load_and_filter(table, corpus_options, excluded);
  if (records.size() != ckpt.metadata.record_count) {
    throw split_mismatch("corpus has " + std::to_string(records.size()) +
                         " records after filtering, checkpoint expects " +
                         std::to_string(ckpt.metadata.record_count) +
                         "; the test partition would differ");
  }

  auto split = corpus::make_split(records, ckpt.metadata.split_fraction,
                                  ckpt.metadata.split_seed);
  errors << "evaluating " << split.test.size() << " held-out records\n";
  auto report = evaluate_checkpoint(ckpt, split.test,
                                    eval::char_metric_from_string(options.char_metric));

  output << eval::format_report(report);

  const std::string task = corpus::to_string(report.category) == "krit"
                               ? "kridanta_" + corpus::to_string(report.direction)
                               : "taddhitanta_" + corpus::to_string(report.direction);
  std::vector<eval::benchmark_row> computed{
      {"this run", task, eval::format_result_cell(report.successes, report.total)}};
  std::vector<eval::benchmark_row> reference;
  std::string reference_path = options.reference_path.empty()
                                   ? default_data_dir() + "/reference_results.tsv"
                                   : options.reference_path;
  try {
    for (auto& row : eval::load_reference_rows(reference_path)) {
      if (row.task == task) reference.push_back(row);
    }
  } catch (const config_error&) {
    // reference table is optional display data
  }
  output << "\n" << eval::benchmark_report(computed, reference);

  if (!options.report_path.empty()) {
    write_text_file(options.report_path,
                    eval::format_report(report) + "\n" +
                        eval::benchmark_report(computed, reference));
  }
  if (!options.report_kv_path.empty()) {
    write_text_file(options.report_kv_path, eval::format_report_kv(report));
  }

  if (report.accuracy < options.min_accuracy) {
    errors << "accuracy " << report.accuracy << " below required floor "
           << options.min_accuracy << "\n";
    return exit_runtime;
  }
  return exit_ok;
}

int cmd_stats(const run_options& options, std::ostream& output) {
  auto table = load_table(options);
  auto records = corpus::load_corpus(table, options.corpus_path);
  auto stats = corpus::corpus_stats(records);
  output << (options.machine ? corpus::format_stats_kv(stats) : corpus::format_stats(stats));
  return exit_ok;
}

int cmd_translit(const run_options& options, std::istream& input, std::ostream& output,
                 std::ostream& errors) {
  auto table = load_table(options);
  bool to_slp1;
  if (options.direction == "itrans-slp1") {
    to_slp1 = true;
  } else if (options.direction == "slp1-itrans") {
    to_slp1 = false;
  } else {
    throw config_error("translit direction must be itrans-slp1 or slp1-itrans, got \"" +
                       options.direction + "\"");
  }

  std::string line;
  std::size_t line_no = 0;
  bool any_failed = false;
  while (std::getline(input, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    try {
      output << translit::convert_line(table, line, to_slp1) << "\n";
    } catch (const error& e) {
      any_failed = true;
      output << "\n";
      errors << "line " << line_no << ": " << e.what() << "\n";
    }
  }
  return any_failed ? exit_runtime : exit_ok;
}

}  // namespace

int run(std::vector<std::string> args, std::istream& input, std::ostream& output,
        std::ostream& errors) {
  CLI::App app{"Sanskrit derivative-noun formation and splitting"};
  app.require_subcommand(1);

  run_options options;

  std::string config_path;
  auto add_table = [&](CLI::App* sub) {
    sub->add_option("--table", options.table_path,
                    "ITRANS/SLP1 mapping table (default: data dir)");
  };
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path,
                    "flat key=value config file; flags override file values");
  };

  auto* train = app.add_subcommand("train", "train a model from a corpus TSV");
  train->add_option("--corpus", options.corpus_path, "corpus TSV path")->required();
  train->add_option("--category", options.category, "krit or taddhit")
      ->check(CLI::IsMember({"krit", "taddhit"}));
  train->add_option("--direction", options.direction, "formation or split")
      ->check(CLI::IsMember({"formation", "split"}));
  auto* exclude_option = train->add_option("--exclude", options.excluded,
                                           "suffix names to drop (default for krit: Satf~,SAnac)")
                             ->delimiter(',');
  train->add_flag("--keep-all-suffixes", options.keep_all_suffixes,
                  "train on every suffix, including the default exclusions");
  train->add_option("--fraction", options.fraction, "train fraction of the split (default 0.8)");
  train->add_option("--seed", options.seed, "seed for split, init and batch order (default 0)");
  train->add_option("--latent-dim", options.latent_dim, "LSTM hidden size (default 128)");
  train->add_option("--batch-size", options.batch_size, "default 32");
  train->add_option("--epochs", options.epochs, "default 70");
  train->add_option("--learning-rate", options.learning_rate, "Adam learning rate (default 1e-3)");
  train->add_option("--beta1", options.beta1, "Adam beta1 (default 0.9)");
  train->add_option("--beta2", options.beta2, "Adam beta2 (default 0.999)");
  train->add_option("--epsilon", options.epsilon, "Adam epsilon (default 1e-7)");
  train->add_option("--validation-fraction", options.validation_fraction,
                    "validation share of the training portion (default 0.1)");
  train->add_option("--init-scale", options.init_scale, "uniform init half-width (default 0.05)");
  train->add_option("--source-max", options.source_max,
                    "pin the source length (default: computed from training data)");
  train->add_option("--target-max", options.target_max,
                    "pin the target length (default: computed from training data)");
  train->add_option("--checkpoint", options.checkpoint_path, "output checkpoint path")
      ->required();
  train->add_option("--history", options.history_path,
                    "per-epoch loss TSV (default: <checkpoint>.history.tsv)");
  add_table(train);
  add_config(train);

  auto* predict = app.add_subcommand("predict", "read inputs from stdin, one per line");
  predict->add_option("--checkpoint", options.checkpoint_path, "trained checkpoint")->required();
  predict->add_flag("--itrans", options.itrans, "inputs are ITRANS; convert to SLP1 first");
  add_table(predict);
  add_config(predict);

  auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint on its held-out split");
  evaluate->add_option("--checkpoint", options.checkpoint_path, "trained checkpoint")->required();
  evaluate->add_option("--corpus", options.corpus_path, "corpus TSV path")->required();
  auto* eval_seed = evaluate->add_option("--seed", options.seed,
                                         "must match the checkpoint's split seed");
  auto* eval_fraction = evaluate->add_option("--fraction", options.fraction,
                                             "must match the checkpoint's split fraction");
  evaluate->add_option("--min-accuracy", options.min_accuracy,
                       "exit nonzero below this accuracy (default 0)");
  evaluate->add_option("--char-metric", options.char_metric,
                       "positional (default) or levenshtein")
      ->check(CLI::IsMember({"positional", "levenshtein"}));
  evaluate->add_option("--report", options.report_path, "write the text report here");
  evaluate->add_option("--report-kv", options.report_kv_path,
                       "write the machine-readable report here");
  evaluate->add_option("--reference", options.reference_path,
                       "published reference rows TSV (default: data dir)");
  add_table(evaluate);
  add_config(evaluate);

  auto* stats = app.add_subcommand("stats", "per-suffix corpus counts");
  stats->add_option("--corpus", options.corpus_path, "corpus TSV path")->required();
  stats->add_flag("--machine", options.machine, "key=value output");
  add_table(stats);
  add_config(stats);

  auto* translit_cmd = app.add_subcommand("translit", "filter stdin through the mapping table");
  translit_cmd
      ->add_option("--direction", options.direction, "itrans-slp1 or slp1-itrans")
      ->required();
  add_table(translit_cmd);
  add_config(translit_cmd);

  // Flat key=value config file, applied by hand so precedence is exactly
  // flags > file > defaults: keys already present on the command line are
  // not injected.
  try {
    apply_config_file(args);
  } catch (const config_error& e) {
    errors << "error: " << e.what() << "\n";
    return exit_usage;
  }

  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    std::ostringstream sink;
    const int code = app.exit(e, output, sink);
    if (!sink.str().empty()) errors << sink.str();
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (train->parsed()) {
      return cmd_train(options, exclude_option->count() > 0, output, errors);
    }
    if (predict->parsed()) return cmd_predict(options, input, output, errors);
    if (evaluate->parsed()) {
      return cmd_evaluate(options, eval_seed->count() > 0, eval_fraction->count() > 0, output,
                          errors);
    }
    if (stats->parsed()) return cmd_stats(options, output);
    if (translit_cmd->parsed()) return cmd_translit(options, input, output, errors);
  } catch (const config_error& e) {
    errors << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception& e) {
    errors << "error: " << e.what() << "\n";
    return exit_runtime;
  }
  return exit_usage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  args.reserve(static_cast<std::size_t>(argc > 0 ? argc - 1 : 0));
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(std::move(args), std::cin, std::cout, std::cerr);
}

}  // namespace pratyaya::cli
