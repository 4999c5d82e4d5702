#include "pratyaya/seq2seq.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace pratyaya::seq2seq {

non_finite_loss::non_finite_loss(int epoch_no, int batch_no)
    : error("loss became non-finite at epoch " + std::to_string(epoch_no) + ", batch " +
            std::to_string(batch_no) + "; check learning rate and data"),
      epoch(epoch_no),
      batch(batch_no) {}

namespace {

// Same Fisher-Yates recipe the corpus split uses.
template <typename T>
void shuffle_indices(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i-- > 1;) {
    std::swap(items[i], items[static_cast<std::size_t>(rng() % (i + 1))]);
  }
}

struct encoded_set {
  std::vector<std::vector<int>> sources;
  std::vector<std::vector<int>> targets;
};

encoded_set encode_records(const std::vector<corpus::derivation_record>& records,
                           corpus::task_direction direction, const corpus::vocabulary& vocab,
                           const model_config& config) {
  encoded_set set;
  set.sources.reserve(records.size());
  set.targets.reserve(records.size());
  const auto source_max = static_cast<std::size_t>(config.source_max);
  const auto target_max = static_cast<std::size_t>(config.target_max);
  for (const auto& record : records) {
    corpus::encoded_pair pair =
        direction == corpus::task_direction::formation
            ? corpus::encode_formation_pair(record, vocab, source_max, target_max)
            : corpus::encode_split_pair(record, vocab, source_max, target_max);
    set.sources.push_back(std::move(pair.source_indices));
    set.targets.push_back(std::move(pair.target_indices));
  }
  return set;
}

// Weighted mean loss over a full pass without gradient recording.
double evaluate_loss(const model_params<float>& params, const model_config& config,
                     const encoded_set& set, const std::vector<std::size_t>& rows,
                     int pad_index, std::size_t batch_size) {
  double total = 0;
  std::size_t chars = 0;
  for (std::size_t begin = 0; begin < rows.size(); begin += batch_size) {
    const std::size_t end = std::min(begin + batch_size, rows.size());
    std::vector<std::vector<int>> sources, targets;
    sources.reserve(end - begin);
    targets.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      sources.push_back(set.sources[rows[i]]);
      targets.push_back(set.targets[rows[i]]);
    }
    autograd::tape<float> t(false);
    auto result = forward_teacher_forced_batch<float>(t, params, config, sources, targets,
                                                      pad_index);
    total += static_cast<double>(result.loss->value[0]) *
             static_cast<double>(result.predicted_chars);
    chars += result.predicted_chars;
  }
  return chars == 0 ? 0.0 : total / static_cast<double>(chars);
}

}  // namespace

train_result train(const std::vector<corpus::derivation_record>& records,
                   corpus::task_direction direction, const corpus::vocabulary& vocab,
                   const model_config& mconfig, const train_config& tconfig,
                   std::ostream* progress) {
  if (records.empty()) throw corpus::empty_corpus();
  mconfig.validate();
  if (vocab.size() != mconfig.vocab_size) {
    throw error("vocabulary size " + std::to_string(vocab.size()) +
                " does not match model config " + std::to_string(mconfig.vocab_size));
  }
  if (tconfig.batch_size < 1 || tconfig.epochs < 1) {
    throw error("batch_size and epochs must be at least 1");
  }
  if (records.size() < static_cast<std::size_t>(tconfig.batch_size)) {
    throw error("need at least one full batch of records (" +
                std::to_string(tconfig.batch_size) + "), got " + std::to_string(records.size()));
  }

  const auto batch_size = static_cast<std::size_t>(tconfig.batch_size);
  const int pad_index = vocab.pad_index();
  encoded_set set = encode_records(records, direction, vocab, mconfig);

  train_result result;
  result.params = init_params<float>(mconfig, tconfig.seed, tconfig.init_scale);
  auto trainable = result.params.all();
  autograd::adam_state<float> adam(trainable, tconfig.adam);

  // Separate stream from the init draws so adding a parameter later does
  // not perturb the data order.
  std::mt19937_64 order_rng(tconfig.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> rows(records.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  shuffle_indices(rows, order_rng);

  std::size_t validation_count = static_cast<std::size_t>(
      std::floor(tconfig.validation_fraction * static_cast<double>(rows.size()) + 1e-9));
  if (validation_count >= rows.size()) validation_count = rows.size() - 1;
  std::vector<std::size_t> validation_rows(rows.begin(),
                                           rows.begin() + static_cast<std::ptrdiff_t>(validation_count));
  std::vector<std::size_t> train_rows(rows.begin() + static_cast<std::ptrdiff_t>(validation_count),
                                      rows.end());

  result.best_validation_loss = std::numeric_limits<double>::infinity();
  model_params<float> best = clone_params(result.params);

  for (int epoch = 1; epoch <= tconfig.epochs; ++epoch) {
    shuffle_indices(train_rows, order_rng);
    double epoch_loss = 0;
    std::size_t epoch_chars = 0;
    int batch_no = 0;
    for (std::size_t begin = 0; begin < train_rows.size(); begin += batch_size, ++batch_no) {
      const std::size_t end = std::min(begin + batch_size, train_rows.size());
      std::vector<std::vector<int>> sources, targets;
      sources.reserve(end - begin);
      targets.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        sources.push_back(set.sources[train_rows[i]]);
        targets.push_back(set.targets[train_rows[i]]);
      }

      autograd::zero_grads(trainable);
      autograd::tape<float> t;
      auto forward = forward_teacher_forced_batch<float>(t, result.params, mconfig, sources,
                                                         targets, pad_index);
      const float loss = forward.loss->value[0];
      if (!std::isfinite(loss)) throw non_finite_loss(epoch, batch_no);
      t.backward(forward.loss);
      adam.step();

      epoch_loss += static_cast<double>(loss) * static_cast<double>(forward.predicted_chars);
      epoch_chars += forward.predicted_chars;
    }

    epoch_stats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_chars == 0 ? 0.0 : epoch_loss / static_cast<double>(epoch_chars);
    // With no validation slice the training loss stands in, so "best
    // epoch" tracking still works on tiny corpora.
    stats.validation_loss =
        validation_rows.empty()
            ? stats.train_loss
            : evaluate_loss(result.params, mconfig, set, validation_rows, pad_index, batch_size);
    result.history.push_back(stats);

    if (stats.validation_loss < result.best_validation_loss) {
      result.best_validation_loss = stats.validation_loss;
      result.best_epoch = epoch;
      best = clone_params(result.params);
    }

    if (progress != nullptr) {
      (*progress) << "epoch " << epoch << "/" << tconfig.epochs << "  train " << stats.train_loss
                  << "  val " << stats.validation_loss << '\n';
    }
  }

  result.params = std::move(best);
  return result;
}

namespace {

std::vector<int> encode_source_string(const std::string& source, const corpus::vocabulary& vocab,
                                      const model_config& config) {
  if (source.size() > static_cast<std::size_t>(config.source_max)) {
    throw corpus::length_overflow("source", source.size(),
                                  static_cast<std::size_t>(config.source_max));
  }
  std::vector<int> indices;
  indices.reserve(static_cast<std::size_t>(config.source_max));
  for (char c : source) indices.push_back(vocab.index_of(c));
  indices.resize(static_cast<std::size_t>(config.source_max), vocab.pad_index());
  return indices;
}

}  // namespace

std::string predict_string(const model_params<float>& params, const model_config& config,
                           const corpus::vocabulary& vocab, const std::string& source) {
  auto indices = encode_source_string(source, vocab, config);
  auto decoded = greedy_decode<float>(params, config, indices, vocab,
                                      static_cast<std::size_t>(config.target_max) + 2);
  return corpus::decode_output_string(decoded, vocab);
}

std::string predict_formation(const model_params<float>& params, const model_config& config,
                              const corpus::vocabulary& vocab, const std::string& stem,
                              const std::string& suffix_name) {
  return predict_string(params, config, vocab, stem + join_char + suffix_name);
}

split_prediction predict_split(const model_params<float>& params, const model_config& config,
                               const corpus::vocabulary& vocab, const std::string& pada) {
  split_prediction prediction;
  prediction.raw = predict_string(params, config, vocab, pada);
  const std::size_t plus = prediction.raw.find(join_char);
  if (plus == std::string::npos) {
    prediction.stem = prediction.raw;
    prediction.malformed = true;
  } else {
    prediction.stem = prediction.raw.substr(0, plus);
    prediction.suffix_name = prediction.raw.substr(plus + 1);
  }
  return prediction;
}

}  // namespace pratyaya::seq2seq
