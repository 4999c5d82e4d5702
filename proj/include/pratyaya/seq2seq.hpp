#pragma once

// Character-level encoder-decoder: bidirectional LSTM encoder over the
// source characters, additive attention queried by the decoder state,
// single-layer LSTM decoder, shared input/output vocabulary. The forward
// code is templated on the scalar type so the double-precision gradient
// verification path exercises exactly the graph that training runs.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "pratyaya/autograd.hpp"
#include "pratyaya/corpus.hpp"

namespace pratyaya::seq2seq {

struct model_config {
  int latent_dim = 128;
  int vocab_size = 0;
  int source_max = 0;
  int target_max = 0;
  std::string attention_kind = "additive";

  void validate() const {
    if (latent_dim <= 0) throw error("latent_dim must be positive");
    if (vocab_size < 5) throw error("vocab_size must cover content plus 4 control characters");
    if (source_max <= 0 || target_max <= 0) throw error("sequence maxima must be positive");
    if (attention_kind != "additive") {
      throw error("unsupported attention kind: " + attention_kind);
    }
  }
};

// All trainable arrays. Gate layout in every fused LSTM matrix is
// [input | forget | candidate | output], each block latent_dim wide.
// The decoder input weights are stored as two blocks (previous character,
// attended context) so the character half can be row-gathered instead of
// multiplied against a one-hot matrix.
template <typename S>
struct model_params {
  autograd::tensor<S> enc_fwd_w_char, enc_fwd_w_state, enc_fwd_bias;
  autograd::tensor<S> enc_bwd_w_char, enc_bwd_w_state, enc_bwd_bias;
  autograd::tensor<S> bridge_h_w, bridge_h_bias, bridge_c_w, bridge_c_bias;
  autograd::tensor<S> attn_query_w, attn_key_w, attn_score_v;
  autograd::tensor<S> dec_w_char, dec_w_ctx, dec_w_state, dec_bias;
  autograd::tensor<S> out_w, out_bias;

  std::vector<std::pair<std::string, autograd::tensor<S>>> named() const {
    return {
        {"enc_fwd.w_char", enc_fwd_w_char},
        {"enc_fwd.w_state", enc_fwd_w_state},
        {"enc_fwd.bias", enc_fwd_bias},
        {"enc_bwd.w_char", enc_bwd_w_char},
        {"enc_bwd.w_state", enc_bwd_w_state},
        {"enc_bwd.bias", enc_bwd_bias},
        {"bridge_h.w", bridge_h_w},
        {"bridge_h.bias", bridge_h_bias},
        {"bridge_c.w", bridge_c_w},
        {"bridge_c.bias", bridge_c_bias},
        {"attention.query_w", attn_query_w},
        {"attention.key_w", attn_key_w},
        {"attention.score_v", attn_score_v},
        {"decoder.w_char", dec_w_char},
        {"decoder.w_ctx", dec_w_ctx},
        {"decoder.w_state", dec_w_state},
        {"decoder.bias", dec_bias},
        {"output.w", out_w},
        {"output.bias", out_bias},
    };
  }

  std::vector<autograd::tensor<S>> all() const {
    std::vector<autograd::tensor<S>> tensors;
    for (auto& [name, t] : named()) tensors.push_back(t);
    return tensors;
  }
};

// Weights are uniform(-init_scale, init_scale), drawn in named() order from
// mt19937_64(seed); biases start at zero except the forget-gate block of
// both LSTMs, which starts at one.
template <typename S>
model_params<S> init_params(const model_config& config, std::uint64_t seed, double init_scale) {
  config.validate();
  const auto latent = static_cast<std::size_t>(config.latent_dim);
  const auto vocab = static_cast<std::size_t>(config.vocab_size);
  const std::size_t gates = 4 * latent;

  model_params<S> p;
  auto weight = [](std::vector<std::size_t> shape) {
    return autograd::make_tensor<S>(std::move(shape), /*requires_grad=*/true);
  };
  p.enc_fwd_w_char = weight({vocab, gates});
  p.enc_fwd_w_state = weight({latent, gates});
  p.enc_fwd_bias = weight({gates});
  p.enc_bwd_w_char = weight({vocab, gates});
  p.enc_bwd_w_state = weight({latent, gates});
  p.enc_bwd_bias = weight({gates});
  p.bridge_h_w = weight({2 * latent, latent});
  p.bridge_h_bias = weight({latent});
  p.bridge_c_w = weight({2 * latent, latent});
  p.bridge_c_bias = weight({latent});
  p.attn_query_w = weight({latent, latent});
  p.attn_key_w = weight({2 * latent, latent});
  p.attn_score_v = weight({latent, 1});
  p.dec_w_char = weight({vocab, gates});
  p.dec_w_ctx = weight({2 * latent, gates});
  p.dec_w_state = weight({latent, gates});
  p.dec_bias = weight({gates});
  p.out_w = weight({latent, vocab});
  p.out_bias = weight({vocab});

  std::mt19937_64 rng(seed);
  for (auto& [name, t] : p.named()) {
    if (t->shape.size() == 1) continue;  // biases
    autograd::fill_uniform(t, rng, init_scale);
  }
  for (auto* bias : {&p.enc_fwd_bias, &p.enc_bwd_bias, &p.dec_bias}) {
    for (std::size_t i = latent; i < 2 * latent; ++i) (*bias)->value[i] = S(1);
  }
  return p;
}

template <typename S>
model_params<S> clone_params(const model_params<S>& params) {
  model_params<S> copy = params;
  auto duplicate = [](autograd::tensor<S>& t) {
    auto fresh = autograd::make_tensor<S>(t->shape, t->requires_grad);
    fresh->value = t->value;
    t = fresh;
  };
  duplicate(copy.enc_fwd_w_char);
  duplicate(copy.enc_fwd_w_state);
  duplicate(copy.enc_fwd_bias);
  duplicate(copy.enc_bwd_w_char);
  duplicate(copy.enc_bwd_w_state);
  duplicate(copy.enc_bwd_bias);
  duplicate(copy.bridge_h_w);
  duplicate(copy.bridge_h_bias);
  duplicate(copy.bridge_c_w);
  duplicate(copy.bridge_c_bias);
  duplicate(copy.attn_query_w);
  duplicate(copy.attn_key_w);
  duplicate(copy.attn_score_v);
  duplicate(copy.dec_w_char);
  duplicate(copy.dec_w_ctx);
  duplicate(copy.dec_w_state);
  duplicate(copy.dec_bias);
  duplicate(copy.out_w);
  duplicate(copy.out_bias);
  return copy;
}

namespace detail {

template <typename S>
struct lstm_state {
  autograd::tensor<S> h, c;
};

template <typename S>
lstm_state<S> lstm_step(autograd::tape<S>& t, const autograd::tensor<S>& gates_x,
                        const autograd::tensor<S>& w_state, const autograd::tensor<S>& bias,
                        const lstm_state<S>& prev, std::size_t latent) {
  auto gates = t.add_row_bias(t.add(gates_x, t.matmul(prev.h, w_state)), bias);
  auto input_gate = t.sigmoid(t.slice_cols(gates, 0, latent));
  auto forget_gate = t.sigmoid(t.slice_cols(gates, latent, 2 * latent));
  auto candidate = t.tanh(t.slice_cols(gates, 2 * latent, 3 * latent));
  auto output_gate = t.sigmoid(t.slice_cols(gates, 3 * latent, 4 * latent));
  auto cell = t.add(t.mul(forget_gate, prev.c), t.mul(input_gate, candidate));
  auto hidden = t.mul(output_gate, t.tanh(cell));
  return {hidden, cell};
}

}  // namespace detail

// One encoded batch pass: per-position outputs, precomputed attention
// keys, the bridged decoder start state and the source padding mask.
template <typename S>
struct encoder_run {
  std::vector<autograd::tensor<S>> outputs;  // [source_len] of [batch, 2*latent]
  std::vector<autograd::tensor<S>> keys;     // [source_len] of [batch, latent]
  detail::lstm_state<S> start;               // each [batch, latent]
  std::vector<unsigned char> source_mask;    // [batch * source_len]
  std::size_t batch = 0;
  std::size_t source_len = 0;
};

template <typename S>
encoder_run<S> encode_batch(autograd::tape<S>& t, const model_params<S>& params,
                            const model_config& config,
                            const std::vector<std::vector<int>>& sources, int pad_index) {
  if (sources.empty()) throw corpus::empty_corpus();
  const std::size_t batch = sources.size();
  const std::size_t source_len = sources[0].size();
  const auto latent = static_cast<std::size_t>(config.latent_dim);
  for (const auto& row : sources) {
    if (row.size() != source_len) throw autograd::shape_mismatch("ragged source batch");
  }

  std::vector<std::vector<int>> columns(source_len, std::vector<int>(batch));
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t p = 0; p < source_len; ++p) columns[p][b] = sources[b][p];
  }

  auto zeros = [&] { return t.constant({batch, latent}, std::vector<S>(batch * latent, S(0))); };
  detail::lstm_state<S> fwd{zeros(), zeros()};
  detail::lstm_state<S> bwd{zeros(), zeros()};
  std::vector<autograd::tensor<S>> fwd_h(source_len), bwd_h(source_len);

  for (std::size_t p = 0; p < source_len; ++p) {
    auto gates_x = t.gather_rows(params.enc_fwd_w_char, columns[p]);
    fwd = detail::lstm_step(t, gates_x, params.enc_fwd_w_state, params.enc_fwd_bias, fwd, latent);
    fwd_h[p] = fwd.h;
  }
  for (std::size_t p = source_len; p-- > 0;) {
    auto gates_x = t.gather_rows(params.enc_bwd_w_char, columns[p]);
    bwd = detail::lstm_step(t, gates_x, params.enc_bwd_w_state, params.enc_bwd_bias, bwd, latent);
    bwd_h[p] = bwd.h;
  }

  encoder_run<S> run;
  run.batch = batch;
  run.source_len = source_len;
  run.outputs.reserve(source_len);
  run.keys.reserve(source_len);
  for (std::size_t p = 0; p < source_len; ++p) {
    auto joined = t.concat_cols({fwd_h[p], bwd_h[p]});
    run.outputs.push_back(joined);
    run.keys.push_back(t.matmul(joined, params.attn_key_w));
  }

  auto final_h = t.concat_cols({fwd.h, bwd.h});
  auto final_c = t.concat_cols({fwd.c, bwd.c});
  run.start.h = t.add_row_bias(t.matmul(final_h, params.bridge_h_w), params.bridge_h_bias);
  run.start.c = t.add_row_bias(t.matmul(final_c, params.bridge_c_w), params.bridge_c_bias);

  run.source_mask.resize(batch * source_len);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t p = 0; p < source_len; ++p) {
      run.source_mask[b * source_len + p] = sources[b][p] != pad_index ? 1 : 0;
    }
  }
  return run;
}

// Additive attention: score(p) = v . tanh(Wq h + Wk enc_p), softmax over
// unmasked source positions, context = weighted sum of encoder outputs.
template <typename S>
struct attention_result {
  autograd::tensor<S> context;  // [batch, 2*latent]
  autograd::tensor<S> weights;  // [batch, source_len]
};

template <typename S>
attention_result<S> attend(autograd::tape<S>& t, const model_params<S>& params,
                           const encoder_run<S>& run, const autograd::tensor<S>& decoder_h) {
  auto query = t.matmul(decoder_h, params.attn_query_w);
  std::vector<autograd::tensor<S>> scores;
  scores.reserve(run.source_len);
  for (std::size_t p = 0; p < run.source_len; ++p) {
    scores.push_back(t.matmul(t.tanh(t.add(query, run.keys[p])), params.attn_score_v));
  }
  attention_result<S> result;
  result.weights = t.masked_softmax(t.concat_cols(scores), run.source_mask);

  for (std::size_t p = 0; p < run.source_len; ++p) {
    auto weighted = t.scale_rows(run.outputs[p], t.slice_cols(result.weights, p, p + 1));
    result.context = p == 0 ? weighted : t.add(result.context, weighted);
  }
  return result;
}

template <typename S>
struct decoder_step_result {
  autograd::tensor<S> logits;  // [batch, vocab]
  detail::lstm_state<S> state;
  autograd::tensor<S> attention_weights;  // [batch, source_len]
};

// One decoder step: the LSTM input is the previous character (gathered
// row of decoder.w_char) plus the attention context computed from the
// incoming hidden state.
template <typename S>
decoder_step_result<S> decode_step(autograd::tape<S>& t, const model_params<S>& params,
                                   const model_config& config, const encoder_run<S>& run,
                                   const std::vector<int>& prev_indices,
                                   const detail::lstm_state<S>& state) {
  const auto latent = static_cast<std::size_t>(config.latent_dim);
  auto attention = attend(t, params, run, state.h);
  auto gates_x = t.add(t.gather_rows(params.dec_w_char, prev_indices),
                       t.matmul(attention.context, params.dec_w_ctx));
  auto next = detail::lstm_step(t, gates_x, params.dec_w_state, params.dec_bias, state, latent);
  decoder_step_result<S> result;
  result.logits = t.add_row_bias(t.matmul(next.h, params.out_w), params.out_bias);
  result.state = next;
  result.attention_weights = attention.weights;
  return result;
}

template <typename S>
struct teacher_forced_loss {
  autograd::tensor<S> loss;  // scalar, mean over predicted characters
  std::size_t predicted_chars = 0;
};

// Teacher forcing: the decoder consumes gold characters ('&' + text) and
// is scored on the shifted sequence (text + '$'); pad positions are
// masked out of the loss.
template <typename S>
teacher_forced_loss<S> forward_teacher_forced_batch(autograd::tape<S>& t,
                                                    const model_params<S>& params,
                                                    const model_config& config,
                                                    const std::vector<std::vector<int>>& sources,
                                                    const std::vector<std::vector<int>>& targets,
                                                    int pad_index) {
  if (targets.size() != sources.size()) throw autograd::shape_mismatch("batch size mismatch");
  const std::size_t batch = sources.size();
  const std::size_t target_len = targets.empty() ? 0 : targets[0].size();
  for (const auto& row : targets) {
    if (row.size() != target_len) throw autograd::shape_mismatch("ragged target batch");
  }
  if (target_len < 2) throw autograd::shape_mismatch("target needs start and end markers");

  auto run = encode_batch(t, params, config, sources, pad_index);

  // last step that predicts any real character
  std::size_t steps = 0;
  for (std::size_t s = 0; s + 1 < target_len; ++s) {
    for (std::size_t b = 0; b < batch; ++b) {
      if (targets[b][s + 1] != pad_index) {
        steps = s + 1;
        break;
      }
    }
  }

  teacher_forced_loss<S> result;
  detail::lstm_state<S> state = run.start;
  autograd::tensor<S> total;
  for (std::size_t s = 0; s < steps; ++s) {
    std::vector<int> prev(batch), expected(batch);
    std::vector<unsigned char> mask(batch);
    std::size_t count = 0;
    for (std::size_t b = 0; b < batch; ++b) {
      prev[b] = targets[b][s];
      expected[b] = targets[b][s + 1];
      mask[b] = expected[b] != pad_index ? 1 : 0;
      count += mask[b];
    }
    auto step = decode_step(t, params, config, run, prev, state);
    state = step.state;
    if (count == 0) continue;
    auto step_loss = t.softmax_cross_entropy(step.logits, expected, mask);
    auto weighted = t.scale(step_loss, static_cast<S>(count));
    total = result.predicted_chars == 0 ? weighted : t.add(total, weighted);
    result.predicted_chars += count;
  }

  if (result.predicted_chars == 0) {
    result.loss = t.constant({1}, {S(0)});
  } else {
    result.loss = t.scale(total, S(1) / static_cast<S>(result.predicted_chars));
  }
  return result;
}

// Single-pair mean loss; the contract-level view of the batched forward.
template <typename S>
S forward_teacher_forced(const model_params<S>& params, const model_config& config,
                         const corpus::encoded_pair& pair, int pad_index) {
  autograd::tape<S> t(false);
  auto result = forward_teacher_forced_batch<S>(t, params, config, {pair.source_indices},
                                                {pair.target_indices}, pad_index);
  return result.loss->value[0];
}

// Greedy decoding: feed '&', repeatedly take the argmax (ties -> lowest
// index) until '$' or max_steps; the returned sequence has no markers.
template <typename S>
std::vector<int> greedy_decode(const model_params<S>& params, const model_config& config,
                               const std::vector<int>& source_indices,
                               const corpus::vocabulary& vocab, std::size_t max_steps) {
  autograd::tape<S> t(false);
  auto run = encode_batch(t, params, config, {source_indices}, vocab.pad_index());
  detail::lstm_state<S> state = run.start;
  std::vector<int> output;
  int prev = vocab.start_index();
  for (std::size_t s = 0; s < max_steps; ++s) {
    auto step = decode_step(t, params, config, run, {prev}, state);
    state = step.state;
    const auto& logits = step.logits->value;
    int best = 0;
    for (int j = 1; j < config.vocab_size; ++j) {
      if (logits[static_cast<std::size_t>(j)] > logits[static_cast<std::size_t>(best)]) best = j;
    }
    if (best == vocab.end_index()) break;
    output.push_back(best);
    prev = best;
  }
  return output;
}

// ---------------------------------------------------------------------------
// Single-sequence views of the batched pieces (the shapes the contracts
// talk about: encoder outputs [source_len][2*latent], states [latent]).

template <typename S>
struct encoded_sequence {
  std::vector<std::vector<S>> outputs;
  std::vector<S> hidden;
  std::vector<S> cell;
};

template <typename S>
encoded_sequence<S> encode_sequence(const model_params<S>& params, const model_config& config,
                                    const std::vector<int>& source_indices, int pad_index) {
  autograd::tape<S> t(false);
  auto run = encode_batch(t, params, config, {source_indices}, pad_index);
  encoded_sequence<S> seq;
  seq.outputs.reserve(run.source_len);
  for (const auto& out : run.outputs) seq.outputs.push_back(out->value);
  seq.hidden = run.start.h->value;
  seq.cell = run.start.c->value;
  return seq;
}

template <typename S>
struct attention_view {
  std::vector<S> context;
  std::vector<S> weights;
};

template <typename S>
attention_view<S> attention_context(const model_params<S>& params, const model_config& config,
                                    const std::vector<S>& decoder_state_h,
                                    const std::vector<std::vector<S>>& encoder_outputs,
                                    const std::vector<unsigned char>& source_mask) {
  const auto latent = static_cast<std::size_t>(config.latent_dim);
  if (decoder_state_h.size() != latent) throw autograd::shape_mismatch("decoder state size");
  if (source_mask.size() != encoder_outputs.size()) {
    throw autograd::shape_mismatch("mask length vs encoder outputs");
  }
  autograd::tape<S> t(false);
  encoder_run<S> run;
  run.batch = 1;
  run.source_len = encoder_outputs.size();
  run.source_mask = source_mask;
  for (const auto& row : encoder_outputs) {
    auto out = t.constant({1, row.size()}, row);
    run.outputs.push_back(out);
    run.keys.push_back(t.matmul(out, params.attn_key_w));
  }
  auto h = t.constant({1, latent}, decoder_state_h);
  auto result = attend(t, params, run, h);
  return {result.context->value, result.weights->value};
}

template <typename S>
struct decoder_step_view {
  std::vector<S> logits;
  std::vector<S> hidden;
  std::vector<S> cell;
  std::vector<S> attention_weights;
};

template <typename S>
decoder_step_view<S> decoder_step(const model_params<S>& params, const model_config& config,
                                  int prev_char_index, const std::vector<S>& state_h,
                                  const std::vector<S>& state_c,
                                  const std::vector<std::vector<S>>& encoder_outputs,
                                  const std::vector<unsigned char>& source_mask) {
  const auto latent = static_cast<std::size_t>(config.latent_dim);
  if (prev_char_index < 0 || prev_char_index >= config.vocab_size) {
    throw autograd::index_out_of_range("previous character index");
  }
  autograd::tape<S> t(false);
  encoder_run<S> run;
  run.batch = 1;
  run.source_len = encoder_outputs.size();
  run.source_mask = source_mask;
  for (const auto& row : encoder_outputs) {
    auto out = t.constant({1, row.size()}, row);
    run.outputs.push_back(out);
    run.keys.push_back(t.matmul(out, params.attn_key_w));
  }
  detail::lstm_state<S> state{t.constant({1, latent}, state_h), t.constant({1, latent}, state_c)};
  auto step = decode_step(t, params, config, run, {prev_char_index}, state);
  return {step.logits->value, step.state.h->value, step.state.c->value,
          step.attention_weights->value};
}

// ---------------------------------------------------------------------------
// Training (float instantiation lives in seq2seq.cpp)

struct train_config {
  int batch_size = 32;
  int epochs = 70;
  std::uint64_t seed = 0;
  autograd::adam_config<float> adam;
  double validation_fraction = 0.1;
  double init_scale = 0.05;
};

struct epoch_stats {
  int epoch = 0;
  double train_loss = 0;
  double validation_loss = 0;
};

class non_finite_loss : public error {
 public:
  non_finite_loss(int epoch, int batch);
  int epoch;
  int batch;
};

struct train_result {
  model_params<float> params;
  std::vector<epoch_stats> history;
  int best_epoch = 0;
  double best_validation_loss = 0;
};

// Encodes the records for the requested direction, carves off the
// validation slice, runs epochs x batches with Adam and returns the
// parameters of the best validation epoch.
train_result train(const std::vector<corpus::derivation_record>& records,
                   corpus::task_direction direction, const corpus::vocabulary& vocab,
                   const model_config& mconfig, const train_config& tconfig,
                   std::ostream* progress = nullptr);

std::string predict_formation(const model_params<float>& params, const model_config& config,
                              const corpus::vocabulary& vocab, const std::string& stem,
                              const std::string& suffix_name);

struct split_prediction {
  std::string stem;
  std::string suffix_name;
  bool malformed = false;  // decoder output had no '+'
  std::string raw;
};

split_prediction predict_split(const model_params<float>& params, const model_config& config,
                               const corpus::vocabulary& vocab, const std::string& pada);

// Raw source string ("stem+suffix" or pada) -> decoded output string.
std::string predict_string(const model_params<float>& params, const model_config& config,
                           const corpus::vocabulary& vocab, const std::string& source);

}  // namespace pratyaya::seq2seq
