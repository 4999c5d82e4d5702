#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pratyaya/seq2seq.hpp"

namespace pratyaya::seq2seq {

// Enough context to rebuild the exact evaluation setup: which corpus
// slice trained the model, how it was split, and how training went.
struct checkpoint_metadata {
  std::string direction;  // "formation" | "split"
  std::string category;   // "krit" | "taddhit"
  std::uint64_t split_seed = 0;
  double split_fraction = 0.8;
  std::uint64_t record_count = 0;  // records that entered the split
  std::vector<std::string> excluded_suffixes;
  std::uint64_t train_seed = 0;
  int epochs_run = 0;
  int best_epoch = 0;
  double final_train_loss = 0;
  double final_validation_loss = 0;
};

struct checkpoint {
  model_config config;
  corpus::vocabulary vocab;
  checkpoint_metadata metadata;
  model_params<float> params;
};

// Binary layout (docs/checkpoint_format.md): "PKSQ" magic, u32 LE format
// version, u64 LE header length, UTF-8 JSON header (config, vocabulary,
// metadata, array manifest), then raw little-endian f32 arrays in
// manifest order. Reloading reproduces bitwise-identical inference.
inline constexpr std::uint32_t checkpoint_format_version = 1;

void save_checkpoint(const std::string& path, const checkpoint& data);
checkpoint load_checkpoint(const std::string& path);

}  // namespace pratyaya::seq2seq
