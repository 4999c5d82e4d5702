#include "pratyaya/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace pratyaya::seq2seq {

using nlohmann::json;

namespace {

void require_little_endian() {
  if constexpr (std::endian::native != std::endian::little) {
    throw error("checkpoint format requires a little-endian host");
  }
}

json metadata_to_json(const checkpoint_metadata& m) {
  return json{{"direction", m.direction},
              {"category", m.category},
              {"split_seed", m.split_seed},
              {"split_fraction", m.split_fraction},
              {"record_count", m.record_count},
              {"excluded_suffixes", m.excluded_suffixes},
              {"train_seed", m.train_seed},
              {"epochs_run", m.epochs_run},
              {"best_epoch", m.best_epoch},
              {"final_train_loss", m.final_train_loss},
              {"final_validation_loss", m.final_validation_loss}};
}

checkpoint_metadata metadata_from_json(const json& j) {
  checkpoint_metadata m;
  m.direction = j.at("direction").get<std::string>();
  m.category = j.at("category").get<std::string>();
  m.split_seed = j.at("split_seed").get<std::uint64_t>();
  m.split_fraction = j.at("split_fraction").get<double>();
  m.record_count = j.at("record_count").get<std::uint64_t>();
  m.excluded_suffixes = j.at("excluded_suffixes").get<std::vector<std::string>>();
  m.train_seed = j.at("train_seed").get<std::uint64_t>();
  m.epochs_run = j.at("epochs_run").get<int>();
  m.best_epoch = j.at("best_epoch").get<int>();
  m.final_train_loss = j.at("final_train_loss").get<double>();
  m.final_validation_loss = j.at("final_validation_loss").get<double>();
  return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const checkpoint& data) {
  require_little_endian();
  data.config.validate();

  json arrays = json::array();
  std::uint64_t offset = 0;
  auto named = data.params.named();
  for (const auto& [name, tensor] : named) {
    arrays.push_back({{"name", name},
                      {"shape", tensor->shape},
                      {"offset", offset},
                      {"count", tensor->value.size()}});
    offset += tensor->value.size() * sizeof(float);
  }

  json header{{"config",
               {{"latent_dim", data.config.latent_dim},
                {"vocab_size", data.config.vocab_size},
                {"source_max", data.config.source_max},
                {"target_max", data.config.target_max},
                {"attention_kind", data.config.attention_kind}}},
              {"vocabulary", data.vocab.index_to_char},
              {"metadata", metadata_to_json(data.metadata)},
              {"arrays", arrays}};
  const std::string header_bytes = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw config_error("cannot write checkpoint: " + path);
  out.write("PKSQ", 4);
  const std::uint32_t version = checkpoint_format_version;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const std::uint64_t header_len = header_bytes.size();
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_bytes.data(), static_cast<std::streamsize>(header_bytes.size()));
  for (const auto& [name, tensor] : named) {
    out.write(reinterpret_cast<const char*>(tensor->value.data()),
              static_cast<std::streamsize>(tensor->value.size() * sizeof(float)));
  }
  if (!out) throw error("short write while saving checkpoint: " + path);
}

checkpoint load_checkpoint(const std::string& path) {
  require_little_endian();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open checkpoint: " + path);

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "PKSQ", 4) != 0) {
    throw error("not a checkpoint file (bad magic): " + path);
  }
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != checkpoint_format_version) {
    throw error("unsupported checkpoint format version " + std::to_string(version));
  }
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  std::string header_bytes(header_len, '\0');
  in.read(header_bytes.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw error("truncated checkpoint header: " + path);

  json header = json::parse(header_bytes);
  checkpoint data;
  data.config.latent_dim = header.at("config").at("latent_dim").get<int>();
  data.config.vocab_size = header.at("config").at("vocab_size").get<int>();
  data.config.source_max = header.at("config").at("source_max").get<int>();
  data.config.target_max = header.at("config").at("target_max").get<int>();
  data.config.attention_kind = header.at("config").at("attention_kind").get<std::string>();
  data.config.validate();

  data.vocab.index_to_char = header.at("vocabulary").get<std::string>();
  for (int i = 0; i < data.vocab.size(); ++i) {
    data.vocab.char_to_index.emplace(data.vocab.index_to_char[static_cast<std::size_t>(i)], i);
  }
  data.metadata = metadata_from_json(header.at("metadata"));

  // Fresh zero-initialized parameters, then overwrite every array from the
  // manifest; names and shapes must match exactly.
  data.params = init_params<float>(data.config, /*seed=*/0, /*init_scale=*/0.0);
  auto named = data.params.named();
  const auto& arrays = header.at("arrays");
  if (arrays.size() != named.size()) {
    throw error("checkpoint manifest has " + std::to_string(arrays.size()) + " arrays, expected " +
                std::to_string(named.size()));
  }
  for (std::size_t i = 0; i < named.size(); ++i) {
    const auto& entry = arrays[i];
    auto& [name, tensor] = named[i];
    if (entry.at("name").get<std::string>() != name) {
      throw error("checkpoint array order mismatch at \"" + name + "\"");
    }
    if (entry.at("shape").get<std::vector<std::size_t>>() != tensor->shape) {
      throw error("checkpoint shape mismatch for \"" + name + "\"");
    }
    if (entry.at("count").get<std::size_t>() != tensor->value.size()) {
      throw error("checkpoint size mismatch for \"" + name + "\"");
    }
    in.read(reinterpret_cast<char*>(tensor->value.data()),
            static_cast<std::streamsize>(tensor->value.size() * sizeof(float)));
    if (!in) throw error("truncated checkpoint data at \"" + name + "\"");
  }
  return data;
}

}  // namespace pratyaya::seq2seq
