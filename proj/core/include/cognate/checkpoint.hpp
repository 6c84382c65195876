#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include <nlohmann/json.hpp>

#include "cognate/model.hpp"
#include "cognate/phonology.hpp"

namespace cognate {

// File layout:
//   "COGCKPT <version>\n"
//   "<header byte count>\n"
//   UTF-8 JSON header: format_version, config, tensors [{name, shape}],
//                      metadata {threshold, vocabulary, ...}
//   float32 little-endian payload, tensors in header order.
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  ParameterStore params;
  std::optional<double> threshold;
  std::optional<Vocabulary> vocabulary;
  nlohmann::json info = nlohmann::json::object();  // free-form training record
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
// Throws DataError on a bad magic line, version, header, tensor layout that
// does not match the stored config, or payload size.
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Parameter-only convenience wrappers. load_params rejects a file whose
// config differs from `expected`.
void save_params(const ParameterStore& params, const ModelConfig& config, const std::filesystem::path& path);
ParameterStore load_params(const std::filesystem::path& path, const ModelConfig& expected);

// The payload is float32; rounding in memory first makes save/load exact.
void round_to_float32(ParameterStore& params);

}  // namespace cognate
