#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qnn4eo/model.hpp"

namespace qnn4eo::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// In-memory form of a checkpoint file. Layout (all integers little-endian):
///
///   magic      8 bytes  "QNN4EOCK"
///   version    u32      kCheckpointVersion
///   header_len u32      length of the JSON header that follows
///   header     bytes    UTF-8 JSON: {"variant", "seed", "layers", "metadata"}
///   count      u32      number of parameter tensors
///   per tensor u32 rank, rank x u64 dims, prod(dims) x f64 values
///   checksum   u64      FNV-1a over every preceding byte
///
/// docs/checkpoint_format.md describes the header fields.
struct Checkpoint {
  ModelSpec spec;
  std::uint64_t seed = 0;
  std::vector<Tensor> parameters;
  std::string metadata_json = "{}";
};

Checkpoint make_checkpoint(const Model& model, std::string metadata_json = "{}");

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

/// Atomic write (temporary file, then rename).
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Rebuilds the model and installs the stored parameters.
Model instantiate(const Checkpoint& checkpoint);

std::string layer_spec_to_json(const std::vector<LayerSpec>& layers);
std::vector<LayerSpec> layer_spec_from_json(const std::string& json);

}  // namespace qnn4eo::nn
