#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "structnet/mtl.hpp"
#include "structnet/network.hpp"

namespace structnet {

// ---------------------------------------------------------------------------
// Model files.
//
// Little-endian binary layout, integrity-checked by a trailing FNV-1a hash:
//   magic "SNMF", u32 format version
//   framework spec: u32 dim count, i64 dims..., i32 encoder_depth,
//                   i32 decoder_depth
//   prng: u32 length + algorithm id bytes, u64 seed
//   provenance: i32 best_epoch, f64 best_valid_mse
//   blocks: u32 count, then per block sorted by id:
//     u32 id length, id bytes, u32 rows, u32 cols,
//     rows*cols f64 weights (row-major), rows f64 biases
//   u64 FNV-1a of every preceding byte
// ---------------------------------------------------------------------------

inline constexpr char kModelMagic[4] = {'S', 'N', 'M', 'F'};
inline constexpr std::uint32_t kModelVersion = 1;

struct ModelMeta {
  FrameworkSpec spec;
  std::string prng_algorithm = Rng::kAlgorithm;
  std::uint64_t seed = 0;
  int best_epoch = -1;
  Scalar best_valid_mse = 0.0;
};

void save_model(const std::filesystem::path& path, const ModelMeta& meta,
                const ParamStore& params);

struct LoadedModel {
  ModelMeta meta;
  ParamStore params;
};

/// Verifies magic, version and checksum; any truncation or mismatch throws
/// DataError. The round trip save -> load is bit-exact.
LoadedModel load_model(const std::filesystem::path& path);

/// Header and block summary for the `inspect` command.
std::string describe_model(const LoadedModel& model);

}  // namespace structnet
