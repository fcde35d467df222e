#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drue/nn.hpp"

namespace drue {

struct CheckpointMeta {
  std::string stage;
  uint64_t seed = 0;
  uint64_t arch_hash = 0;
  std::string model_config;     // canonical json the hash was taken over
  double freeze_report = 0.0;
  std::string shared_manifest;  // json array of shared param names ("" if n/a)
};

// Binary container: magic, json meta, then params sorted by name with shapes
// and little-endian f64 payloads. Names must be set (collect first).
void save_checkpoint(const std::string& path, const CheckpointMeta& meta,
                     const std::vector<nn::Param*>& params);

// The file's param set must match `params` exactly (same names and shapes).
CheckpointMeta load_checkpoint(const std::string& path,
                               const std::vector<nn::Param*>& params);

CheckpointMeta peek_checkpoint(const std::string& path);

}  // namespace drue
