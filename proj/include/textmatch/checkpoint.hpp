#pragma once

#include <string>
#include <utility>
#include <vector>

#include "textmatch/tensor.hpp"

namespace textmatch {

struct NamedTensorData {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;
};

/// Binary parameter file: magic "TMCP", u32 version, u64 entry count, then
/// per entry u32 name length, name bytes, u32 rank, u64 dims, f64 data.
/// All fields little-endian.
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor>>& params);

std::vector<NamedTensorData> read_checkpoint(const std::string& path);

/// Copies checkpoint values into `params`, matched by name. The checkpoint
/// must contain exactly the same names and shapes; any difference throws.
void load_checkpoint_into(const std::string& path,
                          const std::vector<std::pair<std::string, Tensor>>& params);

}  // namespace textmatch
