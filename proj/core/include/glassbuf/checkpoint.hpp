#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "glassbuf/adam.hpp"

namespace glassbuf {

// File layout:
//   "glassbuf-ckpt\n" <header byte length> "\n" <JSON header>
//   raw little-endian float32 data of every tensor, in header order
// The header holds {"meta": <caller JSON>, "tensors": [{"name", "shape"}...]}.
struct Checkpoint {
  std::string meta_json;
  std::vector<Param> tensors;
};

void save_checkpoint(const std::filesystem::path& path, const std::string& meta_json, const ParamSet& params);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies checkpoint tensors into params by name; shapes must match exactly.
void assign_parameters(ParamSet& params, const Checkpoint& checkpoint);

}  // namespace glassbuf
