#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <map>
#include <string>

#include "json.hpp"
#include "mvlight/common.hpp"

namespace mvlight {

// Versioned container of named arrays plus a JSON metadata blob. Entries are
// written sorted by name so identical state produces identical bytes.
struct Checkpoint {
  nlohmann::json meta;
  std::map<std::string, torch::Tensor> tensors;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

uint64_t file_hash(const std::filesystem::path& path);
uint64_t tensor_hash(const torch::Tensor& t);

// Snapshot / restore of a module's named parameters and buffers.
std::map<std::string, torch::Tensor> named_state(const torch::nn::Module& module);
void load_state(torch::nn::Module& module, const std::map<std::string, torch::Tensor>& state,
                const std::string& prefix = "");

}  // namespace mvlight
