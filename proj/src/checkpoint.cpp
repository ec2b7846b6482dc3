#include "mvlight/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace mvlight {

namespace {

constexpr char kMagic[4] = {'M', 'V', 'C', 'K'};
constexpr uint32_t kVersion = 1;

uint8_t dtype_code(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat32: return 0;
    case torch::kFloat64: return 1;
    case torch::kInt64: return 2;
    default: throw ArgumentError("checkpoint: unsupported dtype");
  }
}

torch::ScalarType code_dtype(uint8_t c) {
  switch (c) {
    case 0: return torch::kFloat32;
    case 1: return torch::kFloat64;
    case 2: return torch::kInt64;
    default: throw FormatError("checkpoint: unknown dtype code");
  }
}

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw TruncationError("truncated checkpoint");
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f.write(kMagic, 4);
  write_pod(f, kVersion);
  std::string meta = ckpt.meta.dump();
  write_pod(f, static_cast<uint64_t>(meta.size()));
  f.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  write_pod(f, static_cast<uint64_t>(ckpt.tensors.size()));
  for (const auto& [name, tensor] : ckpt.tensors) {
    auto t = tensor.detach().cpu().contiguous();
    write_pod(f, static_cast<uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod(f, dtype_code(t.scalar_type()));
    write_pod(f, static_cast<uint32_t>(t.dim()));
    for (int64_t d = 0; d < t.dim(); d++) write_pod(f, static_cast<uint64_t>(t.size(d)));
    uint64_t nbytes = static_cast<uint64_t>(t.numel()) * t.element_size();
    write_pod(f, nbytes);
    f.write(reinterpret_cast<const char*>(t.data_ptr()), static_cast<std::streamsize>(nbytes));
  }
  if (!f) throw IoError("short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("not a checkpoint file: " + path.string());
  uint32_t version = read_pod<uint32_t>(f);
  if (version != kVersion) throw FormatError("unsupported checkpoint version");
  uint64_t meta_len = read_pod<uint64_t>(f);
  std::string meta(meta_len, '\0');
  f.read(meta.data(), static_cast<std::streamsize>(meta_len));
  if (!f) throw TruncationError("truncated checkpoint metadata");

  Checkpoint ckpt;
  ckpt.meta = nlohmann::json::parse(meta);
  uint64_t count = read_pod<uint64_t>(f);
  for (uint64_t i = 0; i < count; i++) {
    uint32_t name_len = read_pod<uint32_t>(f);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    auto dtype = code_dtype(read_pod<uint8_t>(f));
    uint32_t ndim = read_pod<uint32_t>(f);
    std::vector<int64_t> dims(ndim);
    for (uint32_t d = 0; d < ndim; d++) dims[d] = static_cast<int64_t>(read_pod<uint64_t>(f));
    uint64_t nbytes = read_pod<uint64_t>(f);
    auto t = torch::empty(dims, dtype);
    if (static_cast<uint64_t>(t.numel()) * t.element_size() != nbytes)
      throw FormatError("checkpoint tensor size mismatch for " + name);
    f.read(reinterpret_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(nbytes));
    if (!f) throw TruncationError("truncated checkpoint tensor " + name);
    ckpt.tensors.emplace(std::move(name), std::move(t));
  }
  return ckpt;
}

uint64_t file_hash(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return fnv1a64(bytes);
}

uint64_t tensor_hash(const torch::Tensor& t) {
  auto c = t.detach().cpu().contiguous();
  return fnv1a64(std::span<const uint8_t>(static_cast<const uint8_t*>(c.data_ptr()),
                                          static_cast<size_t>(c.numel()) * c.element_size()));
}

std::map<std::string, torch::Tensor> named_state(const torch::nn::Module& module) {
  std::map<std::string, torch::Tensor> out;
  for (const auto& p : module.named_parameters(/*recurse=*/true)) out[p.key()] = p.value();
  for (const auto& b : module.named_buffers(/*recurse=*/true)) out[b.key()] = b.value();
  return out;
}

void load_state(torch::nn::Module& module, const std::map<std::string, torch::Tensor>& state,
                const std::string& prefix) {
  torch::NoGradGuard guard;
  for (auto& p : module.named_parameters(/*recurse=*/true)) {
    auto it = state.find(prefix + p.key());
    if (it == state.end()) throw FormatError("checkpoint missing parameter " + prefix + p.key());
    if (!p.value().sizes().equals(it->second.sizes()))
      throw FormatError("checkpoint shape mismatch for " + prefix + p.key());
    p.value().copy_(it->second.to(p.value().scalar_type()));
  }
  for (auto& b : module.named_buffers(/*recurse=*/true)) {
    auto it = state.find(prefix + b.key());
    if (it == state.end()) throw FormatError("checkpoint missing buffer " + prefix + b.key());
    b.value().copy_(it->second.to(b.value().scalar_type()));
  }
}

}  // namespace mvlight
