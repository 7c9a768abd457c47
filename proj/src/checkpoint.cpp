#include "textmatch/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <map>

#include "textmatch/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O writes raw little-endian words");

namespace textmatch {

namespace {

constexpr char kMagic[4] = {'T', 'M', 'C', 'P'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw DataError("truncated checkpoint: " + path);
  return v;
}

std::uint64_t read_u64(std::ifstream& in, const std::string& path) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw DataError("truncated checkpoint: " + path);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor>>& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kVersion);
  write_u64(out, params.size());
  for (const auto& [name, tensor] : params) {
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(out, static_cast<std::uint32_t>(tensor.shape().size()));
    for (std::size_t dim : tensor.shape()) write_u64(out, dim);
    auto values = tensor.values();
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
  }
  if (!out) throw DataError("failed writing checkpoint: " + path);
}

std::vector<NamedTensorData> read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[4] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::string_view(magic, 4) != std::string_view(kMagic, 4)) {
    throw DataError("not a checkpoint file: " + path);
  }
  const std::uint32_t version = read_u32(in, path);
  if (version != kVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version) + ": " + path);
  }
  const std::uint64_t count = read_u64(in, path);
  std::vector<NamedTensorData> entries;
  entries.reserve(count);
  for (std::uint64_t e = 0; e < count; ++e) {
    NamedTensorData entry;
    const std::uint32_t name_len = read_u32(in, path);
    entry.name.resize(name_len);
    in.read(entry.name.data(), name_len);
    if (!in) throw DataError("truncated checkpoint: " + path);
    const std::uint32_t rank = read_u32(in, path);
    entry.shape.resize(rank);
    std::size_t numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      entry.shape[d] = static_cast<std::size_t>(read_u64(in, path));
      numel *= entry.shape[d];
    }
    entry.values.resize(numel);
    in.read(reinterpret_cast<char*>(entry.values.data()),
            static_cast<std::streamsize>(numel * sizeof(double)));
    if (!in) throw DataError("truncated checkpoint: " + path);
    entries.push_back(std::move(entry));
  }
  return entries;
}

void load_checkpoint_into(const std::string& path,
                          const std::vector<std::pair<std::string, Tensor>>& params) {
  std::vector<NamedTensorData> entries = read_checkpoint(path);
  std::map<std::string, const NamedTensorData*> by_name;
  for (const NamedTensorData& entry : entries) by_name[entry.name] = &entry;
  if (by_name.size() != entries.size()) {
    throw DataError("checkpoint has duplicate parameter names: " + path);
  }
  if (entries.size() != params.size()) {
    throw DataError("checkpoint has " + std::to_string(entries.size()) + " parameters, expected " +
                    std::to_string(params.size()) + ": " + path);
  }
  for (const auto& [name, tensor] : params) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw DataError("checkpoint is missing parameter '" + name + "': " + path);
    }
    const NamedTensorData& entry = *it->second;
    if (entry.shape != tensor.shape()) {
      throw DataError("checkpoint parameter '" + name + "' has shape " +
                      shape_string(entry.shape) + ", expected " + shape_string(tensor.shape()) +
                      ": " + path);
    }
    Tensor dst = tensor;
    auto out = dst.mutable_values();
    std::copy(entry.values.begin(), entry.values.end(), out.begin());
  }
}

}  // namespace textmatch
