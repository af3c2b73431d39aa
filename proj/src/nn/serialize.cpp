#include "derain/nn/serialize.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "derain/core/errors.hpp"
#include "json.hpp"

namespace derain::nn {

using nlohmann::json;

void save_tensor_archive(
    const std::string& path,
    const std::vector<std::pair<std::string, const core::Tensor<float>*>>& tensors,
    const std::map<std::string, std::string>& metadata) {
  json manifest = json::object();
  if (!metadata.empty()) manifest["__metadata__"] = metadata;
  std::uint64_t offset = 0;
  for (const auto& [name, t] : tensors) {
    if (name == "__metadata__") throw IoError("tensor name '__metadata__' is reserved");
    if (manifest.contains(name)) throw IoError("duplicate tensor name: " + name);
    const std::uint64_t bytes = static_cast<std::uint64_t>(t->numel()) * sizeof(float);
    manifest[name] = {{"dtype", "F32"},
                      {"shape", t->dims()},
                      {"data_offsets", {offset, offset + bytes}}};
    offset += bytes;
  }
  const std::string header = manifest.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  const std::uint64_t n = header.size();
  char len[8];
  for (int i = 0; i < 8; ++i) len[i] = static_cast<char>((n >> (8 * i)) & 0xFF);
  out.write(len, 8);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& [name, t] : tensors)
    out.write(reinterpret_cast<const char*>(t->data()),
              static_cast<std::streamsize>(t->numel() * sizeof(float)));
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

std::vector<NamedTensor> load_tensor_archive(const std::string& path,
                                             std::map<std::string, std::string>* metadata) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  char len[8];
  in.read(len, 8);
  if (!in) throw IoError("truncated archive header: " + path);
  std::uint64_t n = 0;
  for (int i = 0; i < 8; ++i)
    n |= static_cast<std::uint64_t>(static_cast<unsigned char>(len[i])) << (8 * i);
  if (n == 0 || n > (1ULL << 30)) throw IoError("implausible manifest size in " + path);
  std::string header(n, '\0');
  in.read(header.data(), static_cast<std::streamsize>(n));
  if (!in) throw IoError("truncated manifest: " + path);
  json manifest;
  try {
    manifest = json::parse(header);
  } catch (const json::exception& e) {
    throw IoError("bad manifest in " + path + ": " + e.what());
  }

  std::vector<char> blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::vector<std::pair<std::uint64_t, NamedTensor>> out;
  for (const auto& [name, entry] : manifest.items()) {
    if (name == "__metadata__") {
      if (metadata) *metadata = entry.get<std::map<std::string, std::string>>();
      continue;
    }
    try {
      if (entry.at("dtype").get<std::string>() != "F32")
        throw IoError("unsupported dtype for " + name + " in " + path);
      const auto dims = entry.at("shape").get<std::vector<int>>();
      const auto offs = entry.at("data_offsets").get<std::vector<std::uint64_t>>();
      core::Tensor<float> t(dims);
      const std::uint64_t bytes = static_cast<std::uint64_t>(t.numel()) * sizeof(float);
      if (offs.size() != 2 || offs[1] < offs[0] || offs[1] - offs[0] != bytes ||
          offs[1] > blob.size())
        throw IoError("bad data offsets for " + name + " in " + path);
      std::memcpy(t.data(), blob.data() + offs[0], bytes);
      out.emplace_back(offs[0], NamedTensor{name, std::move(t)});
    } catch (const json::exception& e) {
      throw IoError("bad manifest entry " + name + " in " + path + ": " + e.what());
    }
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<NamedTensor> result;
  result.reserve(out.size());
  for (auto& [off, nt] : out) result.push_back(std::move(nt));
  return result;
}

void save_param_store(const std::string& path, const ParamStore<float>& store,
                      const std::map<std::string, std::string>& metadata) {
  std::vector<std::pair<std::string, const core::Tensor<float>*>> tensors;
  tensors.reserve(store.size());
  for (const auto& p : store.paths()) tensors.emplace_back(p, &store.value(p));
  save_tensor_archive(path, tensors, metadata);
}

void load_param_store(const std::string& path, ParamStore<float>& store) {
  auto tensors = load_tensor_archive(path);
  if (tensors.size() != store.size())
    throw IncompatibleError("archive " + path + " holds " + std::to_string(tensors.size()) +
                            " tensors, model expects " + std::to_string(store.size()));
  for (auto& nt : tensors) {
    if (!store.has(nt.name))
      throw IncompatibleError("archive " + path + " has unexpected tensor: " + nt.name);
    core::Tensor<float>& dst = store.value(nt.name);
    if (!dst.same_shape(nt.value))
      throw IncompatibleError("shape mismatch for " + nt.name + ": archive " +
                              nt.value.shape_str() + ", model " + dst.shape_str());
    dst = std::move(nt.value);
  }
}

}  // namespace derain::nn
