#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "derain/core/tensor.hpp"
#include "derain/nn/params.hpp"

namespace derain::nn {

struct NamedTensor {
  std::string name;
  core::Tensor<float> value;
};

// Named-tensor archive: 8-byte little-endian header length, a JSON manifest
// mapping tensor name -> {dtype, shape, data_offsets}, then raw tensor bytes.
// Optional string metadata rides along under "__metadata__".
void save_tensor_archive(const std::string& path,
                         const std::vector<std::pair<std::string, const core::Tensor<float>*>>&
                             tensors,
                         const std::map<std::string, std::string>& metadata = {});

// Tensors are returned in data order. Unknown dtypes or malformed manifests
// raise IoError.
std::vector<NamedTensor> load_tensor_archive(std::string const& path,
                                             std::map<std::string, std::string>* metadata =
                                                 nullptr);

void save_param_store(const std::string& path, const ParamStore<float>& store,
                      const std::map<std::string, std::string>& metadata = {});

// Strict load: the archive must contain exactly the store's paths with
// matching shapes; anything else raises IncompatibleError.
void load_param_store(const std::string& path, ParamStore<float>& store);

}  // namespace derain::nn
