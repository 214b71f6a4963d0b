// Copyright (c) 2026 The SLT Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "slt/tensor.hpp"

namespace slt {

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<float> values;

  bool operator==(const NamedArray&) const = default;
};

/// Binary container: magic "SLTCKPT1", uint32 length + UTF-8 block of
/// "key=value\n" lines, uint32 tensor count, then per tensor uint32 name
/// length + name, uint32 rank, rank x uint32 dims, float32 payload. All
/// integers and floats little-endian.
struct Checkpoint {
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<NamedArray> tensors;

  const std::string* find_config(const std::string& key) const;
  const NamedArray* find_tensor(const std::string& name) const;
  bool operator==(const Checkpoint&) const = default;
};

std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::string_view bytes, const std::string& origin = "<memory>");

/// Written to a sibling temporary file and renamed into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

template <typename Scalar>
NamedArray to_named_array(const std::string& name, const Tensor<Scalar>& t) {
  return {name, t.shape(), std::vector<float>(t.data().begin(), t.data().end())};
}

}  // namespace slt
