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

#include "slt/checkpoint.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

#include "slt/binary_io.hpp"
#include "slt/errors.hpp"

namespace slt {
namespace {

constexpr std::string_view kMagic = "SLTCKPT1";

class Reader {
 public:
  Reader(std::string_view bytes, const std::string& origin) : bytes_(bytes), origin_(origin) {}

  std::uint32_t u32() {
    need(4);
    const auto v = binary::get_u32(bytes_, pos_);
    pos_ += 4;
    return v;
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw TruncatedFileError(origin_, pos_ + n, bytes_.size());
  }

  std::string_view bytes_;
  const std::string& origin_;
  std::size_t pos_ = 0;
};

}  // namespace

const std::string* Checkpoint::find_config(const std::string& key) const {
  for (const auto& [k, v] : config) {
    if (k == key) return &v;
  }
  return nullptr;
}

const NamedArray* Checkpoint::find_tensor(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::string encode_checkpoint(const Checkpoint& checkpoint) {
  std::string block;
  for (const auto& [k, v] : checkpoint.config) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw InputError("checkpoint config entry '" + k + "' contains '=' or a newline");
    }
    block += k + "=" + v + "\n";
  }
  std::string out(kMagic);
  binary::put_u32(out, static_cast<std::uint32_t>(block.size()));
  out += block;
  binary::put_u32(out, static_cast<std::uint32_t>(checkpoint.tensors.size()));
  for (const auto& t : checkpoint.tensors) {
    if (numel(t.shape) != t.values.size()) {
      throw ShapeError("checkpoint tensor '" + t.name + "' shape " + to_string(t.shape) +
                       " does not match its " + std::to_string(t.values.size()) + " values");
    }
    binary::put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    binary::put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) binary::put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : t.values) binary::put_f32(out, v);
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes, const std::string& origin) {
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic) {
    throw BadMagicError(origin + ": not a checkpoint (bad magic)");
  }
  Reader in(bytes.substr(kMagic.size()), origin);
  Checkpoint ckpt;
  const auto block_len = in.u32();
  std::istringstream block{std::string(in.take(block_len))};
  std::string line;
  while (std::getline(block, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(origin + ": bad config line '" + line + "'");
    ckpt.config.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  const auto count = in.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray t;
    t.name = std::string(in.take(in.u32()));
    const auto rank = in.u32();
    for (std::uint32_t r = 0; r < rank; ++r) t.shape.push_back(in.u32());
    const auto n = numel(t.shape);
    if (n > bytes.size() / 4) throw TruncatedFileError(origin, 4 * n, bytes.size());
    const auto payload = in.take(4 * n);
    t.values.resize(n);
    for (std::size_t j = 0; j < n; ++j) t.values[j] = binary::get_f32(payload, 4 * j);
    ckpt.tensors.push_back(std::move(t));
  }
  if (!in.done()) throw FormatError(origin + ": trailing bytes after the last tensor");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const auto bytes = encode_checkpoint(checkpoint);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return decode_checkpoint(buffer.str(), path.string());
}

}  // namespace slt
