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

#include "slt/errors.hpp"

#include <fmt/format.h>

namespace slt {

TruncatedFileError::TruncatedFileError(const std::string& path, std::size_t expected,
                                       std::size_t actual)
    : FormatError(fmt::format("{}: truncated payload, expected {} bytes but file has {}", path,
                              expected, actual)),
      expected_(expected),
      actual_(actual) {}

}  // namespace slt
