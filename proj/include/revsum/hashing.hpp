// Copyright 2026 The revsum Authors.
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


#ifndef REVSUM_HASHING_HPP_
#define REVSUM_HASHING_HPP_

#include <filesystem>
#include <string>
#include <string_view>

namespace revsum {

// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view data);

// SHA-1 of "blob <size>\0<data>", the object id git assigns to a file.
std::string git_blob_hash(std::string_view data);
std::string git_blob_hash_file(const std::filesystem::path& path);

}  // namespace revsum

#endif  // REVSUM_HASHING_HPP_
