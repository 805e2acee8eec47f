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


#ifndef REVSUM_ERROR_HPP_
#define REVSUM_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace revsum {

// Bad user input: unreadable files, misaligned data, invalid configuration.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training blew up (non-finite or exploding loss).
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace revsum

#endif  // REVSUM_ERROR_HPP_
