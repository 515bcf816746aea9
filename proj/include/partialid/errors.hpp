// Copyright 2026 the partial-id authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace partialid {

// Problems with user-supplied data or files. The CLI maps these to exit 3.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace partialid
