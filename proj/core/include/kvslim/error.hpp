// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace kvslim {

/// Raised when a caller hands the library something malformed: bad shapes,
/// out-of-range parameters, unreadable or corrupt files.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when an internal invariant breaks. Any such breach is a bug in the
/// library itself, never the caller's fault.
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

namespace detail {
template <typename Error, typename... Parts>
[[noreturn]] void raise(Parts&&... parts) {
  std::ostringstream os;
  (os << ... << parts);
  throw Error(os.str());
}
}  // namespace detail

}  // namespace kvslim

// Validates caller-supplied data; throws kvslim::InputError on failure.
#define KVSLIM_REQUIRE(cond, ...)                                         \
  do {                                                                    \
    if (!(cond)) ::kvslim::detail::raise<::kvslim::InputError>(__VA_ARGS__); \
  } while (0)

// Guards internal invariants; throws kvslim::InternalError on failure.
#define KVSLIM_ASSERT(cond, ...)                                             \
  do {                                                                       \
    if (!(cond)) ::kvslim::detail::raise<::kvslim::InternalError>(__VA_ARGS__); \
  } while (0)
