#pragma once

#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace gbl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// File-system or file-format failure; the message carries the path.
class IoError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or weights during an optimization run.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t iteration)
      : Error(what), iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

}  // namespace gbl

// Contract violations that indicate a bug in the caller, not bad input.
#define GBL_ASSERT(cond, msg)                                              \
  do {                                                                     \
    if (!(cond)) {                                                         \
      std::fprintf(stderr, "%s:%d: contract violated: %s (%s)\n", __FILE__, \
                   __LINE__, #cond, msg);                                  \
      std::abort();                                                        \
    }                                                                      \
  } while (0)
