#pragma once

#include <stdexcept>
#include <string>

namespace pf {

// Exit-code mapping in the CLI: ConfigError -> 2, DataError -> 3,
// NumericError -> 4.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};
struct DataError : std::runtime_error {
  explicit DataError(const std::string& m) : std::runtime_error(m) {}
};
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& m) : std::runtime_error(m) {}
};
struct ShapeError : std::invalid_argument {
  explicit ShapeError(const std::string& m) : std::invalid_argument(m) {}
};

inline void check_shape(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

}  // namespace pf
