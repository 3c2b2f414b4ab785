#pragma once

#include <stdexcept>
#include <string>

namespace egae {

// Non-finite values during training or encoding. The CLI maps this to a
// distinct exit code.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace egae
