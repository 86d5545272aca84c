#pragma once

#include <stdexcept>
#include <string>

namespace infkyle {

/// Raised by every module on contract violations. The message is prefixed
/// with the originating module so CLI diagnostics stay one line.
class Error : public std::runtime_error {
  public:
    Error(const std::string& module, const std::string& what)
        : std::runtime_error(module + ": " + what), module_(module) {}

    const std::string& module() const noexcept { return module_; }

  private:
    std::string module_;
};

}  // namespace infkyle
