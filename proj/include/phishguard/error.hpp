#pragma once

#include <stdexcept>
#include <string>

namespace phishguard {

/// Exception raised by every pipeline stage. `module()` names the stage that
/// failed so the CLI can report "[corpus] row 12: ..." style diagnostics.
class PipelineError : public std::runtime_error {
 public:
  PipelineError(std::string module, const std::string& what)
      : std::runtime_error(what), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

}  // namespace phishguard
