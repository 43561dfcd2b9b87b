#pragma once

#include <stdexcept>
#include <string>

namespace msfax {

enum class ErrorCode {
  invalid_argument = 1,
  infeasible_configuration,
  singular_matrix,
  not_converged,
  io,
  parse,
  out_of_range,
  degenerate,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorCode::invalid_argument, what);
}

}  // namespace msfax
