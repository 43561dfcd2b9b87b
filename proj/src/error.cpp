#include "msfax/error.hpp"

namespace msfax {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::infeasible_configuration: return "infeasible factor configuration";
    case ErrorCode::singular_matrix: return "singular matrix";
    case ErrorCode::not_converged: return "not converged";
    case ErrorCode::io: return "i/o error";
    case ErrorCode::parse: return "parse error";
    case ErrorCode::out_of_range: return "index out of range";
    case ErrorCode::degenerate: return "degenerate input";
  }
  return "unknown error";
}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace msfax
