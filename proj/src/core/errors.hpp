#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lbpp {

enum class ErrorCode {
  kInvalidArgument,
  kIo,
  kParse,
  kDomain,
  kConvergence,
  kNumerical,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Newton iteration ran out of budget; carries the objective values seen.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> trace)
      : Error(ErrorCode::kConvergence, what), trace_(std::move(trace)) {}

  [[nodiscard]] const std::vector<double>& trace() const noexcept {
    return trace_;
  }

 private:
  std::vector<double> trace_;
};

[[noreturn]] inline void throw_invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, what);
}

[[noreturn]] inline void throw_numerical(const std::string& what) {
  throw Error(ErrorCode::kNumerical, what);
}

}  // namespace lbpp
