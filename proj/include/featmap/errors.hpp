#ifndef FEATMAP_ERRORS_HPP
#define FEATMAP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace featmap {

// Exit codes used by the CLI driver; library errors carry the code they map to.
enum class ExitCode : int { ok = 0, usage = 1, data = 2, numerical = 3 };

class Error : public std::runtime_error {
public:
  Error(std::string msg, ExitCode code)
      : std::runtime_error(std::move(msg)), code_(code) {}
  ExitCode exit_code() const noexcept { return code_; }

private:
  ExitCode code_;
};

// Invalid arguments or configuration (k >= m, bad ranges, missing flags).
class ParameterError : public Error {
public:
  explicit ParameterError(std::string msg)
      : Error(std::move(msg), ExitCode::usage) {}
};

// Malformed or unreadable input (parse failures, non-finite values, I/O).
class DataError : public Error {
public:
  explicit DataError(std::string msg) : Error(std::move(msg), ExitCode::data) {}
};

// Numerical failure (degenerate frames, diverged optimization).
class NumericalError : public Error {
public:
  explicit NumericalError(std::string msg)
      : Error(std::move(msg), ExitCode::numerical) {}
};

class DegenerateFrameError : public NumericalError {
public:
  explicit DegenerateFrameError(std::string msg)
      : NumericalError(std::move(msg)) {}
};

class OptimizationDivergedError : public NumericalError {
public:
  explicit OptimizationDivergedError(std::string msg)
      : NumericalError(std::move(msg)) {}
};

// Operation on a pair of points that is not a graph edge.
class GraphError : public ParameterError {
public:
  explicit GraphError(std::string msg) : ParameterError(std::move(msg)) {}
};

} // namespace featmap

#endif
