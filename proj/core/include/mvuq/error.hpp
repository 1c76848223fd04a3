#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mvuq {

enum class Errc {
  Io,
  Format,
  MissingBand,
  ShapeMismatch,
  InvalidArgument,
  ImageTooSmall,
  ChecksumMismatch,
  NonFiniteValue,
  Diverged,
  RowCountMismatch,
  ManifestMismatch,
  SingularSystem,
  DimensionMismatch,
  EmptyTraining,
  NonPositiveVariance,
  NumericalFailure,
  DivergentChain,
  TooFewSamples,
  LengthMismatch,
  TooFewPoints,
  SingularKrigingSystem,
  Config,
  Stage,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

class FormatError : public Error {
 public:
  FormatError(std::size_t offset, const std::string& what)
      : Error(Errc::Format, what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class NonFiniteValueError : public Error {
 public:
  NonFiniteValueError(std::size_t row, std::size_t col)
      : Error(Errc::NonFiniteValue,
              "non-finite value at row " + std::to_string(row) + ", col " + std::to_string(col)),
        row_(row), col_(col) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause)
      : Error(Errc::Stage, stage + ": " + cause), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace mvuq
