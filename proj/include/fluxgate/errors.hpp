#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fluxgate {

enum class ErrorCode {
  MalformedRecord,
  NoARecords,
  MalformedLine,
  EmptyQuery,
  OverlappingRanges,
  InconsistentInputs,
  EmptyTrainingSet,
  UnfittedScaler,
  NonPositiveRadius,
  SingleClassData,
  DivergedLoss,
  DegenerateCenters,
  VersionMismatch,
  CorruptModel,
  TooFewExamples,
  InvalidDistribution,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Structured failure raised by every fluxgate module. The code identifies the
/// failure class; line() is set for errors tied to a position in an input file.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> line = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
};

}  // namespace fluxgate
