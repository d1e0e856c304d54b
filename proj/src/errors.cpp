#include "fluxgate/errors.hpp"

namespace fluxgate {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::NoARecords: return "NoARecords";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::EmptyQuery: return "EmptyQuery";
    case ErrorCode::OverlappingRanges: return "OverlappingRanges";
    case ErrorCode::InconsistentInputs: return "InconsistentInputs";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::UnfittedScaler: return "UnfittedScaler";
    case ErrorCode::NonPositiveRadius: return "NonPositiveRadius";
    case ErrorCode::SingleClassData: return "SingleClassData";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::DegenerateCenters: return "DegenerateCenters";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptModel: return "CorruptModel";
    case ErrorCode::TooFewExamples: return "TooFewExamples";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& message, std::optional<std::size_t> line) {
  std::string out{to_string(code)};
  if (line) out += " (line " + std::to_string(*line) + ")";
  if (!message.empty()) out += ": " + message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::optional<std::size_t> line)
    : std::runtime_error(compose(code, message, line)), code_(code), line_(line) {}

}  // namespace fluxgate
