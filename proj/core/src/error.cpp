#include "mvuq/error.hpp"

namespace mvuq {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::Io: return "IoError";
    case Errc::Format: return "FormatError";
    case Errc::MissingBand: return "MissingBand";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ImageTooSmall: return "ImageTooSmall";
    case Errc::ChecksumMismatch: return "ChecksumMismatch";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::Diverged: return "Diverged";
    case Errc::RowCountMismatch: return "RowCountMismatch";
    case Errc::ManifestMismatch: return "ManifestMismatch";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::EmptyTraining: return "EmptyTraining";
    case Errc::NonPositiveVariance: return "NonPositiveVariance";
    case Errc::NumericalFailure: return "NumericalFailure";
    case Errc::DivergentChain: return "DivergentChain";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::TooFewPoints: return "TooFewPoints";
    case Errc::SingularKrigingSystem: return "SingularKrigingSystem";
    case Errc::Config: return "ConfigError";
    case Errc::Stage: return "StageError";
  }
  return "Error";
}

}  // namespace mvuq
