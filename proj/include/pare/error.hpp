#pragma once

#include <stdexcept>
#include <string>

namespace pare {

enum class Errc {
  // geometry
  PointOutsideAllRegions,
  DegeneratePolygon,
  InvalidC,
  NonPositiveEntry,
  ZeroDistance,
  // extremes
  TooFewExceedances,
  NonConvergence,
  SubAnnualReturn,
  // pare
  RhoOutOfRange,
  SingularGLS,
  // kriging
  SingularCovariance,
  InvalidLMC,
  NoInteriorPoints,
  DegenerateFit,
  // regional max / simulation
  EmptyRegion,
  EmptyGrid,
  // cli
  ParseError,
  InsufficientData,
  IoError,
  InvalidArgument,
};

inline const char* to_string(Errc code) {
  switch (code) {
    case Errc::PointOutsideAllRegions: return "PointOutsideAllRegions";
    case Errc::DegeneratePolygon: return "DegeneratePolygon";
    case Errc::InvalidC: return "InvalidC";
    case Errc::NonPositiveEntry: return "NonPositiveEntry";
    case Errc::ZeroDistance: return "ZeroDistance";
    case Errc::TooFewExceedances: return "TooFewExceedances";
    case Errc::NonConvergence: return "NonConvergence";
    case Errc::SubAnnualReturn: return "SubAnnualReturn";
    case Errc::RhoOutOfRange: return "RhoOutOfRange";
    case Errc::SingularGLS: return "SingularGLS";
    case Errc::SingularCovariance: return "SingularCovariance";
    case Errc::InvalidLMC: return "InvalidLMC";
    case Errc::NoInteriorPoints: return "NoInteriorPoints";
    case Errc::DegenerateFit: return "DegenerateFit";
    case Errc::EmptyRegion: return "EmptyRegion";
    case Errc::EmptyGrid: return "EmptyGrid";
    case Errc::ParseError: return "ParseError";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::IoError: return "IoError";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable error code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

  /// True for failures of numerical optimizers, as opposed to bad input.
  bool is_convergence_failure() const noexcept {
    return code_ == Errc::NonConvergence || code_ == Errc::DegenerateFit;
  }

 private:
  Errc code_;
};

}  // namespace pare
