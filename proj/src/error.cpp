#include "scrutiny/error.hpp"

namespace scrutiny {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::DomainError: return "DomainError";
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::UnsupportedClass: return "UnsupportedClass";
    case Errc::IterationOverflow: return "IterationOverflow";
    case Errc::NoFloatSurface: return "NoFloatSurface";
    case Errc::IterationRange: return "IterationRange";
    case Errc::BadMagic: return "BadMagic";
    case Errc::BadVersion: return "BadVersion";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::TrailingBytes: return "TrailingBytes";
    case Errc::NonMonotonicRuns: return "NonMonotonicRuns";
    case Errc::DuplicateVariable: return "DuplicateVariable";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::IoError: return "IoError";
    case Errc::MaskKernelMismatch: return "MaskKernelMismatch";
    case Errc::NoCheckpoint: return "NoCheckpoint";
    case Errc::CorruptBundle: return "CorruptBundle";
    case Errc::EmptyTargetClass: return "EmptyTargetClass";
    case Errc::MissingAnalysis: return "MissingAnalysis";
    case Errc::MismatchFound: return "MismatchFound";
    case Errc::UsageError: return "UsageError";
  }
  return "Unknown";
}

}  // namespace scrutiny
