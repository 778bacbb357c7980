#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scrutiny {

enum class Errc {
  // adtape
  DomainError,
  UnknownNode,
  // kernels
  UnsupportedClass,
  IterationOverflow,
  // analysis
  NoFloatSurface,
  IterationRange,
  // mask
  BadMagic,
  BadVersion,
  TruncatedFile,
  TrailingBytes,
  NonMonotonicRuns,
  DuplicateVariable,
  LengthMismatch,
  // ckpt
  IoError,
  MaskKernelMismatch,
  NoCheckpoint,
  CorruptBundle,
  EmptyTargetClass,
  // cli
  MissingAnalysis,
  MismatchFound,
  UsageError,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace scrutiny
