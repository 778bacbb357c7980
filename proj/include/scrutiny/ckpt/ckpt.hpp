#pragma once

// Selective checkpoint/restart.
//
// A bundle (`<kernel>.<iter>.ckpt`) holds only the critical elements of each
// array variable. The masks that say which elements those are live in a
// companion `<kernel>.scrm` file, written once per analysis and referenced
// from every manifest by digest.
//
// Bundle layout, integers and reals little-endian:
//
//   u64 manifest_len, manifest (UTF-8 JSON)
//   scalar section: i64 iteration, then one f64 per scalar variable
//   payload: gathered critical reals, variables in manifest order

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "scrutiny/analysis/analysis.hpp"
#include "scrutiny/kernels/kernel.hpp"
#include "scrutiny/mask/mask.hpp"

namespace scrutiny::ckpt {

struct CheckpointPolicy {
  int interval = 1;       // iterations between checkpoints
  int versions_kept = 2;  // bundles retained per kernel

  /// Throws std::invalid_argument unless both fields are >= 1.
  void validate() const;
  bool due(int iter) const noexcept { return iter % interval == 0; }
};

struct PayloadEntry {
  std::string name;
  std::uint64_t elements = 0;
  std::uint64_t critical = 0;
  int components = 1;
  std::uint64_t offset = 0;  // bytes from the start of the payload
  std::uint64_t bytes = 0;
};

struct Manifest {
  kernels::KernelId kernel = kernels::KernelId::BT;
  int iteration = 0;
  std::uint64_t seed = 0;
  std::uint64_t ordinal = 0;
  std::string mask_digest;
  std::vector<std::string> scalars;  // scalar section order, after the iteration
  std::uint64_t scalar_offset = 0;   // absolute file offsets
  std::uint64_t payload_offset = 0;
  std::uint64_t payload_bytes = 0;
  std::vector<PayloadEntry> variables;
};

struct CheckpointBundle {
  Manifest manifest;
  std::vector<double> scalars;
  std::vector<double> payload;
};

/// FNV-1a over the bytes, as 16 hex digits.
std::string digest(std::span<const std::uint8_t> bytes);

/// Packs the critical elements of `run`. Throws Errc::MaskKernelMismatch if
/// the report is for another kernel or seed, or its masks do not fit.
CheckpointBundle make_bundle(const kernels::KernelSpec& spec, const kernels::KernelRun& run,
                             const analysis::CriticalityReport& report, std::uint64_t ordinal);

std::vector<std::uint8_t> encode_bundle(const CheckpointBundle& bundle);
/// Throws Errc::CorruptBundle on any framing or length inconsistency.
CheckpointBundle decode_bundle(std::span<const std::uint8_t> bytes);

std::filesystem::path bundle_path(const std::filesystem::path& dir, kernels::KernelId id, int iter);
std::filesystem::path aux_path(const std::filesystem::path& dir, kernels::KernelId id);

/// Bundles of one kernel in `dir`, oldest ordinal first. Unreadable files
/// sort first with ordinal 0.
std::vector<std::filesystem::path> list_bundles(const std::filesystem::path& dir, kernels::KernelId id);

/// Writes the bundle for `run` (and the aux file if absent), then drops the
/// oldest bundles beyond policy.versions_kept. Holds an advisory lock on the
/// directory for the duration. Throws Errc::IoError or MaskKernelMismatch.
std::filesystem::path write_checkpoint(const kernels::KernelSpec& spec, const kernels::KernelRun& run,
                                       const analysis::CriticalityReport& report, const CheckpointPolicy& policy,
                                       const std::filesystem::path& dir);

/// Rebuilds a run from the newest bundle. Uncritical positions are filled
/// per `fill`; KeepExisting keeps the freshly initialized values. Throws
/// Errc::NoCheckpoint, CorruptBundle or MaskKernelMismatch.
kernels::KernelRun restart(const std::filesystem::path& dir, const kernels::KernelSpec& spec, mask::FillPolicy fill);

struct StorageReport {
  std::uint64_t original_payload = 0;
  std::uint64_t optimized_payload = 0;
  std::uint64_t scalar_bytes = 0;
  std::uint64_t aux_bytes = 0;
  std::uint64_t original_bytes = 0;   // payload + scalars
  std::uint64_t optimized_bytes = 0;  // payload + scalars + aux file
  double saved_fraction = 0.0;        // on payload bytes
};

StorageReport storage_report(const kernels::KernelSpec& spec, const analysis::CriticalityReport& report);

enum class Target { UncriticalRandom, CriticalRandom };

struct TrialFailure {
  std::string variable;
  std::uint64_t element = 0;
  int iteration = 0;
  std::string reason;
};

struct TrialSummary {
  Target target = Target::UncriticalRandom;
  std::size_t trials = 0;
  std::size_t as_expected = 0;
  bool skipped = false;  // empty target class
  std::vector<TrialFailure> failures;

  bool ok() const noexcept { return failures.empty() && as_expected == trials; }
};

/// Value written over the targeted element: far outside every kernel's
/// data range, and an exact integer so integer bookkeeping stays integral.
inline constexpr double kCorruptValue = 1.0e6;

/// Each trial runs to a random iteration, overwrites one random element of
/// the targeted class, finishes and compares the output bitwise with the
/// uninterrupted run. Uncritical targets must leave it unchanged, critical
/// ones must change it. An empty class yields a skipped summary.
TrialSummary fault_injection_trial(const kernels::KernelSpec& spec, const analysis::CriticalityReport& report,
                                   Target target, std::size_t n_trials, std::uint64_t sample_seed = 7,
                                   unsigned threads = 0);

}  // namespace scrutiny::ckpt
