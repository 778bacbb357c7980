#pragma once

// Run-length criticality masks and the `.scrm` auxiliary file.
//
// A mask stores the maximal runs of critical elements as half-open
// [start, end) index pairs. Everything outside the runs is uncritical.
//
// File layout, all integers little-endian:
//
//   "SCRM"  u32 version (=1)  u32 var_count
//   per variable:
//     u16 name_len, name bytes (UTF-8)
//     u64 total, u64 run_count, run_count x (u64 start, u64 end)

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace scrutiny::mask {

struct Run {
  std::uint64_t start = 0;
  std::uint64_t end = 0;  // exclusive

  std::uint64_t length() const noexcept { return end - start; }
  friend bool operator==(const Run&, const Run&) = default;
};

class CriticalityMask {
 public:
  CriticalityMask() = default;

  /// Maximal critical runs of `flags` (nonzero = critical).
  static CriticalityMask from_flags(std::span<const std::uint8_t> flags);
  static CriticalityMask from_flags(const std::vector<bool>& flags);

  /// Validates ordering, bounds and maximality; throws Errc::NonMonotonicRuns.
  static CriticalityMask from_runs(std::uint64_t total, std::vector<Run> runs);

  static CriticalityMask all_critical(std::uint64_t total);

  std::uint64_t total() const noexcept { return total_; }
  const std::vector<Run>& runs() const noexcept { return runs_; }
  std::uint64_t n_critical() const noexcept { return n_critical_; }
  std::uint64_t n_uncritical() const noexcept { return total_ - n_critical_; }
  bool is_critical(std::uint64_t index) const noexcept;
  std::vector<std::uint8_t> to_flags() const;

  friend bool operator==(const CriticalityMask& a, const CriticalityMask& b) {
    return a.total_ == b.total_ && a.runs_ == b.runs_;
  }

 private:
  std::uint64_t total_ = 0;
  std::uint64_t n_critical_ = 0;
  std::vector<Run> runs_;
};

using MaskSet = std::map<std::string, CriticalityMask>;

inline constexpr char kMagic[4] = {'S', 'C', 'R', 'M'};
inline constexpr std::uint32_t kVersion = 1;

std::vector<std::uint8_t> encode(const MaskSet& masks);
std::size_t encoded_size(const MaskSet& masks);

/// Throws Errc::BadMagic, BadVersion, TruncatedFile, TrailingBytes,
/// NonMonotonicRuns or DuplicateVariable.
MaskSet decode(std::span<const std::uint8_t> bytes);

void write_file(const std::filesystem::path& path, const MaskSet& masks);
MaskSet read_file(const std::filesystem::path& path);

enum class FillPolicy { Zero, KeepExisting, Poison };

/// Critical elements in ascending index order. Each element spans
/// `components` adjacent reals. Throws Errc::LengthMismatch.
std::vector<double> gather(std::span<const double> data, const CriticalityMask& mask, int components = 1);

/// Writes `packed` back to the critical positions of `out` and fills the
/// uncritical ones per `fill`. Throws Errc::LengthMismatch.
void scatter(std::span<const double> packed, const CriticalityMask& mask, FillPolicy fill, std::span<double> out,
             int components = 1);

}  // namespace scrutiny::mask
