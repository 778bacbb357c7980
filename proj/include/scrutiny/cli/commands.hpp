#pragma once

// Subcommands behind the `scrutinize` tool. Each returns a process exit
// code: 0 success, 1 verification or reconciliation failure (or any other
// runtime error), 2 usage error.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "scrutiny/analysis/analysis.hpp"
#include "scrutiny/cli/viz.hpp"
#include "scrutiny/mask/mask.hpp"

namespace scrutiny::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct CommonOptions {
  std::vector<kernels::KernelId> kernels;
  int iters = analysis::kDefaultIterations;
  std::uint64_t seed = analysis::kDefaultSeed;
  double threshold = 0.0;  // |derivative| at or below this counts as zero
  std::filesystem::path out = "scrutiny-out";
};

/// SCRUTINIZE_OUT, when set and non-empty, wins over --out.
std::filesystem::path resolve_out(const std::filesystem::path& flag);

/// Masks from `<out>/<kernel>.scrm`. Throws Errc::MissingAnalysis if absent.
analysis::CriticalityReport load_analysis(const std::filesystem::path& out, const kernels::KernelSpec& spec,
                                          std::uint64_t seed);

/// Writes `<kernel>.scrm` and `<kernel>.csv` per kernel, and `summary.csv`
/// (variables with uncritical elements) when several kernels are analyzed.
int cmd_analyze(const CommonOptions& opt, std::ostream& os);

struct VizOptions {
  CommonOptions common;
  VizRequest request;
};

/// Writes the map(s) under `<out>/viz/` and prints the paths.
int cmd_viz(const VizOptions& opt, std::ostream& os);

struct BenchOptions {
  CommonOptions common;
  int interval = 1;
  int versions = 2;
  mask::FillPolicy fill = mask::FillPolicy::Poison;
  std::optional<int> fail_at;  // default: loop_len / 2
  bool fork_kill = false;      // kill a child process instead of abandoning the run
};

/// Runs with periodic checkpoints, fails, restarts, verifies and prints the
/// storage row.
int cmd_bench(const BenchOptions& opt, std::ostream& os);

struct ReconcileOptions {
  CommonOptions common;
  std::size_t samples = 200;
};

int cmd_reconcile(const ReconcileOptions& opt, std::ostream& os);

std::optional<mask::FillPolicy> parse_fill(std::string_view s);

}  // namespace scrutiny::cli
