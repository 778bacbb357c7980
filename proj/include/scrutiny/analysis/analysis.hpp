#pragma once

// Element-level criticality analysis.
//
// analyze() differentiates one main-loop iteration plus the verification
// reduction with respect to every checkpoint element, for each of the first
// K iterations, and marks an element critical iff any of its derivatives is
// nonzero in any analyzed iteration. Two oracles cross-check the result:
// read tracking (was the checkpointed value ever consumed?) and direct
// perturbation (does changing it change the final output?).

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scrutiny/kernels/kernel.hpp"
#include "scrutiny/mask/mask.hpp"

namespace scrutiny::analysis {

inline constexpr int kDefaultIterations = 2;
inline constexpr std::uint64_t kDefaultSeed = 42;

struct VariableCriticality {
  std::string name;
  mask::CriticalityMask mask;
  std::uint64_t n_critical = 0;
  std::uint64_t n_uncritical = 0;
  bool scalar = false;

  std::uint64_t total() const noexcept { return n_critical + n_uncritical; }
  double uncritical_rate() const noexcept {
    return total() == 0 ? 0.0 : static_cast<double>(n_uncritical) / static_cast<double>(total());
  }
};

/// Sum over analyzed iterations and components of |d output / d element|.
struct ImpactVector {
  std::string variable;
  std::vector<double> derivs;
};

struct CriticalityReport {
  kernels::KernelId kernel = kernels::KernelId::BT;
  std::uint64_t seed = kDefaultSeed;
  int iterations_analyzed = 0;
  bool by_fiat = false;  // no float surface; every element declared critical
  std::vector<VariableCriticality> per_variable;
  std::vector<ImpactVector> impacts;

  const VariableCriticality& variable(std::string_view name) const;
  /// Masks of the array variables, keyed by name. Scalars carry no mask.
  mask::MaskSet masks() const;
};

/// Throws Errc::NoFloatSurface for EP and IS, Errc::IterationRange unless
/// 1 <= k_iterations <= loop_len. With a positive threshold an element is
/// critical only if some |derivative| exceeds it; the default tests for an
/// exact zero.
CriticalityReport analyze(const kernels::KernelSpec& spec, int k_iterations = kDefaultIterations,
                          std::uint64_t seed = kDefaultSeed, double threshold = 0.0);

/// All-critical report for kernels without a float surface.
CriticalityReport fiat_report(const kernels::KernelSpec& spec, std::uint64_t seed = kDefaultSeed);

/// analyze(), falling back to fiat_report() for EP and IS.
CriticalityReport analyze_or_fiat(const kernels::KernelSpec& spec, int k_iterations = kDefaultIterations,
                                  std::uint64_t seed = kDefaultSeed, double threshold = 0.0);

/// Rebuilds a report from masks read back from an `.scrm` file.
CriticalityReport report_from_masks(const kernels::KernelSpec& spec, const mask::MaskSet& masks,
                                    std::uint64_t seed = kDefaultSeed);

struct VariableReads {
  std::string name;
  std::vector<std::uint8_t> read;  // per element

  std::vector<std::uint64_t> never_read() const;
};

struct ReadTracking {
  kernels::KernelId kernel = kernels::KernelId::BT;
  int iterations = 0;
  std::vector<VariableReads> per_variable;

  const VariableReads& variable(std::string_view name) const;
};

/// Which checkpointed values each of the first k iterations (and the
/// reduction after it) actually consumes. Throws Errc::IterationRange.
ReadTracking oracle_read_tracking(const kernels::KernelSpec& spec, int k_iterations = kDefaultIterations,
                                  std::uint64_t seed = kDefaultSeed);

enum class Perturbation { NoEffect, Effect };

/// Adds 1.0 to every component of one element before iteration 0 and
/// compares the final output bitwise against an unperturbed run.
Perturbation oracle_perturbation(const kernels::KernelSpec& spec, std::string_view variable,
                                 std::uint64_t element, std::uint64_t seed = kDefaultSeed);

struct PerturbationSample {
  std::string variable;
  std::uint64_t element = 0;
  Perturbation verdict = Perturbation::Effect;
};

/// Up to `count` elements: every uncritical element when they fit in half
/// the budget (a random half otherwise), the rest drawn from the critical
/// ones. Runs the perturbation oracle on each, over `threads` workers.
std::vector<PerturbationSample> sample_perturbations(const kernels::KernelSpec& spec,
                                                     const CriticalityReport& report, std::size_t count,
                                                     std::uint64_t sample_seed, unsigned threads = 0);

struct Mismatch {
  std::string variable;
  std::uint64_t element = 0;
  std::string reason;
};

struct Reconciliation {
  std::vector<Mismatch> mismatches;
  std::size_t elements_compared = 0;
  std::size_t samples_checked = 0;

  bool consistent() const noexcept { return mismatches.empty(); }
};

/// Checks that (a) never-read elements are uncritical, (b) read elements
/// are critical, and (c) every perturbation verdict agrees with the
/// classification.
Reconciliation reconcile(const CriticalityReport& report, const ReadTracking& reads,
                         std::span<const PerturbationSample> samples);

/// Percentage with three significant figures ("14.8", "0.143", "16.1").
std::string format_rate(double fraction);

/// kernel,variable,total,critical,uncritical,uncritical_rate
std::string report_csv(std::span<const CriticalityReport> reports, bool only_with_uncritical = false);

}  // namespace scrutiny::analysis
