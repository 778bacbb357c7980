#pragma once

// Desk-scale miniatures of the NPB S-class benchmarks.
//
// Each kernel declares the variables the benchmark checkpoints, with the
// benchmark's shapes, and reproduces the element ranges its main loop and
// verification phase actually touch. Numerics are deliberately simple; the
// access ranges are the point.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scrutiny/adtape/tape.hpp"
#include "scrutiny/analysis/read_probe.hpp"

namespace scrutiny::kernels {

enum class KernelId { BT, SP, CG, MG, LU, FT, EP, IS };
enum class ProblemClass { S, W, A, B, C };
enum class Role { InputState, Residual, Accumulator };

inline constexpr KernelId kAllKernels[] = {KernelId::BT, KernelId::SP, KernelId::CG, KernelId::MG,
                                           KernelId::LU, KernelId::FT, KernelId::EP, KernelId::IS};

std::string_view to_string(KernelId id) noexcept;
/// Lower-case name as used in file names and on the command line ("bt").
std::string lower_name(KernelId id);
/// Accepts either case.
std::optional<KernelId> parse_kernel_id(std::string_view name);

struct VariableDesc {
  std::string name;
  std::vector<std::size_t> shape;  // row-major; empty for a scalar
  int components = 1;              // 2 for dcomplex
  Role role = Role::InputState;
  bool integer = false;            // integer-valued bookkeeping stored as f64

  bool scalar() const noexcept { return shape.empty(); }
  std::size_t elements() const noexcept;
  std::size_t reals() const noexcept { return elements() * static_cast<std::size_t>(components); }
};

struct Variable {
  VariableDesc desc;
  std::vector<double> data;  // reals(), element-major with components adjacent
};

struct KernelSpec {
  KernelId id = KernelId::BT;
  ProblemClass problem_class = ProblemClass::S;
  std::vector<VariableDesc> checkpoint_vars;
  int loop_len = 0;
  std::string loop_index_name;
  bool float_surface = true;

  std::size_t var_index(std::string_view name) const;
  const VariableDesc& var(std::string_view name) const { return checkpoint_vars[var_index(name)]; }
};

struct KernelRun {
  KernelId kernel = KernelId::BT;
  std::uint64_t seed = 0;
  int iter = 0;
  std::vector<Variable> state;  // same order as KernelSpec::checkpoint_vars
  std::optional<double> output;

  Variable& var(std::string_view name);
  const Variable& var(std::string_view name) const;
};

/// Per-variable flat real buffers, in checkpoint_vars order.
template <class T>
using State = std::vector<std::vector<T>>;

/// The numerical body of a kernel, instantiated for plain runs (double), the
/// finite-difference oracle (long double), the AD tape (ad::Var) and the
/// read-tracking oracle (analysis::Probe). Kernels without a floating-point
/// surface (EP, IS) throw Errc::NoFloatSurface from the long double and
/// ad::Var overloads.
class Kernel {
 public:
  virtual ~Kernel() = default;

  virtual KernelSpec spec() const = 0;
  virtual void initialize(State<double>& state, std::uint64_t seed) const = 0;

  virtual void step(State<double>& state, int iter) const = 0;
  virtual double reduce(const State<double>& state) const = 0;
  virtual void step(State<long double>& state, int iter) const = 0;
  virtual long double reduce(const State<long double>& state) const = 0;
  virtual void step(State<ad::Var>& state, int iter) const = 0;
  virtual ad::Var reduce(const State<ad::Var>& state) const = 0;
  virtual void step(State<analysis::Probe>& state, int iter) const = 0;
  virtual analysis::Probe reduce(const State<analysis::Probe>& state) const = 0;
};

const Kernel& kernel(KernelId id);

/// Throws Errc::UnsupportedClass for anything but class S.
KernelSpec build_kernel(KernelId id, ProblemClass cls = ProblemClass::S);

KernelRun start_run(const KernelSpec& spec, std::uint64_t seed);

/// Leaves and results of a step recorded on a tape.
struct RecordedStep {
  State<ad::Var> leaves;
  ad::Var output;
};

/// Advances one main-loop iteration. With a tape, the iteration and the
/// verification reduction that follows it are recorded, every checkpoint
/// real becoming a leaf. Throws Errc::IterationOverflow past loop_len.
std::optional<RecordedStep> run_step(const KernelSpec& spec, KernelRun& run, ad::Tape* tape = nullptr);

/// Runs the remaining iterations and evaluates the verification output.
double finish(const KernelSpec& spec, KernelRun& run);

enum class Verdict { Pass, Fail };

/// Uninterrupted-run output for (kernel, seed); memoized.
double reference_output(const KernelSpec& spec, std::uint64_t seed);

/// |output - ref| <= 1e-8 * max(1, |ref|). A run without output fails.
Verdict verify(const KernelSpec& spec, const KernelRun& run);

State<double> to_state(const KernelRun& run);
void from_state(KernelRun& run, State<double> state);

}  // namespace scrutiny::kernels
