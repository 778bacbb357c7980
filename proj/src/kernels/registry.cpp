#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <mutex>
#include <string>

#include "common.hpp"
#include "scrutiny/kernels/kernel.hpp"

namespace scrutiny::kernels {

std::string_view to_string(KernelId id) noexcept {
  switch (id) {
    case KernelId::BT: return "BT";
    case KernelId::SP: return "SP";
    case KernelId::CG: return "CG";
    case KernelId::MG: return "MG";
    case KernelId::LU: return "LU";
    case KernelId::FT: return "FT";
    case KernelId::EP: return "EP";
    case KernelId::IS: return "IS";
  }
  return "??";
}

std::string lower_name(KernelId id) {
  std::string s(to_string(id));
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::optional<KernelId> parse_kernel_id(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (KernelId id : kAllKernels) {
    if (to_string(id) == upper) return id;
  }
  return std::nullopt;
}

std::size_t VariableDesc::elements() const noexcept {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::size_t KernelSpec::var_index(std::string_view name) const {
  for (std::size_t i = 0; i < checkpoint_vars.size(); ++i) {
    if (checkpoint_vars[i].name == name) return i;
  }
  throw std::out_of_range("no variable '" + std::string(name) + "' in " + std::string(to_string(id)));
}

Variable& KernelRun::var(std::string_view name) {
  for (Variable& v : state) {
    if (v.desc.name == name) return v;
  }
  throw std::out_of_range("no variable '" + std::string(name) + "'");
}

const Variable& KernelRun::var(std::string_view name) const { return const_cast<KernelRun&>(*this).var(name); }

const Kernel& kernel(KernelId id) {
  switch (id) {
    case KernelId::BT: return detail::bt_kernel();
    case KernelId::SP: return detail::sp_kernel();
    case KernelId::CG: return detail::cg_kernel();
    case KernelId::MG: return detail::mg_kernel();
    case KernelId::LU: return detail::lu_kernel();
    case KernelId::FT: return detail::ft_kernel();
    case KernelId::EP: return detail::ep_kernel();
    case KernelId::IS: return detail::is_kernel();
  }
  throw std::invalid_argument("unknown kernel id");
}

KernelSpec build_kernel(KernelId id, ProblemClass cls) {
  if (cls != ProblemClass::S) {
    throw Error(Errc::UnsupportedClass, "only class S shapes are defined");
  }
  return kernel(id).spec();
}

State<double> to_state(const KernelRun& run) {
  State<double> s;
  s.reserve(run.state.size());
  for (const Variable& v : run.state) s.push_back(v.data);
  return s;
}

void from_state(KernelRun& run, State<double> state) {
  for (std::size_t i = 0; i < run.state.size(); ++i) run.state[i].data = std::move(state[i]);
}

KernelRun start_run(const KernelSpec& spec, std::uint64_t seed) {
  State<double> s;
  kernel(spec.id).initialize(s, seed);
  KernelRun run;
  run.kernel = spec.id;
  run.seed = seed;
  for (std::size_t i = 0; i < spec.checkpoint_vars.size(); ++i) {
    run.state.push_back(Variable{spec.checkpoint_vars[i], std::move(s[i])});
  }
  return run;
}

std::optional<RecordedStep> run_step(const KernelSpec& spec, KernelRun& run, ad::Tape* tape) {
  if (run.iter >= spec.loop_len) {
    throw Error(Errc::IterationOverflow,
                "iteration " + std::to_string(run.iter) + " of " + std::to_string(spec.loop_len));
  }
  const Kernel& k = kernel(spec.id);
  if (tape == nullptr) {
    State<double> s = to_state(run);
    k.step(s, run.iter);
    from_state(run, std::move(s));
    ++run.iter;
    return std::nullopt;
  }

  RecordedStep rec;
  State<ad::Var> s;
  for (const Variable& v : run.state) {
    std::vector<ad::Var> leaves;
    leaves.reserve(v.data.size());
    for (double x : v.data) leaves.push_back(tape->new_leaf(x));
    s.push_back(leaves);
  }
  rec.leaves = s;
  k.step(s, run.iter);
  rec.output = k.reduce(s);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t e = 0; e < s[i].size(); ++e) run.state[i].data[e] = s[i][e].value();
  }
  ++run.iter;
  return rec;
}

double finish(const KernelSpec& spec, KernelRun& run) {
  const Kernel& k = kernel(spec.id);
  State<double> s = to_state(run);
  for (; run.iter < spec.loop_len; ++run.iter) k.step(s, run.iter);
  const double out = k.reduce(s);
  from_state(run, std::move(s));
  run.output = out;
  return out;
}

double reference_output(const KernelSpec& spec, std::uint64_t seed) {
  static std::mutex mu;
  static std::map<std::pair<KernelId, std::uint64_t>, double> cache;
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find({spec.id, seed}); it != cache.end()) return it->second;
  }
  KernelRun run = start_run(spec, seed);
  const double out = finish(spec, run);
  std::lock_guard lock(mu);
  cache[{spec.id, seed}] = out;
  return out;
}

Verdict verify(const KernelSpec& spec, const KernelRun& run) {
  if (!run.output || run.iter != spec.loop_len) return Verdict::Fail;
  const double ref = reference_output(spec, run.seed);
  const double out = *run.output;
  return std::abs(out - ref) <= 1e-8 * std::max(1.0, std::abs(ref)) ? Verdict::Pass : Verdict::Fail;
}

}  // namespace scrutiny::kernels
