#include "scrutiny/analysis/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "scrutiny/error.hpp"

namespace scrutiny::analysis {

using kernels::KernelSpec;
using kernels::VariableDesc;

namespace {

void check_iterations(const KernelSpec& spec, int k) {
  if (k < 1 || k > spec.loop_len) {
    throw Error(Errc::IterationRange, "K = " + std::to_string(k) + " outside 1.." + std::to_string(spec.loop_len));
  }
}

// Scalars and integer bookkeeping are critical regardless of derivatives.
bool forced_critical(const VariableDesc& d) { return d.scalar() || d.integer; }

VariableCriticality classify(const VariableDesc& desc, std::vector<std::uint8_t> flags) {
  if (forced_critical(desc)) std::fill(flags.begin(), flags.end(), 1);
  VariableCriticality v;
  v.name = desc.name;
  v.scalar = desc.scalar();
  v.mask = mask::CriticalityMask::from_flags(std::span<const std::uint8_t>(flags));
  v.n_critical = v.mask.n_critical();
  v.n_uncritical = v.mask.n_uncritical();
  return v;
}

template <class Report>
const auto& find_by_name(const Report& items, std::string_view name) {
  for (const auto& v : items) {
    if (v.name == name) return v;
  }
  throw std::out_of_range("no variable '" + std::string(name) + "'");
}

}  // namespace

const VariableCriticality& CriticalityReport::variable(std::string_view name) const {
  return find_by_name(per_variable, name);
}

mask::MaskSet CriticalityReport::masks() const {
  mask::MaskSet set;
  for (const auto& v : per_variable) {
    if (!v.scalar) set.emplace(v.name, v.mask);
  }
  return set;
}

const VariableReads& ReadTracking::variable(std::string_view name) const { return find_by_name(per_variable, name); }

std::vector<std::uint64_t> VariableReads::never_read() const {
  std::vector<std::uint64_t> out;
  for (std::uint64_t i = 0; i < read.size(); ++i) {
    if (!read[i]) out.push_back(i);
  }
  return out;
}

CriticalityReport analyze(const KernelSpec& spec, int k_iterations, std::uint64_t seed, double threshold) {
  check_iterations(spec, k_iterations);
  if (!spec.float_surface) {
    throw Error(Errc::NoFloatSurface, std::string(kernels::to_string(spec.id)) + " has no floating-point surface");
  }

  const std::size_t nvars = spec.checkpoint_vars.size();
  std::vector<std::vector<std::uint8_t>> flags(nvars);
  CriticalityReport report;
  report.kernel = spec.id;
  report.seed = seed;
  report.iterations_analyzed = k_iterations;
  for (std::size_t v = 0; v < nvars; ++v) {
    flags[v].assign(spec.checkpoint_vars[v].elements(), 0);
    report.impacts.push_back({spec.checkpoint_vars[v].name, std::vector<double>(flags[v].size(), 0.0)});
  }

  kernels::KernelRun run = kernels::start_run(spec, seed);
  for (int j = 0; j < k_iterations; ++j) {
    ad::Tape tape;
    const auto rec = kernels::run_step(spec, run, &tape);
    const std::vector<double> adj = tape.adjoints(rec->output);
    for (std::size_t v = 0; v < nvars; ++v) {
      const auto comps = static_cast<std::size_t>(spec.checkpoint_vars[v].components);
      const std::vector<ad::Var>& leaves = rec->leaves[v];
      std::vector<double>& impact = report.impacts[v].derivs;
      for (std::size_t e = 0; e < flags[v].size(); ++e) {
        for (std::size_t c = 0; c < comps; ++c) {
          const double d = adj[leaves[e * comps + c].node().value];
          if (d != 0.0) impact[e] += std::abs(d);
          if (threshold > 0.0 ? std::abs(d) > threshold : d != 0.0) flags[v][e] = 1;
        }
      }
    }
  }

  for (std::size_t v = 0; v < nvars; ++v) {
    report.per_variable.push_back(classify(spec.checkpoint_vars[v], std::move(flags[v])));
  }
  return report;
}

CriticalityReport fiat_report(const KernelSpec& spec, std::uint64_t seed) {
  CriticalityReport report;
  report.kernel = spec.id;
  report.seed = seed;
  report.by_fiat = true;
  for (const VariableDesc& d : spec.checkpoint_vars) {
    report.per_variable.push_back(classify(d, std::vector<std::uint8_t>(d.elements(), 1)));
  }
  return report;
}

CriticalityReport analyze_or_fiat(const KernelSpec& spec, int k_iterations, std::uint64_t seed, double threshold) {
  if (!spec.float_surface) {
    check_iterations(spec, k_iterations);
    CriticalityReport r = fiat_report(spec, seed);
    r.iterations_analyzed = k_iterations;
    return r;
  }
  return analyze(spec, k_iterations, seed, threshold);
}

CriticalityReport report_from_masks(const KernelSpec& spec, const mask::MaskSet& masks, std::uint64_t seed) {
  CriticalityReport report;
  report.kernel = spec.id;
  report.seed = seed;
  report.by_fiat = !spec.float_surface;
  for (const VariableDesc& d : spec.checkpoint_vars) {
    if (d.scalar()) {
      report.per_variable.push_back(classify(d, {1}));
      continue;
    }
    auto it = masks.find(d.name);
    if (it == masks.end() || it->second.total() != d.elements()) {
      throw Error(Errc::MaskKernelMismatch,
                  "mask for " + std::string(kernels::to_string(spec.id)) + "." + d.name + " missing or mis-sized");
    }
    VariableCriticality v;
    v.name = d.name;
    v.mask = it->second;
    v.n_critical = v.mask.n_critical();
    v.n_uncritical = v.mask.n_uncritical();
    report.per_variable.push_back(std::move(v));
  }
  if (masks.size() != report.masks().size()) {
    throw Error(Errc::MaskKernelMismatch, "mask file lists variables the kernel does not checkpoint");
  }
  return report;
}

ReadTracking oracle_read_tracking(const KernelSpec& spec, int k_iterations, std::uint64_t seed) {
  check_iterations(spec, k_iterations);
  const kernels::Kernel& k = kernels::kernel(spec.id);
  const std::size_t nvars = spec.checkpoint_vars.size();

  std::vector<std::size_t> offset(nvars + 1, 0);
  for (std::size_t v = 0; v < nvars; ++v) offset[v + 1] = offset[v] + spec.checkpoint_vars[v].reals();

  ReadTracking out;
  out.kernel = spec.id;
  out.iterations = k_iterations;
  for (const VariableDesc& d : spec.checkpoint_vars) out.per_variable.push_back({d.name, std::vector<std::uint8_t>(d.elements(), 0)});

  kernels::KernelRun run = kernels::start_run(spec, seed);
  for (int j = 0; j < k_iterations; ++j) {
    ReadLog log(offset[nvars]);
    kernels::State<Probe> probes(nvars);
    for (std::size_t v = 0; v < nvars; ++v) {
      const std::vector<double>& data = run.state[v].data;
      probes[v].reserve(data.size());
      for (std::size_t r = 0; r < data.size(); ++r) {
        probes[v].emplace_back(data[r], &log, static_cast<std::int64_t>(offset[v] + r));
      }
    }
    k.step(probes, j);
    (void)k.reduce(probes);

    for (std::size_t v = 0; v < nvars; ++v) {
      const auto comps = static_cast<std::size_t>(spec.checkpoint_vars[v].components);
      auto& read = out.per_variable[v].read;
      for (std::size_t e = 0; e < read.size(); ++e) {
        for (std::size_t c = 0; c < comps; ++c) {
          if (log.was_read(offset[v] + e * comps + c)) read[e] = 1;
        }
      }
    }
    kernels::run_step(spec, run);
  }
  return out;
}

Perturbation oracle_perturbation(const KernelSpec& spec, std::string_view variable, std::uint64_t element,
                                 std::uint64_t seed) {
  const double baseline = kernels::reference_output(spec, seed);
  kernels::KernelRun run = kernels::start_run(spec, seed);
  kernels::Variable& var = run.var(variable);
  const auto comps = static_cast<std::uint64_t>(var.desc.components);
  if (element >= var.desc.elements()) {
    throw std::out_of_range("element " + std::to_string(element) + " of " + std::string(variable));
  }
  for (std::uint64_t c = 0; c < comps; ++c) var.data[element * comps + c] += 1.0;
  const double out = kernels::finish(spec, run);
  return std::bit_cast<std::uint64_t>(out) == std::bit_cast<std::uint64_t>(baseline) ? Perturbation::NoEffect
                                                                                       : Perturbation::Effect;
}

std::vector<PerturbationSample> sample_perturbations(const KernelSpec& spec, const CriticalityReport& report,
                                                     std::size_t count, std::uint64_t sample_seed,
                                                     unsigned threads) {
  std::vector<PerturbationSample> critical, uncritical;
  for (const VariableCriticality& v : report.per_variable) {
    const auto flags = v.mask.to_flags();
    for (std::uint64_t e = 0; e < flags.size(); ++e) {
      (flags[e] ? critical : uncritical).push_back({v.name, e, Perturbation::Effect});
    }
  }

  std::mt19937_64 rng(sample_seed);
  std::vector<PerturbationSample> chosen;
  const std::size_t half = count / 2;
  if (uncritical.size() <= half) {
    chosen = uncritical;
  } else {
    std::sample(uncritical.begin(), uncritical.end(), std::back_inserter(chosen), half, rng);
  }
  std::sample(critical.begin(), critical.end(), std::back_inserter(chosen), count - chosen.size(), rng);

  // Warm the memoized baseline before fanning out.
  (void)kernels::reference_output(spec, report.seed);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < chosen.size(); i = next++) {
      chosen[i].verdict = oracle_perturbation(spec, chosen[i].variable, chosen[i].element, report.seed);
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  return chosen;
}

Reconciliation reconcile(const CriticalityReport& report, const ReadTracking& reads,
                         std::span<const PerturbationSample> samples) {
  Reconciliation out;
  for (const VariableCriticality& v : report.per_variable) {
    const VariableReads& r = reads.variable(v.name);
    const auto flags = v.mask.to_flags();
    for (std::uint64_t e = 0; e < flags.size(); ++e) {
      ++out.elements_compared;
      const bool read = e < r.read.size() && r.read[e];
      if (!read && flags[e]) out.mismatches.push_back({v.name, e, "never read but classified critical"});
      if (read && !flags[e]) out.mismatches.push_back({v.name, e, "read but classified uncritical"});
    }
  }
  for (const PerturbationSample& s : samples) {
    ++out.samples_checked;
    const bool critical = report.variable(s.variable).mask.is_critical(s.element);
    const bool effect = s.verdict == Perturbation::Effect;
    if (critical != effect) {
      out.mismatches.push_back({s.variable, s.element,
                                critical ? "perturbation had no effect on a critical element"
                                         : "perturbation of an uncritical element changed the output"});
    }
  }
  return out;
}

std::string format_rate(double fraction) {
  const double pct = 100.0 * fraction;
  if (pct == 0.0) return "0";
  std::string s = fmt::format("{:#.3g}", pct);
  // "100." or "100.0" past three digits
  if (pct >= 100.0) return fmt::format("{:.0f}", pct);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

std::string report_csv(std::span<const CriticalityReport> reports, bool only_with_uncritical) {
  std::string out = "kernel,variable,total,critical,uncritical,uncritical_rate\n";
  for (const CriticalityReport& r : reports) {
    for (const VariableCriticality& v : r.per_variable) {
      if (v.scalar || (only_with_uncritical && v.n_uncritical == 0)) continue;
      out += fmt::format("{},{},{},{},{},{}\n", kernels::to_string(r.kernel), v.name, v.total(), v.n_critical,
                         v.n_uncritical, format_rate(v.uncritical_rate()));
    }
  }
  return out;
}

}  // namespace scrutiny::analysis
