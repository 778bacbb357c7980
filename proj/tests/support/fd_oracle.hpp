#pragma once

// Central finite differences of one iteration plus the verification
// reduction, evaluated in long double, checked against tape gradients.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "scrutiny/analysis/analysis.hpp"
#include "scrutiny/kernels/kernel.hpp"

namespace scrutiny::testkit {

struct GradientCheck {
  std::string variable;
  std::uint64_t element = 0;
  int iteration = 0;
  double ad = 0.0;  // largest-magnitude component
  double fd = 0.0;
  double rel_error = 0.0;
};

inline long double eval_step(const kernels::KernelSpec& spec, const kernels::State<long double>& at, int iter) {
  kernels::State<long double> s = at;
  const kernels::Kernel& k = kernels::kernel(spec.id);
  k.step(s, iter);
  return k.reduce(s);
}

/// Compares d(output)/d(element) from the tape with a central difference,
/// for `count` critical elements drawn at random over the first `k_iters`
/// iterations.
inline std::vector<GradientCheck> check_gradients(const kernels::KernelSpec& spec,
                                                  const analysis::CriticalityReport& report, std::size_t count,
                                                  int k_iters, std::uint64_t seed = 1) {
  std::vector<std::pair<std::size_t, std::uint64_t>> critical;
  for (std::size_t v = 0; v < spec.checkpoint_vars.size(); ++v) {
    const auto flags = report.variable(spec.checkpoint_vars[v].name).mask.to_flags();
    for (std::uint64_t e = 0; e < flags.size(); ++e) {
      if (flags[e]) critical.emplace_back(v, e);
    }
  }
  std::mt19937_64 rng(seed);
  std::vector<std::pair<std::size_t, std::uint64_t>> chosen;
  std::sample(critical.begin(), critical.end(), std::back_inserter(chosen), count, rng);

  // Gradients and long double states at the start of each iteration.
  std::vector<std::vector<double>> adjoints;
  std::vector<kernels::RecordedStep> steps;
  std::vector<kernels::State<long double>> states;
  std::vector<ad::Tape> tapes(static_cast<std::size_t>(k_iters));
  kernels::KernelRun run = kernels::start_run(spec, report.seed);
  for (int j = 0; j < k_iters; ++j) {
    kernels::State<long double> s;
    for (const auto& v : run.state) s.emplace_back(v.data.begin(), v.data.end());
    states.push_back(std::move(s));
    auto& tape = tapes[static_cast<std::size_t>(j)];
    steps.push_back(*kernels::run_step(spec, run, &tape));
    adjoints.push_back(tape.adjoints(steps.back().output));
  }

  std::vector<GradientCheck> out;
  std::uniform_int_distribution<int> pick_iter(0, k_iters - 1);
  for (const auto& [v, e] : chosen) {
    const auto comps = static_cast<std::size_t>(spec.checkpoint_vars[v].components);
    // Prefer an iteration where the element matters; every critical
    // element matters in at least one.
    int j = pick_iter(rng);
    auto grad = [&](int it, std::size_t c) {
      return adjoints[static_cast<std::size_t>(it)][steps[static_cast<std::size_t>(it)].leaves[v][e * comps + c].node().value];
    };
    auto nonzero = [&](int it) {
      for (std::size_t c = 0; c < comps; ++c) {
        if (grad(it, c) != 0.0) return true;
      }
      return false;
    };
    for (int t = 0; t < k_iters && !nonzero(j); ++t) j = (j + 1) % k_iters;

    GradientCheck g;
    g.variable = spec.checkpoint_vars[v].name;
    g.element = e;
    g.iteration = j;
    double scale = 0.0;
    double worst = 0.0;
    for (std::size_t c = 0; c < comps; ++c) {
      const double a = grad(j, c);
      kernels::State<long double> s = states[static_cast<std::size_t>(j)];
      long double& x = s[v][e * comps + c];
      const long double x0 = x;
      // Rounding in the reduction dominates below ~1e-6; truncation stays
      // far smaller than that at 1e-5.
      const long double h = 1e-5L * std::max(1.0L, std::fabs(x0));
      x = x0 + h;
      const long double fp = eval_step(spec, s, j);
      x = x0 - h;
      const long double fm = eval_step(spec, s, j);
      const double fd = static_cast<double>((fp - fm) / (2 * h));
      if (std::abs(a) >= scale) {
        scale = std::abs(a);
        g.ad = a;
        g.fd = fd;
      }
      worst = std::max(worst, std::abs(a - fd));
    }
    g.rel_error = scale == 0.0 ? worst : worst / scale;
    out.push_back(g);
  }
  return out;
}

}  // namespace scrutiny::testkit
