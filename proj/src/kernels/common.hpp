#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <type_traits>
#include <vector>

#include "scrutiny/error.hpp"
#include "scrutiny/kernels/kernel.hpp"

namespace scrutiny::kernels::detail {

/// Pairwise (cascade) summation. Perturbing one term only changes the
/// log2(n) partial sums on its path, which keeps finite differences of
/// large reductions accurate.
template <class T>
T pairwise_sum(std::span<const T> terms) {
  if (terms.empty()) return T(0.0);
  if (terms.size() == 1) return terms[0];
  if (terms.size() <= 8) {
    T acc = terms[0];
    for (std::size_t i = 1; i < terms.size(); ++i) acc = acc + terms[i];
    return acc;
  }
  const std::size_t half = terms.size() / 2;
  return pairwise_sum(terms.first(half)) + pairwise_sum(terms.subspan(half));
}

template <class T>
T pairwise_sum(const std::vector<T>& terms) {
  return pairwise_sum(std::span<const T>(terms));
}

template <class T>
T vsqrt(const T& x) {
  using std::sqrt;
  return sqrt(x);
}

template <class T>
T vexp(const T& x) {
  using std::exp;
  return exp(x);
}

template <class T>
T vmax(const T& a, const T& b) {
  if constexpr (std::is_floating_point_v<T>) {
    return b > a ? b : a;
  } else {
    return max(a, b);
  }
}

/// Uniform reals from a 64-bit Mersenne Twister, mapped with the top 53 bits
/// so the sequence is identical across standard libraries.
class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : engine_(seed) {}

  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double in(double lo, double hi) { return lo + (hi - lo) * next(); }
  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  return seed * 0x9E3779B97F4A7C15ull ^ (salt + 0xD1B54A32D192ED03ull);
}

/// Plain value of a kernel scalar; for probes this counts as a read.
inline double value_of(double v) { return v; }
inline double value_of(const analysis::Probe& p) { return analysis::consume(p); }

/// Forwards the virtual overload set to Impl's member templates. Every
/// kernel supports double and Probe; long double and ad::Var need
/// Impl::kFloatSurface.
template <class Impl>
class KernelAdapter : public Kernel {
 public:
  void step(State<double>& s, int it) const override { impl().step(s, it); }
  double reduce(const State<double>& s) const override { return impl().reduce(s); }
  void step(State<long double>& s, int it) const override { generic_step(s, it); }
  long double reduce(const State<long double>& s) const override { return generic_reduce(s); }
  void step(State<ad::Var>& s, int it) const override { generic_step(s, it); }
  ad::Var reduce(const State<ad::Var>& s) const override { return generic_reduce(s); }
  void step(State<analysis::Probe>& s, int it) const override { impl().step(s, it); }
  analysis::Probe reduce(const State<analysis::Probe>& s) const override { return impl().reduce(s); }

 private:
  const Impl& impl() const { return static_cast<const Impl&>(*this); }

  template <class T>
  void generic_step(State<T>& s, int it) const {
    if constexpr (Impl::kFloatSurface) {
      impl().step(s, it);
    } else {
      (void)s;
      (void)it;
      throw Error(Errc::NoFloatSurface, std::string(to_string(impl().spec().id)));
    }
  }

  template <class T>
  T generic_reduce(const State<T>& s) const {
    if constexpr (Impl::kFloatSurface) {
      return impl().reduce(s);
    } else {
      (void)s;
      throw Error(Errc::NoFloatSurface, std::string(to_string(impl().spec().id)));
    }
  }
};

const Kernel& bt_kernel();
const Kernel& sp_kernel();
const Kernel& cg_kernel();
const Kernel& mg_kernel();
const Kernel& lu_kernel();
const Kernel& ft_kernel();
const Kernel& ep_kernel();
const Kernel& is_kernel();

}  // namespace scrutiny::kernels::detail
