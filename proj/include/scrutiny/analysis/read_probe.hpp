#pragma once

// Instrumented scalar for the read-tracking oracle.
//
// A Probe loaded from a checkpoint variable remembers which element it came
// from. Plain copies keep that origin; the first arithmetic use marks the
// element as read. Results of arithmetic carry no origin, so overwriting an
// element before use never counts as a read of its checkpointed value.
// This tracks syntactic use only and shares nothing with the AD engine.

#include <cmath>
#include <cstdint>
#include <vector>

namespace scrutiny::analysis {

class ReadLog {
 public:
  explicit ReadLog(std::size_t reals) : read_(reals, 0) {}

  void mark(std::int64_t origin) noexcept { read_[static_cast<std::size_t>(origin)] = 1; }
  bool was_read(std::size_t origin) const noexcept { return read_[origin] != 0; }
  std::size_t size() const noexcept { return read_.size(); }

 private:
  std::vector<std::uint8_t> read_;
};

struct Probe {
  double value = 0.0;
  ReadLog* log = nullptr;
  std::int64_t origin = -1;

  Probe() = default;
  Probe(double constant) : value(constant) {}  // NOLINT: implicit like ad::Var
  Probe(double v, ReadLog* l, std::int64_t o) : value(v), log(l), origin(o) {}
};

inline double consume(const Probe& p) noexcept {
  if (p.origin >= 0) p.log->mark(p.origin);
  return p.value;
}

inline Probe operator+(const Probe& a, const Probe& b) { return consume(a) + consume(b); }
inline Probe operator-(const Probe& a, const Probe& b) { return consume(a) - consume(b); }
inline Probe operator*(const Probe& a, const Probe& b) { return consume(a) * consume(b); }
inline Probe operator/(const Probe& a, const Probe& b) { return consume(a) / consume(b); }
inline Probe operator-(const Probe& a) { return -consume(a); }
inline Probe& operator+=(Probe& a, const Probe& b) { return a = a + b; }
inline Probe& operator-=(Probe& a, const Probe& b) { return a = a - b; }
inline Probe& operator*=(Probe& a, const Probe& b) { return a = a * b; }
inline Probe& operator/=(Probe& a, const Probe& b) { return a = a / b; }

inline Probe sqrt(const Probe& a) { return std::sqrt(consume(a)); }
inline Probe exp(const Probe& a) { return std::exp(consume(a)); }
inline Probe log(const Probe& a) { return std::log(consume(a)); }
inline Probe powi(const Probe& a, int n) { return std::pow(consume(a), n); }
inline Probe max(const Probe& x, const Probe& y) {
  const double a = consume(x);
  const double b = consume(y);
  return b > a ? b : a;
}

}  // namespace scrutiny::analysis
