// EP and IS: checkpoint-library fixtures without an AD surface.
//
// EP's state is three accumulators over Gaussian pairs. IS's state is
// integer bookkeeping (stored as exact f64 values). Every element of either
// is consumed each iteration, so both are all-critical.

#include <cmath>
#include <cstdint>

#include "common.hpp"

namespace scrutiny::kernels::detail {

namespace {

constexpr std::size_t kAnnuli = 10;
constexpr int kPairsPerBatch = 1 << 12;
constexpr std::uint64_t kEpStream = 271828183ull;

class EpKernel final : public KernelAdapter<EpKernel> {
 public:
  static constexpr bool kFloatSurface = false;

  KernelSpec spec() const override {
    KernelSpec s;
    s.id = KernelId::EP;
    s.checkpoint_vars = {{"sx", {}, 1, Role::Accumulator, false},
                         {"sy", {}, 1, Role::Accumulator, false},
                         {"q", {kAnnuli}, 1, Role::Accumulator, false}};
    s.loop_len = 16;
    s.loop_index_name = "k";
    s.float_surface = false;
    return s;
  }

  void initialize(State<double>& state, std::uint64_t seed) const override {
    Uniform rng(mix_seed(seed, static_cast<std::uint64_t>(KernelId::EP)));
    state.assign(3, {});
    state[0] = {rng.in(-1.0, 1.0)};
    state[1] = {rng.in(-1.0, 1.0)};
    state[2].assign(kAnnuli, 0.0);
  }

  // Batch k draws from a stream keyed by k alone, so a restarted run
  // regenerates exactly the pairs it would have seen.
  template <class T>
  void step(State<T>& state, int iter) const {
    Uniform rng(mix_seed(kEpStream, static_cast<std::uint64_t>(iter)));
    double gsx = 0.0;
    double gsy = 0.0;
    std::vector<double> counts(kAnnuli, 0.0);
    for (int n = 0; n < kPairsPerBatch; ++n) {
      const double x1 = 2.0 * rng.next() - 1.0;
      const double x2 = 2.0 * rng.next() - 1.0;
      const double t = x1 * x1 + x2 * x2;
      if (t > 1.0 || t == 0.0) continue;
      const double f = std::sqrt(-2.0 * std::log(t) / t);
      const double gx = x1 * f;
      const double gy = x2 * f;
      const auto l = static_cast<std::size_t>(std::max(std::abs(gx), std::abs(gy)));
      if (l < kAnnuli) counts[l] += 1.0;
      gsx += gx;
      gsy += gy;
    }
    state[0][0] = state[0][0] + gsx;
    state[1][0] = state[1][0] + gsy;
    std::vector<T>& q = state[2];
    for (std::size_t l = 0; l < kAnnuli; ++l) q[l] = q[l] + counts[l];
  }

  template <class T>
  T reduce(const State<T>& state) const {
    T total = state[0][0] + 2.0 * state[1][0];
    for (std::size_t l = 0; l < kAnnuli; ++l) total = total + static_cast<double>(l + 1) * state[2][l];
    return total;
  }
};

constexpr std::size_t kKeys = 1u << 16;
constexpr std::size_t kBuckets = 1u << 9;
constexpr std::int64_t kMaxKey = 1 << 11;
constexpr int kShift = 11 - 9;
constexpr std::uint64_t kChecksumMask = (1ull << 52) - 1;
constexpr std::size_t kTestKeys = 5;

std::int64_t as_int(double v) { return static_cast<std::int64_t>(v); }

class IsKernel final : public KernelAdapter<IsKernel> {
 public:
  static constexpr bool kFloatSurface = false;

  KernelSpec spec() const override {
    KernelSpec s;
    s.id = KernelId::IS;
    s.checkpoint_vars = {{"passed_verification", {}, 1, Role::Accumulator, true},
                         {"key_array", {kKeys}, 1, Role::InputState, true},
                         {"bucket_ptrs", {kBuckets}, 1, Role::Accumulator, true}};
    s.loop_len = 10;
    s.loop_index_name = "iteration";
    s.float_surface = false;
    return s;
  }

  void initialize(State<double>& state, std::uint64_t seed) const override {
    Uniform rng(mix_seed(seed, static_cast<std::uint64_t>(KernelId::IS)));
    state.assign(3, {});
    state[0] = {0.0};
    state[1].resize(kKeys);
    for (double& v : state[1]) v = static_cast<double>(rng.bits() % static_cast<std::uint64_t>(kMaxKey));
    state[2].assign(kBuckets, 0.0);
  }

  // rank(): perturb two keys, bucket-count every key, accumulate bucket
  // pointers, then run the partial verification on a few test keys.
  template <class T>
  void step(State<T>& state, int iter) const {
    std::vector<T>& keys = state[1];
    std::vector<T>& ptrs = state[2];
    const auto it = static_cast<std::size_t>(iter);
    keys[it] = T(static_cast<double>(as_int(value_of(keys[it])) + iter));
    keys[it + 16] = T(static_cast<double>(as_int(value_of(keys[it + 16])) + (kMaxKey - iter)));

    std::vector<std::int64_t> counts(kBuckets, 0);
    std::vector<std::int64_t> key_ints(kKeys);
    for (std::size_t i = 0; i < kKeys; ++i) {
      key_ints[i] = as_int(value_of(keys[i]));
      ++counts[bucket_of(key_ints[i])];
    }
    std::int64_t running = 0;
    std::vector<std::int64_t> prefix(kBuckets);
    for (std::size_t b = 0; b < kBuckets; ++b) {
      prefix[b] = running;
      running += counts[b];
      ptrs[b] = T(static_cast<double>(as_int(value_of(ptrs[b])) + prefix[b]));
    }

    std::int64_t passed = as_int(value_of(state[0][0]));
    for (std::size_t t = 0; t < kTestKeys; ++t) {
      const std::size_t probe = (t * 7919 + it * 104729) % kKeys;
      const std::size_t b = bucket_of(key_ints[probe]);
      if (prefix[b] < static_cast<std::int64_t>(kKeys) && prefix[b] + counts[b] <= static_cast<std::int64_t>(kKeys)) {
        ++passed;
      }
    }
    state[0][0] = T(static_cast<double>(passed));
  }

  // full_verify stand-in: an odd-weighted checksum over every element,
  // reduced mod 2^52 so it is exact as a double.
  template <class T>
  T reduce(const State<T>& state) const {
    std::uint64_t sum = 7ull * static_cast<std::uint64_t>(as_int(value_of(state[0][0])));
    for (std::size_t i = 0; i < kKeys; ++i) {
      sum += (2 * i + 1) * static_cast<std::uint64_t>(as_int(value_of(state[1][i])));
    }
    for (std::size_t b = 0; b < kBuckets; ++b) {
      sum += (2 * b + 0x10001) * static_cast<std::uint64_t>(as_int(value_of(state[2][b])));
    }
    return T(static_cast<double>(sum & kChecksumMask));
  }

 private:
  static std::size_t bucket_of(std::int64_t key) {
    return static_cast<std::size_t>(static_cast<std::uint64_t>(key) >> kShift) % kBuckets;
  }
};

}  // namespace

const Kernel& ep_kernel() {
  static const EpKernel k;
  return k;
}

const Kernel& is_kernel() {
  static const IsKernel k;
  return k;
}

}  // namespace scrutiny::kernels::detail
