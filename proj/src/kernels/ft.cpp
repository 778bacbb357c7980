// FT: y[64][64][65] and sums[6], both dcomplex (two adjacent reals).
//
// The transform arrays carry one pad cell on the innermost axis; evolve and
// the checksum only run x over 0..63, so the x = 64 layer is dead storage.

#include <cmath>
#include <numbers>

#include "common.hpp"

namespace scrutiny::kernels::detail {

namespace {

constexpr std::size_t kNz = 64, kNy = 64, kNx = 64, kNxPad = 65;
constexpr std::size_t kElems = kNz * kNy * kNxPad;
constexpr std::size_t kSums = 6;
constexpr double kAlpha = 1e-6;

constexpr std::size_t at(std::size_t z, std::size_t y, std::size_t x) { return (z * kNy + y) * kNxPad + x; }

class FtKernel final : public KernelAdapter<FtKernel> {
 public:
  static constexpr bool kFloatSurface = true;

  FtKernel() : twiddle_(kNz * kNy * kNx), weight_re_(twiddle_.size()), weight_im_(twiddle_.size()) {
    const double ap = -4.0 * kAlpha * std::numbers::pi * std::numbers::pi;
    auto wave = [](std::size_t n, std::size_t extent) {
      const auto s = static_cast<double>(n);
      return n < extent / 2 ? s : s - static_cast<double>(extent);
    };
    Uniform rng(0x5EEDF7ull);
    for (std::size_t z = 0; z < kNz; ++z) {
      for (std::size_t y = 0; y < kNy; ++y) {
        for (std::size_t x = 0; x < kNx; ++x) {
          const double kz = wave(z, kNz), ky = wave(y, kNy), kx = wave(x, kNx);
          const std::size_t e = (z * kNy + y) * kNx + x;
          twiddle_[e] = std::exp(ap * (kx * kx + ky * ky + kz * kz));
          weight_re_[e] = rng.in(0.5, 1.5) / 4096.0;
          weight_im_[e] = rng.in(0.5, 1.5) / 4096.0;
        }
      }
    }
  }

  KernelSpec spec() const override {
    KernelSpec s;
    s.id = KernelId::FT;
    s.checkpoint_vars = {{"y", {kNz, kNy, kNxPad}, 2, Role::InputState, false},
                         {"sums", {kSums}, 2, Role::Accumulator, false}};
    s.loop_len = 6;
    s.loop_index_name = "kt";
    return s;
  }

  void initialize(State<double>& state, std::uint64_t seed) const override {
    Uniform rng(mix_seed(seed, static_cast<std::uint64_t>(KernelId::FT)));
    state.assign(2, {});
    state[0].resize(kElems * 2);
    for (double& v : state[0]) v = rng.in(0.5, 1.5);
    state[1].resize(kSums * 2);
    for (double& v : state[1]) v = rng.in(-1.0, 1.0);
  }

  // evolve + checksum: y *= twiddle, then sums[kt mod 6] += sum w * y^2.
  template <class T>
  void step(State<T>& state, int iter) const {
    std::vector<T>& y = state[0];
    std::vector<T>& sums = state[1];
    std::vector<T> re_terms, im_terms;
    re_terms.reserve(twiddle_.size());
    im_terms.reserve(twiddle_.size());
    for (std::size_t z = 0; z < kNz; ++z) {
      for (std::size_t yy = 0; yy < kNy; ++yy) {
        for (std::size_t x = 0; x < kNx; ++x) {
          const std::size_t e = (z * kNy + yy) * kNx + x;
          const std::size_t r = 2 * at(z, yy, x);
          const T a = y[r] * twiddle_[e];
          const T b = y[r + 1] * twiddle_[e];
          y[r] = a;
          y[r + 1] = b;
          re_terms.push_back(weight_re_[e] * (a * a - b * b));
          im_terms.push_back(weight_im_[e] * (a * b));
        }
      }
    }
    const std::size_t slot = 2 * (static_cast<std::size_t>(iter) % kSums);
    sums[slot] = sums[slot] + pairwise_sum(re_terms);
    sums[slot + 1] = sums[slot + 1] + pairwise_sum(im_terms);
  }

  template <class T>
  T reduce(const State<T>& state) const {
    const std::vector<T>& sums = state[1];
    T total(0.0);
    for (std::size_t l = 0; l < kSums; ++l) {
      const double dl = static_cast<double>(l);
      total = total + (1.0 + 0.1 * dl) * sums[2 * l] + (0.5 + 0.1 * dl) * sums[2 * l + 1];
    }
    return total;
  }

 private:
  std::vector<double> twiddle_;
  std::vector<double> weight_re_;
  std::vector<double> weight_im_;
};

}  // namespace

const Kernel& ft_kernel() {
  static const FtKernel k;
  return k;
}

}  // namespace scrutiny::kernels::detail
