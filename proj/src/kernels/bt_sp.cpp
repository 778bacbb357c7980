// BT and SP: u[12][13][13][5] on a 12^3 grid.
//
// The benchmarks declare u with one pad cell in j and i but size their
// loops with grid_points[] = 12, so every sweep and error_norm stays inside
// k, j, i in 0..11. The j = 12 and i = 12 planes are never touched.

#include <array>
#include <cmath>

#include "common.hpp"

namespace scrutiny::kernels::detail {

namespace {

constexpr std::size_t kK = 12, kJ = 13, kI = 13, kM = 5;
constexpr std::size_t kGrid = 12;
constexpr std::size_t kReals = kK * kJ * kI * kM;

constexpr std::size_t at(std::size_t k, std::size_t j, std::size_t i, std::size_t m) {
  return ((k * kJ + j) * kI + i) * kM + m;
}

struct GridCoeffs {
  double diffusion;
  double coupling;
  std::size_t coupled_offset;  // which component feeds the nonlinear term
  double forcing_scale;
  std::array<double, kM> exact_base;
  KernelId id;
};

template <const GridCoeffs& C>
class GridKernel final : public KernelAdapter<GridKernel<C>> {
 public:
  static constexpr bool kFloatSurface = true;

  GridKernel() : forcing_(kReals, 0.0), exact_(kReals, 0.0) {
    for (std::size_t k = 0; k < kGrid; ++k) {
      for (std::size_t j = 0; j < kGrid; ++j) {
        for (std::size_t i = 0; i < kGrid; ++i) {
          const double xi = static_cast<double>(i) / (kGrid - 1);
          const double eta = static_cast<double>(j) / (kGrid - 1);
          const double zeta = static_cast<double>(k) / (kGrid - 1);
          for (std::size_t m = 0; m < kM; ++m) {
            const double mm = static_cast<double>(m);
            exact_[at(k, j, i, m)] = C.exact_base[m] + 0.1 * xi + 0.07 * eta * (1.0 + 0.1 * mm) +
                                     0.05 * zeta * zeta - 0.02 * xi * eta * zeta;
            forcing_[at(k, j, i, m)] = C.forcing_scale * (xi - 0.5) * (eta + 0.25 * mm) * (1.0 - zeta);
          }
        }
      }
    }
  }

  KernelSpec spec() const override {
    KernelSpec s;
    s.id = C.id;
    s.checkpoint_vars = {{"u", {kK, kJ, kI, kM}, 1, Role::InputState, false}};
    s.loop_len = 6;
    s.loop_index_name = "step";
    return s;
  }

  void initialize(State<double>& state, std::uint64_t seed) const override {
    Uniform rng(mix_seed(seed, static_cast<std::uint64_t>(C.id)));
    state.assign(1, std::vector<double>(kReals));
    for (double& v : state[0]) v = rng.in(0.5, 1.5);
  }

  // Relaxation sweep over the interior 1..grid-2; neighbors reach 0..grid-1.
  template <class T>
  void step(State<T>& state, int /*iter*/) const {
    std::vector<T>& u = state[0];
    std::vector<T> next = u;
    for (std::size_t k = 1; k + 1 < kGrid; ++k) {
      for (std::size_t j = 1; j + 1 < kGrid; ++j) {
        for (std::size_t i = 1; i + 1 < kGrid; ++i) {
          for (std::size_t m = 0; m < kM; ++m) {
            const T& c = u[at(k, j, i, m)];
            const T neighbors = u[at(k - 1, j, i, m)] + u[at(k + 1, j, i, m)] + u[at(k, j - 1, i, m)] +
                                u[at(k, j + 1, i, m)] + u[at(k, j, i - 1, m)] + u[at(k, j, i + 1, m)];
            const T& partner = u[at(k, j, i, (m + C.coupled_offset) % kM)];
            next[at(k, j, i, m)] = c + C.diffusion * (neighbors - 6.0 * c) + C.coupling * c * partner -
                                   T(forcing_[at(k, j, i, m)]);
          }
        }
      }
    }
    u = std::move(next);
  }

  // error_norm: RMS deviation from the exact solution per component.
  template <class T>
  T reduce(const State<T>& state) const {
    const std::vector<T>& u = state[0];
    T total(0.0);
    std::vector<T> terms;
    terms.reserve(kGrid * kGrid * kGrid);
    for (std::size_t m = 0; m < kM; ++m) {
      terms.clear();
      for (std::size_t k = 0; k < kGrid; ++k) {
        for (std::size_t j = 0; j < kGrid; ++j) {
          for (std::size_t i = 0; i < kGrid; ++i) {
            const T d = u[at(k, j, i, m)] - T(exact_[at(k, j, i, m)]);
            terms.push_back(d * d);
          }
        }
      }
      total = total + vsqrt(pairwise_sum(terms) / T(static_cast<double>(terms.size())));
    }
    return total;
  }

 private:
  std::vector<double> forcing_;
  std::vector<double> exact_;
};

constexpr GridCoeffs kBt{0.08, 0.01, 1, 0.004, {1.0, 0.9, 1.1, 0.95, 1.2}, KernelId::BT};
constexpr GridCoeffs kSp{0.06, -0.015, 2, 0.003, {0.8, 1.05, 0.9, 1.15, 1.0}, KernelId::SP};

}  // namespace

const Kernel& bt_kernel() {
  static const GridKernel<kBt> k;
  return k;
}

const Kernel& sp_kernel() {
  static const GridKernel<kSp> k;
  return k;
}

}  // namespace scrutiny::kernels::detail
