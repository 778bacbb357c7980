// LU: u[12][13][13][5], rho_i[12][13][13], qs[12][13][13], rsd[12][13][13][5].
//
// Components 0..3 of u, rsd, rho_i and qs are used over the full 12^3 grid.
// Component 4 of u only feeds the directional flux differences, each taken
// over the interior of the two other axes:
//   xi:   k,j in 1..10, i in 0..11
//   eta:  k,i in 1..10, j in 0..11
//   zeta: j,i in 1..10, k in 0..11

#include <array>

#include "common.hpp"

namespace scrutiny::kernels::detail {

namespace {

constexpr std::size_t kK = 12, kJ = 13, kI = 13, kM = 5;
constexpr std::size_t kGrid = 12;
constexpr std::size_t kReals4 = kK * kJ * kI * kM;
constexpr std::size_t kReals3 = kK * kJ * kI;

constexpr std::size_t at4(std::size_t k, std::size_t j, std::size_t i, std::size_t m) {
  return ((k * kJ + j) * kI + i) * kM + m;
}
constexpr std::size_t at3(std::size_t k, std::size_t j, std::size_t i) { return (k * kJ + j) * kI + i; }
constexpr std::size_t local(std::size_t k, std::size_t j, std::size_t i, std::size_t m) {
  return ((k * kGrid + j) * kGrid + i) * kM + m;
}

constexpr double kFlux = 0.05;
constexpr double kOmega = 0.1;

class LuKernel final : public KernelAdapter<LuKernel> {
 public:
  static constexpr bool kFloatSurface = true;

  LuKernel() : exact_(kReals4, 0.0) {
    for (std::size_t k = 0; k < kGrid; ++k) {
      for (std::size_t j = 0; j < kGrid; ++j) {
        for (std::size_t i = 0; i < kGrid; ++i) {
          for (std::size_t m = 0; m < kM; ++m) {
            const double x = static_cast<double>(i) / (kGrid - 1);
            const double y = static_cast<double>(j) / (kGrid - 1);
            const double z = static_cast<double>(k) / (kGrid - 1);
            exact_[at4(k, j, i, m)] = (m == 0 ? 1.5 : 0.1 * static_cast<double>(m)) + 0.2 * x * y - 0.1 * z;
          }
        }
      }
    }
  }

  KernelSpec spec() const override {
    KernelSpec s;
    s.id = KernelId::LU;
    s.checkpoint_vars = {{"u", {kK, kJ, kI, kM}, 1, Role::InputState, false},
                         {"rho_i", {kK, kJ, kI}, 1, Role::InputState, false},
                         {"qs", {kK, kJ, kI}, 1, Role::InputState, false},
                         {"rsd", {kK, kJ, kI, kM}, 1, Role::Residual, false}};
    s.loop_len = 6;
    s.loop_index_name = "istep";
    return s;
  }

  void initialize(State<double>& state, std::uint64_t seed) const override {
    Uniform rng(mix_seed(seed, static_cast<std::uint64_t>(KernelId::LU)));
    state.assign(4, {});
    state[0].resize(kReals4);
    for (std::size_t e = 0; e < kReals4; ++e) {
      state[0][e] = e % kM == 0 ? rng.in(1.0, 2.0) : rng.in(-0.5, 0.5);
    }
    state[1].resize(kReals3);
    state[2].resize(kReals3);
    for (std::size_t e = 0; e < kReals3; ++e) {
      state[1][e] = rng.in(0.5, 1.0);
      state[2][e] = rng.in(0.0, 0.4);
    }
    state[3].resize(kReals4);
    for (double& v : state[3]) v = rng.in(-0.1, 0.1);
  }

  template <class T>
  void step(State<T>& state, int /*iter*/) const {
    std::vector<T>& u = state[0];
    std::vector<T>& rho_i = state[1];
    std::vector<T>& qs = state[2];
    std::vector<T>& rsd = state[3];

    // New residual on the 12^3 grid.
    std::vector<T> d(kGrid * kGrid * kGrid * kM);
    for (std::size_t k = 0; k < kGrid; ++k) {
      for (std::size_t j = 0; j < kGrid; ++j) {
        for (std::size_t i = 0; i < kGrid; ++i) {
          const T& rho = rho_i[at3(k, j, i)];
          const T& q = qs[at3(k, j, i)];
          for (std::size_t m = 0; m < kM; ++m) {
            T v = 0.5 * rsd[at4(k, j, i, m)];
            if (m < 4) v = v + 0.1 * u[at4(k, j, i, m)] * rho + 0.02 * static_cast<double>(m + 1) * q;
            d[local(k, j, i, m)] = v;
          }
        }
      }
    }

    // Flux differences of the energy component.
    for (std::size_t k = 1; k + 1 < kGrid; ++k) {
      for (std::size_t j = 1; j + 1 < kGrid; ++j) {
        for (std::size_t i = 1; i + 1 < kGrid; ++i) {
          auto sq = [](const T& v) { return v * v; };
          const T xi = sq(u[at4(k, j, i + 1, 4)]) - sq(u[at4(k, j, i - 1, 4)]);
          const T eta = sq(u[at4(k, j + 1, i, 4)]) - sq(u[at4(k, j - 1, i, 4)]);
          const T zeta = sq(u[at4(k + 1, j, i, 4)]) - sq(u[at4(k - 1, j, i, 4)]);
          T& cell = d[local(k, j, i, 4)];
          cell = cell + kFlux * (xi + eta + zeta);
        }
      }
    }

    // SSOR-style update. The energy component only changes in the interior.
    for (std::size_t k = 0; k < kGrid; ++k) {
      for (std::size_t j = 0; j < kGrid; ++j) {
        for (std::size_t i = 0; i < kGrid; ++i) {
          const bool interior = k >= 1 && k + 1 < kGrid && j >= 1 && j + 1 < kGrid && i >= 1 && i + 1 < kGrid;
          for (std::size_t m = 0; m < kM; ++m) {
            const T& dv = d[local(k, j, i, m)];
            rsd[at4(k, j, i, m)] = dv;
            if (m < 4 || interior) u[at4(k, j, i, m)] = u[at4(k, j, i, m)] + kOmega * dv;
          }
          const T rho = 1.0 / u[at4(k, j, i, 0)];
          const T& u1 = u[at4(k, j, i, 1)];
          const T& u2 = u[at4(k, j, i, 2)];
          const T& u3 = u[at4(k, j, i, 3)];
          rho_i[at3(k, j, i)] = rho;
          qs[at3(k, j, i)] = 0.5 * (u1 * u1 + u2 * u2 + u3 * u3) * rho;
        }
      }
    }
  }

  // l2norm of rsd, error norm of components 0..3, and a qs*rho_i moment.
  template <class T>
  T reduce(const State<T>& state) const {
    const std::vector<T>& u = state[0];
    const std::vector<T>& rho_i = state[1];
    const std::vector<T>& qs = state[2];
    const std::vector<T>& rsd = state[3];
    const double n = static_cast<double>(kGrid * kGrid * kGrid);
    T total(0.0);
    std::vector<T> terms;
    terms.reserve(kGrid * kGrid * kGrid);
    for (std::size_t m = 0; m < kM; ++m) {
      terms.clear();
      for (std::size_t k = 0; k < kGrid; ++k)
        for (std::size_t j = 0; j < kGrid; ++j)
          for (std::size_t i = 0; i < kGrid; ++i) {
            const T& v = rsd[at4(k, j, i, m)];
            terms.push_back(v * v);
          }
      total = total + vsqrt(pairwise_sum(terms) / T(n));
    }
    for (std::size_t m = 0; m < 4; ++m) {
      terms.clear();
      for (std::size_t k = 0; k < kGrid; ++k)
        for (std::size_t j = 0; j < kGrid; ++j)
          for (std::size_t i = 0; i < kGrid; ++i) {
            const T e = u[at4(k, j, i, m)] - T(exact_[at4(k, j, i, m)]);
            terms.push_back(e * e);
          }
      total = total + vsqrt(pairwise_sum(terms) / T(n));
    }
    terms.clear();
    for (std::size_t k = 0; k < kGrid; ++k)
      for (std::size_t j = 0; j < kGrid; ++j)
        for (std::size_t i = 0; i < kGrid; ++i) terms.push_back(qs[at3(k, j, i)] * rho_i[at3(k, j, i)]);
    return total + 1e-3 * pairwise_sum(terms);
  }

 private:
  std::vector<double> exact_;
};

}  // namespace

const Kernel& lu_kernel() {
  static const LuKernel k;
  return k;
}

}  // namespace scrutiny::kernels::detail
