// MG: u[46480] and r[46480] hold a level hierarchy addressed through the
// offset table ir. The miniature keeps two levels: the 34^3 fine grid at
// ir[0] and an 18^3 coarse grid at ir[1]; the tail beyond the coarse level
// is allocation slack.
//
// u is used only on the fine grid (27-point stencils over the interior
// reach every fine cell). r's fine level is read by the restriction over
// indices 0..32 per axis; the coarse level is written before it is read.

#include <array>

#include "common.hpp"

namespace scrutiny::kernels::detail {

namespace {

constexpr std::size_t kLen = 46480;
constexpr std::size_t kFine = 34;
constexpr std::size_t kCoarse = 18;
constexpr std::array<std::size_t, 2> kIr = {0, kFine * kFine * kFine};

constexpr std::size_t fidx(std::size_t i3, std::size_t i2, std::size_t i1) { return (i3 * kFine + i2) * kFine + i1; }
constexpr std::size_t cidx(std::size_t i3, std::size_t i2, std::size_t i1) {
  return (i3 * kCoarse + i2) * kCoarse + i1;
}

// Smoother and operator weights by neighbor class: center, face, edge, corner.
constexpr std::array<double, 4> kSmooth = {-0.3, 0.03, 0.006, 0.002};
constexpr std::array<double, 4> kOperator = {-8.0 / 3.0, 0.05, 1.0 / 6.0, 1.0 / 12.0};
constexpr double kCoarseWeight = 0.3;

// Periodic ghost exchange on an n^3 block starting at `base`.
template <class T>
void comm3(std::vector<T>& a, std::size_t base, std::size_t n) {
  auto id = [&](std::size_t i3, std::size_t i2, std::size_t i1) { return base + (i3 * n + i2) * n + i1; };
  for (std::size_t i3 = 1; i3 + 1 < n; ++i3) {
    for (std::size_t i2 = 1; i2 + 1 < n; ++i2) {
      a[id(i3, i2, 0)] = a[id(i3, i2, n - 2)];
      a[id(i3, i2, n - 1)] = a[id(i3, i2, 1)];
    }
  }
  for (std::size_t i3 = 1; i3 + 1 < n; ++i3) {
    for (std::size_t i1 = 0; i1 < n; ++i1) {
      a[id(i3, 0, i1)] = a[id(i3, n - 2, i1)];
      a[id(i3, n - 1, i1)] = a[id(i3, 1, i1)];
    }
  }
  for (std::size_t i2 = 0; i2 < n; ++i2) {
    for (std::size_t i1 = 0; i1 < n; ++i1) {
      a[id(0, i2, i1)] = a[id(n - 2, i2, i1)];
      a[id(n - 1, i2, i1)] = a[id(1, i2, i1)];
    }
  }
}

// 27-point stencil on the fine grid at (i3,i2,i1), weights by neighbor class.
template <class T>
T stencil27(const std::vector<T>& a, std::size_t i3, std::size_t i2, std::size_t i1,
            const std::array<double, 4>& w) {
  T face(0.0), edge(0.0), corner(0.0);
  for (int d3 = -1; d3 <= 1; ++d3) {
    for (int d2 = -1; d2 <= 1; ++d2) {
      for (int d1 = -1; d1 <= 1; ++d1) {
        const int cls = (d3 != 0) + (d2 != 0) + (d1 != 0);
        if (cls == 0) continue;
        const T& v = a[fidx(i3 + d3, i2 + d2, i1 + d1)];
        if (cls == 1) face = face + v;
        else if (cls == 2) edge = edge + v;
        else corner = corner + v;
      }
    }
  }
  return w[0] * a[fidx(i3, i2, i1)] + w[1] * face + w[2] * edge + w[3] * corner;
}

class MgKernel final : public KernelAdapter<MgKernel> {
 public:
  static constexpr bool kFloatSurface = true;

  MgKernel() : rhs_(kFine * kFine * kFine, 0.0) {
    Uniform rng(0x5EED36ull);
    for (double& v : rhs_) v = rng.in(-0.1, 0.1);
  }

  KernelSpec spec() const override {
    KernelSpec s;
    s.id = KernelId::MG;
    s.checkpoint_vars = {{"u", {kLen}, 1, Role::InputState, false}, {"r", {kLen}, 1, Role::Residual, false}};
    s.loop_len = 4;
    s.loop_index_name = "it";
    return s;
  }

  void initialize(State<double>& state, std::uint64_t seed) const override {
    Uniform rng(mix_seed(seed, static_cast<std::uint64_t>(KernelId::MG)));
    state.assign(2, std::vector<double>(kLen));
    for (auto& var : state) {
      for (double& v : var) v = rng.in(-0.5, 0.5);
    }
  }

  // One two-level cycle: restrict r, smooth on the coarse level, correct and
  // smooth u on the fine level, then recompute the residual.
  template <class T>
  void step(State<T>& state, int /*iter*/) const {
    std::vector<T>& u = state[0];
    std::vector<T>& r = state[1];
    const std::size_t coarse = kIr[1];

    // rprj3: full weighting over fine offsets {2I-2, 2I-1, 2I}.
    constexpr std::array<double, 3> kW = {0.25, 0.5, 0.25};
    for (std::size_t j3 = 1; j3 + 1 < kCoarse; ++j3) {
      for (std::size_t j2 = 1; j2 + 1 < kCoarse; ++j2) {
        for (std::size_t j1 = 1; j1 + 1 < kCoarse; ++j1) {
          T acc(0.0);
          for (std::size_t d3 = 0; d3 < 3; ++d3) {
            for (std::size_t d2 = 0; d2 < 3; ++d2) {
              for (std::size_t d1 = 0; d1 < 3; ++d1) {
                const double w = kW[d3] * kW[d2] * kW[d1];
                acc = acc + w * r[kIr[0] + fidx(2 * j3 - 2 + d3, 2 * j2 - 2 + d2, 2 * j1 - 2 + d1)];
              }
            }
          }
          r[coarse + cidx(j3, j2, j1)] = acc;
        }
      }
    }
    comm3(r, coarse, kCoarse);

    // Coarse smoothing into a correction that is not part of the state.
    std::vector<T> correction(kCoarse * kCoarse * kCoarse, T(0.0));
    for (std::size_t j3 = 1; j3 + 1 < kCoarse; ++j3) {
      for (std::size_t j2 = 1; j2 + 1 < kCoarse; ++j2) {
        for (std::size_t j1 = 1; j1 + 1 < kCoarse; ++j1) {
          const T nb = r[coarse + cidx(j3 - 1, j2, j1)] + r[coarse + cidx(j3 + 1, j2, j1)] +
                       r[coarse + cidx(j3, j2 - 1, j1)] + r[coarse + cidx(j3, j2 + 1, j1)] +
                       r[coarse + cidx(j3, j2, j1 - 1)] + r[coarse + cidx(j3, j2, j1 + 1)];
          correction[cidx(j3, j2, j1)] = 0.4 * r[coarse + cidx(j3, j2, j1)] + 0.05 * nb;
        }
      }
    }

    // Interpolate the correction and smooth u on the fine interior.
    std::vector<T> fine(kFine * kFine * kFine);
    for (std::size_t i3 = 1; i3 + 1 < kFine; ++i3) {
      for (std::size_t i2 = 1; i2 + 1 < kFine; ++i2) {
        for (std::size_t i1 = 1; i1 + 1 < kFine; ++i1) {
          const T& c = u[kIr[0] + fidx(i3, i2, i1)];
          fine[fidx(i3, i2, i1)] = c + stencil27(u, i3, i2, i1, kSmooth) +
                                   kCoarseWeight * correction[cidx((i3 + 1) / 2, (i2 + 1) / 2, (i1 + 1) / 2)];
        }
      }
    }
    comm3(fine, 0, kFine);

    // resid: r = v - A u on the fine level.
    for (std::size_t i3 = 1; i3 + 1 < kFine; ++i3) {
      for (std::size_t i2 = 1; i2 + 1 < kFine; ++i2) {
        for (std::size_t i1 = 1; i1 + 1 < kFine; ++i1) {
          r[kIr[0] + fidx(i3, i2, i1)] = T(rhs_[fidx(i3, i2, i1)]) - stencil27(fine, i3, i2, i1, kOperator);
        }
      }
    }
    comm3(r, kIr[0], kFine);

    for (std::size_t i = 0; i < fine.size(); ++i) u[kIr[0] + i] = fine[i];
  }

  // norm2u3: RMS of the fine-level residual interior.
  template <class T>
  T reduce(const State<T>& state) const {
    const std::vector<T>& r = state[1];
    std::vector<T> terms;
    terms.reserve((kFine - 2) * (kFine - 2) * (kFine - 2));
    for (std::size_t i3 = 1; i3 + 1 < kFine; ++i3) {
      for (std::size_t i2 = 1; i2 + 1 < kFine; ++i2) {
        for (std::size_t i1 = 1; i1 + 1 < kFine; ++i1) {
          const T& v = r[kIr[0] + fidx(i3, i2, i1)];
          terms.push_back(v * v);
        }
      }
    }
    return vsqrt(pairwise_sum(terms) / T(static_cast<double>(terms.size())));
  }

 private:
  std::vector<double> rhs_;
};

}  // namespace

const Kernel& mg_kernel() {
  static const MgKernel k;
  return k;
}

}  // namespace scrutiny::kernels::detail
