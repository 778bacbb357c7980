// CG: x[NA + 2] with NA = 1400. Only x[0..NA-1] enter the solve and the
// zeta estimate; the two trailing pad elements are never used.

#include <algorithm>
#include <map>

#include "common.hpp"

namespace scrutiny::kernels::detail {

namespace {

constexpr std::size_t kNa = 1400;
constexpr std::size_t kLen = kNa + 2;
constexpr int kInnerIterations = 4;
constexpr double kShift = 10.0;

struct Csr {
  std::vector<std::size_t> row_start;
  std::vector<std::size_t> col;
  std::vector<double> val;
};

// Symmetric, strictly diagonally dominant, hence SPD.
Csr make_matrix() {
  std::vector<std::map<std::size_t, double>> rows(kNa);
  Uniform rng(0x5EEDC6ull);
  for (std::size_t i = 0; i < kNa; ++i) {
    for (int n = 0; n < 6; ++n) {
      const std::size_t j = static_cast<std::size_t>(rng.bits() % kNa);
      if (j == i) continue;
      const double v = rng.in(-0.1, 0.1);
      rows[i][j] += v;
      rows[j][i] += v;
    }
  }
  for (std::size_t i = 0; i < kNa; ++i) {
    double off = 0.0;
    for (const auto& [j, v] : rows[i]) off += std::abs(v);
    rows[i][i] = 1.0 + off + 0.01 * static_cast<double>(i % 7);
  }
  Csr a;
  a.row_start.push_back(0);
  for (const auto& r : rows) {
    for (const auto& [j, v] : r) {
      a.col.push_back(j);
      a.val.push_back(v);
    }
    a.row_start.push_back(a.col.size());
  }
  return a;
}

class CgKernel final : public KernelAdapter<CgKernel> {
 public:
  static constexpr bool kFloatSurface = true;

  CgKernel() : a_(make_matrix()) {}

  KernelSpec spec() const override {
    KernelSpec s;
    s.id = KernelId::CG;
    s.checkpoint_vars = {{"x", {kLen}, 1, Role::InputState, false}};
    s.loop_len = 6;
    s.loop_index_name = "it";
    return s;
  }

  void initialize(State<double>& state, std::uint64_t seed) const override {
    Uniform rng(mix_seed(seed, static_cast<std::uint64_t>(KernelId::CG)));
    state.assign(1, std::vector<double>(kLen));
    for (double& v : state[0]) v = rng.in(0.5, 1.5);
  }

  // conj_grad: a few CG iterations on A z = x, then x = z / ||z||.
  template <class T>
  void step(State<T>& state, int /*iter*/) const {
    std::vector<T>& x = state[0];
    std::vector<T> r(x.begin(), x.begin() + kNa);
    std::vector<T> p = r;
    std::vector<T> z(kNa, T(0.0));
    std::vector<T> q(kNa);
    T rho = dot(r, r);
    for (int it = 0; it < kInnerIterations; ++it) {
      matvec(p, q);
      const T alpha = rho / dot(p, q);
      for (std::size_t i = 0; i < kNa; ++i) {
        z[i] = z[i] + alpha * p[i];
        r[i] = r[i] - alpha * q[i];
      }
      const T rho_next = dot(r, r);
      const T beta = rho_next / rho;
      for (std::size_t i = 0; i < kNa; ++i) p[i] = r[i] + beta * p[i];
      rho = rho_next;
    }
    const T norm = vsqrt(dot(z, z));
    for (std::size_t i = 0; i < kNa; ++i) x[i] = z[i] / norm;
  }

  // zeta = shift + 1 / (x . A x)
  template <class T>
  T reduce(const State<T>& state) const {
    const std::vector<T> x(state[0].begin(), state[0].begin() + kNa);
    std::vector<T> ax(kNa);
    matvec(x, ax);
    return T(kShift) + T(1.0) / vmax(dot(x, ax), T(1e-30));
  }

 private:
  template <class T>
  T dot(const std::vector<T>& a, const std::vector<T>& b) const {
    std::vector<T> terms(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) terms[i] = a[i] * b[i];
    return pairwise_sum(terms);
  }

  template <class T>
  void matvec(const std::vector<T>& v, std::vector<T>& out) const {
    for (std::size_t i = 0; i < kNa; ++i) {
      T acc(0.0);
      for (std::size_t e = a_.row_start[i]; e < a_.row_start[i + 1]; ++e) acc = acc + a_.val[e] * v[a_.col[e]];
      out[i] = acc;
    }
  }

  Csr a_;
};

}  // namespace

const Kernel& cg_kernel() {
  static const CgKernel k;
  return k;
}

}  // namespace scrutiny::kernels::detail
