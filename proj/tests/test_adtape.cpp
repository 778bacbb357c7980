#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <vector>

#include "scrutiny/adtape/tape.hpp"
#include "scrutiny/error.hpp"

using namespace scrutiny;
using ad::Op;
using ad::Tape;
using ad::Var;

namespace {

std::vector<double> grad(const Tape& t, const Var& out, const std::vector<Var>& leaves) {
  std::vector<ad::NodeId> ids;
  for (const Var& v : leaves) ids.push_back(v.node());
  return t.gradient(out, ids);
}

void expect_domain_error(auto&& fn) {
  try {
    fn();
    FAIL() << "no exception";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DomainError);
  }
}

}  // namespace

TEST(Tape, LeavesGetDenseIds) {
  Tape t;
  Var a = t.new_leaf(3.0);
  Var b = t.new_leaf(0.0);
  EXPECT_EQ(a.value(), 3.0);
  EXPECT_EQ(b.value(), 0.0);
  EXPECT_EQ(b.node().value, a.node().value + 1);
  EXPECT_EQ(t.node(a.node()).arity(), 0);
}

TEST(Tape, MulRecordsBothPartials) {
  Tape t;
  Var x = t.new_leaf(2.0);
  Var y = t.new_leaf(5.0);
  Var z = t.apply(Op::Mul, std::vector<Var>{x, y});
  EXPECT_EQ(z.value(), 10.0);
  const ad::TapeNode& n = t.node(z.node());
  EXPECT_EQ(n.arity(), 2);
  EXPECT_EQ(n.partials[0], 5.0);
  EXPECT_EQ(n.partials[1], 2.0);
}

TEST(Tape, SqrtPartial) {
  Tape t;
  Var x = t.new_leaf(4.0);
  Var r = t.apply(Op::Sqrt, std::vector<Var>{x});
  EXPECT_EQ(r.value(), 2.0);
  EXPECT_EQ(t.node(r.node()).arity(), 1);
  EXPECT_EQ(t.node(r.node()).partials[0], 0.25);
}

TEST(Tape, ParentsPrecedeChildren) {
  Tape t;
  Var x = t.new_leaf(1.5);
  Var y = t.new_leaf(-0.5);
  Var z = exp(x * y) + powi(x, 3) / (y - 2.0);
  for (std::uint32_t i = 0; i < t.size(); ++i) {
    const ad::TapeNode& n = t.node(ad::NodeId{i});
    for (std::uint32_t p : n.parents) {
      if (p != ad::NodeId::kNone) EXPECT_LT(p, i);
    }
  }
  EXPECT_TRUE(z.active());
}

TEST(Tape, ApplyChecksArity) {
  Tape t;
  Var x = t.new_leaf(1.0);
  expect_domain_error([&] { t.apply(Op::Add, std::vector<Var>{x}); });
  expect_domain_error([&] { t.apply(Op::Sqrt, std::vector<Var>{x, x}); });
}

TEST(Tape, DomainErrors) {
  Tape t;
  Var zero = t.new_leaf(0.0);
  Var neg = t.new_leaf(-1.0);
  Var one = t.new_leaf(1.0);
  expect_domain_error([&] { (void)(one / zero); });
  expect_domain_error([&] { (void)sqrt(zero); });
  expect_domain_error([&] { (void)sqrt(neg); });
  expect_domain_error([&] { (void)log(zero); });
  expect_domain_error([&] { (void)log(neg); });
}

TEST(Tape, UnusedLeafGetsExactZero) {
  Tape t;
  std::vector<Var> a{t.new_leaf(2.0), t.new_leaf(5.0), t.new_leaf(7.0)};
  Var f = a[0] * a[1];
  const auto g = grad(t, f, a);
  EXPECT_EQ(g[0], 5.0);
  EXPECT_EQ(g[1], 2.0);
  EXPECT_EQ(std::bit_cast<std::uint64_t>(g[2]), 0u);  // +0.0, not merely small
}

TEST(Tape, SumIsLinear) {
  Tape t;
  std::vector<Var> a;
  for (int i = 0; i < 5; ++i) a.push_back(t.new_leaf(0.1 * i));
  Var f = a[0];
  for (int i = 1; i < 5; ++i) f += a[static_cast<std::size_t>(i)];
  for (double g : grad(t, f, a)) EXPECT_EQ(g, 1.0);
}

TEST(Tape, NormMatchesFiniteDifference) {
  auto norm = [](double x, double y) { return std::sqrt(x * x + y * y); };
  Tape t;
  std::vector<Var> v{t.new_leaf(3.0), t.new_leaf(4.0)};
  Var f = sqrt(v[0] * v[0] + v[1] * v[1]);
  const auto g = grad(t, f, v);
  EXPECT_DOUBLE_EQ(g[0], 0.6);
  EXPECT_DOUBLE_EQ(g[1], 0.8);
  const double h = 1e-6 * 3.0;
  const double fd0 = (norm(3.0 + h, 4.0) - norm(3.0 - h, 4.0)) / (2 * h);
  const double h1 = 1e-6 * 4.0;
  const double fd1 = (norm(3.0, 4.0 + h1) - norm(3.0, 4.0 - h1)) / (2 * h1);
  EXPECT_LT(std::abs(fd0 - g[0]) / g[0], 1e-6);
  EXPECT_LT(std::abs(fd1 - g[1]) / g[1], 1e-6);
}

// A composite F = f(u(x), v(x)) with a constant a, in the spirit of the
// usual reverse-mode worked example:
//   u = a*x,  v = exp(x),  y = (u, v),  f = u*v + ln(v) - u/a^2
// so dF/dx = a*e^x + a*x*e^x + 1 - 1/a.
TEST(Tape, CompositeWithConstantMatchesChainRule) {
  for (double x0 : {-1.5, 0.0, 0.3, 2.0}) {
    for (double a0 : {0.5, 2.0, -3.0}) {
      Tape t;
      Var x = t.new_leaf(x0);
      const Var a(a0);  // constant: records nothing
      Var u = a * x;
      Var v = exp(x);
      Var f = u * v + log(v) - u / (a * a);
      const double closed = a0 * std::exp(x0) + a0 * x0 * std::exp(x0) + 1.0 - 1.0 / a0;
      const auto g = grad(t, f, {x});
      EXPECT_NEAR(g[0], closed, 1e-12 * std::max(1.0, std::abs(closed))) << "x=" << x0 << " a=" << a0;
      EXPECT_FALSE(a.active());
    }
  }
}

TEST(Tape, ConstantOperandsRecordNothing) {
  Tape t;
  Var x = t.new_leaf(2.0);
  const std::size_t before = t.size();
  Var c = Var(3.0) * Var(4.0);
  EXPECT_FALSE(c.active());
  EXPECT_EQ(t.size(), before);
  Var z = x * c;
  EXPECT_EQ(grad(t, z, {x})[0], 12.0);
}

TEST(Tape, MaxPartialsAndTieBreak) {
  Tape t;
  auto partials = [&](double xv, double yv) {
    Var x = t.new_leaf(xv);
    Var y = t.new_leaf(yv);
    Var m = max(x, y);
    const ad::TapeNode& n = t.node(m.node());
    return std::tuple{m.value(), n.partials[0], n.partials[1]};
  };
  EXPECT_EQ(partials(3, 2), std::tuple(3.0, 1.0, 0.0));
  EXPECT_EQ(partials(2, 3), std::tuple(3.0, 0.0, 1.0));
  EXPECT_EQ(partials(2, 2), std::tuple(2.0, 1.0, 0.0));
}

TEST(Tape, PowiAndNeg) {
  Tape t;
  Var x = t.new_leaf(1.5);
  Var f = -powi(x, 4);
  EXPECT_DOUBLE_EQ(f.value(), -std::pow(1.5, 4));
  EXPECT_DOUBLE_EQ(grad(t, f, {x})[0], -4 * std::pow(1.5, 3));
}

TEST(Tape, GradientIsRepeatableBitwise) {
  Tape t;
  std::vector<Var> v{t.new_leaf(0.7), t.new_leaf(1.3), t.new_leaf(-0.2)};
  Var f = exp(v[0] * v[1]) / (v[1] + 2.0) + sqrt(v[1]) * v[2];
  const auto g1 = grad(t, f, v);
  const auto g2 = grad(t, f, v);
  for (std::size_t i = 0; i < g1.size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(g1[i]), std::bit_cast<std::uint64_t>(g2[i]));
  }
}

TEST(Tape, UnknownNode) {
  Tape t;
  Var x = t.new_leaf(1.0);
  Var f = x * x;
  try {
    (void)t.gradient(f, std::vector<ad::NodeId>{ad::NodeId{999}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnknownNode);
  }
}

TEST(Tape, SizeLinearInOps) {
  Tape t;
  Var x = t.new_leaf(1.0);
  Var acc = x;
  for (int i = 0; i < 1000; ++i) acc = acc * 1.0001 + x;
  EXPECT_EQ(t.size(), 1u + 2000u);
}
