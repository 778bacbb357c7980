#pragma once

// Tape-based reverse-mode automatic differentiation.
//
// Every primitive operation on an active Var appends one node to its Tape
// holding the parent ids and the local partial derivatives. A reverse sweep
// seeds the output adjoint with 1.0 and walks the tape in descending id
// order, so a leaf that has no path to the output keeps an adjoint of
// exactly 0.0.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace scrutiny::ad {

struct NodeId {
  std::uint32_t value = kNone;

  static constexpr std::uint32_t kNone = 0xFFFFFFFFu;

  constexpr bool valid() const noexcept { return value != kNone; }
  friend constexpr bool operator==(NodeId, NodeId) = default;
};

struct TapeNode {
  std::array<std::uint32_t, 2> parents{NodeId::kNone, NodeId::kNone};
  std::array<double, 2> partials{0.0, 0.0};

  int arity() const noexcept {
    return (parents[0] != NodeId::kNone) + (parents[1] != NodeId::kNone);
  }
};

class Tape;

/// Primal value paired with its tape node. A Var without a tape is a
/// constant and records nothing.
class Var {
 public:
  Var() = default;
  Var(double constant) : value_(constant) {}  // NOLINT: implicit by design of the kernels

  double value() const noexcept { return value_; }
  NodeId node() const noexcept { return node_; }
  Tape* tape() const noexcept { return tape_; }
  bool active() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(double value, Tape* tape, NodeId node) : value_(value), node_(node), tape_(tape) {}

  double value_ = 0.0;
  NodeId node_{};
  Tape* tape_ = nullptr;
};

enum class Op { Add, Sub, Mul, Div, Neg, Sqrt, Exp, Ln, Powi, Max };

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void reserve(std::size_t nodes) { nodes_.reserve(nodes); }
  std::size_t size() const noexcept { return nodes_.size(); }
  const TapeNode& node(NodeId id) const;

  Var new_leaf(double value);

  /// Records `op` on `args` (one for unary ops, two for binary ops). For
  /// Powi the exponent is passed separately. Throws Errc::DomainError for
  /// division by zero and sqrt/ln of non-positive values.
  Var apply(Op op, std::span<const Var> args, int exponent = 0);

  /// Adjoints of every node with respect to `output`, from one reverse sweep.
  std::vector<double> adjoints(const Var& output) const;

  /// d(output)/d(leaf) for each requested leaf. Throws Errc::UnknownNode for
  /// ids not on this tape.
  std::vector<double> gradient(const Var& output, std::span<const NodeId> leaves) const;

  // Recording primitives used by the operator overloads.
  Var record_unary(double value, const Var& a, double da);
  Var record_binary(double value, const Var& a, double da, const Var& b, double db);

 private:
  Var push(double value, std::uint32_t p0, double d0, std::uint32_t p1, double d1);

  std::vector<TapeNode> nodes_;
};

// Arithmetic. Mixed constant/active operands only record when at least one
// side is on a tape.
Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);
inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }
inline Var& operator/=(Var& a, const Var& b) { return a = a / b; }

Var sqrt(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var powi(const Var& a, int n);

/// max(x, y) with partials (1,0) when x >= y and (0,1) otherwise; ties go to
/// the first argument.
Var max(const Var& x, const Var& y);

}  // namespace scrutiny::ad
