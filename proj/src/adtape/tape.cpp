#include "scrutiny/adtape/tape.hpp"

#include <cassert>
#include <cmath>
#include <string>

#include "scrutiny/error.hpp"

namespace scrutiny::ad {

namespace {

Tape* common_tape(const Var& a, const Var& b) {
  assert(!(a.active() && b.active()) || a.tape() == b.tape());
  return a.active() ? a.tape() : b.tape();
}

void require_positive(double x, const char* what) {
  if (!(x > 0.0)) {
    throw Error(Errc::DomainError, std::string(what) + " of non-positive value " + std::to_string(x));
  }
}

}  // namespace

const TapeNode& Tape::node(NodeId id) const {
  if (!id.valid() || id.value >= nodes_.size()) {
    throw Error(Errc::UnknownNode, "node " + std::to_string(id.value));
  }
  return nodes_[id.value];
}

Var Tape::push(double value, std::uint32_t p0, double d0, std::uint32_t p1, double d1) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  TapeNode& n = nodes_.emplace_back();
  n.parents = {p0, p1};
  n.partials = {d0, d1};
  return Var(value, this, NodeId{id});
}

Var Tape::new_leaf(double value) { return push(value, NodeId::kNone, 0.0, NodeId::kNone, 0.0); }

Var Tape::record_unary(double value, const Var& a, double da) {
  if (!a.active()) return Var(value);
  return push(value, a.node().value, da, NodeId::kNone, 0.0);
}

Var Tape::record_binary(double value, const Var& a, double da, const Var& b, double db) {
  if (a.active() && b.active()) return push(value, a.node().value, da, b.node().value, db);
  if (a.active()) return push(value, a.node().value, da, NodeId::kNone, 0.0);
  if (b.active()) return push(value, b.node().value, db, NodeId::kNone, 0.0);
  return Var(value);
}

Var Tape::apply(Op op, std::span<const Var> args, int exponent) {
  const bool binary = op == Op::Add || op == Op::Sub || op == Op::Mul || op == Op::Div || op == Op::Max;
  if (args.size() != (binary ? 2u : 1u)) {
    throw Error(Errc::DomainError, "wrong operand count");
  }
  for (const Var& v : args) {
    if (v.active() && v.tape() != this) throw Error(Errc::UnknownNode, "operand recorded on another tape");
  }
  const Var& a = args[0];
  Var r;
  switch (op) {
    case Op::Add: r = a + args[1]; break;
    case Op::Sub: r = a - args[1]; break;
    case Op::Mul: r = a * args[1]; break;
    case Op::Div: r = a / args[1]; break;
    case Op::Max: r = max(a, args[1]); break;
    case Op::Neg: r = -a; break;
    case Op::Sqrt: r = sqrt(a); break;
    case Op::Exp: r = exp(a); break;
    case Op::Ln: r = log(a); break;
    case Op::Powi: r = powi(a, exponent); break;
  }
  // All-constant operands fold to a constant; give the caller a node anyway.
  return r.active() ? r : new_leaf(r.value());
}

std::vector<double> Tape::adjoints(const Var& output) const {
  if (output.tape() != this) throw Error(Errc::UnknownNode, "output is not on this tape");
  const std::uint32_t out = output.node().value;
  if (out >= nodes_.size()) throw Error(Errc::UnknownNode, "output node " + std::to_string(out));

  std::vector<double> adj(nodes_.size(), 0.0);
  adj[out] = 1.0;
  for (std::uint32_t i = out + 1; i-- > 0;) {
    const double a = adj[i];
    if (a == 0.0) continue;
    const TapeNode& n = nodes_[i];
    if (n.parents[0] != NodeId::kNone) adj[n.parents[0]] += a * n.partials[0];
    if (n.parents[1] != NodeId::kNone) adj[n.parents[1]] += a * n.partials[1];
  }
  return adj;
}

std::vector<double> Tape::gradient(const Var& output, std::span<const NodeId> leaves) const {
  for (NodeId id : leaves) {
    if (!id.valid() || id.value >= nodes_.size()) {
      throw Error(Errc::UnknownNode, "leaf " + std::to_string(id.value));
    }
  }
  const std::vector<double> adj = adjoints(output);
  std::vector<double> grad;
  grad.reserve(leaves.size());
  for (NodeId id : leaves) grad.push_back(adj[id.value]);
  return grad;
}

Var operator+(const Var& a, const Var& b) {
  Tape* t = common_tape(a, b);
  const double v = a.value() + b.value();
  return t ? t->record_binary(v, a, 1.0, b, 1.0) : Var(v);
}

Var operator-(const Var& a, const Var& b) {
  Tape* t = common_tape(a, b);
  const double v = a.value() - b.value();
  return t ? t->record_binary(v, a, 1.0, b, -1.0) : Var(v);
}

Var operator*(const Var& a, const Var& b) {
  Tape* t = common_tape(a, b);
  const double v = a.value() * b.value();
  return t ? t->record_binary(v, a, b.value(), b, a.value()) : Var(v);
}

Var operator/(const Var& a, const Var& b) {
  if (b.value() == 0.0) throw Error(Errc::DomainError, "division by zero");
  Tape* t = common_tape(a, b);
  const double v = a.value() / b.value();
  return t ? t->record_binary(v, a, 1.0 / b.value(), b, -v / b.value()) : Var(v);
}

Var operator-(const Var& a) {
  return a.active() ? a.tape()->record_unary(-a.value(), a, -1.0) : Var(-a.value());
}

Var sqrt(const Var& a) {
  require_positive(a.value(), "sqrt");
  const double v = std::sqrt(a.value());
  return a.active() ? a.tape()->record_unary(v, a, 0.5 / v) : Var(v);
}

Var exp(const Var& a) {
  const double v = std::exp(a.value());
  return a.active() ? a.tape()->record_unary(v, a, v) : Var(v);
}

Var log(const Var& a) {
  require_positive(a.value(), "ln");
  const double v = std::log(a.value());
  return a.active() ? a.tape()->record_unary(v, a, 1.0 / a.value()) : Var(v);
}

Var powi(const Var& a, int n) {
  const double v = std::pow(a.value(), n);
  const double d = n == 0 ? 0.0 : n * std::pow(a.value(), n - 1);
  return a.active() ? a.tape()->record_unary(v, a, d) : Var(v);
}

Var max(const Var& x, const Var& y) {
  Tape* t = common_tape(x, y);
  const bool first = !(y.value() > x.value());
  const double v = first ? x.value() : y.value();
  return t ? t->record_binary(v, x, first ? 1.0 : 0.0, y, first ? 0.0 : 1.0) : Var(v);
}

}  // namespace scrutiny::ad
