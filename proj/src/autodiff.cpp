#include "config/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace config::ad {

namespace {

using NodePtr = std::shared_ptr<const Node>;

Var make(Op op, std::vector<NodePtr> inputs, Matrix value, double scalar = 0.0,
         Eigen::Index index = 0, Eigen::Index rows = 0, Eigen::Index cols = 0) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  bool needs = false;
  for (const auto& in : inputs) needs = needs || in->requires_grad;
  if (needs) {
    node->op = op;
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->scalar = scalar;
    node->index = index;
    node->rows = rows;
    node->cols = cols;
  }
  return Var(std::move(node));
}

void require_same_shape(const Var& a, const Var& b, const char* who) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(who) + ": shape mismatch (" +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
  }
}

}  // namespace

Var variable(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

Var constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var constant_scalar(double value) { return constant(Matrix::Constant(1, 1, value)); }

Var detach(const Var& v) { return constant(v.value()); }

Var operator+(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  return make(Op::kAdd, {a.node(), b.node()}, a.value() + b.value());
}

Var operator-(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  return make(Op::kSub, {a.node(), b.node()}, a.value() - b.value());
}

Var operator*(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  return make(Op::kMul, {a.node(), b.node()}, a.value().cwiseProduct(b.value()));
}

Var operator-(const Var& a) { return make(Op::kNeg, {a.node()}, -a.value()); }

Var operator*(double c, const Var& a) { return make(Op::kScale, {a.node()}, c * a.value(), c); }
Var operator*(const Var& a, double c) { return c * a; }

Var operator+(const Var& a, double c) {
  return make(Op::kAddScalar, {a.node()}, (a.value().array() + c).matrix(), c);
}
Var operator+(double c, const Var& a) { return a + c; }
Var operator-(const Var& a, double c) { return a + (-c); }
Var operator-(double c, const Var& a) { return (-a) + c; }

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                                std::to_string(b.rows()) + " differ");
  }
  return make(Op::kMatMul, {a.node(), b.node()}, a.value() * b.value());
}

Var transpose(const Var& a) { return make(Op::kTranspose, {a.node()}, a.value().transpose()); }

Var add_bias(const Var& x, const Var& b) {
  if (b.cols() != 1 || b.rows() != x.rows()) throw std::invalid_argument("add_bias: bad bias shape");
  return make(Op::kAddBias, {x.node(), b.node()}, x.value().colwise() + b.value().col(0));
}

Var row_sum(const Var& x) {
  return make(Op::kRowSum, {x.node()}, x.value().rowwise().sum());
}

Var broadcast_cols(const Var& v, Eigen::Index cols) {
  if (v.cols() != 1) throw std::invalid_argument("broadcast_cols: expects a column vector");
  return make(Op::kBroadcastCols, {v.node()}, v.value().replicate(1, cols), 0.0, 0, v.rows(),
              cols);
}

Var sum(const Var& x) {
  return make(Op::kSumAll, {x.node()}, Matrix::Constant(1, 1, x.value().sum()));
}

Var mean(const Var& x) {
  return (1.0 / static_cast<double>(x.value().size())) * sum(x);
}

Var broadcast_scalar(const Var& s, Eigen::Index rows, Eigen::Index cols) {
  if (s.rows() != 1 || s.cols() != 1) throw std::invalid_argument("broadcast_scalar: expects 1x1");
  return make(Op::kBroadcastScalar, {s.node()}, Matrix::Constant(rows, cols, s.scalar()), 0.0, 0,
              rows, cols);
}

Var tanh(const Var& x) { return make(Op::kTanh, {x.node()}, x.value().array().tanh().matrix()); }
Var sin(const Var& x) { return make(Op::kSin, {x.node()}, x.value().array().sin().matrix()); }
Var cos(const Var& x) { return make(Op::kCos, {x.node()}, x.value().array().cos().matrix()); }
Var exp(const Var& x) { return make(Op::kExp, {x.node()}, x.value().array().exp().matrix()); }
Var square(const Var& x) {
  return make(Op::kSquare, {x.node()}, x.value().array().square().matrix());
}

Var row(const Var& x, Eigen::Index i) {
  if (i < 0 || i >= x.rows()) throw std::out_of_range("row: index out of range");
  return make(Op::kRow, {x.node()}, x.value().row(i), 0.0, i, x.rows());
}

Var pad_row(const Var& x, Eigen::Index i, Eigen::Index rows) {
  if (x.rows() != 1 || i < 0 || i >= rows) throw std::invalid_argument("pad_row: bad arguments");
  Matrix out = Matrix::Zero(rows, x.cols());
  out.row(i) = x.value();
  return make(Op::kPadRow, {x.node()}, std::move(out), 0.0, i, rows);
}

namespace {

// Backends for the shared backward rules: plain matrices or graph nodes.
struct MatrixOps {
  using T = Matrix;
  static const Matrix& input(const Node& n, std::size_t k) { return n.inputs[k]->value; }
  static const Matrix& self(const NodePtr& n) { return n->value; }
  static Matrix add(const Matrix& a, const Matrix& b) { return a + b; }
  static Matrix neg(const Matrix& a) { return -a; }
  static Matrix mul(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b); }
  static Matrix scale(const Matrix& a, double c) { return c * a; }
  static Matrix matmul_abt(const Matrix& a, const Matrix& b) { return a * b.transpose(); }
  static Matrix matmul_atb(const Matrix& a, const Matrix& b) { return a.transpose() * b; }
  static Matrix transpose(const Matrix& a) { return a.transpose(); }
  static Matrix row_sum(const Matrix& a) { return a.rowwise().sum(); }
  static Matrix broadcast_cols(const Matrix& a, Eigen::Index c) { return a.replicate(1, c); }
  static Matrix sum(const Matrix& a) { return Matrix::Constant(1, 1, a.sum()); }
  static Matrix broadcast_scalar(const Matrix& s, Eigen::Index r, Eigen::Index c) {
    return Matrix::Constant(r, c, s(0, 0));
  }
  static Matrix tanh_back(const Matrix& g, const Matrix& y) {
    return (g.array() * (1.0 - y.array().square())).matrix();
  }
  static Matrix sin_back(const Matrix& g, const Matrix& x) {
    return (g.array() * x.array().cos()).matrix();
  }
  static Matrix cos_back(const Matrix& g, const Matrix& x) {
    return (-g.array() * x.array().sin()).matrix();
  }
  static Matrix row(const Matrix& a, Eigen::Index i) { return a.row(i); }
  static Matrix pad_row(const Matrix& a, Eigen::Index i, Eigen::Index rows) {
    Matrix out = Matrix::Zero(rows, a.cols());
    out.row(i) = a;
    return out;
  }
};

struct GraphOps {
  using T = Var;
  static Var input(const Node& n, std::size_t k) { return Var(n.inputs[k]); }
  static Var self(const NodePtr& n) { return Var(n); }
  static Var add(const Var& a, const Var& b) { return a + b; }
  static Var neg(const Var& a) { return -a; }
  static Var mul(const Var& a, const Var& b) { return a * b; }
  static Var scale(const Var& a, double c) { return c * a; }
  static Var matmul_abt(const Var& a, const Var& b) { return ad::matmul(a, ad::transpose(b)); }
  static Var matmul_atb(const Var& a, const Var& b) { return ad::matmul(ad::transpose(a), b); }
  static Var transpose(const Var& a) { return ad::transpose(a); }
  static Var row_sum(const Var& a) { return ad::row_sum(a); }
  static Var broadcast_cols(const Var& a, Eigen::Index c) { return ad::broadcast_cols(a, c); }
  static Var sum(const Var& a) { return ad::sum(a); }
  static Var broadcast_scalar(const Var& s, Eigen::Index r, Eigen::Index c) {
    return ad::broadcast_scalar(s, r, c);
  }
  static Var tanh_back(const Var& g, const Var& y) { return g * (1.0 - ad::square(y)); }
  static Var sin_back(const Var& g, const Var& x) { return g * ad::cos(x); }
  static Var cos_back(const Var& g, const Var& x) { return -(g * ad::sin(x)); }
  static Var row(const Var& a, Eigen::Index i) { return ad::row(a, i); }
  static Var pad_row(const Var& a, Eigen::Index i, Eigen::Index rows) {
    return ad::pad_row(a, i, rows);
  }
};

// Nodes reachable from `root` through differentiable edges, inputs before users.
std::vector<NodePtr> topological_order(const NodePtr& root) {
  std::vector<NodePtr> order;
  if (!root->requires_grad) return order;
  std::unordered_set<const Node*> seen;
  std::vector<std::pair<NodePtr, std::size_t>> stack;
  stack.emplace_back(root, 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      const NodePtr& child = node->inputs[next++];
      if (child->requires_grad && seen.insert(child.get()).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

template <class Ops>
class Backward {
 public:
  using T = typename Ops::T;

  void accumulate(const Node* node, T value) {
    auto it = adjoints_.find(node);
    if (it == adjoints_.end()) {
      adjoints_.emplace(node, std::move(value));
    } else {
      it->second = Ops::add(it->second, value);
    }
  }

  const T* find(const Node* node) const {
    auto it = adjoints_.find(node);
    return it == adjoints_.end() ? nullptr : &it->second;
  }

  // Propagates `seed` from `root`, visiting only edges that lead to a `targets` node.
  void run(const NodePtr& root, T seed, std::span<const Var> targets) {
    const auto order = topological_order(root);
    if (order.empty()) return;
    for (const Var& t : targets) relevant_.insert(t.node().get());
    for (const NodePtr& node : order) {
      for (const auto& in : node->inputs) {
        if (relevant_.count(in.get())) {
          relevant_.insert(node.get());
          break;
        }
      }
    }
    if (!relevant_.count(root.get())) return;
    accumulate(root.get(), std::move(seed));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const NodePtr& node = *it;
      if (node->op == Op::kLeaf) continue;
      auto found = adjoints_.find(node.get());
      if (found == adjoints_.end()) continue;
      // Copy: accumulation below may rehash the map.
      const T g = found->second;
      propagate(node, g);
    }
  }

 private:
  bool wants(const Node& n, std::size_t k) const { return relevant_.count(n.inputs[k].get()) > 0; }

  void propagate(const NodePtr& node_ptr, const T& g) {
    const Node& n = *node_ptr;
    auto push = [&](std::size_t k, T value) { accumulate(n.inputs[k].get(), std::move(value)); };
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kAdd:
        if (wants(n, 0)) push(0, g);
        if (wants(n, 1)) push(1, g);
        break;
      case Op::kSub:
        if (wants(n, 0)) push(0, g);
        if (wants(n, 1)) push(1, Ops::neg(g));
        break;
      case Op::kMul:
        if (wants(n, 0)) push(0, Ops::mul(g, Ops::input(n, 1)));
        if (wants(n, 1)) push(1, Ops::mul(g, Ops::input(n, 0)));
        break;
      case Op::kNeg:
        push(0, Ops::neg(g));
        break;
      case Op::kScale:
        push(0, Ops::scale(g, n.scalar));
        break;
      case Op::kAddScalar:
        push(0, g);
        break;
      case Op::kMatMul:
        if (wants(n, 0)) push(0, Ops::matmul_abt(g, Ops::input(n, 1)));
        if (wants(n, 1)) push(1, Ops::matmul_atb(Ops::input(n, 0), g));
        break;
      case Op::kTranspose:
        push(0, Ops::transpose(g));
        break;
      case Op::kAddBias:
        if (wants(n, 0)) push(0, g);
        if (wants(n, 1)) push(1, Ops::row_sum(g));
        break;
      case Op::kRowSum:
        push(0, Ops::broadcast_cols(g, n.inputs[0]->value.cols()));
        break;
      case Op::kBroadcastCols:
        push(0, Ops::row_sum(g));
        break;
      case Op::kSumAll:
        push(0, Ops::broadcast_scalar(g, n.inputs[0]->value.rows(), n.inputs[0]->value.cols()));
        break;
      case Op::kBroadcastScalar:
        push(0, Ops::sum(g));
        break;
      case Op::kTanh:
        push(0, Ops::tanh_back(g, Ops::self(node_ptr)));
        break;
      case Op::kSin:
        push(0, Ops::sin_back(g, Ops::input(n, 0)));
        break;
      case Op::kCos:
        push(0, Ops::cos_back(g, Ops::input(n, 0)));
        break;
      case Op::kExp:
        push(0, Ops::mul(g, Ops::self(node_ptr)));
        break;
      case Op::kSquare:
        push(0, Ops::scale(Ops::mul(g, Ops::input(n, 0)), 2.0));
        break;
      case Op::kRow:
        push(0, Ops::pad_row(g, n.index, n.rows));
        break;
      case Op::kPadRow:
        push(0, Ops::row(g, n.index));
        break;
    }
  }

  std::unordered_map<const Node*, T> adjoints_;
  std::unordered_set<const Node*> relevant_;
};

void require_seed_shape(const Var& output, const Var& seed) {
  if (seed.rows() != output.rows() || seed.cols() != output.cols()) {
    throw std::invalid_argument("grad: seed shape does not match output");
  }
}

}  // namespace

std::vector<Var> grad(const Var& output, std::span<const Var> wrt, const Var& seed) {
  require_seed_shape(output, seed);
  Backward<GraphOps> backward;
  backward.run(output.node(), seed, wrt);
  std::vector<Var> result;
  result.reserve(wrt.size());
  for (const Var& w : wrt) {
    const Var* g = backward.find(w.node().get());
    result.push_back(g ? *g : constant(Matrix::Zero(w.rows(), w.cols())));
  }
  return result;
}

std::vector<Var> grad(const Var& output, std::span<const Var> wrt) {
  return grad(output, wrt, constant(Matrix::Ones(output.rows(), output.cols())));
}

std::vector<Matrix> gradients(const Var& output, std::span<const Var> wrt) {
  Backward<MatrixOps> backward;
  backward.run(output.node(), Matrix::Ones(output.rows(), output.cols()), wrt);
  std::vector<Matrix> result;
  result.reserve(wrt.size());
  for (const Var& w : wrt) {
    const Matrix* g = backward.find(w.node().get());
    result.push_back(g ? *g : Matrix::Zero(w.rows(), w.cols()));
  }
  return result;
}

std::size_t graph_size(const Var& v) {
  std::unordered_set<const Node*> seen;
  std::vector<const Node*> stack{v.node().get()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    for (const auto& in : n->inputs) stack.push_back(in.get());
  }
  return seen.size();
}

Var input_gradient(const Var& field, const Var& inputs) {
  if (field.rows() != 1 || field.cols() != inputs.cols()) {
    throw std::invalid_argument("input_gradient: field must be 1 x n over the input batch");
  }
  const Var wrt[] = {inputs};
  return grad(field, wrt).front();
}

Var input_derivative(const Var& field, const Var& inputs, Eigen::Index coord, int order) {
  if (order != 1 && order != 2) {
    throw std::invalid_argument("input_derivative: unsupported order " + std::to_string(order));
  }
  Var d = row(input_gradient(field, inputs), coord);
  if (order == 2) d = row(input_gradient(d, inputs), coord);
  return d;
}

}  // namespace config::ad
