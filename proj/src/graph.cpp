#include "lanecast/graph.hpp"

#include <cmath>
#include <stdexcept>

#include "lanecast/kernels.hpp"

namespace lanecast::ad {

namespace {
std::string shape_str(int r, int c) {
  return std::to_string(r) + "x" + std::to_string(c);
}
}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kAffine: return "affine";
    case Op::kAddBias: return "add_bias";
    case Op::kMatmul: return "matmul";
    case Op::kMatmulBT: return "matmul_bt";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kRelu: return "relu";
    case Op::kSoftmaxRows: return "softmax_rows";
    case Op::kConcatRows: return "concat_rows";
    case Op::kConcatCols: return "concat_cols";
    case Op::kSliceRows: return "slice_rows";
    case Op::kSliceCols: return "slice_cols";
    case Op::kReshape: return "reshape";
    case Op::kGatherRows: return "gather_rows";
    case Op::kScatterAddRows: return "scatter_add_rows";
    case Op::kSumAll: return "sum_all";
    case Op::kMeanAll: return "mean_all";
    case Op::kConv1d: return "conv1d";
    case Op::kL1Distance: return "l1_distance";
    case Op::kCrossEntropy: return "cross_entropy";
  }
  return "?";
}

void Graph::check_var(Var v) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("Graph: variable does not belong to this graph");
}

void Graph::shape_error(const char* op, Var a, Var b) const {
  const Node& na = node(a);
  std::string msg = std::string(op) + ": incompatible shapes " +
                    shape_str(na.rows, na.cols);
  if (b.valid()) {
    const Node& nb = node(b);
    msg += " and " + shape_str(nb.rows, nb.cols);
  }
  throw std::invalid_argument(msg);
}

void Graph::reset() {
  nodes_.clear();
  backward_done_ = false;
}

Var Graph::push(Node&& n) {
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Graph::input(int rows, int cols, std::span<const double> values,
                 bool requires_grad) {
  if (rows <= 0 || cols <= 0)
    throw std::invalid_argument("input: dimensions must be positive");
  if (values.size() != static_cast<std::size_t>(rows) * cols)
    throw std::invalid_argument("input: value count does not match " +
                                shape_str(rows, cols));
  Node n;
  n.rows = rows;
  n.cols = cols;
  n.requires_grad = requires_grad;
  n.val.assign(values.begin(), values.end());
  return push(std::move(n));
}

Var Graph::constant(int rows, int cols, std::span<const double> values) {
  return input(rows, cols, values, false);
}

Var Graph::scalar(double v) { return input(1, 1, std::span(&v, 1), false); }

Var Graph::zeros(int rows, int cols, bool requires_grad) {
  std::vector<double> z(static_cast<std::size_t>(rows) * cols, 0.0);
  return input(rows, cols, z, requires_grad);
}

Var Graph::bind(Tensor& t) {
  Var v = input(t.rows(), t.cols(), t.values, t.requires_grad);
  t.node_id = v.id;
  return v;
}

Var Graph::add(Var a, Var b) {
  const Node &na = node(a), &nb = node(b);
  if (na.rows != nb.rows || na.cols != nb.cols) shape_error("add", a, b);
  Node n;
  n.rows = na.rows;
  n.cols = na.cols;
  n.op = Op::kAdd;
  n.requires_grad = na.requires_grad || nb.requires_grad;
  n.in0 = a.id;
  n.in1 = b.id;
  n.val.resize(na.val.size());
  for (std::size_t i = 0; i < n.val.size(); ++i)
    n.val[i] = na.val[i] + nb.val[i];
  return push(std::move(n));
}

Var Graph::sub(Var a, Var b) {
  const Node &na = node(a), &nb = node(b);
  if (na.rows != nb.rows || na.cols != nb.cols) shape_error("sub", a, b);
  Node n;
  n.rows = na.rows;
  n.cols = na.cols;
  n.op = Op::kSub;
  n.requires_grad = na.requires_grad || nb.requires_grad;
  n.in0 = a.id;
  n.in1 = b.id;
  n.val.resize(na.val.size());
  for (std::size_t i = 0; i < n.val.size(); ++i)
    n.val[i] = na.val[i] - nb.val[i];
  return push(std::move(n));
}

Var Graph::mul(Var a, Var b) {
  const Node &na = node(a), &nb = node(b);
  if (na.rows != nb.rows || na.cols != nb.cols) shape_error("mul", a, b);
  Node n;
  n.rows = na.rows;
  n.cols = na.cols;
  n.op = Op::kMul;
  n.requires_grad = na.requires_grad || nb.requires_grad;
  n.in0 = a.id;
  n.in1 = b.id;
  n.val.resize(na.val.size());
  for (std::size_t i = 0; i < n.val.size(); ++i)
    n.val[i] = na.val[i] * nb.val[i];
  return push(std::move(n));
}

Var Graph::affine(Var a, double scale, double shift) {
  const Node& na = node(a);
  Node n;
  n.rows = na.rows;
  n.cols = na.cols;
  n.op = Op::kAffine;
  n.requires_grad = na.requires_grad;
  n.in0 = a.id;
  n.s0 = scale;
  n.s1 = shift;
  n.val.resize(na.val.size());
  for (std::size_t i = 0; i < n.val.size(); ++i)
    n.val[i] = scale * na.val[i] + shift;
  return push(std::move(n));
}

Var Graph::add_bias(Var m, Var bias) {
  const Node &nm = node(m), &nb = node(bias);
  if (nb.rows != 1 || nb.cols != nm.cols) shape_error("add_bias", m, bias);
  Node n;
  n.rows = nm.rows;
  n.cols = nm.cols;
  n.op = Op::kAddBias;
  n.requires_grad = nm.requires_grad || nb.requires_grad;
  n.in0 = m.id;
  n.in1 = bias.id;
  n.val.resize(nm.val.size());
  for (int r = 0; r < nm.rows; ++r) {
    const double* src = nm.val.data() + static_cast<long>(r) * nm.cols;
    double* dst = n.val.data() + static_cast<long>(r) * nm.cols;
    for (int c = 0; c < nm.cols; ++c) dst[c] = src[c] + nb.val[c];
  }
  return push(std::move(n));
}

Var Graph::matmul(Var a, Var b) {
  const Node &na = node(a), &nb = node(b);
  if (na.cols != nb.rows) shape_error("matmul", a, b);
  Node n;
  n.rows = na.rows;
  n.cols = nb.cols;
  n.op = Op::kMatmul;
  n.requires_grad = na.requires_grad || nb.requires_grad;
  n.in0 = a.id;
  n.in1 = b.id;
  n.val.resize(static_cast<std::size_t>(n.rows) * n.cols);
  kern::matmul_nn(n.val.data(), na.val.data(), nb.val.data(), na.rows, na.cols,
                  nb.cols);
  return push(std::move(n));
}

Var Graph::matmul_bt(Var a, Var b) {
  const Node &na = node(a), &nb = node(b);
  if (na.cols != nb.cols) shape_error("matmul_bt", a, b);
  Node n;
  n.rows = na.rows;
  n.cols = nb.rows;
  n.op = Op::kMatmulBT;
  n.requires_grad = na.requires_grad || nb.requires_grad;
  n.in0 = a.id;
  n.in1 = b.id;
  n.val.resize(static_cast<std::size_t>(n.rows) * n.cols);
  kern::matmul_bt(n.val.data(), na.val.data(), nb.val.data(), na.rows, na.cols,
                  nb.rows);
  return push(std::move(n));
}

Var Graph::tanh(Var a) {
  const Node& na = node(a);
  Node n;
  n.rows = na.rows;
  n.cols = na.cols;
  n.op = Op::kTanh;
  n.requires_grad = na.requires_grad;
  n.in0 = a.id;
  n.val.resize(na.val.size());
  for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = std::tanh(na.val[i]);
  return push(std::move(n));
}

Var Graph::sigmoid(Var a) {
  const Node& na = node(a);
  Node n;
  n.rows = na.rows;
  n.cols = na.cols;
  n.op = Op::kSigmoid;
  n.requires_grad = na.requires_grad;
  n.in0 = a.id;
  n.val.resize(na.val.size());
  for (std::size_t i = 0; i < n.val.size(); ++i)
    n.val[i] = 1.0 / (1.0 + std::exp(-na.val[i]));
  return push(std::move(n));
}

Var Graph::relu(Var a) {
  const Node& na = node(a);
  Node n;
  n.rows = na.rows;
  n.cols = na.cols;
  n.op = Op::kRelu;
  n.requires_grad = na.requires_grad;
  n.in0 = a.id;
  n.val.resize(na.val.size());
  for (std::size_t i = 0; i < n.val.size(); ++i)
    n.val[i] = na.val[i] > 0.0 ? na.val[i] : 0.0;
  return push(std::move(n));
}

Var Graph::softmax_rows(Var a) {
  const Node& na = node(a);
  if (na.cols <= 0)
    throw std::invalid_argument("softmax_rows: softmax over empty axis");
  Node n;
  n.rows = na.rows;
  n.cols = na.cols;
  n.op = Op::kSoftmaxRows;
  n.requires_grad = na.requires_grad;
  n.in0 = a.id;
  n.val.resize(na.val.size());
  for (int r = 0; r < na.rows; ++r) {
    const double* src = na.val.data() + static_cast<long>(r) * na.cols;
    double* dst = n.val.data() + static_cast<long>(r) * na.cols;
    double mx = src[0];
    for (int c = 1; c < na.cols; ++c) mx = std::max(mx, src[c]);
    double sum = 0.0;
    for (int c = 0; c < na.cols; ++c) {
      dst[c] = std::exp(src[c] - mx);
      sum += dst[c];
    }
    for (int c = 0; c < na.cols; ++c) dst[c] /= sum;
  }
  return push(std::move(n));
}

Var Graph::concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const int cols = node(parts[0]).cols;
  int rows = 0;
  bool rg = false;
  for (Var p : parts) {
    const Node& np = node(p);
    if (np.cols != cols) shape_error("concat_rows", parts[0], p);
    rows += np.rows;
    rg = rg || np.requires_grad;
  }
  Node n;
  n.rows = rows;
  n.cols = cols;
  n.op = Op::kConcatRows;
  n.requires_grad = rg;
  n.extra.reserve(parts.size());
  n.val.reserve(static_cast<std::size_t>(rows) * cols);
  for (Var p : parts) {
    const Node& np = node(p);
    n.extra.push_back(p.id);
    n.val.insert(n.val.end(), np.val.begin(), np.val.end());
  }
  return push(std::move(n));
}

Var Graph::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const int rows = node(parts[0]).rows;
  int cols = 0;
  bool rg = false;
  for (Var p : parts) {
    const Node& np = node(p);
    if (np.rows != rows) shape_error("concat_cols", parts[0], p);
    cols += np.cols;
    rg = rg || np.requires_grad;
  }
  Node n;
  n.rows = rows;
  n.cols = cols;
  n.op = Op::kConcatCols;
  n.requires_grad = rg;
  n.val.resize(static_cast<std::size_t>(rows) * cols);
  int c0 = 0;
  for (Var p : parts) {
    const Node& np = node(p);
    n.extra.push_back(p.id);
    for (int r = 0; r < rows; ++r) {
      const double* src = np.val.data() + static_cast<long>(r) * np.cols;
      double* dst = n.val.data() + static_cast<long>(r) * cols + c0;
      for (int c = 0; c < np.cols; ++c) dst[c] = src[c];
    }
    c0 += np.cols;
  }
  return push(std::move(n));
}

Var Graph::slice_rows(Var a, int r0, int r1) {
  const Node& na = node(a);
  if (r0 < 0 || r1 > na.rows || r0 >= r1)
    throw std::invalid_argument("slice_rows: bad range [" + std::to_string(r0) +
                                ", " + std::to_string(r1) + ") for " +
                                shape_str(na.rows, na.cols));
  Node n;
  n.rows = r1 - r0;
  n.cols = na.cols;
  n.op = Op::kSliceRows;
  n.requires_grad = na.requires_grad;
  n.in0 = a.id;
  n.i0 = r0;
  n.i1 = r1;
  n.val.assign(na.val.begin() + static_cast<long>(r0) * na.cols,
               na.val.begin() + static_cast<long>(r1) * na.cols);
  return push(std::move(n));
}

Var Graph::slice_cols(Var a, int c0, int c1) {
  const Node& na = node(a);
  if (c0 < 0 || c1 > na.cols || c0 >= c1)
    throw std::invalid_argument("slice_cols: bad range [" + std::to_string(c0) +
                                ", " + std::to_string(c1) + ") for " +
                                shape_str(na.rows, na.cols));
  Node n;
  n.rows = na.rows;
  n.cols = c1 - c0;
  n.op = Op::kSliceCols;
  n.requires_grad = na.requires_grad;
  n.in0 = a.id;
  n.i0 = c0;
  n.i1 = c1;
  n.val.resize(static_cast<std::size_t>(n.rows) * n.cols);
  for (int r = 0; r < na.rows; ++r) {
    const double* src = na.val.data() + static_cast<long>(r) * na.cols + c0;
    double* dst = n.val.data() + static_cast<long>(r) * n.cols;
    for (int c = 0; c < n.cols; ++c) dst[c] = src[c];
  }
  return push(std::move(n));
}

Var Graph::reshape(Var a, int rows, int cols) {
  const Node& na = node(a);
  if (static_cast<std::size_t>(rows) * cols != na.val.size())
    throw std::invalid_argument("reshape: cannot view " +
                                shape_str(na.rows, na.cols) + " as " +
                                shape_str(rows, cols));
  Node n;
  n.rows = rows;
  n.cols = cols;
  n.op = Op::kReshape;
  n.requires_grad = na.requires_grad;
  n.in0 = a.id;
  n.val = na.val;
  return push(std::move(n));
}

Var Graph::gather_rows(Var a, std::vector<int> idx) {
  const Node& na = node(a);
  for (int i : idx)
    if (i < 0 || i >= na.rows)
      throw std::invalid_argument("gather_rows: index out of range");
  Node n;
  n.rows = static_cast<int>(idx.size());
  n.cols = na.cols;
  n.op = Op::kGatherRows;
  n.requires_grad = na.requires_grad;
  n.in0 = a.id;
  n.val.resize(static_cast<std::size_t>(n.rows) * n.cols);
  for (std::size_t p = 0; p < idx.size(); ++p) {
    const double* src = na.val.data() + static_cast<long>(idx[p]) * na.cols;
    double* dst = n.val.data() + static_cast<long>(p) * n.cols;
    for (int c = 0; c < n.cols; ++c) dst[c] = src[c];
  }
  n.extra = std::move(idx);
  return push(std::move(n));
}

Var Graph::scatter_add_rows(Var a, std::vector<int> idx, int out_rows) {
  const Node& na = node(a);
  if (static_cast<int>(idx.size()) != na.rows)
    throw std::invalid_argument("scatter_add_rows: index count " +
                                std::to_string(idx.size()) +
                                " does not match rows of " +
                                shape_str(na.rows, na.cols));
  for (int i : idx)
    if (i < 0 || i >= out_rows)
      throw std::invalid_argument("scatter_add_rows: index out of range");
  Node n;
  n.rows = out_rows;
  n.cols = na.cols;
  n.op = Op::kScatterAddRows;
  n.requires_grad = na.requires_grad;
  n.in0 = a.id;
  n.i0 = out_rows;
  n.val.assign(static_cast<std::size_t>(out_rows) * na.cols, 0.0);
  for (std::size_t p = 0; p < idx.size(); ++p) {
    const double* src = na.val.data() + static_cast<long>(p) * na.cols;
    double* dst = n.val.data() + static_cast<long>(idx[p]) * na.cols;
    for (int c = 0; c < na.cols; ++c) dst[c] += src[c];
  }
  n.extra = std::move(idx);
  return push(std::move(n));
}

Var Graph::sum_all(Var a) {
  const Node& na = node(a);
  Node n;
  n.rows = 1;
  n.cols = 1;
  n.op = Op::kSumAll;
  n.requires_grad = na.requires_grad;
  n.in0 = a.id;
  double s = 0.0;
  for (double v : na.val) s += v;
  n.val = {s};
  return push(std::move(n));
}

Var Graph::mean_all(Var a) {
  const Node& na = node(a);
  Node n;
  n.rows = 1;
  n.cols = 1;
  n.op = Op::kMeanAll;
  n.requires_grad = na.requires_grad;
  n.in0 = a.id;
  double s = 0.0;
  for (double v : na.val) s += v;
  n.val = {s / static_cast<double>(na.val.size())};
  return push(std::move(n));
}

Var Graph::conv1d_same(Var x, Var w, Var bias, int ksize) {
  const Node &nx = node(x), &nw = node(w);
  if (ksize < 1 || ksize % 2 == 0)
    throw std::invalid_argument("conv1d: kernel size must be odd and positive");
  if (nw.rows != ksize * nx.cols) shape_error("conv1d", x, w);
  const int cout = nw.cols;
  if (bias.valid()) {
    const Node& nb = node(bias);
    if (nb.rows != 1 || nb.cols != cout) shape_error("conv1d", w, bias);
  }
  Node n;
  n.rows = nx.rows;
  n.cols = cout;
  n.op = Op::kConv1d;
  n.requires_grad = nx.requires_grad || nw.requires_grad ||
                    (bias.valid() && node(bias).requires_grad);
  n.in0 = x.id;
  n.in1 = w.id;
  n.in2 = bias.valid() ? bias.id : -1;
  n.i0 = ksize;
  n.val.resize(static_cast<std::size_t>(n.rows) * n.cols);
  kern::conv1d_same(n.val.data(), nx.val.data(), nw.val.data(),
                    bias.valid() ? node(bias).val.data() : nullptr, nx.rows,
                    nx.cols, cout, ksize);
  return push(std::move(n));
}

Var Graph::l1_distance(Var a, Var b) {
  const Node &na = node(a), &nb = node(b);
  if (na.rows != nb.rows || na.cols != nb.cols) shape_error("l1_distance", a, b);
  Node n;
  n.rows = 1;
  n.cols = 1;
  n.op = Op::kL1Distance;
  n.requires_grad = na.requires_grad || nb.requires_grad;
  n.in0 = a.id;
  n.in1 = b.id;
  double s = 0.0;
  for (std::size_t i = 0; i < na.val.size(); ++i)
    s += std::abs(na.val[i] - nb.val[i]);
  n.val = {s};
  return push(std::move(n));
}

Var Graph::cross_entropy(Var probs, Var labels) {
  const Node &np = node(probs), &nl = node(labels);
  if (np.rows != nl.rows || np.cols != nl.cols)
    shape_error("cross_entropy", probs, labels);
  Node n;
  n.rows = 1;
  n.cols = 1;
  n.op = Op::kCrossEntropy;
  n.requires_grad = np.requires_grad || nl.requires_grad;
  n.in0 = probs.id;
  n.in1 = labels.id;
  double s = 0.0;
  for (std::size_t i = 0; i < np.val.size(); ++i) {
    if (np.val[i] <= 0.0)
      throw std::domain_error("cross_entropy: probability must be positive");
    s -= nl.val[i] * std::log(np.val[i]);
  }
  n.val = {s};
  return push(std::move(n));
}

Var Graph::scaled_dot_softmax(Var q, Var k) {
  const double inv = 1.0 / std::sqrt(static_cast<double>(node(q).cols));
  return softmax_rows(scale(matmul_bt(q, k), inv));
}

std::span<const double> Graph::value(Var v) const {
  const Node& n = node(v);
  return {n.val.data(), n.val.size()};
}

double Graph::value_scalar(Var v) const {
  const Node& n = node(v);
  if (n.val.size() != 1)
    throw std::invalid_argument("value_scalar: node is not scalar");
  return n.val[0];
}

std::span<const double> Graph::grad(Var v) const {
  const Node& n = node(v);
  return {n.grad.data(), n.grad.size()};
}

Tensor Graph::tensor_of(Var v) const {
  const Node& n = node(v);
  Tensor t;
  t.shape = {n.rows, n.cols};
  t.values = n.val;
  t.requires_grad = n.requires_grad;
  t.node_id = v.id;
  return t;
}

void Graph::backward(Var loss) {
  if (backward_done_)
    throw std::logic_error("backward: tape already consumed");
  Node& ln = node(loss);
  if (ln.rows != 1 || ln.cols != 1)
    throw std::invalid_argument("backward: loss must be scalar, got " +
                                shape_str(ln.rows, ln.cols));
  backward_done_ = true;
  for (int i = 0; i <= loss.id; ++i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.requires_grad) n.grad.assign(n.val.size(), 0.0);
  }
  if (!ln.requires_grad) return;  // loss independent of any gradient leaf
  ln.grad[0] = 1.0;
  for (int id = loss.id; id >= 0; --id) backward_step(id);
}

void Graph::backward_step(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.requires_grad || n.op == Op::kLeaf || n.grad.empty()) return;
  const std::vector<double>& g = n.grad;
  auto wants = [&](int in) {
    return in >= 0 && nodes_[static_cast<std::size_t>(in)].requires_grad;
  };
  auto gbuf = [&](int in) -> std::vector<double>& {
    return nodes_[static_cast<std::size_t>(in)].grad;
  };
  auto vbuf = [&](int in) -> const std::vector<double>& {
    return nodes_[static_cast<std::size_t>(in)].val;
  };

  switch (n.op) {
    case Op::kLeaf:
      break;
    case Op::kAdd: {
      if (wants(n.in0)) {
        auto& d = gbuf(n.in0);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
      }
      if (wants(n.in1)) {
        auto& d = gbuf(n.in1);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
      }
      break;
    }
    case Op::kSub: {
      if (wants(n.in0)) {
        auto& d = gbuf(n.in0);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
      }
      if (wants(n.in1)) {
        auto& d = gbuf(n.in1);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] -= g[i];
      }
      break;
    }
    case Op::kMul: {
      const auto &va = vbuf(n.in0), &vb = vbuf(n.in1);
      if (wants(n.in0)) {
        auto& d = gbuf(n.in0);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * vb[i];
      }
      if (wants(n.in1)) {
        auto& d = gbuf(n.in1);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * va[i];
      }
      break;
    }
    case Op::kAffine: {
      if (wants(n.in0)) {
        auto& d = gbuf(n.in0);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += n.s0 * g[i];
      }
      break;
    }
    case Op::kAddBias: {
      if (wants(n.in0)) {
        auto& d = gbuf(n.in0);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
      }
      if (wants(n.in1)) {
        auto& d = gbuf(n.in1);
        for (int r = 0; r < n.rows; ++r) {
          const double* gr = g.data() + static_cast<long>(r) * n.cols;
          for (int c = 0; c < n.cols; ++c) d[static_cast<std::size_t>(c)] += gr[c];
        }
      }
      break;
    }
    case Op::kMatmul: {
      const Node &a = nodes_[static_cast<std::size_t>(n.in0)],
                 &b = nodes_[static_cast<std::size_t>(n.in1)];
      if (wants(n.in0))  // dA += dC * B^T
        kern::matmul_bt(gbuf(n.in0).data(), g.data(), b.val.data(), n.rows,
                        n.cols, a.cols, /*acc=*/true);
      if (wants(n.in1))  // dB += A^T * dC
        kern::matmul_tn_acc(gbuf(n.in1).data(), a.val.data(), g.data(), a.rows,
                            a.cols, n.cols);
      break;
    }
    case Op::kMatmulBT: {
      const Node &a = nodes_[static_cast<std::size_t>(n.in0)],
                 &b = nodes_[static_cast<std::size_t>(n.in1)];
      if (wants(n.in0))  // dA += dC * B
        kern::matmul_nn(gbuf(n.in0).data(), g.data(), b.val.data(), n.rows,
                        n.cols, a.cols, /*acc=*/true);
      if (wants(n.in1))  // dB += dC^T * A
        kern::matmul_tn_acc(gbuf(n.in1).data(), g.data(), a.val.data(), n.rows,
                            n.cols, a.cols);
      break;
    }
    case Op::kTanh: {
      if (wants(n.in0)) {
        auto& d = gbuf(n.in0);
        for (std::size_t i = 0; i < g.size(); ++i)
          d[i] += g[i] * (1.0 - n.val[i] * n.val[i]);
      }
      break;
    }
    case Op::kSigmoid: {
      if (wants(n.in0)) {
        auto& d = gbuf(n.in0);
        for (std::size_t i = 0; i < g.size(); ++i)
          d[i] += g[i] * n.val[i] * (1.0 - n.val[i]);
      }
      break;
    }
    case Op::kRelu: {
      if (wants(n.in0)) {
        const auto& x = vbuf(n.in0);
        auto& d = gbuf(n.in0);
        for (std::size_t i = 0; i < g.size(); ++i)
          if (x[i] > 0.0) d[i] += g[i];
      }
      break;
    }
    case Op::kSoftmaxRows: {
      if (wants(n.in0)) {
        auto& d = gbuf(n.in0);
        for (int r = 0; r < n.rows; ++r) {
          const double* p = n.val.data() + static_cast<long>(r) * n.cols;
          const double* gr = g.data() + static_cast<long>(r) * n.cols;
          double* dr = d.data() + static_cast<long>(r) * n.cols;
          double dot = 0.0;
          for (int c = 0; c < n.cols; ++c) dot += gr[c] * p[c];
          for (int c = 0; c < n.cols; ++c) dr[c] += p[c] * (gr[c] - dot);
        }
      }
      break;
    }
    case Op::kConcatRows: {
      long r0 = 0;
      for (int pid : n.extra) {
        Node& p = nodes_[static_cast<std::size_t>(pid)];
        if (p.requires_grad) {
          const double* src = g.data() + r0 * n.cols;
          for (std::size_t i = 0; i < p.val.size(); ++i) p.grad[i] += src[i];
        }
        r0 += p.rows;
      }
      break;
    }
    case Op::kConcatCols: {
      int c0 = 0;
      for (int pid : n.extra) {
        Node& p = nodes_[static_cast<std::size_t>(pid)];
        if (p.requires_grad) {
          for (int r = 0; r < n.rows; ++r) {
            const double* src = g.data() + static_cast<long>(r) * n.cols + c0;
            double* dst = p.grad.data() + static_cast<long>(r) * p.cols;
            for (int c = 0; c < p.cols; ++c) dst[c] += src[c];
          }
        }
        c0 += p.cols;
      }
      break;
    }
    case Op::kSliceRows: {
      if (wants(n.in0)) {
        auto& d = gbuf(n.in0);
        double* dst = d.data() + static_cast<long>(n.i0) * n.cols;
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
      }
      break;
    }
    case Op::kSliceCols: {
      if (wants(n.in0)) {
        Node& a = nodes_[static_cast<std::size_t>(n.in0)];
        for (int r = 0; r < n.rows; ++r) {
          const double* src = g.data() + static_cast<long>(r) * n.cols;
          double* dst = a.grad.data() + static_cast<long>(r) * a.cols + n.i0;
          for (int c = 0; c < n.cols; ++c) dst[c] += src[c];
        }
      }
      break;
    }
    case Op::kReshape: {
      if (wants(n.in0)) {
        auto& d = gbuf(n.in0);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
      }
      break;
    }
    case Op::kGatherRows: {
      if (wants(n.in0)) {
        Node& a = nodes_[static_cast<std::size_t>(n.in0)];
        for (std::size_t p = 0; p < n.extra.size(); ++p) {
          const double* src = g.data() + static_cast<long>(p) * n.cols;
          double* dst =
              a.grad.data() + static_cast<long>(n.extra[p]) * a.cols;
          for (int c = 0; c < n.cols; ++c) dst[c] += src[c];
        }
      }
      break;
    }
    case Op::kScatterAddRows: {
      if (wants(n.in0)) {
        Node& a = nodes_[static_cast<std::size_t>(n.in0)];
        for (std::size_t p = 0; p < n.extra.size(); ++p) {
          const double* src = g.data() + static_cast<long>(n.extra[p]) * n.cols;
          double* dst = a.grad.data() + static_cast<long>(p) * a.cols;
          for (int c = 0; c < n.cols; ++c) dst[c] += src[c];
        }
      }
      break;
    }
    case Op::kSumAll: {
      if (wants(n.in0)) {
        auto& d = gbuf(n.in0);
        const double gv = g[0];
        for (double& x : d) x += gv;
      }
      break;
    }
    case Op::kMeanAll: {
      if (wants(n.in0)) {
        auto& d = gbuf(n.in0);
        const double gv = g[0] / static_cast<double>(d.size());
        for (double& x : d) x += gv;
      }
      break;
    }
    case Op::kConv1d: {
      const Node &x = nodes_[static_cast<std::size_t>(n.in0)],
                 &w = nodes_[static_cast<std::size_t>(n.in1)];
      if (wants(n.in0))
        kern::conv1d_same_grad_x(gbuf(n.in0).data(), g.data(), w.val.data(),
                                 x.rows, x.cols, n.cols, n.i0);
      if (wants(n.in1))
        kern::conv1d_same_grad_w(gbuf(n.in1).data(), g.data(), x.val.data(),
                                 x.rows, x.cols, n.cols, n.i0);
      if (n.in2 >= 0 && wants(n.in2))
        kern::conv1d_same_grad_b(gbuf(n.in2).data(), g.data(), x.rows, n.cols);
      break;
    }
    case Op::kL1Distance: {
      const auto &va = vbuf(n.in0), &vb = vbuf(n.in1);
      const double gv = g[0];
      if (wants(n.in0)) {
        auto& d = gbuf(n.in0);
        for (std::size_t i = 0; i < va.size(); ++i) {
          const double diff = va[i] - vb[i];
          if (diff > 0.0)
            d[i] += gv;
          else if (diff < 0.0)
            d[i] -= gv;
          // subgradient at ties is 0 by definition
        }
      }
      if (wants(n.in1)) {
        auto& d = gbuf(n.in1);
        for (std::size_t i = 0; i < va.size(); ++i) {
          const double diff = va[i] - vb[i];
          if (diff > 0.0)
            d[i] -= gv;
          else if (diff < 0.0)
            d[i] += gv;
        }
      }
      break;
    }
    case Op::kCrossEntropy: {
      const auto &vp = vbuf(n.in0), &vl = vbuf(n.in1);
      const double gv = g[0];
      if (wants(n.in0)) {
        auto& d = gbuf(n.in0);
        for (std::size_t i = 0; i < vp.size(); ++i)
          d[i] -= gv * vl[i] / vp[i];
      }
      if (wants(n.in1)) {
        auto& d = gbuf(n.in1);
        for (std::size_t i = 0; i < vp.size(); ++i)
          d[i] -= gv * std::log(vp[i]);
      }
      break;
    }
  }
}

}  // namespace lanecast::ad
