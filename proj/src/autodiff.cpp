#include "kipps/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "kipps/error.hpp"

namespace kipps {

void ParamSet::add(const std::string& name, Tensor t) {
  if (index_.count(name)) fail_data("param '" + name + "' already present");
  index_[name] = values_.size();
  order_.push_back(name);
  values_.push_back(std::move(t));
}

Tensor& ParamSet::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) fail_data("unknown param '" + name + "'");
  return values_[it->second];
}

const Tensor& ParamSet::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) fail_data("unknown param '" + name + "'");
  return values_[it->second];
}

std::size_t ParamSet::total_size() const {
  std::size_t n = 0;
  for (const auto& t : values_) n += t.size();
  return n;
}

std::vector<double> ParamSet::flatten() const {
  std::vector<double> flat;
  flat.reserve(total_size());
  for (const auto& name : order_) {
    const Tensor& t = values_[index_.at(name)];
    flat.insert(flat.end(), t.data.begin(), t.data.end());
  }
  return flat;
}

void ParamSet::unflatten(const std::vector<double>& flat) {
  if (flat.size() != total_size()) fail_data("unflatten: size mismatch");
  std::size_t off = 0;
  for (const auto& name : order_) {
    Tensor& t = values_[index_.at(name)];
    std::copy(flat.begin() + off, flat.begin() + off + t.size(), t.data.begin());
    off += t.size();
  }
}

const Tensor* ParamBindings::find(const std::string& name) const {
  for (const ParamSet* s : sets_)
    if (s->has(name)) return &s->at(name);
  return nullptr;
}

int Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

namespace {

void require_same_shape(const Node& a, const Node& b, const char* what) {
  if (a.rows != b.rows || a.cols != b.cols) fail_data(std::string(what) + ": shape mismatch");
}

}  // namespace

int Graph::input(const std::string& name, std::size_t rows, std::size_t cols) {
  Node n;
  n.op = OpKind::input;
  n.name = name;
  n.rows = rows;
  n.cols = cols;
  return push(std::move(n));
}

int Graph::param(const std::string& name, std::size_t rows, std::size_t cols) {
  Node n;
  n.op = OpKind::param;
  n.name = name;
  n.rows = rows;
  n.cols = cols;
  return push(std::move(n));
}

int Graph::constant(Tensor t) {
  Node n;
  n.op = OpKind::constant;
  n.rows = t.rows();
  n.cols = t.cols();
  n.value = std::move(t);
  return push(std::move(n));
}

int Graph::add(int a, int b) {
  require_same_shape(node(a), node(b), "add");
  Node n;
  n.op = OpKind::add;
  n.inputs = {a, b};
  n.rows = node(a).rows;
  n.cols = node(a).cols;
  return push(std::move(n));
}

int Graph::sub(int a, int b) {
  require_same_shape(node(a), node(b), "sub");
  Node n;
  n.op = OpKind::sub;
  n.inputs = {a, b};
  n.rows = node(a).rows;
  n.cols = node(a).cols;
  return push(std::move(n));
}

int Graph::mul(int a, int b) {
  require_same_shape(node(a), node(b), "mul");
  Node n;
  n.op = OpKind::mul;
  n.inputs = {a, b};
  n.rows = node(a).rows;
  n.cols = node(a).cols;
  return push(std::move(n));
}

int Graph::matmul(int a, int b, bool trans_a, bool trans_b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  const std::size_t m = trans_a ? na.cols : na.rows;
  const std::size_t k = trans_a ? na.rows : na.cols;
  const std::size_t k2 = trans_b ? nb.cols : nb.rows;
  const std::size_t nn = trans_b ? nb.rows : nb.cols;
  if (k != k2) fail_data("matmul: inner dimensions do not match");
  Node n;
  n.op = OpKind::matmul;
  n.inputs = {a, b};
  n.trans_a = trans_a;
  n.trans_b = trans_b;
  n.rows = m;
  n.cols = nn;
  return push(std::move(n));
}

int Graph::add_row(int x, int b) {
  const Node& nx = node(x);
  const Node& nb = node(b);
  if (nb.rows != 1 || nb.cols != nx.cols) fail_data("add_row: bias must be 1 x cols");
  Node n;
  n.op = OpKind::add_row;
  n.inputs = {x, b};
  n.rows = nx.rows;
  n.cols = nx.cols;
  return push(std::move(n));
}

int Graph::scale(int x, double c) {
  Node n;
  n.op = OpKind::scale;
  n.inputs = {x};
  n.scalar = c;
  n.rows = node(x).rows;
  n.cols = node(x).cols;
  return push(std::move(n));
}

int Graph::add_scalar(int x, double c) {
  Node n;
  n.op = OpKind::add_scalar;
  n.inputs = {x};
  n.scalar = c;
  n.rows = node(x).rows;
  n.cols = node(x).cols;
  return push(std::move(n));
}

namespace {

Node unary(OpKind op, int x, const Node& nx, double scalar = 0.0) {
  Node n;
  n.op = op;
  n.inputs = {x};
  n.scalar = scalar;
  n.rows = nx.rows;
  n.cols = nx.cols;
  return n;
}

}  // namespace

int Graph::neg(int x) { return push(unary(OpKind::neg, x, node(x))); }
int Graph::tanh_(int x) { return push(unary(OpKind::tanh_op, x, node(x))); }
int Graph::lrelu(int x, double slope) { return push(unary(OpKind::lrelu, x, node(x), slope)); }
int Graph::lrelu_grad(int x, double slope) {
  return push(unary(OpKind::lrelu_grad, x, node(x), slope));
}
int Graph::sigmoid(int x) { return push(unary(OpKind::sigmoid, x, node(x))); }
int Graph::softplus(int x) { return push(unary(OpKind::softplus, x, node(x))); }
int Graph::log_(int x) { return push(unary(OpKind::log_op, x, node(x))); }
int Graph::square(int x) { return push(unary(OpKind::square, x, node(x))); }

int Graph::segment_softmax(int x, std::vector<std::pair<std::size_t, std::size_t>> segments) {
  const Node& nx = node(x);
  for (auto [off, w] : segments)
    if (off + w > nx.cols || w == 0) fail_data("segment_softmax: segment out of range");
  Node n;
  n.op = OpKind::segment_softmax;
  n.inputs = {x};
  n.segments = std::move(segments);
  n.rows = nx.rows;
  n.cols = nx.cols;
  return push(std::move(n));
}

int Graph::concat_cols(const std::vector<int>& xs) {
  if (xs.empty()) fail_data("concat_cols: no inputs");
  std::size_t cols = 0;
  const std::size_t rows = node(xs[0]).rows;
  for (int x : xs) {
    if (node(x).rows != rows) fail_data("concat_cols: row mismatch");
    cols += node(x).cols;
  }
  Node n;
  n.op = OpKind::concat_cols;
  n.inputs = xs;
  n.rows = rows;
  n.cols = cols;
  return push(std::move(n));
}

int Graph::slice_cols(int x, std::size_t from, std::size_t width) {
  const Node& nx = node(x);
  if (from + width > nx.cols || width == 0) fail_data("slice_cols: out of range");
  Node n;
  n.op = OpKind::slice_cols;
  n.inputs = {x};
  n.slice_from = from;
  n.rows = nx.rows;
  n.cols = width;
  return push(std::move(n));
}

int Graph::row_sum(int x) {
  Node n;
  n.op = OpKind::row_sum;
  n.inputs = {x};
  n.rows = node(x).rows;
  n.cols = 1;
  return push(std::move(n));
}

int Graph::row_l2norm(int x) {
  Node n;
  n.op = OpKind::row_l2norm;
  n.inputs = {x};
  n.rows = node(x).rows;
  n.cols = 1;
  return push(std::move(n));
}

int Graph::mean_all(int x) {
  Node n;
  n.op = OpKind::mean_all;
  n.inputs = {x};
  n.rows = 1;
  n.cols = 1;
  return push(std::move(n));
}

bool Expression::uses_input(const std::string& name) const {
  if (!graph || output < 0) return false;
  std::vector<char> seen(graph->size(), 0);
  std::vector<int> stack{output};
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    if (seen[static_cast<std::size_t>(id)]) continue;
    seen[static_cast<std::size_t>(id)] = 1;
    const Node& n = graph->node(id);
    if (n.op == OpKind::input && n.name == name) return true;
    for (int in : n.inputs) stack.push_back(in);
  }
  return false;
}

namespace {

double sigmoid_scalar(double x) {
  if (x >= 0.0) {
    const double z = std::exp(-x);
    return 1.0 / (1.0 + z);
  }
  const double z = std::exp(x);
  return z / (1.0 + z);
}

double softplus_scalar(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

std::vector<Tensor> evaluate_all(const Graph& g, const ParamBindings& params,
                                 const InputMap& inputs) {
  std::vector<Tensor> values(g.size());
  for (std::size_t id = 0; id < g.size(); ++id) {
    const Node& n = g.node(static_cast<int>(id));
    Tensor out(n.rows, n.cols);
    auto& in0 = n.inputs.empty() ? out : values[static_cast<std::size_t>(n.inputs[0])];
    switch (n.op) {
      case OpKind::input: {
        auto it = inputs.find(n.name);
        if (it == inputs.end()) fail_data("forward: missing input '" + n.name + "'");
        if (it->second.rows() != n.rows || it->second.cols() != n.cols)
          fail_data("forward: input '" + n.name + "' has wrong shape");
        out = it->second;
        break;
      }
      case OpKind::param: {
        const Tensor* t = params.find(n.name);
        if (!t) fail_data("forward: missing param '" + n.name + "'");
        if (t->rows() != n.rows || t->cols() != n.cols)
          fail_data("forward: param '" + n.name + "' has wrong shape");
        out = *t;
        break;
      }
      case OpKind::constant:
        out = n.value;
        break;
      case OpKind::add: {
        const Tensor& b = values[static_cast<std::size_t>(n.inputs[1])];
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = in0.data[i] + b.data[i];
        break;
      }
      case OpKind::sub: {
        const Tensor& b = values[static_cast<std::size_t>(n.inputs[1])];
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = in0.data[i] - b.data[i];
        break;
      }
      case OpKind::mul: {
        const Tensor& b = values[static_cast<std::size_t>(n.inputs[1])];
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = in0.data[i] * b.data[i];
        break;
      }
      case OpKind::matmul:
        out = matmul(in0, values[static_cast<std::size_t>(n.inputs[1])], n.trans_a, n.trans_b);
        break;
      case OpKind::add_row: {
        const Tensor& b = values[static_cast<std::size_t>(n.inputs[1])];
        for (std::size_t r = 0; r < n.rows; ++r)
          for (std::size_t c = 0; c < n.cols; ++c) out.at(r, c) = in0.at(r, c) + b.at(0, c);
        break;
      }
      case OpKind::scale:
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = n.scalar * in0.data[i];
        break;
      case OpKind::add_scalar:
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = in0.data[i] + n.scalar;
        break;
      case OpKind::neg:
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = -in0.data[i];
        break;
      case OpKind::tanh_op:
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = std::tanh(in0.data[i]);
        break;
      case OpKind::lrelu:
        for (std::size_t i = 0; i < out.size(); ++i) {
          const double x = in0.data[i];
          out.data[i] = x > 0.0 ? x : n.scalar * x;
        }
        break;
      case OpKind::lrelu_grad:
        for (std::size_t i = 0; i < out.size(); ++i)
          out.data[i] = in0.data[i] > 0.0 ? 1.0 : n.scalar;
        break;
      case OpKind::sigmoid:
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = sigmoid_scalar(in0.data[i]);
        break;
      case OpKind::softplus:
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = softplus_scalar(in0.data[i]);
        break;
      case OpKind::log_op:
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = std::log(in0.data[i]);
        break;
      case OpKind::square:
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = in0.data[i] * in0.data[i];
        break;
      case OpKind::segment_softmax: {
        out = in0;
        for (std::size_t r = 0; r < n.rows; ++r) {
          for (auto [off, w] : n.segments) {
            double mx = -1e300;
            for (std::size_t c = off; c < off + w; ++c) mx = std::max(mx, in0.at(r, c));
            double denom = 0.0;
            for (std::size_t c = off; c < off + w; ++c) {
              out.at(r, c) = std::exp(in0.at(r, c) - mx);
              denom += out.at(r, c);
            }
            for (std::size_t c = off; c < off + w; ++c) out.at(r, c) /= denom;
          }
        }
        break;
      }
      case OpKind::concat_cols: {
        std::size_t off = 0;
        for (int src : n.inputs) {
          const Tensor& t = values[static_cast<std::size_t>(src)];
          for (std::size_t r = 0; r < n.rows; ++r)
            for (std::size_t c = 0; c < t.cols(); ++c) out.at(r, off + c) = t.at(r, c);
          off += t.cols();
        }
        break;
      }
      case OpKind::slice_cols:
        for (std::size_t r = 0; r < n.rows; ++r)
          for (std::size_t c = 0; c < n.cols; ++c) out.at(r, c) = in0.at(r, n.slice_from + c);
        break;
      case OpKind::row_sum:
        for (std::size_t r = 0; r < n.rows; ++r) {
          double s = 0.0;
          for (std::size_t c = 0; c < in0.cols(); ++c) s += in0.at(r, c);
          out.at(r, 0) = s;
        }
        break;
      case OpKind::row_l2norm:
        for (std::size_t r = 0; r < n.rows; ++r) {
          double s = 0.0;
          for (std::size_t c = 0; c < in0.cols(); ++c) s += in0.at(r, c) * in0.at(r, c);
          out.at(r, 0) = std::sqrt(s);
        }
        break;
      case OpKind::mean_all: {
        double s = 0.0;
        for (double v : in0.data) s += v;
        out.at(0, 0) = s / static_cast<double>(in0.size());
        break;
      }
    }
    values[id] = std::move(out);
  }
  return values;
}

// Reverse sweep from a seed adjoint on `output`.
void backward(const Graph& g, const std::vector<Tensor>& values, int output, const Tensor& seed,
              GradMap& param_grads, GradMap* input_grads) {
  std::vector<Tensor> adj(g.size());
  std::vector<char> live(g.size(), 0);
  auto touch = [&](int id) {
    auto uid = static_cast<std::size_t>(id);
    if (!live[uid]) {
      const Node& n = g.node(id);
      adj[uid] = Tensor(n.rows, n.cols);
      live[uid] = 1;
    }
    return &adj[uid];
  };
  *touch(output) = seed;

  for (int id = static_cast<int>(g.size()) - 1; id >= 0; --id) {
    auto uid = static_cast<std::size_t>(id);
    if (!live[uid]) continue;
    const Node& n = g.node(id);
    const Tensor& gout = adj[uid];
    switch (n.op) {
      case OpKind::input:
        if (input_grads) {
          auto [it, inserted] = input_grads->emplace(n.name, gout);
          if (!inserted)
            for (std::size_t i = 0; i < gout.size(); ++i) it->second.data[i] += gout.data[i];
        }
        break;
      case OpKind::param: {
        auto [it, inserted] = param_grads.emplace(n.name, gout);
        if (!inserted)
          for (std::size_t i = 0; i < gout.size(); ++i) it->second.data[i] += gout.data[i];
        break;
      }
      case OpKind::constant:
        break;
      case OpKind::add: {
        Tensor* da = touch(n.inputs[0]);
        Tensor* db = touch(n.inputs[1]);
        for (std::size_t i = 0; i < gout.size(); ++i) {
          da->data[i] += gout.data[i];
          db->data[i] += gout.data[i];
        }
        break;
      }
      case OpKind::sub: {
        Tensor* da = touch(n.inputs[0]);
        Tensor* db = touch(n.inputs[1]);
        for (std::size_t i = 0; i < gout.size(); ++i) {
          da->data[i] += gout.data[i];
          db->data[i] -= gout.data[i];
        }
        break;
      }
      case OpKind::mul: {
        const Tensor& a = values[static_cast<std::size_t>(n.inputs[0])];
        const Tensor& b = values[static_cast<std::size_t>(n.inputs[1])];
        Tensor* da = touch(n.inputs[0]);
        Tensor* db = touch(n.inputs[1]);
        for (std::size_t i = 0; i < gout.size(); ++i) {
          da->data[i] += gout.data[i] * b.data[i];
          db->data[i] += gout.data[i] * a.data[i];
        }
        break;
      }
      case OpKind::matmul: {
        const Tensor& a = values[static_cast<std::size_t>(n.inputs[0])];
        const Tensor& b = values[static_cast<std::size_t>(n.inputs[1])];
        // d op_a(A) = G * op_b(B)^T;  d op_b(B) = op_a(A)^T * G
        Tensor d_opa = n.trans_b ? matmul(gout, b, false, false) : matmul(gout, b, false, true);
        Tensor d_opb = n.trans_a ? matmul(a, gout, false, false) : matmul(a, gout, true, false);
        Tensor da = n.trans_a ? transpose(d_opa) : std::move(d_opa);
        Tensor db = n.trans_b ? transpose(d_opb) : std::move(d_opb);
        Tensor* ga = touch(n.inputs[0]);
        Tensor* gb = touch(n.inputs[1]);
        for (std::size_t i = 0; i < ga->size(); ++i) ga->data[i] += da.data[i];
        for (std::size_t i = 0; i < gb->size(); ++i) gb->data[i] += db.data[i];
        break;
      }
      case OpKind::add_row: {
        Tensor* dx = touch(n.inputs[0]);
        Tensor* db = touch(n.inputs[1]);
        for (std::size_t r = 0; r < n.rows; ++r)
          for (std::size_t c = 0; c < n.cols; ++c) {
            dx->at(r, c) += gout.at(r, c);
            db->at(0, c) += gout.at(r, c);
          }
        break;
      }
      case OpKind::scale: {
        Tensor* dx = touch(n.inputs[0]);
        for (std::size_t i = 0; i < gout.size(); ++i) dx->data[i] += n.scalar * gout.data[i];
        break;
      }
      case OpKind::add_scalar: {
        Tensor* dx = touch(n.inputs[0]);
        for (std::size_t i = 0; i < gout.size(); ++i) dx->data[i] += gout.data[i];
        break;
      }
      case OpKind::neg: {
        Tensor* dx = touch(n.inputs[0]);
        for (std::size_t i = 0; i < gout.size(); ++i) dx->data[i] -= gout.data[i];
        break;
      }
      case OpKind::tanh_op: {
        const Tensor& y = values[uid];
        Tensor* dx = touch(n.inputs[0]);
        for (std::size_t i = 0; i < gout.size(); ++i)
          dx->data[i] += gout.data[i] * (1.0 - y.data[i] * y.data[i]);
        break;
      }
      case OpKind::lrelu: {
        const Tensor& x = values[static_cast<std::size_t>(n.inputs[0])];
        Tensor* dx = touch(n.inputs[0]);
        for (std::size_t i = 0; i < gout.size(); ++i)
          dx->data[i] += gout.data[i] * (x.data[i] > 0.0 ? 1.0 : n.scalar);
        break;
      }
      case OpKind::lrelu_grad:
        break;  // piecewise constant
      case OpKind::sigmoid: {
        const Tensor& y = values[uid];
        Tensor* dx = touch(n.inputs[0]);
        for (std::size_t i = 0; i < gout.size(); ++i)
          dx->data[i] += gout.data[i] * y.data[i] * (1.0 - y.data[i]);
        break;
      }
      case OpKind::softplus: {
        const Tensor& x = values[static_cast<std::size_t>(n.inputs[0])];
        Tensor* dx = touch(n.inputs[0]);
        for (std::size_t i = 0; i < gout.size(); ++i)
          dx->data[i] += gout.data[i] * sigmoid_scalar(x.data[i]);
        break;
      }
      case OpKind::log_op: {
        const Tensor& x = values[static_cast<std::size_t>(n.inputs[0])];
        Tensor* dx = touch(n.inputs[0]);
        for (std::size_t i = 0; i < gout.size(); ++i) dx->data[i] += gout.data[i] / x.data[i];
        break;
      }
      case OpKind::square: {
        const Tensor& x = values[static_cast<std::size_t>(n.inputs[0])];
        Tensor* dx = touch(n.inputs[0]);
        for (std::size_t i = 0; i < gout.size(); ++i)
          dx->data[i] += 2.0 * x.data[i] * gout.data[i];
        break;
      }
      case OpKind::segment_softmax: {
        const Tensor& y = values[uid];
        Tensor* dx = touch(n.inputs[0]);
        for (std::size_t r = 0; r < n.rows; ++r) {
          for (auto [off, w] : n.segments) {
            double dot = 0.0;
            for (std::size_t c = off; c < off + w; ++c) dot += gout.at(r, c) * y.at(r, c);
            for (std::size_t c = off; c < off + w; ++c)
              dx->at(r, c) += y.at(r, c) * (gout.at(r, c) - dot);
          }
        }
        break;
      }
      case OpKind::concat_cols: {
        std::size_t off = 0;
        for (int src : n.inputs) {
          Tensor* dx = touch(src);
          for (std::size_t r = 0; r < n.rows; ++r)
            for (std::size_t c = 0; c < dx->cols(); ++c) dx->at(r, c) += gout.at(r, off + c);
          off += dx->cols();
        }
        break;
      }
      case OpKind::slice_cols: {
        Tensor* dx = touch(n.inputs[0]);
        for (std::size_t r = 0; r < n.rows; ++r)
          for (std::size_t c = 0; c < n.cols; ++c) dx->at(r, n.slice_from + c) += gout.at(r, c);
        break;
      }
      case OpKind::row_sum: {
        Tensor* dx = touch(n.inputs[0]);
        for (std::size_t r = 0; r < dx->rows(); ++r)
          for (std::size_t c = 0; c < dx->cols(); ++c) dx->at(r, c) += gout.at(r, 0);
        break;
      }
      case OpKind::row_l2norm: {
        const Tensor& x = values[static_cast<std::size_t>(n.inputs[0])];
        const Tensor& y = values[uid];
        Tensor* dx = touch(n.inputs[0]);
        for (std::size_t r = 0; r < x.rows(); ++r) {
          const double denom = std::max(y.at(r, 0), 1e-12);
          for (std::size_t c = 0; c < x.cols(); ++c)
            dx->at(r, c) += gout.at(r, 0) * x.at(r, c) / denom;
        }
        break;
      }
      case OpKind::mean_all: {
        Tensor* dx = touch(n.inputs[0]);
        const double s = gout.at(0, 0) / static_cast<double>(dx->size());
        for (std::size_t i = 0; i < dx->size(); ++i) dx->data[i] += s;
        break;
      }
    }
  }
}

}  // namespace

Tensor forward(const Expression& expr, const ParamBindings& params, const InputMap& inputs) {
  auto values = evaluate_all(*expr.graph, params, inputs);
  return values[static_cast<std::size_t>(expr.output)];
}

Tensor forward(const Expression& expr, const ParamSet& params, const InputMap& inputs) {
  return forward(expr, ParamBindings{&params}, inputs);
}

std::vector<Tensor> forward_many(const Graph& g, const std::vector<int>& outputs,
                                 const ParamBindings& params, const InputMap& inputs) {
  auto values = evaluate_all(g, params, inputs);
  std::vector<Tensor> out;
  out.reserve(outputs.size());
  for (int id : outputs) out.push_back(values[static_cast<std::size_t>(id)]);
  return out;
}

GradMap grad(const Expression& expr, const ParamBindings& params, const InputMap& inputs,
             GradMap* input_grads, double* value_out) {
  const Node& out = expr.graph->node(expr.output);
  if (out.rows != 1 || out.cols != 1) fail_data("grad: expression output is not scalar");
  auto values = evaluate_all(*expr.graph, params, inputs);
  if (value_out) *value_out = values[static_cast<std::size_t>(expr.output)].at(0, 0);
  GradMap grads;
  backward(*expr.graph, values, expr.output, Tensor::scalar(1.0), grads, input_grads);
  return grads;
}

GradMap grad(const Expression& expr, const ParamSet& params, const InputMap& inputs,
             GradMap* input_grads, double* value_out) {
  return grad(expr, ParamBindings{&params}, inputs, input_grads, value_out);
}

std::vector<std::vector<double>> per_example_grads(const Expression& expr, const ParamSet& params,
                                                   const InputMap& inputs,
                                                   std::vector<double>* values_out) {
  const Node& out = expr.graph->node(expr.output);
  if (out.cols != 1 || out.rows == 0)
    fail_data("per_example_grads: loss is not a per-row column vector");
  auto values = evaluate_all(*expr.graph, ParamBindings{&params}, inputs);
  if (values_out) {
    values_out->clear();
    const Tensor& v = values[static_cast<std::size_t>(expr.output)];
    values_out->assign(v.data.begin(), v.data.end());
  }

  std::vector<std::vector<double>> result;
  result.reserve(out.rows);
  for (std::size_t r = 0; r < out.rows; ++r) {
    Tensor seed(out.rows, 1);
    seed.at(r, 0) = 1.0;
    GradMap grads;
    backward(*expr.graph, values, expr.output, seed, grads, nullptr);
    std::vector<double> flat;
    flat.reserve(params.total_size());
    for (const auto& name : params.names()) {
      const Tensor& shape = params.at(name);
      auto it = grads.find(name);
      if (it == grads.end()) {
        flat.insert(flat.end(), shape.size(), 0.0);
      } else {
        flat.insert(flat.end(), it->second.data.begin(), it->second.data.end());
      }
    }
    result.push_back(std::move(flat));
  }
  return result;
}

void init_mlp_params(ParamSet& params, const std::string& prefix, const MlpSpec& spec, Rng& rng) {
  std::vector<std::size_t> dims;
  dims.push_back(spec.input_dim);
  for (auto h : spec.hidden) dims.push_back(h);
  dims.push_back(spec.output_dim);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Tensor w(dims[l], dims[l + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
    for (auto& v : w.data) v = rng.uniform(-limit, limit);
    params.add(prefix + ".W" + std::to_string(l + 1), std::move(w));
    params.add(prefix + ".b" + std::to_string(l + 1), Tensor(1, dims[l + 1]));
  }
}

namespace {

int apply_activation(Graph& g, Activation act, int x) {
  switch (act) {
    case Activation::leaky_relu:
      return g.lrelu(x, 0.2);
    case Activation::tanh_act:
      return g.tanh_(x);
    case Activation::softplus:
      return g.softplus(x);
  }
  fail_data("unknown activation");
}

int apply_activation_grad(Graph& g, Activation act, int pre) {
  switch (act) {
    case Activation::leaky_relu:
      return g.lrelu_grad(pre, 0.2);
    case Activation::tanh_act: {
      int t = g.tanh_(pre);
      return g.add_scalar(g.neg(g.square(t)), 1.0);  // 1 - tanh^2
    }
    case Activation::softplus:
      return g.sigmoid(pre);
  }
  fail_data("unknown activation");
}

}  // namespace

int build_mlp(Graph& g, const MlpSpec& spec, const std::string& prefix, int input) {
  std::vector<std::size_t> dims;
  dims.push_back(spec.input_dim);
  for (auto h : spec.hidden) dims.push_back(h);
  dims.push_back(spec.output_dim);
  int h = input;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    int w = g.param(prefix + ".W" + std::to_string(l + 1), dims[l], dims[l + 1]);
    int b = g.param(prefix + ".b" + std::to_string(l + 1), 1, dims[l + 1]);
    h = g.add_row(g.matmul(h, w), b);
    if (l + 2 < dims.size()) h = apply_activation(g, spec.activation, h);
  }
  return h;
}

int build_mlp_input_gradient(Graph& g, const MlpSpec& spec, const std::string& prefix, int input) {
  if (spec.output_dim != 1) fail_data("input gradient requires a scalar-output stack");
  std::vector<std::size_t> dims;
  dims.push_back(spec.input_dim);
  for (auto h : spec.hidden) dims.push_back(h);
  dims.push_back(1);
  const std::size_t layers = dims.size() - 1;
  const std::size_t batch = g.node(input).rows;

  // forward pre-activations
  std::vector<int> pre(layers, -1);
  std::vector<int> weights(layers, -1);
  int h = input;
  for (std::size_t l = 0; l < layers; ++l) {
    weights[l] = g.param(prefix + ".W" + std::to_string(l + 1), dims[l], dims[l + 1]);
    int b = g.param(prefix + ".b" + std::to_string(l + 1), 1, dims[l + 1]);
    pre[l] = g.add_row(g.matmul(h, weights[l]), b);
    if (l + 1 < layers) h = apply_activation(g, spec.activation, pre[l]);
  }

  // delta_L = 1 broadcast, then delta_{l} = (delta_{l+1} W_{l+1}^T) . act'(a_l)
  int delta = g.constant(Tensor::ones(batch, 1));
  for (std::size_t l = layers; l-- > 0;) {
    delta = g.matmul(delta, weights[l], false, true);
    if (l > 0) delta = g.mul(delta, apply_activation_grad(g, spec.activation, pre[l - 1]));
  }
  return delta;  // batch x input_dim
}

void adam_step(ParamSet& params, const GradMap& grads, AdamState& state, const AdamConfig& cfg) {
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (const auto& name : params.names()) {
    auto it = grads.find(name);
    if (it == grads.end()) continue;
    Tensor& p = params.at(name);
    const Tensor& gradient = it->second;
    auto [mit, m_new] = state.m.emplace(name, Tensor(p.rows(), p.cols()));
    auto [vit, v_new] = state.v.emplace(name, Tensor(p.rows(), p.cols()));
    (void)m_new;
    (void)v_new;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = gradient.data[i];
      mit->second.data[i] = cfg.beta1 * mit->second.data[i] + (1.0 - cfg.beta1) * gi;
      vit->second.data[i] = cfg.beta2 * vit->second.data[i] + (1.0 - cfg.beta2) * gi * gi;
      const double mhat = mit->second.data[i] / bc1;
      const double vhat = vit->second.data[i] / bc2;
      p.data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

void adam_step_flat(ParamSet& params, const std::vector<double>& flat_grad, AdamState& state,
                    const AdamConfig& cfg) {
  if (flat_grad.size() != params.total_size()) fail_data("adam_step_flat: size mismatch");
  GradMap grads;
  std::size_t off = 0;
  for (const auto& name : params.names()) {
    const Tensor& p = params.at(name);
    Tensor gt(p.rows(), p.cols());
    std::copy(flat_grad.begin() + static_cast<std::ptrdiff_t>(off),
              flat_grad.begin() + static_cast<std::ptrdiff_t>(off + p.size()), gt.data.begin());
    off += p.size();
    grads.emplace(name, std::move(gt));
  }
  adam_step(params, grads, state, cfg);
}

}  // namespace kipps
