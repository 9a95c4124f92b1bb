#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "kipps/rng.hpp"
#include "kipps/tensor.hpp"

namespace kipps {

// Named parameter tensors with a stable order; flatten/unflatten is a
// bijection used by the DP per-example machinery.
class ParamSet {
 public:
  void add(const std::string& name, Tensor t);
  bool has(const std::string& name) const { return index_.count(name) != 0; }
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  const std::vector<std::string>& names() const { return order_; }
  std::size_t total_size() const;

  std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& flat);

 private:
  std::vector<std::string> order_;
  std::map<std::string, std::size_t> index_;
  std::vector<Tensor> values_;
};

// Looks a parameter up across one or more sets (e.g. generator + critic).
class ParamBindings {
 public:
  ParamBindings(std::initializer_list<const ParamSet*> sets) : sets_(sets) {}
  const Tensor* find(const std::string& name) const;

 private:
  std::vector<const ParamSet*> sets_;
};

enum class OpKind {
  input,
  param,
  constant,
  add,
  sub,
  mul,
  matmul,
  add_row,     // X + b, b broadcast across rows
  scale,       // c * X
  add_scalar,  // X + c
  neg,
  tanh_op,
  lrelu,       // leaky ReLU, slope in payload
  lrelu_grad,  // its derivative as a primitive (own derivative treated as 0)
  sigmoid,
  softplus,
  log_op,
  square,
  segment_softmax,  // per-row softmax inside column segments
  concat_cols,
  slice_cols,
  row_sum,     // r x c -> r x 1
  row_l2norm,  // r x c -> r x 1
  mean_all,    // -> 1 x 1
};

struct Node {
  OpKind op;
  std::vector<int> inputs;
  std::size_t rows = 0, cols = 0;
  std::string name;  // input / param
  Tensor value;      // constant
  bool trans_a = false, trans_b = false;
  double scalar = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> segments;  // (offset, width)
  std::size_t slice_from = 0;
};

// Computation graph; acyclic by construction (ids appear before users) with
// statically determined shapes.
class Graph {
 public:
  int input(const std::string& name, std::size_t rows, std::size_t cols);
  int param(const std::string& name, std::size_t rows, std::size_t cols);
  int constant(Tensor t);
  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);
  int matmul(int a, int b, bool trans_a = false, bool trans_b = false);
  int add_row(int x, int b);
  int scale(int x, double c);
  int add_scalar(int x, double c);
  int neg(int x);
  int tanh_(int x);
  int lrelu(int x, double slope = 0.2);
  int lrelu_grad(int x, double slope = 0.2);
  int sigmoid(int x);
  int softplus(int x);
  int log_(int x);
  int square(int x);
  int segment_softmax(int x, std::vector<std::pair<std::size_t, std::size_t>> segments);
  int concat_cols(const std::vector<int>& xs);
  int slice_cols(int x, std::size_t from, std::size_t width);
  int row_sum(int x);
  int row_l2norm(int x);
  int mean_all(int x);

  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return nodes_.size(); }

 private:
  int push(Node n);
  std::vector<Node> nodes_;
};

struct Expression {
  std::shared_ptr<const Graph> graph;
  int output = -1;

  bool uses_input(const std::string& name) const;  // reachability from the output
};

using InputMap = std::map<std::string, Tensor>;
using GradMap = std::map<std::string, Tensor>;

Tensor forward(const Expression& expr, const ParamBindings& params, const InputMap& inputs);
Tensor forward(const Expression& expr, const ParamSet& params, const InputMap& inputs);

// One evaluation pass, several outputs.
std::vector<Tensor> forward_many(const Graph& g, const std::vector<int>& outputs,
                                 const ParamBindings& params, const InputMap& inputs);

// Reverse-mode gradients of a scalar expression w.r.t. every referenced
// parameter (and, optionally, input). `value_out` receives the forward value.
GradMap grad(const Expression& expr, const ParamBindings& params, const InputMap& inputs,
             GradMap* input_grads = nullptr, double* value_out = nullptr);
GradMap grad(const Expression& expr, const ParamSet& params, const InputMap& inputs,
             GradMap* input_grads = nullptr, double* value_out = nullptr);

// `expr` must evaluate to one loss per row (R x 1). Returns one flattened
// gradient per row, laid out in `params` order (absent parameters as zeros).
std::vector<std::vector<double>> per_example_grads(const Expression& expr,
                                                   const ParamSet& params,
                                                   const InputMap& inputs,
                                                   std::vector<double>* values_out = nullptr);

enum class Activation { leaky_relu, tanh_act, softplus };

// Dense stack: affine -> activation per hidden layer, affine head.
struct MlpSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  std::size_t output_dim = 1;
  Activation activation = Activation::leaky_relu;
};

// Glorot-uniform weights, zero biases, names "<prefix>.W<i>"/"<prefix>.b<i>".
void init_mlp_params(ParamSet& params, const std::string& prefix, const MlpSpec& spec, Rng& rng);
int build_mlp(Graph& g, const MlpSpec& spec, const std::string& prefix, int input);
// Closed-form d output / d input for a scalar-output stack, built from the
// forward pre-activations so it stays differentiable w.r.t. the parameters.
int build_mlp_input_gradient(Graph& g, const MlpSpec& spec, const std::string& prefix, int input);

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double eps = 1e-8;
};

struct AdamState {
  std::map<std::string, Tensor> m, v;
  long long t = 0;
};

void adam_step(ParamSet& params, const GradMap& grads, AdamState& state, const AdamConfig& cfg);
// Gradient supplied as one flat vector in `params` order.
void adam_step_flat(ParamSet& params, const std::vector<double>& flat_grad, AdamState& state,
                    const AdamConfig& cfg);

}  // namespace kipps
