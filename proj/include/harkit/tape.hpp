#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "harkit/param_store.hpp"
#include "harkit/tensor.hpp"

namespace harkit {

// Reverse-mode gradient tape. Each operation appends a node holding its
// result and a closure that scatters the node's gradient back to its inputs.
// backward() walks the recorded sequence in reverse.
//
// Single-threaded per tape; values are plain tensors safe to copy out and
// share read-only.
class Tape {
public:
  struct Value {
    std::size_t id = static_cast<std::size_t>(-1);
    bool valid() const { return id != static_cast<std::size_t>(-1); }
  };

  Value input(Tensor t);
  Value param(const ParamStore& store, const std::string& name);

  const Tensor& value(Value v) const { return nodes_[v.id].value; }
  const Tensor& grad(Value v) const { return nodes_[v.id].grad; }
  std::size_t node_count() const { return nodes_.size(); }

  // out[n,j] = sum_i x[n,i] w[i,j] + b[j]
  Value linear(Value x, Value w, Value b);
  // Valid (no padding) grouped cross-correlation over [C x T] input.
  Value conv1d(Value x, Value kernels, std::size_t stride, std::size_t groups);
  // Gated recurrent pass over [T x D]; returns hidden states [T x H] in
  // original time order. reverse=true runs right to left.
  Value lstm(Value seq, Value w, Value u, Value b, bool reverse);
  Value transpose(Value x);
  Value concat_cols(Value a, Value b);
  Value mean_rows(Value x);
  Value last_row(Value x);
  Value tanh(Value x);
  Value softmax(Value v);
  Value pick(Value v, std::size_t index);
  Value sum(Value x);
  Value scale_add(Value a, double alpha, Value b, double beta);

  // Losses against fixed targets; all return scalars.
  Value mean_kl(Value predicted, Tensor true_dist);
  Value cross_entropy(Value predicted, Tensor one_hot);
  Value mse(Value predicted, Tensor target);

  // Seeds the root gradient with 1 and propagates. Root must be scalar.
  void backward(Value root);

  // Gradients of every param() leaf, keyed by name, summed if a parameter
  // appears more than once.
  GradientMap parameter_gradients() const;

private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::string param_name;
    std::function<void(Tape&)> back;
  };

  Value emit(Tensor value, std::function<void(Tape&)> back,
             std::string param_name = {});

  Tensor& grad_mut(Value v) { return nodes_[v.id].grad; }

  std::vector<Node> nodes_;
};

enum class Direction { kForward, kBackward, kBidirectional };

struct LstmParams {
  Tape::Value w;  // [D x 4H], gate order i,f,g,o
  Tape::Value u;  // [H x 4H]
  Tape::Value b;  // [4H]
};

// Unidirectional pass ([T x H]) or, with both parameter sets, the
// concatenation of the forward and reversed-backward passes ([T x 2H]).
Tape::Value recurrent_forward(Tape& tape, Tape::Value seq, const LstmParams& params,
                              Direction direction);
Tape::Value recurrent_forward(Tape& tape, Tape::Value seq, const LstmParams& fwd,
                              const LstmParams& bwd);

}  // namespace harkit
