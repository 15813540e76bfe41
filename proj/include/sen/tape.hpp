#pragma once

#include <functional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sen/errors.hpp"
#include "sen/tensor.hpp"

namespace sen {

// Reverse-mode tape. Nodes are appended in execution order, which is a
// topological order of the computation graph, so one reverse sweep visits
// every node exactly once. backward() accumulates leaf adjoints into the
// grad buffers of bound parameters and then resets the tape; a consumed
// tape rejects further use.
class Tape {
 public:
  struct Ref {
    int idx = -1;
    bool valid() const { return idx >= 0; }
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Constant leaf: participates in the forward pass only.
  Ref input(Tensor t);
  Ref input(Shape shape, std::vector<double> values);

  // Tracked leaf bound to an external parameter. Binding the same tensor
  // twice returns the same node, so shared weights accumulate gradients.
  Ref param(Tensor& p);

  const Tensor& val(Ref r) const;
  double scalar_val(Ref r) const;

  // Elementwise and structural ops.
  Ref add(Ref a, Ref b);
  Ref sub(Ref a, Ref b);
  Ref mul(Ref a, Ref b);
  Ref scale(Ref a, double c);
  Ref sum(Ref a);
  Ref mean_of(std::span<const Ref> xs);     // elementwise mean of same-shape tensors
  Ref concat(std::span<const Ref> xs);      // flatten + join into one vector
  Ref slice(Ref a, int offset, int len);    // vector segment
  Ref stack_rows(std::span<const Ref> xs);  // [C,h_i,W] -> [C,sum h_i,W]
  Ref reshape(Ref a, Shape s);

  // Linear algebra.
  Ref matvec(Ref W, Ref x);        // W [m x n] * x [n]
  Ref dense(Ref W, Ref x, Ref b);  // W*x + b
  // Valid cross-correlation, stride 1. input [Cin,H,W], filters
  // [Cout,Cin,FH,FW], bias [Cout] -> [Cout,H-FH+1,W-FW+1]. Filters scan
  // horizontally; FH may consume the full height.
  Ref conv1d(Ref in, Ref filt, Ref bias);

  // Activations (softmax acts along the final axis).
  Ref relu(Ref a);
  Ref tanh_op(Ref a);
  Ref logistic(Ref a);
  Ref softmax(Ref a);

  // Losses and similarity.
  Ref cosine(Ref a, Ref b);  // scalar; throws NumericError on zero norm
  // J = sum_p max(z,0) - s_p*z + log(1+exp(-|z|)) with z = steepness*phi_p.
  Ref pairwise_nll(Ref phis, const std::vector<int>& s, double steepness);
  Ref softmax_xent(Ref logits, int label);  // scalar cross entropy

  // Reverse sweep from a scalar loss; consumes the tape.
  void backward(Ref loss);

  int node_count() const { return (int)nodes_.size(); }
  bool consumed() const { return consumed_; }

 private:
  struct Node {
    Tensor value;
    std::vector<double> adj;  // lazily allocated adjoint buffer
    std::function<void(Tape&, int)> back;
    Tensor* bound = nullptr;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, int> param_nodes_;
  bool consumed_ = false;

  Ref push(Tensor value, std::function<void(Tape&, int)> back);
  void ensure_adj(int idx);
  bool has_adj(int idx) const { return !nodes_[(size_t)idx].adj.empty(); }
  std::vector<double>& adj(int idx);
  const Tensor& node_val(int idx) const { return nodes_[(size_t)idx].value; }
  void check_open() const;
  void check_ref(Ref r) const;
};

// One LSTM layer's packed gate weights: rows ordered [input|forget|cell|output].
struct LstmRefs {
  Tape::Ref W;  // [4*hid x in]
  Tape::Ref U;  // [4*hid x hid]
  Tape::Ref b;  // [4*hid]
};

// Standard LSTM cell: logistic input/forget/output gates, tanh candidate.
// Returns (h', c'). Composed from tape primitives, so gradients flow
// through both returned states.
std::pair<Tape::Ref, Tape::Ref> lstm_step(Tape& t, Tape::Ref x, Tape::Ref h, Tape::Ref c,
                                          const LstmRefs& w, int hid);

}  // namespace sen
