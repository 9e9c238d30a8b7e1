#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "gridwm/common.hpp"

namespace gridwm {

using Shape = std::vector<int>;

int64_t shape_numel(const Shape& s);

// Dense 64-bit float tensor participating in a reverse-mode gradient tape.
// Ops are free functions below; each result node records its parents and a
// backward closure. Graphs are rebuilt per forward pass; parameters are leaves
// that persist across passes.
class Tensor {
 public:
  struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // sized lazily, same length as value
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;  // accumulates into parents' grads
    void ensure_grad() {
      if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
  };

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  static Tensor zeros(const Shape& s, bool requires_grad = false);
  static Tensor full(const Shape& s, double v, bool requires_grad = false);
  static Tensor from(const Shape& s, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor uniform(const Shape& s, double lo, double hi, SeededRng& rng,
                        bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int64_t size() const { return static_cast<int64_t>(node_->value.size()); }
  int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }

  std::vector<double>& data() { return node_->value; }
  const std::vector<double>& data() const { return node_->value; }
  std::vector<double>& grad() { node_->ensure_grad(); return node_->grad; }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  double item() const;
  double at(int i) const { return node_->value[static_cast<size_t>(i)]; }
  double at(int r, int c) const;

  // Value copy detached from the tape.
  Tensor detach() const;
  void zero_grad() { if (node_) node_->grad.assign(node_->value.size(), 0.0); }

  // Reverse pass from a scalar. Accumulates adjoints into every reachable
  // requires_grad node.
  void backward() const;

  std::shared_ptr<Node> node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// ---- elementwise / arithmetic ----
Tensor add(const Tensor& a, const Tensor& b);           // same shape
Tensor add_rowvec(const Tensor& a, const Tensor& b);    // [m,n] + [n]
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);           // same shape
Tensor scale(const Tensor& a, double c);
Tensor add_const(const Tensor& a, double c);
Tensor tanh_t(const Tensor& a);
Tensor sigmoid_t(const Tensor& a);
Tensor exp_t(const Tensor& a);
Tensor log_t(const Tensor& a);
Tensor square_t(const Tensor& a);
Tensor max_floor(const Tensor& a, double floor);  // elementwise max(a, floor)

// ---- reductions / structure ----
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
Tensor row_sum(const Tensor& a);                        // [r,c] -> [r]
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, const Shape& s);
Tensor concat_cols(const Tensor& a, const Tensor& b);   // [r,ca]+[r,cb] -> [r,ca+cb]
Tensor concat_rows(const std::vector<Tensor>& parts);   // stack along rows
Tensor slice_rows(const Tensor& a, int r0, int r1);
Tensor slice_cols(const Tensor& a, int c0, int c1);

// ---- categorical ----
// Row-wise stabilized softmax over the last axis of a [r,c] tensor.
Tensor softmax_rows(const Tensor& logits);
Tensor log_softmax_rows(const Tensor& logits);
// Per-row KL(q || p) with eps-clamped logs; inputs are probability rows.
Tensor kl_rows(const Tensor& q, const Tensor& p);
// Forward: one-hot sample per row. Backward: identity into probs.
Tensor sample_straight_through(const Tensor& probs, SeededRng& rng);

// ---- conv ----
// x [B,Ci,H,W], w [Co,Ci,kh,kw], b [Co]; zero padding.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad);

// Plain-value helpers (no tape).
int argmax_row(const Tensor& t, int row);

}  // namespace gridwm
