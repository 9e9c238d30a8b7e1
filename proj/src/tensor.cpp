#include "gridwm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_set>

namespace gridwm {

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int e : s) {
    if (e <= 0) throw DimensionError("non-positive extent");
    n *= e;
  }
  return n;
}

namespace {

using NodePtr = std::shared_ptr<Tensor::Node>;

NodePtr fresh(const Shape& s) {
  auto n = std::make_shared<Tensor::Node>();
  n->shape = s;
  n->value.resize(static_cast<size_t>(shape_numel(s)));
  return n;
}

bool any_requires(std::initializer_list<const Tensor*> ts) {
  for (const Tensor* t : ts)
    if (t->requires_grad()) return true;
  return false;
}

// Attach parents + backward only when the result participates in the tape.
void attach(const NodePtr& out, std::vector<NodePtr> parents,
            std::function<void(Tensor::Node&)> fn) {
  out->requires_grad = true;
  out->parents = std::move(parents);
  out->backward_fn = std::move(fn);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) throw DimensionError(std::string(op) + ": shape mismatch");
}

void check_2d(const Tensor& a, const char* op) {
  if (a.shape().size() != 2) throw DimensionError(std::string(op) + ": expected 2-d tensor");
}

}  // namespace

Tensor Tensor::zeros(const Shape& s, bool requires_grad) {
  auto n = fresh(s);
  n->requires_grad = requires_grad;
  return Tensor(n);
}

Tensor Tensor::full(const Shape& s, double v, bool requires_grad) {
  auto n = fresh(s);
  std::fill(n->value.begin(), n->value.end(), v);
  n->requires_grad = requires_grad;
  return Tensor(n);
}

Tensor Tensor::from(const Shape& s, std::vector<double> data, bool requires_grad) {
  if (static_cast<int64_t>(data.size()) != shape_numel(s))
    throw DimensionError("from: data length does not match shape");
  auto n = std::make_shared<Node>();
  n->shape = s;
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  return Tensor(n);
}

Tensor Tensor::scalar(double v, bool requires_grad) { return full({1}, v, requires_grad); }

Tensor Tensor::uniform(const Shape& s, double lo, double hi, SeededRng& rng, bool requires_grad) {
  auto n = fresh(s);
  for (double& v : n->value) v = rng.uniform(lo, hi);
  n->requires_grad = requires_grad;
  return Tensor(n);
}

double Tensor::item() const {
  if (size() != 1) throw DimensionError("item: tensor is not a scalar");
  return node_->value[0];
}

double Tensor::at(int r, int c) const {
  return node_->value[static_cast<size_t>(r) * static_cast<size_t>(dim(1)) +
                      static_cast<size_t>(c)];
}

Tensor Tensor::detach() const {
  auto n = std::make_shared<Node>();
  n->shape = node_->shape;
  n->value = node_->value;
  return Tensor(n);
}

void Tensor::backward() const {
  if (size() != 1) throw DimensionError("backward: loss must be scalar");
  if (!std::isfinite(item())) throw NumericError("backward: non-finite loss");
  // Iterative post-order DFS over the requires_grad subgraph.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, i] = stack.back();
    if (i < n->parents.size()) {
      Node* p = n->parents[i++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  for (Node* n : order) n->ensure_grad();
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn) {
      for (auto& p : n->parents) p->ensure_grad();
      n->backward_fn(*n);
    }
  }
}

// ---------------- elementwise ----------------

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  auto out = fresh(a.shape());
  const auto& av = a.data();
  const auto& bv = b.data();
  for (size_t i = 0; i < av.size(); ++i) out->value[i] = av[i] + bv[i];
  if (any_requires({&a, &b})) {
    attach(out, {a.node(), b.node()}, [](Tensor::Node& n) {
      for (int s = 0; s < 2; ++s) {
        auto& p = *n.parents[static_cast<size_t>(s)];
        if (!p.requires_grad) continue;
        for (size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += n.grad[i];
      }
    });
  }
  return Tensor(out);
}

Tensor add_rowvec(const Tensor& a, const Tensor& b) {
  check_2d(a, "add_rowvec");
  if (b.size() != a.dim(1)) throw DimensionError("add_rowvec: vector length mismatch");
  auto out = fresh(a.shape());
  const int r = a.dim(0), c = a.dim(1);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j)
      out->value[static_cast<size_t>(i * c + j)] = a.at(i, j) + b.at(j);
  if (any_requires({&a, &b})) {
    attach(out, {a.node(), b.node()}, [r, c](Tensor::Node& n) {
      auto& pa = *n.parents[0];
      auto& pb = *n.parents[1];
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) {
          const double g = n.grad[static_cast<size_t>(i * c + j)];
          if (pa.requires_grad) pa.grad[static_cast<size_t>(i * c + j)] += g;
          if (pb.requires_grad) pb.grad[static_cast<size_t>(j)] += g;
        }
    });
  }
  return Tensor(out);
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  auto out = fresh(a.shape());
  const auto& av = a.data();
  const auto& bv = b.data();
  for (size_t i = 0; i < av.size(); ++i) out->value[i] = av[i] * bv[i];
  if (any_requires({&a, &b})) {
    attach(out, {a.node(), b.node()}, [](Tensor::Node& n) {
      auto& pa = *n.parents[0];
      auto& pb = *n.parents[1];
      for (size_t i = 0; i < n.grad.size(); ++i) {
        if (pa.requires_grad) pa.grad[i] += n.grad[i] * pb.value[i];
        if (pb.requires_grad) pb.grad[i] += n.grad[i] * pa.value[i];
      }
    });
  }
  return Tensor(out);
}

Tensor scale(const Tensor& a, double c) {
  auto out = fresh(a.shape());
  const auto& av = a.data();
  for (size_t i = 0; i < av.size(); ++i) out->value[i] = av[i] * c;
  if (a.requires_grad()) {
    attach(out, {a.node()}, [c](Tensor::Node& n) {
      auto& p = *n.parents[0];
      for (size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += n.grad[i] * c;
    });
  }
  return Tensor(out);
}

Tensor add_const(const Tensor& a, double c) {
  auto out = fresh(a.shape());
  const auto& av = a.data();
  for (size_t i = 0; i < av.size(); ++i) out->value[i] = av[i] + c;
  if (a.requires_grad()) {
    attach(out, {a.node()}, [](Tensor::Node& n) {
      auto& p = *n.parents[0];
      for (size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += n.grad[i];
    });
  }
  return Tensor(out);
}

namespace {

template <typename F, typename D>
Tensor unary_op(const Tensor& a, F fwd, D dval) {
  auto out = fresh(a.shape());
  const auto& av = a.data();
  for (size_t i = 0; i < av.size(); ++i) out->value[i] = fwd(av[i]);
  if (a.requires_grad()) {
    attach(out, {a.node()}, [dval](Tensor::Node& n) {
      auto& p = *n.parents[0];
      for (size_t i = 0; i < n.grad.size(); ++i)
        p.grad[i] += n.grad[i] * dval(p.value[i], n.value[i]);
    });
  }
  return Tensor(out);
}

}  // namespace

Tensor tanh_t(const Tensor& a) {
  return unary_op(a, [](double x) { return std::tanh(x); },
                  [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid_t(const Tensor& a) {
  return unary_op(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                  [](double, double y) { return y * (1.0 - y); });
}

Tensor exp_t(const Tensor& a) {
  return unary_op(a, [](double x) { return std::exp(x); },
                  [](double, double y) { return y; });
}

Tensor log_t(const Tensor& a) {
  return unary_op(a, [](double x) { return std::log(x); },
                  [](double x, double) { return 1.0 / x; });
}

Tensor square_t(const Tensor& a) {
  return unary_op(a, [](double x) { return x * x; },
                  [](double x, double) { return 2.0 * x; });
}

Tensor max_floor(const Tensor& a, double floor) {
  return unary_op(a, [floor](double x) { return std::max(x, floor); },
                  [floor](double x, double) { return x > floor ? 1.0 : 0.0; });
}

// ---------------- reductions / structure ----------------

Tensor sum_all(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  auto out = fresh({1});
  out->value[0] = s;
  if (a.requires_grad()) {
    attach(out, {a.node()}, [](Tensor::Node& n) {
      auto& p = *n.parents[0];
      for (size_t i = 0; i < p.grad.size(); ++i) p.grad[i] += n.grad[0];
    });
  }
  return Tensor(out);
}

Tensor mean_all(const Tensor& a) { return scale(sum_all(a), 1.0 / static_cast<double>(a.size())); }

Tensor row_sum(const Tensor& a) {
  check_2d(a, "row_sum");
  const int r = a.dim(0), c = a.dim(1);
  auto out = fresh({r});
  for (int i = 0; i < r; ++i) {
    double s = 0.0;
    for (int j = 0; j < c; ++j) s += a.at(i, j);
    out->value[static_cast<size_t>(i)] = s;
  }
  if (a.requires_grad()) {
    attach(out, {a.node()}, [r, c](Tensor::Node& n) {
      auto& p = *n.parents[0];
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
          p.grad[static_cast<size_t>(i * c + j)] += n.grad[static_cast<size_t>(i)];
    });
  }
  return Tensor(out);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_2d(a, "matmul");
  check_2d(b, "matmul");
  const int m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
  if (k != k2) throw DimensionError("matmul: inner extents do not match");
  auto out = fresh({m, n});
  const double* av = a.data().data();
  const double* bv = b.data().data();
  double* ov = out->value.data();
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = bv + p * n;
      double* orow = ov + i * n;
      for (int j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  if (any_requires({&a, &b})) {
    attach(out, {a.node(), b.node()}, [m, k, n](Tensor::Node& nd) {
      auto& pa = *nd.parents[0];
      auto& pb = *nd.parents[1];
      const double* g = nd.grad.data();
      if (pa.requires_grad) {
        // dA = G * B^T
        const double* bv = pb.value.data();
        double* ga = pa.grad.data();
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j) {
            const double gij = g[i * n + j];
            if (gij == 0.0) continue;
            const double* brow = bv + 0;
            for (int p = 0; p < k; ++p) ga[i * k + p] += gij * brow[p * n + j];
          }
      }
      if (pb.requires_grad) {
        // dB = A^T * G
        const double* av = pa.value.data();
        double* gb = pb.grad.data();
        for (int i = 0; i < m; ++i)
          for (int p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            if (aip == 0.0) continue;
            const double* grow = g + i * n;
            double* brow = gb + p * n;
            for (int j = 0; j < n; ++j) brow[j] += aip * grow[j];
          }
      }
    });
  }
  return Tensor(out);
}

Tensor transpose(const Tensor& a) {
  check_2d(a, "transpose");
  const int r = a.dim(0), c = a.dim(1);
  auto out = fresh({c, r});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out->value[static_cast<size_t>(j * r + i)] = a.at(i, j);
  if (a.requires_grad()) {
    attach(out, {a.node()}, [r, c](Tensor::Node& n) {
      auto& p = *n.parents[0];
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
          p.grad[static_cast<size_t>(i * c + j)] += n.grad[static_cast<size_t>(j * r + i)];
    });
  }
  return Tensor(out);
}

Tensor reshape(const Tensor& a, const Shape& s) {
  if (shape_numel(s) != a.size()) throw DimensionError("reshape: element count mismatch");
  auto out = std::make_shared<Tensor::Node>();
  out->shape = s;
  out->value = a.data();
  if (a.requires_grad()) {
    attach(out, {a.node()}, [](Tensor::Node& n) {
      auto& p = *n.parents[0];
      for (size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += n.grad[i];
    });
  }
  return Tensor(out);
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  check_2d(a, "concat_cols");
  check_2d(b, "concat_cols");
  if (a.dim(0) != b.dim(0)) throw DimensionError("concat_cols: row count mismatch");
  const int r = a.dim(0), ca = a.dim(1), cb = b.dim(1);
  auto out = fresh({r, ca + cb});
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < ca; ++j) out->value[static_cast<size_t>(i * (ca + cb) + j)] = a.at(i, j);
    for (int j = 0; j < cb; ++j)
      out->value[static_cast<size_t>(i * (ca + cb) + ca + j)] = b.at(i, j);
  }
  if (any_requires({&a, &b})) {
    attach(out, {a.node(), b.node()}, [r, ca, cb](Tensor::Node& n) {
      auto& pa = *n.parents[0];
      auto& pb = *n.parents[1];
      for (int i = 0; i < r; ++i) {
        if (pa.requires_grad)
          for (int j = 0; j < ca; ++j)
            pa.grad[static_cast<size_t>(i * ca + j)] +=
                n.grad[static_cast<size_t>(i * (ca + cb) + j)];
        if (pb.requires_grad)
          for (int j = 0; j < cb; ++j)
            pb.grad[static_cast<size_t>(i * cb + j)] +=
                n.grad[static_cast<size_t>(i * (ca + cb) + ca + j)];
      }
    });
  }
  return Tensor(out);
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const int c = parts[0].dim(1);
  int rows = 0;
  bool rg = false;
  for (const auto& t : parts) {
    check_2d(t, "concat_rows");
    if (t.dim(1) != c) throw DimensionError("concat_rows: column count mismatch");
    rows += t.dim(0);
    rg = rg || t.requires_grad();
  }
  auto out = fresh({rows, c});
  size_t off = 0;
  for (const auto& t : parts) {
    std::copy(t.data().begin(), t.data().end(), out->value.begin() + static_cast<long>(off));
    off += t.data().size();
  }
  if (rg) {
    std::vector<NodePtr> ps;
    ps.reserve(parts.size());
    for (const auto& t : parts) ps.push_back(t.node());
    attach(out, std::move(ps), [](Tensor::Node& n) {
      size_t off = 0;
      for (auto& pp : n.parents) {
        auto& p = *pp;
        if (p.requires_grad)
          for (size_t i = 0; i < p.value.size(); ++i) p.grad[i] += n.grad[off + i];
        off += p.value.size();
      }
    });
  }
  return Tensor(out);
}

Tensor slice_rows(const Tensor& a, int r0, int r1) {
  check_2d(a, "slice_rows");
  if (r0 < 0 || r1 > a.dim(0) || r0 >= r1) throw DimensionError("slice_rows: bad range");
  const int c = a.dim(1);
  auto out = fresh({r1 - r0, c});
  std::copy(a.data().begin() + static_cast<long>(r0) * c, a.data().begin() + static_cast<long>(r1) * c,
            out->value.begin());
  if (a.requires_grad()) {
    attach(out, {a.node()}, [r0, c](Tensor::Node& n) {
      auto& p = *n.parents[0];
      for (size_t i = 0; i < n.grad.size(); ++i)
        p.grad[static_cast<size_t>(r0) * static_cast<size_t>(c) + i] += n.grad[i];
    });
  }
  return Tensor(out);
}

Tensor slice_cols(const Tensor& a, int c0, int c1) {
  check_2d(a, "slice_cols");
  if (c0 < 0 || c1 > a.dim(1) || c0 >= c1) throw DimensionError("slice_cols: bad range");
  const int r = a.dim(0), c = a.dim(1), w = c1 - c0;
  auto out = fresh({r, w});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < w; ++j) out->value[static_cast<size_t>(i * w + j)] = a.at(i, c0 + j);
  if (a.requires_grad()) {
    attach(out, {a.node()}, [r, c, c0, w](Tensor::Node& n) {
      auto& p = *n.parents[0];
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < w; ++j)
          p.grad[static_cast<size_t>(i * c + c0 + j)] += n.grad[static_cast<size_t>(i * w + j)];
    });
  }
  return Tensor(out);
}

// ---------------- categorical ----------------

Tensor softmax_rows(const Tensor& logits) {
  check_2d(logits, "softmax_rows");
  const int r = logits.dim(0), c = logits.dim(1);
  if (c < 2) throw DimensionError("softmax_rows: need at least 2 classes");
  auto out = fresh({r, c});
  for (int i = 0; i < r; ++i) {
    double mx = logits.at(i, 0);
    for (int j = 1; j < c; ++j) mx = std::max(mx, logits.at(i, j));
    if (!std::isfinite(mx)) throw NumericError("softmax_rows: non-finite logits");
    double z = 0.0;
    for (int j = 0; j < c; ++j) {
      const double e = std::exp(logits.at(i, j) - mx);
      out->value[static_cast<size_t>(i * c + j)] = e;
      z += e;
    }
    for (int j = 0; j < c; ++j) out->value[static_cast<size_t>(i * c + j)] /= z;
  }
  if (logits.requires_grad()) {
    attach(out, {logits.node()}, [r, c](Tensor::Node& n) {
      auto& p = *n.parents[0];
      for (int i = 0; i < r; ++i) {
        double dot = 0.0;
        for (int j = 0; j < c; ++j)
          dot += n.grad[static_cast<size_t>(i * c + j)] * n.value[static_cast<size_t>(i * c + j)];
        for (int j = 0; j < c; ++j) {
          const size_t idx = static_cast<size_t>(i * c + j);
          p.grad[idx] += n.value[idx] * (n.grad[idx] - dot);
        }
      }
    });
  }
  return Tensor(out);
}

Tensor log_softmax_rows(const Tensor& logits) {
  check_2d(logits, "log_softmax_rows");
  const int r = logits.dim(0), c = logits.dim(1);
  auto out = fresh({r, c});
  for (int i = 0; i < r; ++i) {
    double mx = logits.at(i, 0);
    for (int j = 1; j < c; ++j) mx = std::max(mx, logits.at(i, j));
    if (!std::isfinite(mx)) throw NumericError("log_softmax_rows: non-finite logits");
    double z = 0.0;
    for (int j = 0; j < c; ++j) z += std::exp(logits.at(i, j) - mx);
    const double lz = mx + std::log(z);
    for (int j = 0; j < c; ++j)
      out->value[static_cast<size_t>(i * c + j)] = logits.at(i, j) - lz;
  }
  if (logits.requires_grad()) {
    attach(out, {logits.node()}, [r, c](Tensor::Node& n) {
      auto& p = *n.parents[0];
      for (int i = 0; i < r; ++i) {
        double gs = 0.0;
        for (int j = 0; j < c; ++j) gs += n.grad[static_cast<size_t>(i * c + j)];
        for (int j = 0; j < c; ++j) {
          const size_t idx = static_cast<size_t>(i * c + j);
          p.grad[idx] += n.grad[idx] - std::exp(n.value[idx]) * gs;
        }
      }
    });
  }
  return Tensor(out);
}

Tensor kl_rows(const Tensor& q, const Tensor& p) {
  check_same_shape(q, p, "kl_rows");
  check_2d(q, "kl_rows");
  const int r = q.dim(0), c = q.dim(1);
  auto out = fresh({r});
  for (int i = 0; i < r; ++i) {
    double s = 0.0;
    for (int j = 0; j < c; ++j) {
      const double qv = q.at(i, j);
      s += qv * (std::log(qv + kEps) - std::log(p.at(i, j) + kEps));
    }
    out->value[static_cast<size_t>(i)] = s;
  }
  if (any_requires({&q, &p})) {
    attach(out, {q.node(), p.node()}, [r, c](Tensor::Node& n) {
      auto& pq = *n.parents[0];
      auto& pp = *n.parents[1];
      for (int i = 0; i < r; ++i) {
        const double g = n.grad[static_cast<size_t>(i)];
        for (int j = 0; j < c; ++j) {
          const size_t idx = static_cast<size_t>(i * c + j);
          const double qv = pq.value[idx], pv = pp.value[idx];
          if (pq.requires_grad)
            pq.grad[idx] += g * (std::log(qv + kEps) - std::log(pv + kEps) + qv / (qv + kEps));
          if (pp.requires_grad) pp.grad[idx] += -g * qv / (pv + kEps);
        }
      }
    });
  }
  return Tensor(out);
}

Tensor sample_straight_through(const Tensor& probs, SeededRng& rng) {
  check_2d(probs, "sample_straight_through");
  const int r = probs.dim(0), c = probs.dim(1);
  auto out = fresh({r, c});
  for (int i = 0; i < r; ++i) {
    const double u = rng.uniform();
    double acc = 0.0;
    int pick = c - 1;
    for (int j = 0; j < c; ++j) {
      acc += probs.at(i, j);
      if (u < acc) {
        pick = j;
        break;
      }
    }
    out->value[static_cast<size_t>(i * c + pick)] = 1.0;
  }
  if (probs.requires_grad()) {
    attach(out, {probs.node()}, [](Tensor::Node& n) {
      auto& p = *n.parents[0];
      for (size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += n.grad[i];
    });
  }
  return Tensor(out);
}

// ---------------- conv ----------------

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  if (x.shape().size() != 4 || w.shape().size() != 4)
    throw DimensionError("conv2d: expected 4-d input and kernel");
  const int B = x.dim(0), Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  if (w.dim(1) != Ci) throw DimensionError("conv2d: channel mismatch");
  if (b.size() != Co) throw DimensionError("conv2d: bias length mismatch");
  const int Ho = (H + 2 * pad - kh) / stride + 1;
  const int Wo = (W + 2 * pad - kw) / stride + 1;
  auto out = fresh({B, Co, Ho, Wo});
  const double* xv = x.data().data();
  const double* wv = w.data().data();
  const double* bv = b.data().data();
  double* ov = out->value.data();
  for (int n = 0; n < B; ++n)
    for (int co = 0; co < Co; ++co)
      for (int oy = 0; oy < Ho; ++oy)
        for (int ox = 0; ox < Wo; ++ox) {
          double s = bv[co];
          for (int ci = 0; ci < Ci; ++ci)
            for (int ky = 0; ky < kh; ++ky) {
              const int iy = oy * stride - pad + ky;
              if (iy < 0 || iy >= H) continue;
              for (int kx = 0; kx < kw; ++kx) {
                const int ix = ox * stride - pad + kx;
                if (ix < 0 || ix >= W) continue;
                s += xv[((n * Ci + ci) * H + iy) * W + ix] *
                     wv[((co * Ci + ci) * kh + ky) * kw + kx];
              }
            }
          ov[((n * Co + co) * Ho + oy) * Wo + ox] = s;
        }
  if (any_requires({&x, &w, &b})) {
    attach(out, {x.node(), w.node(), b.node()},
           [B, Ci, H, W, Co, kh, kw, Ho, Wo, stride, pad](Tensor::Node& nd) {
             auto& px = *nd.parents[0];
             auto& pw = *nd.parents[1];
             auto& pb = *nd.parents[2];
             const double* g = nd.grad.data();
             for (int n = 0; n < B; ++n)
               for (int co = 0; co < Co; ++co)
                 for (int oy = 0; oy < Ho; ++oy)
                   for (int ox = 0; ox < Wo; ++ox) {
                     const double go = g[((n * Co + co) * Ho + oy) * Wo + ox];
                     if (go == 0.0) continue;
                     if (pb.requires_grad) pb.grad[static_cast<size_t>(co)] += go;
                     for (int ci = 0; ci < Ci; ++ci)
                       for (int ky = 0; ky < kh; ++ky) {
                         const int iy = oy * stride - pad + ky;
                         if (iy < 0 || iy >= H) continue;
                         for (int kx = 0; kx < kw; ++kx) {
                           const int ix = ox * stride - pad + kx;
                           if (ix < 0 || ix >= W) continue;
                           const size_t xi = static_cast<size_t>(((n * Ci + ci) * H + iy) * W + ix);
                           const size_t wi =
                               static_cast<size_t>(((co * Ci + ci) * kh + ky) * kw + kx);
                           if (px.requires_grad) px.grad[xi] += go * pw.value[wi];
                           if (pw.requires_grad) pw.grad[wi] += go * px.value[xi];
                         }
                       }
                   }
           });
  }
  return Tensor(out);
}

int argmax_row(const Tensor& t, int row) {
  const int c = t.dim(1);
  int best = 0;
  for (int j = 1; j < c; ++j)
    if (t.at(row, j) > t.at(row, best)) best = j;
  return best;
}

}  // namespace gridwm
