#pragma once

#include <map>
#include <string>

#include "gridwm/tensor.hpp"

namespace gridwm {

// Named collection of learnable tensors. Freezing is a hard boundary: a frozen
// set rejects optimizer steps and its members are created/marked non-grad.
class ParameterSet {
 public:
  explicit ParameterSet(std::string name = "") : name_(std::move(name)) {}

  Tensor& add(const std::string& path, Tensor t);
  Tensor& at(const std::string& path);
  const Tensor& at(const std::string& path) const;
  bool contains(const std::string& path) const { return params_.count(path) > 0; }

  const std::map<std::string, Tensor>& all() const { return params_; }
  std::map<std::string, Tensor>& all() { return params_; }
  const std::string& name() const { return name_; }

  bool frozen() const { return frozen_; }
  void freeze();
  void unfreeze();

  void zero_grad();
  // True if every member's gradient is absent or exactly zero.
  bool grads_all_zero() const;
  // FNV-1a over raw value bytes in path order; freeze-contract witness.
  uint64_t checksum() const;
  int64_t numel() const;

 private:
  std::string name_;
  std::map<std::string, Tensor> params_;
  bool frozen_ = false;
};

struct Linear {
  Tensor w, b;
  Linear() = default;
  Linear(ParameterSet& ps, const std::string& prefix, int in, int out, SeededRng& rng);
  Tensor operator()(const Tensor& x) const { return add_rowvec(matmul(x, w), b); }
};

struct Conv2dLayer {
  Tensor w, b;
  int stride = 1, pad = 0;
  Conv2dLayer() = default;
  Conv2dLayer(ParameterSet& ps, const std::string& prefix, int in_ch, int out_ch, int k,
              int stride, int pad, SeededRng& rng);
  Tensor operator()(const Tensor& x) const { return conv2d(x, w, b, stride, pad); }
};

// Standard GRU cell: z/r gates and candidate n, h' = (1-z)*n + z*h.
struct GruCell {
  Linear xz, hz, xr, hr, xn, hn;
  GruCell() = default;
  GruCell(ParameterSet& ps, const std::string& prefix, int in, int hidden, SeededRng& rng);
  Tensor step(const Tensor& x, const Tensor& h) const;
};

// Adam with global gradient-norm clipping across all supplied sets.
class Adam {
 public:
  Adam(double lr, double beta1, double beta2, double eps, double clip_norm)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), clip_norm_(clip_norm) {}

  void step(std::vector<ParameterSet*> sets);
  void step(ParameterSet& set) { step(std::vector<ParameterSet*>{&set}); }

  int64_t step_count() const { return t_; }
  double lr() const { return lr_; }

  struct Moments {
    std::vector<double> m, v;
  };
  std::map<std::string, Moments>& state() { return state_; }
  void set_step_count(int64_t t) { t_ = t; }

 private:
  double lr_, beta1_, beta2_, eps_, clip_norm_;
  int64_t t_ = 0;
  std::map<std::string, Moments> state_;  // keyed by set-name/param-path
};

// Constant one-hot rows, [n, classes].
Tensor onehot_rows(const std::vector<int>& idx, int classes);

// -sum(y*log(p+eps) + (1-y)*log(1-p+eps)) / n for probabilities p.
Tensor bce_mean(const Tensor& probs, const Tensor& targets);

}  // namespace gridwm
