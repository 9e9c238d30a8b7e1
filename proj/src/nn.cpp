#include "gridwm/nn.hpp"

#include <cmath>

namespace gridwm {

Tensor& ParameterSet::add(const std::string& path, Tensor t) {
  if (params_.count(path)) throw ConfigError("duplicate parameter path: " + path);
  t.node()->requires_grad = !frozen_;
  auto [it, ok] = params_.emplace(path, std::move(t));
  (void)ok;
  return it->second;
}

Tensor& ParameterSet::at(const std::string& path) {
  auto it = params_.find(path);
  if (it == params_.end()) throw ConfigError("unknown parameter path: " + path);
  return it->second;
}

const Tensor& ParameterSet::at(const std::string& path) const {
  auto it = params_.find(path);
  if (it == params_.end()) throw ConfigError("unknown parameter path: " + path);
  return it->second;
}

void ParameterSet::freeze() {
  frozen_ = true;
  for (auto& [k, t] : params_) {
    t.node()->requires_grad = false;
    t.node()->grad.clear();
  }
}

void ParameterSet::unfreeze() {
  frozen_ = false;
  for (auto& [k, t] : params_) t.node()->requires_grad = true;
}

void ParameterSet::zero_grad() {
  for (auto& [k, t] : params_) t.zero_grad();
}

bool ParameterSet::grads_all_zero() const {
  for (const auto& [k, t] : params_) {
    if (!t.has_grad()) continue;
    for (double g : t.node()->grad)
      if (g != 0.0) return false;
  }
  return true;
}

uint64_t ParameterSet::checksum() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [k, t] : params_) {
    h = fnv1a(k, h);
    h = fnv1a(t.data().data(), t.data().size() * sizeof(double), h);
  }
  return h;
}

int64_t ParameterSet::numel() const {
  int64_t n = 0;
  for (const auto& [k, t] : params_) n += t.size();
  return n;
}

namespace {
Tensor init_weight(const Shape& s, int fan_in, SeededRng& rng) {
  const double a = std::sqrt(1.0 / static_cast<double>(fan_in));
  return Tensor::uniform(s, -a, a, rng);
}
}  // namespace

Linear::Linear(ParameterSet& ps, const std::string& prefix, int in, int out, SeededRng& rng) {
  w = ps.add(prefix + "/w", init_weight({in, out}, in, rng));
  b = ps.add(prefix + "/b", Tensor::zeros({out}));
}

Conv2dLayer::Conv2dLayer(ParameterSet& ps, const std::string& prefix, int in_ch, int out_ch,
                         int k, int stride_, int pad_, SeededRng& rng)
    : stride(stride_), pad(pad_) {
  w = ps.add(prefix + "/w", init_weight({out_ch, in_ch, k, k}, in_ch * k * k, rng));
  b = ps.add(prefix + "/b", Tensor::zeros({out_ch}));
}

GruCell::GruCell(ParameterSet& ps, const std::string& prefix, int in, int hidden, SeededRng& rng)
    : xz(ps, prefix + "/xz", in, hidden, rng),
      hz(ps, prefix + "/hz", hidden, hidden, rng),
      xr(ps, prefix + "/xr", in, hidden, rng),
      hr(ps, prefix + "/hr", hidden, hidden, rng),
      xn(ps, prefix + "/xn", in, hidden, rng),
      hn(ps, prefix + "/hn", hidden, hidden, rng) {}

Tensor GruCell::step(const Tensor& x, const Tensor& h) const {
  Tensor z = sigmoid_t(add(xz(x), hz(h)));
  Tensor r = sigmoid_t(add(xr(x), hr(h)));
  Tensor n = tanh_t(add(xn(x), hn(mul(r, h))));
  // h' = (1-z)*n + z*h
  Tensor one_minus_z = add_const(scale(z, -1.0), 1.0);
  return add(mul(one_minus_z, n), mul(z, h));
}

void Adam::step(std::vector<ParameterSet*> sets) {
  for (ParameterSet* s : sets)
    if (s->frozen()) throw ContractError("adam step on frozen parameter set '" + s->name() + "'");
  // Global gradient-norm clip over everything being stepped.
  double sq = 0.0;
  for (ParameterSet* s : sets)
    for (auto& [k, t] : s->all()) {
      auto& g = t.grad();
      for (double v : g) sq += v * v;
    }
  const double norm = std::sqrt(sq);
  const double clip = clip_norm_ > 0.0 && norm > clip_norm_ ? clip_norm_ / (norm + kEps) : 1.0;
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (ParameterSet* s : sets)
    for (auto& [k, t] : s->all()) {
      auto& mom = state_[s->name() + "/" + k];
      auto& val = t.data();
      auto& g = t.grad();
      if (mom.m.size() != val.size()) {
        mom.m.assign(val.size(), 0.0);
        mom.v.assign(val.size(), 0.0);
      }
      for (size_t i = 0; i < val.size(); ++i) {
        const double gi = g[i] * clip;
        mom.m[i] = beta1_ * mom.m[i] + (1.0 - beta1_) * gi;
        mom.v[i] = beta2_ * mom.v[i] + (1.0 - beta2_) * gi * gi;
        const double mhat = mom.m[i] / bc1;
        const double vhat = mom.v[i] / bc2;
        val[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
      t.zero_grad();
    }
}

Tensor onehot_rows(const std::vector<int>& idx, int classes) {
  Tensor t = Tensor::zeros({static_cast<int>(idx.size()), classes});
  for (size_t i = 0; i < idx.size(); ++i)
    t.data()[i * static_cast<size_t>(classes) + static_cast<size_t>(idx[i])] = 1.0;
  return t;
}

Tensor bce_mean(const Tensor& probs, const Tensor& targets) {
  Tensor one_minus_p = add_const(scale(probs, -1.0), 1.0);
  Tensor one_minus_y = add_const(scale(targets, -1.0), 1.0);
  Tensor ll = add(mul(targets, log_t(add_const(probs, kEps))),
                  mul(one_minus_y, log_t(add_const(one_minus_p, kEps))));
  return scale(mean_all(ll), -1.0);
}

}  // namespace gridwm
