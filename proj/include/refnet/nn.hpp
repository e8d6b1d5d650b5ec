#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "refnet/csv.hpp"
#include "refnet/dense.hpp"
#include "refnet/rng.hpp"

namespace refnet {

enum class Activation : std::uint8_t { Relu = 0, Sigmoid = 1, Identity = 2 };

inline double apply_act(Activation a, double z) {
  switch (a) {
    case Activation::Relu: return z > 0 ? z : 0;
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
    default: return z;
  }
}

inline double act_grad_from_output(Activation a, double z, double y) {
  switch (a) {
    case Activation::Relu: return z > 0 ? 1.0 : 0.0;
    case Activation::Sigmoid: return y * (1.0 - y);
    default: return 1.0;
  }
}

inline constexpr double kProbClamp = 1e-12;

inline double clamp_prob(double p) {
  if (p < kProbClamp) return kProbClamp;
  if (p > 1.0 - kProbClamp) return 1.0 - kProbClamp;
  return p;
}

struct BceResult {
  double loss = 0;
  std::vector<double> grad;  // d(mean loss)/d p_i, at the clamped probabilities
};

inline BceResult bce_loss(const std::vector<double>& p, const std::vector<double>& y) {
  if (p.size() != y.size()) throw NumericError("bce: probability/label length mismatch");
  if (p.empty()) throw NumericError("bce: empty input");
  BceResult r;
  r.grad.resize(p.size());
  const double n = static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    double pi = clamp_prob(p[i]);
    r.loss += -(y[i] * std::log(pi) + (1.0 - y[i]) * std::log(1.0 - pi));
    r.grad[i] = (-(y[i] / pi) + (1.0 - y[i]) / (1.0 - pi)) / n;
  }
  r.loss /= n;
  return r;
}

// Feed-forward network with manual gradients. Parameters live in one flat
// vector (per layer: W row-major out x in, then bias), which keeps Adam and
// finite-difference checks trivial.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<std::size_t> dims, std::vector<Activation> acts, double dropout_rate = 0.0)
      : dims_(std::move(dims)), acts_(std::move(acts)), dropout_(dropout_rate) {
    if (dims_.size() < 2 || acts_.size() != dims_.size() - 1)
      throw NumericError("mlp: dims/activations mismatch");
    if (dropout_ < 0.0 || dropout_ >= 1.0) throw NumericError("mlp: dropout must be in [0,1)");
    offsets_.push_back(0);
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l)
      offsets_.push_back(offsets_.back() + dims_[l + 1] * dims_[l] + dims_[l + 1]);
    theta_.assign(offsets_.back(), 0.0);
  }

  std::size_t layer_count() const { return acts_.size(); }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t output_dim() const { return dims_.back(); }
  const std::vector<std::size_t>& dims() const { return dims_; }
  Activation activation(std::size_t l) const { return acts_[l]; }
  double dropout_rate() const { return dropout_; }

  std::vector<double>& params() { return theta_; }
  const std::vector<double>& params() const { return theta_; }

  double* weights(std::size_t l) { return theta_.data() + offsets_[l]; }
  const double* weights(std::size_t l) const { return theta_.data() + offsets_[l]; }
  double* bias(std::size_t l) { return theta_.data() + offsets_[l] + dims_[l + 1] * dims_[l]; }
  const double* bias(std::size_t l) const {
    return theta_.data() + offsets_[l] + dims_[l + 1] * dims_[l];
  }

  void init_xavier(Rng rng) {
    for (std::size_t l = 0; l < layer_count(); ++l) {
      double bound = std::sqrt(6.0 / static_cast<double>(dims_[l] + dims_[l + 1]));
      double* w = weights(l);
      for (std::size_t i = 0; i < dims_[l + 1] * dims_[l]; ++i) w[i] = rng.uniform(-bound, bound);
      double* b = bias(l);
      for (std::size_t i = 0; i < dims_[l + 1]; ++i) b[i] = 0.0;
    }
  }

  struct Cache {
    std::vector<Dense> act;   // act[0] = input, act[l+1] = layer l output (post-dropout)
    std::vector<Dense> pre;   // pre-activations per layer
    std::vector<Dense> mask;  // inverted-dropout multipliers per hidden layer (empty if none)
  };

  // Row-per-sample forward pass. Training mode applies inverted dropout
  // after each hidden activation; per-sample streams keep the masks
  // independent of batch partitioning.
  Dense forward(const Dense& x, bool training = false, const Rng& rng = Rng(),
                Cache* cache = nullptr) const {
    if (x.cols() != input_dim()) throw NumericError("mlp: input dim mismatch");
    x.require_finite("mlp input");
    Dense cur = x;
    if (cache) {
      cache->act.clear();
      cache->pre.clear();
      cache->mask.clear();
      cache->act.push_back(cur);
    }
    for (std::size_t l = 0; l < layer_count(); ++l) {
      Dense z(cur.rows(), dims_[l + 1]);
      const double* w = weights(l);
      const double* b = bias(l);
      for (std::size_t r = 0; r < cur.rows(); ++r) {
        const double* in = cur.row(r);
        double* out = z.row(r);
        for (std::size_t o = 0; o < dims_[l + 1]; ++o)
          out[o] = b[o] + dot(w + o * dims_[l], in, dims_[l]);
      }
      if (cache) cache->pre.push_back(z);
      Dense a(z.rows(), z.cols());
      for (std::size_t i = 0; i < z.size(); ++i)
        a.data()[i] = apply_act(acts_[l], z.data()[i]);
      bool hidden = l + 1 < layer_count();
      if (hidden && training && dropout_ > 0.0) {
        Dense m(a.rows(), a.cols());
        double keep = 1.0 - dropout_;
        for (std::size_t r = 0; r < a.rows(); ++r) {
          Rng row_rng = rng.derive("dropout", l, r);
          for (std::size_t c = 0; c < a.cols(); ++c) {
            double mult = row_rng.bernoulli(keep) ? 1.0 / keep : 0.0;
            m(r, c) = mult;
            a(r, c) *= mult;
          }
        }
        if (cache) cache->mask.push_back(std::move(m));
      } else if (cache && hidden) {
        cache->mask.emplace_back();
      }
      cur = std::move(a);
      if (cache) cache->act.push_back(cur);
    }
    return cur;
  }

  // dLdOut is d(loss)/d(network output). Returns d(loss)/d(theta), and the
  // input gradient when requested.
  std::vector<double> backward(const Cache& cache, const Dense& dLdOut,
                               Dense* dLdInput = nullptr) const {
    std::vector<double> grad(theta_.size(), 0.0);
    Dense delta = dLdOut;  // gradient at current layer's post-dropout output
    for (std::size_t l = layer_count(); l-- > 0;) {
      bool hidden = l + 1 < layer_count();
      if (hidden && !cache.mask[l].values().empty()) {
        const Dense& m = cache.mask[l];
        for (std::size_t i = 0; i < delta.size(); ++i) delta.data()[i] *= m.data()[i];
      }
      const Dense& z = cache.pre[l];
      Dense dz(delta.rows(), delta.cols());
      for (std::size_t r = 0; r < delta.rows(); ++r)
        for (std::size_t c = 0; c < delta.cols(); ++c) {
          // act[l+1] holds post-dropout values; recompute the activation
          // output from the pre-activation so sigmoid grads are exact.
          double y = apply_act(acts_[l], z(r, c));
          dz(r, c) = delta(r, c) * act_grad_from_output(acts_[l], z(r, c), y);
        }
      double* gw = grad.data() + offsets_[l];
      double* gb = grad.data() + offsets_[l] + dims_[l + 1] * dims_[l];
      const Dense& in = cache.act[l];
      for (std::size_t r = 0; r < dz.rows(); ++r)
        for (std::size_t o = 0; o < dims_[l + 1]; ++o) {
          double d = dz(r, o);
          if (d == 0.0) continue;
          axpy(d, in.row(r), gw + o * dims_[l], dims_[l]);
          gb[o] += d;
        }
      if (l > 0 || dLdInput) {
        Dense prev(dz.rows(), dims_[l]);
        const double* w = weights(l);
        for (std::size_t r = 0; r < dz.rows(); ++r)
          for (std::size_t o = 0; o < dims_[l + 1]; ++o) {
            double d = dz(r, o);
            if (d == 0.0) continue;
            axpy(d, w + o * dims_[l], prev.row(r), dims_[l]);
          }
        if (l == 0 && dLdInput) *dLdInput = std::move(prev);
        else delta = std::move(prev);
      }
    }
    return grad;
  }

  // Smallest |pre-activation| across relu layers; used to screen finite
  // difference checks away from relu kinks.
  double relu_kink_margin(const Dense& x) const {
    Cache cache;
    forward(x, false, Rng(), &cache);
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < layer_count(); ++l) {
      if (acts_[l] != Activation::Relu) continue;
      for (double z : cache.pre[l].values()) margin = std::min(margin, std::abs(z));
    }
    return margin;
  }

  void save(const std::string& path, const Provenance& prov = {}) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NumericError("cannot write checkpoint: " + path);
    auto put_u64 = [&](std::uint64_t v) {
      unsigned char b[8];
      for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
      out.write(reinterpret_cast<const char*>(b), 8);
    };
    out.write("RNETNN01", 8);
    put_u64(prov.digest);
    put_u64(prov.seed);
    put_u64(dims_.size());
    for (auto d : dims_) put_u64(d);
    for (auto a : acts_) out.put(static_cast<char>(a));
    std::uint64_t dbits;
    std::memcpy(&dbits, &dropout_, 8);
    put_u64(dbits);
    put_u64(theta_.size());
    for (double t : theta_) {
      std::memcpy(&dbits, &t, 8);
      put_u64(dbits);
    }
  }

  static Mlp load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NumericError("cannot read checkpoint: " + path);
    auto get_u64 = [&]() {
      unsigned char b[8];
      in.read(reinterpret_cast<char*>(b), 8);
      std::uint64_t v = 0;
      for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
      return v;
    };
    char magic[8];
    in.read(magic, 8);
    if (std::memcmp(magic, "RNETNN01", 8) != 0) throw NumericError("bad checkpoint magic");
    get_u64();  // digest
    get_u64();  // seed
    std::size_t ndims = get_u64();
    std::vector<std::size_t> dims(ndims);
    for (auto& d : dims) d = get_u64();
    std::vector<Activation> acts(ndims - 1);
    for (auto& a : acts) a = static_cast<Activation>(in.get());
    std::uint64_t dbits = get_u64();
    double dropout;
    std::memcpy(&dropout, &dbits, 8);
    Mlp m(dims, acts, dropout);
    std::size_t nparams = get_u64();
    if (nparams != m.theta_.size()) throw NumericError("checkpoint parameter count mismatch");
    for (auto& t : m.theta_) {
      dbits = get_u64();
      std::memcpy(&t, &dbits, 8);
    }
    if (!in) throw NumericError("truncated checkpoint: " + path);
    return m;
  }

 private:
  std::vector<std::size_t> dims_;
  std::vector<Activation> acts_;
  double dropout_ = 0.0;
  std::vector<std::size_t> offsets_;
  std::vector<double> theta_;
};

// Bias-corrected Adam over a flat parameter vector.
struct AdamState {
  std::size_t step = 0;
  std::vector<double> m, v;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(std::size_t n = 0, double learning_rate = 1e-3)
      : m(n, 0.0), v(n, 0.0), lr(learning_rate) {}
};

inline void adam_step(AdamState& st, std::vector<double>& params,
                      const std::vector<double>& grads) {
  if (params.size() != st.m.size() || grads.size() != st.m.size())
    throw NumericError("adam: shape mismatch");
  for (double g : grads)
    if (!std::isfinite(g)) throw NumericError("adam: non-finite gradient");
  ++st.step;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grads[i];
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grads[i] * grads[i];
    double mhat = st.m[i] / bc1;
    double vhat = st.v[i] / bc2;
    params[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
  }
}

// Adam over the rows of an embedding table, with moments and bias-correction
// steps advanced only for rows a sample actually touches (lazy Adam). Dense
// Adam would cost O(n*d) per SGNS sample.
class LazyAdamRows {
 public:
  LazyAdamRows(std::size_t rows, std::size_t cols, double lr)
      : cols_(cols), lr_(lr), m_(rows, cols), v_(rows, cols), step_(rows, 0) {}

  void update(Dense& table, std::size_t row, const double* grad) {
    double* w = table.row(row);
    double* m = m_.row(row);
    double* v = v_.row(row);
    const double t = static_cast<double>(++step_[row]);
    const double bc1 = 1.0 - std::pow(0.9, t);
    const double bc2 = 1.0 - std::pow(0.999, t);
    for (std::size_t j = 0; j < cols_; ++j) {
      double g = grad[j];
      m[j] = 0.9 * m[j] + 0.1 * g;
      v[j] = 0.999 * v[j] + 0.001 * g * g;
      w[j] -= lr_ * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + 1e-8);
    }
  }

 private:
  std::size_t cols_;
  double lr_;
  Dense m_, v_;
  std::vector<std::uint64_t> step_;
};

struct TrainSchedule {
  std::size_t epochs = 50;
  std::size_t batch_size = 50;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;  // L2 penalty added to the gradient
};

// Minibatch Adam over BCE for any sigmoid-output Mlp. Shuffling, dropout
// masks, and init all derive from the seed, so training is bit-reproducible.
inline std::vector<double> train_binary_classifier(Mlp& model, const Dense& rows,
                                                   const std::vector<double>& labels,
                                                   const TrainSchedule& cfg, std::uint64_t seed) {
  if (rows.rows() != labels.size()) throw NumericError("classifier rows/labels mismatch");
  if (rows.rows() == 0) throw NumericError("classifier: no training rows");
  Rng root(seed);
  model.init_xavier(root.derive("init"));
  AdamState adam(model.params().size(), cfg.learning_rate);

  const std::size_t n = rows.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> epoch_losses;
  Mlp::Cache cache;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng erng = root.derive("epoch", epoch);
    erng.shuffle(order);
    double loss_sum = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      std::size_t stop = std::min(n, start + cfg.batch_size);
      Dense x(stop - start, rows.cols());
      std::vector<double> y(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        std::copy_n(rows.row(order[i]), rows.cols(), x.row(i - start));
        y[i - start] = labels[order[i]];
      }
      Dense out = model.forward(x, true, erng.derive("batch", start), &cache);
      auto bce = bce_loss(out.values(), y);
      loss_sum += bce.loss * static_cast<double>(stop - start);
      Dense dOut(out.rows(), out.cols());
      std::copy(bce.grad.begin(), bce.grad.end(), dOut.data());
      auto grad = model.backward(cache, dOut);
      if (cfg.weight_decay > 0)
        for (std::size_t i = 0; i < grad.size(); ++i)
          grad[i] += cfg.weight_decay * model.params()[i];
      adam_step(adam, model.params(), grad);
    }
    epoch_losses.push_back(loss_sum / static_cast<double>(n));
  }
  return epoch_losses;
}

// Central finite differences against backprop, max relative error over all
// parameters. Run with dropout disabled (inference-mode forward).
template <typename LossFn>
inline double grad_check(Mlp& model, LossFn&& loss_of_output, const Dense& x, double h = 1e-5) {
  Mlp::Cache cache;
  Dense out = model.forward(x, false, Rng(), &cache);
  auto [loss0, dOut] = loss_of_output(out);
  (void)loss0;
  std::vector<double> analytic = model.backward(cache, dOut);

  double max_rel = 0.0;
  std::vector<double>& theta = model.params();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    double keep = theta[i];
    theta[i] = keep + h;
    auto [lp, g1] = loss_of_output(model.forward(x));
    (void)g1;
    theta[i] = keep - h;
    auto [lm, g2] = loss_of_output(model.forward(x));
    (void)g2;
    theta[i] = keep;
    double fd = (lp - lm) / (2.0 * h);
    double denom = std::max({1.0, std::abs(fd), std::abs(analytic[i])});
    max_rel = std::max(max_rel, std::abs(fd - analytic[i]) / denom);
  }
  return max_rel;
}

}  // namespace refnet
