#include <cmath>

#include "vms/errors.hpp"
#include "vms/recon.hpp"
#include "vms/rng.hpp"

namespace vms {
namespace {

template <typename Real>
void dense(std::span<const Real> in, std::size_t batch, std::size_t nin, const std::vector<Real>& W,
           const std::vector<Real>& b, std::size_t nout, std::vector<Real>& out) {
  out.resize(batch * nout);
  for (std::size_t r = 0; r < batch; ++r) {
    Real* o = out.data() + r * nout;
    for (std::size_t j = 0; j < nout; ++j) o[j] = b[j];
    const Real* xr = in.data() + r * nin;
    for (std::size_t i = 0; i < nin; ++i) {
      const Real xi = xr[i];
      if (xi == Real(0)) continue;
      const Real* w = W.data() + i * nout;
      for (std::size_t j = 0; j < nout; ++j) o[j] += xi * w[j];
    }
  }
}

template <typename Real>
void check_finite(const std::vector<Real>& v, int layer) {
  for (Real x : v) {
    if (!std::isfinite(static_cast<double>(x))) {
      throw DivergenceError("non-finite activation at layer " + std::to_string(layer));
    }
  }
}

// Batch norm + ReLU in place on z (B x n). Train mode records batch stats.
template <typename Real>
void bn_relu(std::vector<Real>& z, std::size_t batch, std::size_t n, const std::vector<Real>& gamma,
             const std::vector<Real>& beta, const std::vector<Real>& run_mean, const std::vector<Real>& run_var,
             ForwardMode mode, double eps, std::vector<Real>* xhat_out, std::vector<Real>* inv_std_out,
             std::vector<Real>* mean_out, std::vector<Real>* var_out) {
  std::vector<Real> mean(n), inv_std(n);
  if (mode == ForwardMode::Train) {
    std::vector<Real> var(n, Real(0));
    for (std::size_t r = 0; r < batch; ++r) {
      for (std::size_t j = 0; j < n; ++j) mean[j] += z[r * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) mean[j] /= static_cast<Real>(batch);
    for (std::size_t r = 0; r < batch; ++r) {
      for (std::size_t j = 0; j < n; ++j) {
        const Real d = z[r * n + j] - mean[j];
        var[j] += d * d;
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      var[j] /= static_cast<Real>(batch);
      inv_std[j] = Real(1) / std::sqrt(var[j] + static_cast<Real>(eps));
    }
    if (mean_out) *mean_out = mean;
    if (var_out) *var_out = var;
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      mean[j] = run_mean[j];
      inv_std[j] = Real(1) / std::sqrt(run_var[j] + static_cast<Real>(eps));
    }
  }
  if (xhat_out) xhat_out->resize(batch * n);
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t j = 0; j < n; ++j) {
      const Real xh = (z[r * n + j] - mean[j]) * inv_std[j];
      if (xhat_out) (*xhat_out)[r * n + j] = xh;
      const Real y = gamma[j] * xh + beta[j];
      z[r * n + j] = y > Real(0) ? y : Real(0);
    }
  }
  if (inv_std_out) *inv_std_out = inv_std;
}

// Gradients of a dense layer: dW += in^T dz, db += colsum(dz); returns
// d(in) = dz W^T when `din` is given.
template <typename Real>
void dense_backward(std::span<const Real> in, std::size_t batch, std::size_t nin, const std::vector<Real>& W,
                    std::size_t nout, const std::vector<Real>& dz, std::vector<Real>& dW, std::vector<Real>& db,
                    std::vector<Real>* din) {
  dW.assign(nin * nout, Real(0));
  db.assign(nout, Real(0));
  if (din) din->assign(batch * nin, Real(0));
  for (std::size_t r = 0; r < batch; ++r) {
    const Real* g = dz.data() + r * nout;
    for (std::size_t j = 0; j < nout; ++j) db[j] += g[j];
    const Real* xr = in.data() + r * nin;
    for (std::size_t i = 0; i < nin; ++i) {
      const Real* w = W.data() + i * nout;
      Real* dw = dW.data() + i * nout;
      const Real xi = xr[i];
      if (xi != Real(0)) {
        for (std::size_t j = 0; j < nout; ++j) dw[j] += xi * g[j];
      }
      if (din) {
        Real acc = 0;
        for (std::size_t j = 0; j < nout; ++j) acc += g[j] * w[j];
        (*din)[r * nin + i] = acc;
      }
    }
  }
}

// Backprop through ReLU(gamma * xhat + beta) given d(out) and the output a.
template <typename Real>
std::vector<Real> bn_relu_backward(const std::vector<Real>& dout, const std::vector<Real>& a,
                                   const std::vector<Real>& xhat, const std::vector<Real>& inv_std,
                                   const std::vector<Real>& gamma, std::size_t batch, std::size_t n,
                                   std::vector<Real>& dgamma, std::vector<Real>& dbeta) {
  dgamma.assign(n, Real(0));
  dbeta.assign(n, Real(0));
  std::vector<Real> dxhat(batch * n);
  std::vector<Real> sum_dxhat(n, Real(0)), sum_dxhat_xhat(n, Real(0));
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t k = r * n + j;
      const Real dy = a[k] > Real(0) ? dout[k] : Real(0);
      dgamma[j] += dy * xhat[k];
      dbeta[j] += dy;
      dxhat[k] = dy * gamma[j];
      sum_dxhat[j] += dxhat[k];
      sum_dxhat_xhat[j] += dxhat[k] * xhat[k];
    }
  }
  const Real B = static_cast<Real>(batch);
  std::vector<Real> dz(batch * n);
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t k = r * n + j;
      dz[k] = inv_std[j] / B * (B * dxhat[k] - sum_dxhat[j] - xhat[k] * sum_dxhat_xhat[j]);
    }
  }
  return dz;
}

}  // namespace

const char* param_group_name(int group) noexcept {
  static constexpr const char* names[] = {"W1", "b1", "gamma1", "beta1", "W2",
                                          "b2", "gamma2", "beta2", "W3", "b3"};
  return group >= 0 && group < kParamGroups ? names[group] : "?";
}

std::string_view to_string(LossKind kind) noexcept { return kind == LossKind::L1 ? "l1" : "l2"; }

LossKind parse_loss_kind(std::string_view text) {
  if (text == "l1") return LossKind::L1;
  if (text == "l2") return LossKind::L2;
  throw ValidationError("unknown loss '" + std::string(text) + "' (expected l1|l2)");
}

template <typename Real>
HeadParamsT<Real> init_head(const HeadShape& shape, std::uint64_t seed) {
  if (shape.input == 0 || shape.hidden1 == 0 || shape.hidden2 == 0 || shape.output == 0) {
    throw ValidationError("head dimensions must be positive");
  }
  HeadParamsT<Real> h;
  h.shape = shape;
  CounterRng rng(seed);
  auto he = [&](std::size_t fan_in, std::size_t fan_out) {
    std::vector<Real> w(fan_in * fan_out);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& v : w) v = static_cast<Real>(rng.uniform(-limit, limit));
    return w;
  };
  h.p[kW1] = he(shape.input, shape.hidden1);
  h.p[kB1].assign(shape.hidden1, Real(0));
  h.p[kGamma1].assign(shape.hidden1, Real(1));
  h.p[kBeta1].assign(shape.hidden1, Real(0));
  h.p[kW2] = he(shape.hidden1, shape.hidden2);
  h.p[kB2].assign(shape.hidden2, Real(0));
  h.p[kGamma2].assign(shape.hidden2, Real(1));
  h.p[kBeta2].assign(shape.hidden2, Real(0));
  h.p[kW3] = he(shape.hidden2, shape.output);
  h.p[kB3].assign(shape.output, Real(0));
  h.mean1.assign(shape.hidden1, Real(0));
  h.var1.assign(shape.hidden1, Real(1));
  h.mean2.assign(shape.hidden2, Real(0));
  h.var2.assign(shape.hidden2, Real(1));
  return h;
}

template <typename To, typename From>
HeadParamsT<To> convert_head(const HeadParamsT<From>& params) {
  auto cv = [](const std::vector<From>& v) { return std::vector<To>(v.begin(), v.end()); };
  HeadParamsT<To> out;
  out.shape = params.shape;
  for (int g = 0; g < kParamGroups; ++g) out.p[g] = cv(params.p[g]);
  out.mean1 = cv(params.mean1);
  out.var1 = cv(params.var1);
  out.mean2 = cv(params.mean2);
  out.var2 = cv(params.var2);
  return out;
}

template <typename Real>
std::vector<Real> head_forward(const HeadParamsT<Real>& params, std::span<const Real> x, std::size_t batch,
                               ForwardMode mode, const BatchNormConfig& bn, ForwardCache<Real>* cache) {
  const auto& s = params.shape;
  if (batch == 0) throw ValidationError("head_forward: empty batch");
  if (x.size() != batch * s.input) {
    throw ValidationError("head_forward: input length " + std::to_string(x.size()) + " does not match batch x " +
                          std::to_string(s.input));
  }
  const bool train = mode == ForwardMode::Train;
  ForwardCache<Real> local;
  ForwardCache<Real>* c = cache ? cache : (train ? &local : nullptr);
  if (c) {
    c->batch = batch;
    c->x.assign(x.begin(), x.end());
  }

  std::vector<Real> a1, a2, out;
  dense(x, batch, s.input, params.p[kW1], params.p[kB1], s.hidden1, a1);
  check_finite(a1, 1);
  bn_relu(a1, batch, s.hidden1, params.p[kGamma1], params.p[kBeta1], params.mean1, params.var1, mode, bn.epsilon,
          c ? &c->xhat1 : nullptr, c ? &c->inv_std1 : nullptr, c ? &c->batch_mean1 : nullptr,
          c ? &c->batch_var1 : nullptr);
  dense(std::span<const Real>(a1), batch, s.hidden1, params.p[kW2], params.p[kB2], s.hidden2, a2);
  check_finite(a2, 2);
  bn_relu(a2, batch, s.hidden2, params.p[kGamma2], params.p[kBeta2], params.mean2, params.var2, mode, bn.epsilon,
          c ? &c->xhat2 : nullptr, c ? &c->inv_std2 : nullptr, c ? &c->batch_mean2 : nullptr,
          c ? &c->batch_var2 : nullptr);
  dense(std::span<const Real>(a2), batch, s.hidden2, params.p[kW3], params.p[kB3], s.output, out);
  check_finite(out, 3);
  if (c) {
    c->a1 = std::move(a1);
    c->a2 = std::move(a2);
  }
  return out;
}

template <typename Real>
Real loss_and_grad(std::span<const Real> pred, std::span<const Real> target, LossKind kind, std::span<Real> grad) {
  if (pred.size() != target.size() || grad.size() != pred.size()) {
    throw ValidationError("loss: prediction and target lengths differ");
  }
  const Real n = static_cast<Real>(pred.size());
  Real loss = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const Real d = pred[i] - target[i];
    if (kind == LossKind::L2) {
      loss += d * d;
      grad[i] = Real(2) * d / n;
    } else {
      loss += std::abs(d);
      grad[i] = (d > Real(0) ? Real(1) : d < Real(0) ? Real(-1) : Real(0)) / n;
    }
  }
  return loss / n;
}

template <typename Real>
HeadGrads<Real> head_backward(const HeadParamsT<Real>& params, const ForwardCache<Real>& cache,
                              std::span<const Real> grad_out) {
  const auto& s = params.shape;
  const std::size_t B = cache.batch;
  if (grad_out.size() != B * s.output) throw ValidationError("head_backward: gradient length mismatch");
  HeadGrads<Real> g;
  std::vector<Real> dout(grad_out.begin(), grad_out.end());
  std::vector<Real> da2, da1;
  dense_backward(std::span<const Real>(cache.a2), B, s.hidden2, params.p[kW3], s.output, dout, g[kW3], g[kB3], &da2);
  auto dz2 = bn_relu_backward(da2, cache.a2, cache.xhat2, cache.inv_std2, params.p[kGamma2], B, s.hidden2,
                              g[kGamma2], g[kBeta2]);
  dense_backward(std::span<const Real>(cache.a1), B, s.hidden1, params.p[kW2], s.hidden2, dz2, g[kW2], g[kB2], &da1);
  auto dz1 = bn_relu_backward(da1, cache.a1, cache.xhat1, cache.inv_std1, params.p[kGamma1], B, s.hidden1,
                              g[kGamma1], g[kBeta1]);
  dense_backward(std::span<const Real>(cache.x), B, s.input, params.p[kW1], s.hidden1, dz1, g[kW1], g[kB1],
                 static_cast<std::vector<Real>*>(nullptr));
  return g;
}

template <typename Real>
Real batch_loss_and_grads(const HeadParamsT<Real>& params, std::span<const Real> x, std::span<const Real> targets,
                          std::size_t batch, LossKind kind, HeadGrads<Real>* grads, const BatchNormConfig& bn) {
  ForwardCache<Real> cache;
  const auto out = head_forward(params, x, batch, ForwardMode::Train, bn, &cache);
  const std::size_t no = params.shape.output;
  if (targets.size() != batch * no) throw ValidationError("target length does not match batch x output");
  std::vector<Real> gout(out.size());
  Real total = 0;
  for (std::size_t r = 0; r < batch; ++r) {
    total += loss_and_grad<Real>(std::span<const Real>(out.data() + r * no, no), targets.subspan(r * no, no), kind,
                                 std::span<Real>(gout.data() + r * no, no));
  }
  const Real inv_b = Real(1) / static_cast<Real>(batch);
  if (grads) {
    for (auto& v : gout) v *= inv_b;
    *grads = head_backward<Real>(params, cache, gout);
  }
  return total * inv_b;
}

template <typename Real>
void update_running_stats(HeadParamsT<Real>& params, const ForwardCache<Real>& cache, const BatchNormConfig& bn) {
  const Real m = static_cast<Real>(bn.momentum);
  const Real unbias = cache.batch > 1 ? static_cast<Real>(cache.batch) / static_cast<Real>(cache.batch - 1) : Real(1);
  auto upd = [&](std::vector<Real>& run_mean, std::vector<Real>& run_var, const std::vector<Real>& bm,
                 const std::vector<Real>& bv) {
    for (std::size_t j = 0; j < run_mean.size(); ++j) {
      run_mean[j] = m * run_mean[j] + (Real(1) - m) * bm[j];
      run_var[j] = m * run_var[j] + (Real(1) - m) * bv[j] * unbias;
    }
  };
  upd(params.mean1, params.var1, cache.batch_mean1, cache.batch_var1);
  upd(params.mean2, params.var2, cache.batch_mean2, cache.batch_var2);
}

#define VMS_INSTANTIATE(Real)                                                                                  \
  template HeadParamsT<Real> init_head<Real>(const HeadShape&, std::uint64_t);                                 \
  template std::vector<Real> head_forward<Real>(const HeadParamsT<Real>&, std::span<const Real>, std::size_t,  \
                                                ForwardMode, const BatchNormConfig&, ForwardCache<Real>*);     \
  template Real loss_and_grad<Real>(std::span<const Real>, std::span<const Real>, LossKind, std::span<Real>);  \
  template HeadGrads<Real> head_backward<Real>(const HeadParamsT<Real>&, const ForwardCache<Real>&,            \
                                               std::span<const Real>);                                         \
  template Real batch_loss_and_grads<Real>(const HeadParamsT<Real>&, std::span<const Real>,                    \
                                           std::span<const Real>, std::size_t, LossKind, HeadGrads<Real>*,    \
                                           const BatchNormConfig&);                                            \
  template void update_running_stats<Real>(HeadParamsT<Real>&, const ForwardCache<Real>&, const BatchNormConfig&);

VMS_INSTANTIATE(float)
VMS_INSTANTIATE(double)
#undef VMS_INSTANTIATE

template HeadParamsT<double> convert_head<double, float>(const HeadParamsT<float>&);
template HeadParamsT<float> convert_head<float, double>(const HeadParamsT<double>&);
template HeadParamsT<float> convert_head<float, float>(const HeadParamsT<float>&);
template HeadParamsT<double> convert_head<double, double>(const HeadParamsT<double>&);

}  // namespace vms
