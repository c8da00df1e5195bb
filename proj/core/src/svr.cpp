#include <algorithm>
#include <cmath>
#include <limits>

#include "vms/errors.hpp"
#include "vms/mempredict.hpp"

namespace vms {
namespace {

constexpr double kTau = 1e-12;

}  // namespace

double svr_dual_objective(const Matrix& K, std::span<const double> y, std::span<const double> beta,
                          double epsilon) {
  const std::size_t n = beta.size();
  double quad = 0.0, lin = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (beta[i] == 0.0) continue;
    double kb = 0.0;
    for (std::size_t j = 0; j < n; ++j) kb += K(i, j) * beta[j];
    quad += beta[i] * kb;
    lin += y[i] * beta[i] - epsilon * std::abs(beta[i]);
  }
  return lin - 0.5 * quad;
}

void check_psd(const Matrix& K, double psd_tolerance) {
  const std::size_t n = K.rows();
  if (K.cols() != n) throw ValidationError("kernel matrix is not square");
  double scale = 1.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(K(i, i)));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(K(i, j) - K(j, i)) > 1e-9 * scale) throw ValidationError("kernel matrix is not symmetric");
    }
  }
  // Cholesky of K + (tol + round-off) I succeeds iff its smallest eigenvalue
  // is positive.
  const double shift = psd_tolerance + 1e-12 * scale * static_cast<double>(n);
  std::vector<double> L(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double d = K(j, j) + shift;
    for (std::size_t k = 0; k < j; ++k) d -= L[j * n + k] * L[j * n + k];
    if (!(d > 0)) throw ValidationError("kernel matrix is not positive semi-definite");
    const double ljj = std::sqrt(d);
    L[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = K(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= L[i * n + k] * L[j * n + k];
      L[i * n + j] = s / ljj;
    }
  }
}

SvrModel svr_train(const Matrix& K, std::span<const double> y, const SvrParams& params) {
  const std::size_t n = y.size();
  if (n == 0) throw ValidationError("svr_train: no training points");
  if (K.rows() != n || K.cols() != n) throw ValidationError("svr_train: kernel size does not match targets");
  if (!(params.C > 0) || !(params.epsilon > 0) || !(params.tol > 0)) {
    throw ValidationError("svr_train: C, epsilon and tol must be positive");
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw ValidationError("svr_train: non-finite target");
  }
  check_psd(K, params.psd_tolerance);

  // Variables 0..n-1 are alpha (sign +1), n..2n-1 are alpha* (sign -1).
  const std::size_t m = 2 * n;
  const double C = params.C;
  auto sign = [n](std::size_t t) { return t < n ? 1.0 : -1.0; };
  auto src = [n](std::size_t t) { return t < n ? t : t - n; };
  auto q = [&](std::size_t s, std::size_t t) { return sign(s) * sign(t) * K(src(s), src(t)); };

  std::vector<double> alpha(m, 0.0);
  std::vector<double> p(m), G(m);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = params.epsilon - y[i];
    p[i + n] = params.epsilon + y[i];
  }
  G = p;
  auto upper = [&](std::size_t t) { return alpha[t] >= C; };
  auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  SvrModel model;
  model.C = C;
  model.epsilon = params.epsilon;
  const long max_iter = params.max_iterations > 0 ? params.max_iterations
                                                  : std::max<long>(10'000'000L, 100L * static_cast<long>(n));
  auto objective = [&] {
    double f = 0.0;
    for (std::size_t t = 0; t < m; ++t) f += alpha[t] * (G[t] + p[t]);
    return -0.5 * f;
  };

  long iter = 0;
  for (;; ++iter) {
    // Maximal violating pair with second-order selection of j.
    double gmax = -std::numeric_limits<double>::infinity();
    double gmax2 = -std::numeric_limits<double>::infinity();
    std::size_t i_sel = m, j_sel = m;
    for (std::size_t t = 0; t < m; ++t) {
      if (sign(t) > 0) {
        if (!upper(t) && -G[t] >= gmax) { gmax = -G[t]; i_sel = t; }
      } else {
        if (!lower(t) && G[t] >= gmax) { gmax = G[t]; i_sel = t; }
      }
    }
    double obj_min = std::numeric_limits<double>::infinity();
    if (i_sel != m) {
      const double qii = q(i_sel, i_sel);
      for (std::size_t t = 0; t < m; ++t) {
        const double qit = q(i_sel, t);
        const double qtt = q(t, t);
        if (sign(t) > 0) {
          if (lower(t)) continue;
          const double diff = gmax + G[t];
          gmax2 = std::max(gmax2, G[t]);
          if (diff > 0) {
            const double quad = qii + qtt - 2.0 * sign(i_sel) * qit;
            const double obj = -(diff * diff) / (quad > 0 ? quad : kTau);
            if (obj <= obj_min) { obj_min = obj; j_sel = t; }
          }
        } else {
          if (upper(t)) continue;
          const double diff = gmax - G[t];
          gmax2 = std::max(gmax2, -G[t]);
          if (diff > 0) {
            const double quad = qii + qtt + 2.0 * sign(i_sel) * qit;
            const double obj = -(diff * diff) / (quad > 0 ? quad : kTau);
            if (obj <= obj_min) { obj_min = obj; j_sel = t; }
          }
        }
      }
    }
    model.kkt_violation = std::max(0.0, gmax + gmax2);
    if (i_sel == m || j_sel == m || gmax + gmax2 < params.tol) {
      model.converged = true;
      break;
    }
    if (iter >= max_iter) {
      model.warnings.push_back("SMO stopped after " + std::to_string(iter) + " iterations without converging");
      break;
    }

    const std::size_t i = i_sel, j = j_sel;
    const double old_i = alpha[i], old_j = alpha[j];
    const double qij = q(i, j);
    if (sign(i) != sign(j)) {
      double quad = q(i, i) + q(j, j) + 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = diff; }
      } else {
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = -diff; }
      }
      if (diff > 0) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = C - diff; }
      } else {
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = C + diff; }
      }
    } else {
      double quad = q(i, i) + q(j, j) - 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = sum - C; }
      } else {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = sum; }
      }
      if (sum > C) {
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = sum - C; }
      } else {
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = sum; }
      }
    }
    const double di = alpha[i] - old_i;
    const double dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < m; ++t) G[t] += q(i, t) * di + q(j, t) * dj;
    if (params.record_objective) model.objective_trace.push_back(objective());
  }
  model.iterations = iter;

  model.beta.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    model.beta[i] = alpha[i] - alpha[i + n];
    if (model.beta[i] != 0.0) model.support.push_back(i);
  }

  // Bias: average of -yG over free variables; otherwise the median fitted
  // residual clamped into the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  int n_free = 0;
  for (std::size_t t = 0; t < m; ++t) {
    const double yg = sign(t) * G[t];
    if (upper(t)) {
      if (sign(t) < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (sign(t) > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  if (n_free > 0) {
    model.bias = -sum_free / n_free;
  } else {
    std::vector<double> resid(n);
    for (std::size_t i = 0; i < n; ++i) {
      double f = 0.0;
      for (std::size_t k : model.support) f += model.beta[k] * K(i, k);
      resid[i] = y[i] - f;
    }
    std::sort(resid.begin(), resid.end());
    const double med = n % 2 ? resid[n / 2] : 0.5 * (resid[n / 2 - 1] + resid[n / 2]);
    model.bias = std::clamp(med, std::min(-ub, -lb), std::max(-ub, -lb));
  }
  return model;
}

double svr_predict(const SvrModel& model, std::span<const double> kernel_row) {
  double f = 0.0;
  if (kernel_row.size() == model.beta.size()) {
    for (std::size_t k : model.support) f += model.beta[k] * kernel_row[k];
  } else if (kernel_row.size() == model.support.size()) {
    for (std::size_t s = 0; s < model.support.size(); ++s) f += model.beta[model.support[s]] * kernel_row[s];
  } else {
    throw ValidationError("svr_predict: kernel row has " + std::to_string(kernel_row.size()) +
                          " entries; expected " + std::to_string(model.beta.size()) + " or " +
                          std::to_string(model.support.size()));
  }
  return f + model.bias;
}

}  // namespace vms
