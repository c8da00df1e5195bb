#include <algorithm>
#include <cmath>
#include <limits>

#include "vms/errors.hpp"
#include "vms/memstats.hpp"

namespace vms {
namespace {

// Acklam's rational approximation; relative error about 1.15e-9 before the
// Newton step below.
double acklam(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double lo = 0.02425;
  if (p < lo) {
    const double q = std::sqrt(-2 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p > 1 - lo) {
    const double q = std::sqrt(-2 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

int count_at_or_above(const std::vector<int>& sorted, int t) {
  return static_cast<int>(sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), t));
}

}  // namespace

double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("inverse_normal_cdf: p must lie in (0, 1)");
  double x = acklam(p);
  // One Halley step against Phi(x) = erfc(-x/sqrt2)/2.
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2 * M_PI) * std::exp(x * x / 2);
  x = x - u / (1 + x * u / 2);
  return x;
}

double d_prime(double hr, double far, int n_repeat, int n_filler) {
  if (n_repeat <= 0 || n_filler <= 0) throw ValidationError("d_prime: trial counts must be positive");
  if (hr < 0 || hr > 1 || far < 0 || far > 1) throw ValidationError("d_prime: rates must lie in [0, 1]");
  const double lr = 1.0 / (2.0 * n_repeat);
  const double lf = 1.0 / (2.0 * n_filler);
  const double h = std::clamp(hr, lr, 1 - lr);
  const double f = std::clamp(far, lf, 1 - lf);
  return inverse_normal_cdf(h) - inverse_normal_cdf(f);
}

double roc_auc(std::span<const RocPoint> roc) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(roc.size() + 2);
  pts.emplace_back(0.0, 0.0);
  for (const auto& p : roc) pts.emplace_back(p.far, p.hr);
  pts.emplace_back(1.0, 1.0);
  std::sort(pts.begin(), pts.end());
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    area += (pts[i].first - pts[i - 1].first) * 0.5 * (pts[i].second + pts[i - 1].second);
  }
  return std::clamp(area, 0.0, 1.0);
}

DetectionSummary detection_summary(std::span<const SessionLog> logs, int analysis_threshold) {
  if (analysis_threshold < 0 || analysis_threshold > 100) {
    throw ValidationError("analysis threshold must lie in [0, 100]");
  }
  const RatingIndex index(logs);
  const auto& rep = index.pooled_repeat();
  const auto& fil = index.pooled_filler();
  if (rep.empty()) throw ValidationError("detection_summary: no repeat trials");
  if (fil.empty()) throw ValidationError("detection_summary: no filler trials");

  DetectionSummary out;
  out.analysis_threshold = analysis_threshold;
  out.n_repeat = static_cast<int>(rep.size());
  out.n_filler = static_cast<int>(fil.size());
  for (int t = 0; t <= 100; ++t) {
    out.roc.push_back({t, static_cast<double>(count_at_or_above(fil, t)) / out.n_filler,
                       static_cast<double>(count_at_or_above(rep, t)) / out.n_repeat});
  }
  const bool all_same = rep.front() == rep.back() && fil.front() == fil.back() && rep.front() == fil.front();
  if (all_same) {
    out.auc = 0.5;
    out.warnings.push_back("all ratings identical: ROC is degenerate, AUC reported as 0.5");
  } else {
    out.auc = roc_auc(out.roc);
  }
  out.hr = out.roc[analysis_threshold].hr;
  out.far = out.roc[analysis_threshold].far;
  out.d_prime = d_prime(out.hr, out.far, out.n_repeat, out.n_filler);
  return out;
}

}  // namespace vms
