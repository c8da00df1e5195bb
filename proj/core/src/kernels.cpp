#include <algorithm>
#include <cmath>
#include <numeric>

#include "vms/errors.hpp"
#include "vms/mempredict.hpp"

namespace vms {
namespace {

std::vector<std::size_t> all_rows(std::size_t n, std::span<const std::size_t> rows) {
  if (!rows.empty()) return {rows.begin(), rows.end()};
  std::vector<std::size_t> r(n);
  std::iota(r.begin(), r.end(), 0);
  return r;
}

const std::vector<std::vector<double>>& feature_rows(const FeatureTable& features, const std::string& name) {
  auto it = features.find(name);
  if (it == features.end()) throw ValidationError("kernel references unknown feature '" + name + "'");
  if (it->second.empty()) throw ValidationError("feature '" + name + "' has no rows");
  return it->second;
}

void check_spec(const KernelSpec& spec) {
  if (spec.terms.empty()) throw ValidationError("kernel spec has no terms");
  for (const auto& t : spec.terms) {
    if (t.kind == KernelKind::Rbf && !(t.gamma > 0)) {
      throw ValidationError("rbf gamma for '" + t.feature + "' is unresolved or non-positive");
    }
  }
}

void check_finite(const std::vector<std::vector<double>>& rows, std::span<const std::size_t> subset,
                  const std::string& name) {
  for (std::size_t r : subset) {
    if (r >= rows.size()) throw ValidationError("row index out of range for feature '" + name + "'");
    for (double v : rows[r]) {
      if (!std::isfinite(v)) throw ValidationError("non-finite value in feature '" + name + "'");
    }
  }
}

}  // namespace

std::string_view to_string(KernelKind kind) noexcept {
  return kind == KernelKind::Rbf ? "rbf" : "hik";
}

KernelKind parse_kernel_kind(std::string_view text) {
  if (text == "rbf") return KernelKind::Rbf;
  if (text == "hik" || text == "hist_intersect") return KernelKind::HistogramIntersection;
  throw ValidationError("unknown kernel '" + std::string(text) + "' (expected rbf|hik)");
}

double kernel_value(KernelKind kind, double gamma, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("kernel: feature lengths differ");
  double acc = 0.0;
  if (kind == KernelKind::Rbf) {
    for (std::size_t i = 0; i < x.size(); ++i) acc += (x[i] - y[i]) * (x[i] - y[i]);
    return std::exp(-gamma * acc);
  }
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::min(x[i], y[i]);
  return acc;
}

double median_gamma(const std::vector<std::vector<double>>& rows, std::span<const std::size_t> subset) {
  const auto idx = all_rows(rows.size(), subset);
  std::vector<double> d2;
  d2.reserve(idx.size() * (idx.size() - 1) / 2);
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      const auto& x = rows[idx[a]];
      const auto& y = rows[idx[b]];
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
      d2.push_back(s);
    }
  }
  if (d2.empty()) return 1.0;
  const std::size_t mid = d2.size() / 2;
  std::nth_element(d2.begin(), d2.begin() + mid, d2.end());
  double med = d2[mid];
  if (d2.size() % 2 == 0) {
    med = 0.5 * (med + *std::max_element(d2.begin(), d2.begin() + mid));
  }
  return med > 0 ? 1.0 / med : 1.0;
}

KernelSpec resolve_gammas(const KernelSpec& spec, const FeatureTable& features, std::span<const std::size_t> rows) {
  KernelSpec out = spec;
  for (auto& t : out.terms) {
    if (t.kind == KernelKind::Rbf && t.gamma == 0.0) t.gamma = median_gamma(feature_rows(features, t.feature), rows);
  }
  return out;
}

Matrix kernel_matrix(const FeatureTable& features, const KernelSpec& spec, std::span<const std::size_t> rows) {
  check_spec(spec);
  const std::size_t n_total = feature_rows(features, spec.terms.front().feature).size();
  const auto idx = all_rows(n_total, rows);
  Matrix K(idx.size(), idx.size(), 1.0);
  for (const auto& t : spec.terms) {
    const auto& f = feature_rows(features, t.feature);
    check_finite(f, idx, t.feature);
    for (std::size_t a = 0; a < idx.size(); ++a) {
      for (std::size_t b = a; b < idx.size(); ++b) {
        const double v = kernel_value(t.kind, t.gamma, f[idx[a]], f[idx[b]]);
        K(a, b) *= v;
        if (a != b) K(b, a) = K(a, b);
      }
    }
  }
  return K;
}

Matrix kernel_cross(const FeatureTable& features, const KernelSpec& spec, std::span<const std::size_t> rows_a,
                    std::span<const std::size_t> rows_b) {
  check_spec(spec);
  Matrix K(rows_a.size(), rows_b.size(), 1.0);
  for (const auto& t : spec.terms) {
    const auto& f = feature_rows(features, t.feature);
    check_finite(f, rows_a, t.feature);
    check_finite(f, rows_b, t.feature);
    for (std::size_t a = 0; a < rows_a.size(); ++a) {
      for (std::size_t b = 0; b < rows_b.size(); ++b) {
        K(a, b) *= kernel_value(t.kind, t.gamma, f[rows_a[a]], f[rows_b[b]]);
      }
    }
  }
  return K;
}

}  // namespace vms
