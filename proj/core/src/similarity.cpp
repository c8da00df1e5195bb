#include <algorithm>
#include <cmath>
#include <numeric>

#include "vms/errors.hpp"
#include "vms/memstats.hpp"

namespace vms {
namespace {

std::vector<int> bin_indices(const MapGrid& m, int bins) {
  std::vector<int> idx(m.size());
  const auto v = m.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] > 1.0) throw ValidationError("mutual information needs map values in [0, 1]");
    idx[i] = std::min(static_cast<int>(std::floor(v[i] * bins)), bins - 1);
  }
  return idx;
}

void check_bins(int bins) {
  if (bins < 2) throw ValidationError("bin count must be at least 2");
}

}  // namespace

double pearson2d(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("pearson2d: map dims differ");
  if (a.empty()) throw ValidationError("pearson2d: empty map");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  // A constant map can leave round-off in saa, so test constancy directly.
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  if (saa <= 0 || sbb <= 0 || constant(a) || constant(b)) {
    throw DegenerateInputError("degenerate map: zero standard deviation");
  }
  const double sa = std::sqrt(saa / n);
  const double sb = std::sqrt(sbb / n);
  return std::clamp(sab / n / (sa * sb), -1.0, 1.0);
}

double pearson2d(const MapGrid& a, const MapGrid& b) {
  if (a.dims() != b.dims()) throw ValidationError("pearson2d: map dims differ");
  return pearson2d(a.values(), b.values());
}

double binned_entropy(const MapGrid& a, int bins) {
  check_bins(bins);
  const auto ia = bin_indices(a, bins);
  std::vector<long> ca(bins, 0);
  for (int i : ia) ++ca[i];
  const double n = static_cast<double>(ia.size());
  const double log_n = std::log2(n);
  double h = 0.0;
  for (int i = 0; i < bins; ++i) {
    if (ca[i] == 0) continue;
    h += (static_cast<double>(ca[i]) / n) * (log_n - std::log2(static_cast<double>(ca[i])));
  }
  return h;
}

double mutual_information(const MapGrid& a, const MapGrid& b, int bins) {
  check_bins(bins);
  if (a.dims() != b.dims()) throw ValidationError("mutual_information: map dims differ");
  const auto ia = bin_indices(a, bins);
  const auto ib = bin_indices(b, bins);
  std::vector<long> ca(bins, 0), cb(bins, 0), cab(static_cast<std::size_t>(bins) * bins, 0);
  for (std::size_t i = 0; i < ia.size(); ++i) {
    ++ca[ia[i]];
    ++cb[ib[i]];
    ++cab[static_cast<std::size_t>(ia[i]) * bins + ib[i]];
  }
  const double n = static_cast<double>(ia.size());
  const double log_n = std::log2(n);
  double mi = 0.0;
  // Each term is written as (log n - log c_a) - (log c_b - log c_ab) so that
  // for A = B the second bracket is exactly zero and I(A,A) equals the
  // entropy sum term for term.
  for (int x = 0; x < bins; ++x) {
    if (ca[x] == 0) continue;
    const double la = log_n - std::log2(static_cast<double>(ca[x]));
    for (int y = 0; y < bins; ++y) {
      const long c = cab[static_cast<std::size_t>(x) * bins + y];
      if (c == 0) continue;
      const double lc = static_cast<double>(c);
      mi += (lc / n) * (la - (std::log2(static_cast<double>(cb[y])) - std::log2(lc)));
    }
  }
  return std::max(mi, 0.0);
}

std::string_view to_string(MapMetric metric) noexcept {
  switch (metric) {
    case MapMetric::Pearson2d: return "pearson2d";
    case MapMetric::MutualInformation: return "mi";
  }
  return "?";
}

MapMetric parse_map_metric(std::string_view text) {
  if (text == "pearson2d" || text == "cc") return MapMetric::Pearson2d;
  if (text == "mi") return MapMetric::MutualInformation;
  throw ValidationError("unknown metric '" + std::string(text) + "' (expected pearson2d|mi)");
}

double map_metric(MapMetric metric, const MapGrid& a, const MapGrid& b, int mi_bins) {
  return metric == MapMetric::Pearson2d ? pearson2d(a, b) : mutual_information(a, b, mi_bins);
}

int Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), 0); }

Histogram make_histogram(std::span<const double> values, double lo, double hi, int bins) {
  if (bins <= 0) throw ValidationError("histogram needs at least one bin");
  if (!(hi > lo)) throw ValidationError("histogram range must satisfy lo < hi");
  Histogram h{lo, hi, std::vector<int>(bins, 0)};
  for (double v : values) {
    const int i = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
    ++h.counts[std::clamp(i, 0, bins - 1)];
  }
  return h;
}

SummaryStats summarize(std::span<const double> values) {
  SummaryStats s;
  s.n = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  double acc = 0.0;
  for (double v : values) acc += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(acc / values.size());
  return s;
}

namespace {

MapGrid normalized_for(MapMetric metric, const MapGrid& m, GridDims grid) {
  MapGrid r = resize_map(m, grid);
  // MI bins live on [0, 1]; density maps with a larger range are scaled by
  // their maximum first.
  if (metric == MapMetric::MutualInformation && r.max() > 1.0) {
    const double inv = 1.0 / r.max();
    for (double& v : r.values()) v = std::min(v * inv, 1.0);
  }
  return r;
}

}  // namespace

MapSetComparison compare_map_sets(const std::map<std::string, MapGrid>& first,
                                  const std::map<std::string, MapGrid>& second, MapMetric metric,
                                  const CompareOptions& options) {
  MapSetComparison out;
  out.metric = metric;
  for (const auto& [id, _] : first) {
    if (!second.count(id)) out.omitted.push_back(id);
  }
  for (const auto& [id, _] : second) {
    if (!first.count(id)) out.omitted.push_back(id);
  }
  bool any_shared = false;
  std::vector<double> vals;
  for (const auto& [id, a] : first) {
    auto it = second.find(id);
    if (it == second.end()) continue;
    any_shared = true;
    const GridDims grid = options.grid.width > 0 ? options.grid : a.dims();
    try {
      const double v = map_metric(metric, normalized_for(metric, a, grid),
                                  normalized_for(metric, it->second, grid), options.mi_bins);
      out.per_image[id] = v;
      vals.push_back(v);
    } catch (const DegenerateInputError&) {
      out.omitted.push_back(id);
    }
  }
  if (!any_shared) throw ValidationError("compare_map_sets: the two map sets share no image id");
  std::sort(out.omitted.begin(), out.omitted.end());
  const auto s = summarize(vals);
  out.mean = s.mean;
  out.stddev = s.stddev;
  const double lo = metric == MapMetric::Pearson2d ? -1.0 : 0.0;
  const double hi = metric == MapMetric::Pearson2d
                        ? 1.0
                        : std::max(1.0, vals.empty() ? 1.0 : *std::max_element(vals.begin(), vals.end()));
  out.histogram = make_histogram(vals, lo, hi, options.histogram_bins);
  return out;
}

}  // namespace vms
