#include <algorithm>
#include <numeric>

#include "vms/errors.hpp"
#include "vms/memstats.hpp"
#include "vms/rng.hpp"

namespace vms {

ConsistencyReport split_half_consistency(std::span<const SessionLog> logs, std::span<const std::string> images,
                                         VmsKind kind, MapMetric metric, const ConsistencyOptions& options) {
  if (logs.size() < 2) throw ValidationError("split-half consistency needs at least 2 participants");
  if (options.n_splits < 1) throw ValidationError("n_splits must be at least 1");

  const VmsIndex index(logs, options.vms);
  std::vector<std::string> ids(images.begin(), images.end());
  if (ids.empty()) ids = index.image_ids();

  // Canonical participant order, independent of the order logs arrive in.
  std::vector<std::size_t> canonical(logs.size());
  std::iota(canonical.begin(), canonical.end(), 0);
  std::sort(canonical.begin(), canonical.end(), [&](std::size_t a, std::size_t b) {
    if (logs[a].participant_id != logs[b].participant_id) return logs[a].participant_id < logs[b].participant_id;
    return logs[a].session_id < logs[b].session_id;
  });

  const CounterRng root(options.seed);
  const std::size_t half = logs.size() / 2;
  std::vector<double> sums(ids.size(), 0.0);
  std::vector<int> counts(ids.size(), 0);

  ConsistencyReport out;
  out.metric = metric;
  out.kind = kind;
  out.n_splits = options.n_splits;
  std::vector<std::uint8_t> first(logs.size()), second(logs.size());
  for (int split = 0; split < options.n_splits; ++split) {
    auto rng = root.derive(static_cast<std::uint64_t>(split));
    std::vector<std::size_t> order = canonical;
    fisher_yates(std::span<std::size_t>(order), rng);
    std::fill(first.begin(), first.end(), 0);
    std::fill(second.begin(), second.end(), 0);
    for (std::size_t k = 0; k < half; ++k) first[order[k]] = 1;
    for (std::size_t k = half; k < 2 * half; ++k) second[order[k]] = 1;

    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto a = index.build(ids[i], kind, first);
      const auto b = a ? index.build(ids[i], kind, second) : std::nullopt;
      if (!a || !b) {
        ++out.skipped_evaluations;
        continue;
      }
      try {
        sums[i] += map_metric(metric, *a, *b, options.mi_bins);
        ++counts[i];
      } catch (const DegenerateInputError&) {
        ++out.skipped_evaluations;
      }
    }
  }

  std::vector<double> vals;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (counts[i] == 0) {
      out.omitted.push_back(ids[i]);
      continue;
    }
    const double v = sums[i] / counts[i];
    out.per_image[ids[i]] = v;
    vals.push_back(v);
  }
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

BootstrapResult bootstrap_diff_test(std::span<const double> a, std::span<const double> b,
                                    const BootstrapOptions& options) {
  if (a.size() != b.size()) throw ValidationError("bootstrap: paired samples differ in size");
  if (a.size() < 10) throw ValidationError("bootstrap: need at least 10 paired samples");
  if (options.n_boot < 1) throw ValidationError("bootstrap: n_boot must be positive");
  if (!(options.level > 0 && options.level < 1)) throw ValidationError("bootstrap: level must lie in (0, 1)");

  const std::size_t n = a.size();
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
  BootstrapResult out;
  out.mean_difference = std::accumulate(diff.begin(), diff.end(), 0.0) / n;

  CounterRng rng(options.seed);
  std::vector<double> means(options.n_boot);
  int opposite = 0;
  for (int r = 0; r < options.n_boot; ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += diff[rng.below(n)];
    means[r] = s / n;
    const bool flipped = out.mean_difference > 0 ? means[r] <= 0 : out.mean_difference < 0 ? means[r] >= 0 : means[r] != 0;
    if (flipped) ++opposite;
  }
  out.opposite_sign_fraction = static_cast<double>(opposite) / options.n_boot;

  std::sort(means.begin(), means.end());
  // Percentile by linear interpolation between order statistics.
  auto quantile = [&](double q) {
    const double pos = q * (means.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, means.size() - 1);
    return means[lo] + (pos - lo) * (means[hi] - means[lo]);
  };
  const double tail = (1 - options.level) / 2;
  out.ci_low = quantile(tail);
  out.ci_high = quantile(1 - tail);
  out.significant = out.ci_low > 0 || out.ci_high < 0;
  return out;
}

}  // namespace vms
