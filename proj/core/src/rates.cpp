#include <algorithm>
#include <cmath>
#include <numeric>

#include "vms/errors.hpp"
#include "vms/memstats.hpp"

namespace vms {
namespace {

// Number of sorted ratings that count as remembered at `threshold`.
int count_at_or_above(const std::vector<int>& sorted, int threshold, bool inclusive) {
  auto it = inclusive ? std::lower_bound(sorted.begin(), sorted.end(), threshold)
                      : std::upper_bound(sorted.begin(), sorted.end(), threshold);
  return static_cast<int>(sorted.end() - it);
}

}  // namespace

RatingIndex::RatingIndex(std::span<const SessionLog> logs, std::span<const std::uint8_t> membership) {
  if (!membership.empty() && membership.size() != logs.size()) {
    throw std::invalid_argument("membership mask size does not match log count");
  }
  for (std::size_t p = 0; p < logs.size(); ++p) {
    if (!membership.empty() && !membership[p]) continue;
    for (const auto& t : logs[p].test_trials) {
      auto& r = by_image_[t.image_id];
      if (t.role == TrialRole::Repeat) {
        r.repeat.push_back(t.confidence);
        pooled_repeat_.push_back(t.confidence);
      } else {
        r.filler.push_back(t.confidence);
        pooled_filler_.push_back(t.confidence);
      }
    }
  }
  ids_.reserve(by_image_.size());
  for (auto& [id, r] : by_image_) {
    std::sort(r.repeat.begin(), r.repeat.end());
    std::sort(r.filler.begin(), r.filler.end());
    ids_.push_back(id);
  }
  std::sort(ids_.begin(), ids_.end());
  std::sort(pooled_repeat_.begin(), pooled_repeat_.end());
  std::sort(pooled_filler_.begin(), pooled_filler_.end());
}

RatePair RatingIndex::rates(std::string_view image_id, const RateOptions& options) const {
  RatePair out;
  auto it = by_image_.find(std::string(image_id));
  if (it == by_image_.end()) return out;
  const auto& r = it->second;
  out.n_repeat_showings = static_cast<int>(r.repeat.size());
  out.n_filler_showings = static_cast<int>(r.filler.size());
  if (!r.repeat.empty()) {
    out.hits = count_at_or_above(r.repeat, options.threshold, options.inclusive);
    out.hr = static_cast<double>(out.hits) / out.n_repeat_showings;
  }
  if (!r.filler.empty()) {
    out.false_alarms = count_at_or_above(r.filler, options.threshold, options.inclusive);
    out.far = static_cast<double>(out.false_alarms) / out.n_filler_showings;
  }
  return out;
}

RatePair rates(std::span<const SessionLog> logs, std::string_view image_id, const RateOptions& options) {
  return RatingIndex(logs).rates(image_id, options);
}

std::vector<double> average_ranks(std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && xs[order[j]] == xs[order[i]]) ++j;
    // Ranks i+1 .. j share their mean.
    const double r = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ValidationError("pearson: size mismatch");
  if (xs.size() < 2) throw ValidationError("pearson: need at least two samples");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  if (sxx <= 0 || syy <= 0 || constant(xs) || constant(ys)) throw DegenerateInputError("pearson: constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ValidationError("spearman: size mismatch");
  if (xs.size() < 3) throw ValidationError("spearman: need at least 3 pairs");
  auto all_ties = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  if (all_ties(xs) || all_ties(ys)) throw DegenerateInputError("spearman: all-ties input");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

ThresholdSelection select_threshold(std::span<const SessionLog> logs, const ThresholdSearch& search) {
  if (logs.empty()) throw ValidationError("select_threshold: no logs");
  if (search.floor < 0 || search.floor > 100) throw ValidationError("select_threshold: floor must lie in [0,100]");

  const RatingIndex index(logs);
  std::vector<std::string> paired;
  for (const auto& id : index.image_ids()) {
    const auto r = index.rates(id);
    if (r.n_repeat_showings > 0 && r.n_filler_showings > 0) paired.push_back(id);
  }
  if (paired.size() < 3) {
    throw DegenerateInputError("select_threshold: fewer than 3 images with defined rate pairs");
  }

  ThresholdSelection out;
  out.threshold = -1;
  std::vector<double> hr(paired.size());
  std::vector<double> far(paired.size());
  for (int t = search.floor; t <= 100; ++t) {
    const RateOptions opt{t, search.inclusive};
    for (std::size_t i = 0; i < paired.size(); ++i) {
      const auto r = index.rates(paired[i], opt);
      hr[i] = *r.hr;
      far[i] = *r.far;
    }
    ThresholdPoint pt{t, std::nullopt, static_cast<int>(paired.size())};
    try {
      pt.rho = spearman(hr, far);
    } catch (const DegenerateInputError&) {
    }
    if (out.threshold < 0 && pt.rho && *pt.rho < search.cutoff) out.threshold = t;
    out.curve.push_back(pt);
  }
  if (out.threshold < 0) {
    throw DegenerateInputError("select_threshold: no threshold in [" + std::to_string(search.floor) +
                               ", 100] has rho below the cutoff");
  }
  return out;
}

}  // namespace vms
