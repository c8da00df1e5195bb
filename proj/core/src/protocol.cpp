#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "vms/errors.hpp"
#include "vms/mempredict.hpp"
#include "vms/rng.hpp"

namespace vms {
namespace {

struct Labeled {
  std::vector<std::size_t> rows;
  std::vector<double> hr;
};

// Rows of `candidates` whose HR is defined under `index`.
Labeled label(const RatingIndex& index, const ProtocolDataset& data, std::span<const std::size_t> candidates,
              const RateOptions& options) {
  Labeled out;
  for (std::size_t r : candidates) {
    const auto rp = index.rates(data.image_ids[r], options);
    if (!rp.hr) continue;
    out.rows.push_back(r);
    out.hr.push_back(*rp.hr);
  }
  return out;
}

std::vector<double> fit_predict(const ProtocolDataset& data, const KernelSpec& spec, const SvrParams& svr,
                                std::span<const std::size_t> train, std::span<const double> y,
                                std::span<const std::size_t> test, std::vector<std::string>* warnings) {
  const KernelSpec resolved = resolve_gammas(spec, data.features, train);
  const Matrix K = kernel_matrix(data.features, resolved, train);
  const SvrModel model = svr_train(K, y, svr);
  if (warnings) warnings->insert(warnings->end(), model.warnings.begin(), model.warnings.end());
  const Matrix Kt = kernel_cross(data.features, resolved, test, train);
  std::vector<double> pred(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) pred[i] = svr_predict(model, Kt.row(i));
  return pred;
}

std::optional<double> try_spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 3) return std::nullopt;
  try {
    return spearman(a, b);
  } catch (const DegenerateInputError&) {
    return std::nullopt;
  }
}

// Picks (C, epsilon) by 3-fold cross-validated Spearman rho on the train set.
std::pair<double, double> grid_search(const ProtocolDataset& data, const KernelSpec& spec,
                                      const ProtocolOptions& options, const Labeled& train, CounterRng rng) {
  std::vector<std::size_t> order(train.rows.size());
  std::iota(order.begin(), order.end(), 0);
  fisher_yates(std::span<std::size_t>(order), rng);
  double best = -std::numeric_limits<double>::infinity();
  std::pair<double, double> choice{options.svr.C, options.svr.epsilon};
  for (double C : options.grid_C) {
    for (double eps : options.grid_epsilon) {
      SvrParams p = options.svr;
      p.C = C;
      p.epsilon = eps;
      double total = 0.0;
      int folds = 0;
      for (int f = 0; f < 3; ++f) {
        std::vector<std::size_t> tr, te;
        std::vector<double> ytr, yte;
        for (std::size_t k = 0; k < order.size(); ++k) {
          const std::size_t o = order[k];
          if (static_cast<int>(k % 3) == f) {
            te.push_back(train.rows[o]);
            yte.push_back(train.hr[o]);
          } else {
            tr.push_back(train.rows[o]);
            ytr.push_back(train.hr[o]);
          }
        }
        if (tr.empty() || te.empty()) continue;
        const auto pred = fit_predict(data, spec, p, tr, ytr, te, nullptr);
        if (auto r = try_spearman(pred, yte)) {
          total += *r;
          ++folds;
        }
      }
      const double score = folds ? total / folds : -std::numeric_limits<double>::infinity();
      if (score > best) {
        best = score;
        choice = {C, eps};
      }
    }
  }
  return choice;
}

double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

}  // namespace

ProtocolDataset build_protocol_dataset(
    const std::map<std::string, std::map<std::string, SpatialDescriptor>>& descriptors,
    const std::map<std::string, MapGrid>* weights) {
  ProtocolDataset data;
  std::set<std::string> names;
  for (const auto& [id, per_feature] : descriptors) {
    for (const auto& [name, _] : per_feature) names.insert(name);
  }
  for (const auto& [id, per_feature] : descriptors) {
    const MapGrid* w = nullptr;
    if (weights) {
      auto it = weights->find(id);
      if (it == weights->end()) {
        data.skipped.push_back(id);
        continue;
      }
      w = &it->second;
    }
    if (per_feature.size() != names.size()) {
      data.skipped.push_back(id);
      continue;
    }
    data.image_ids.push_back(id);
    for (const auto& [name, d] : per_feature) {
      auto pooled = pool_weighted(d, w);
      if (pooled.all_zero) ++data.zero_rows[name];
      data.features[name].push_back(std::move(pooled.values));
    }
  }
  for (const auto& [name, rows] : data.features) {
    auto it = data.zero_rows.find(name);
    if (it != data.zero_rows.end() && it->second == static_cast<int>(rows.size())) {
      throw DegenerateInputError("every pooled '" + name + "' feature is all-zero (weight maps carry no mass)");
    }
  }
  return data;
}

ProtocolReport run_memorability_protocol(std::span<const SessionLog> logs, const ProtocolDataset& data,
                                         const KernelSpec& spec, const ProtocolOptions& options) {
  if (logs.size() < 2) throw ValidationError("memorability protocol needs at least 2 participants");
  if (data.image_ids.size() < 4) throw ValidationError("memorability protocol needs at least 4 images");
  if (options.n_splits < 1) throw ValidationError("n_splits must be at least 1");
  if (!std::is_sorted(data.image_ids.begin(), data.image_ids.end())) {
    throw ValidationError("protocol dataset image ids must be sorted");
  }

  std::vector<std::size_t> participants(logs.size());
  std::iota(participants.begin(), participants.end(), 0);
  std::sort(participants.begin(), participants.end(), [&](std::size_t a, std::size_t b) {
    if (logs[a].participant_id != logs[b].participant_id) return logs[a].participant_id < logs[b].participant_id;
    return logs[a].session_id < logs[b].session_id;
  });

  ProtocolReport report;
  report.top_small_k = options.top_small;
  report.top_large_k = options.top_large;
  const CounterRng root(options.seed);
  const std::size_t n = data.image_ids.size();
  for (int split = 0; split < options.n_splits; ++split) {
    auto rng = root.derive(static_cast<std::uint64_t>(split));
    std::vector<std::size_t> images(n);
    std::iota(images.begin(), images.end(), 0);
    fisher_yates(std::span<std::size_t>(images), rng);
    std::vector<std::size_t> people = participants;
    fisher_yates(std::span<std::size_t>(people), rng);

    std::vector<std::uint8_t> half1(logs.size(), 0), half2(logs.size(), 0);
    for (std::size_t k = 0; k < people.size(); ++k) (k < people.size() / 2 ? half1 : half2)[people[k]] = 1;
    const RatingIndex idx1(logs, half1);
    const RatingIndex idx2(logs, half2);

    const std::span<const std::size_t> train_cand(images.data(), n / 2);
    const std::span<const std::size_t> test_cand(images.data() + n / 2, n - n / 2);
    const Labeled train = label(idx1, data, train_cand, options.rates);
    const Labeled test = label(idx2, data, test_cand, options.rates);

    SplitResult res;
    res.n_train = static_cast<int>(train.rows.size());
    res.n_test = static_cast<int>(test.rows.size());
    res.dropped = static_cast<int>(n - train.rows.size() - test.rows.size());
    if (train.rows.size() < 2 || test.rows.size() < 3) {
      report.warnings.push_back("split " + std::to_string(split) + " skipped: too few images with defined HR");
      report.dropped_total += res.dropped;
      report.splits.push_back(res);
      continue;
    }

    SvrParams svr = options.svr;
    if (options.grid_search) std::tie(svr.C, svr.epsilon) = grid_search(data, spec, options, train, rng.derive(1));
    res.C = svr.C;
    res.epsilon = svr.epsilon;
    const auto pred = fit_predict(data, spec, svr, train.rows, train.hr, test.rows, &report.warnings);
    res.rho = try_spearman(pred, test.hr);

    // Human baseline: the two participant halves scored on the test images.
    std::vector<double> h1, h2;
    for (std::size_t r : test.rows) {
      const auto a = idx1.rates(data.image_ids[r], options.rates);
      if (!a.hr) continue;
      h1.push_back(*a.hr);
      h2.push_back(*idx2.rates(data.image_ids[r], options.rates).hr);
    }
    res.human_rho = try_spearman(h1, h2);

    std::vector<std::size_t> order(test.rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pred[a] > pred[b]; });
    auto mean_first = [&](int k, bool top) {
      const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), order.size());
      double s = 0.0;
      for (std::size_t i = 0; i < kk; ++i) s += test.hr[top ? order[i] : order[order.size() - 1 - i]];
      return s / kk;
    };
    res.top_small = mean_first(options.top_small, true);
    res.top_large = mean_first(options.top_large, true);
    res.bottom_large = mean_first(options.top_large, false);
    res.bottom_small = mean_first(options.top_small, false);
    report.dropped_total += res.dropped;
    report.splits.push_back(res);
  }

  std::vector<double> rho, human, ts, tl, bl, bs;
  for (const auto& s : report.splits) {
    if (s.rho) rho.push_back(*s.rho);
    if (s.human_rho) human.push_back(*s.human_rho);
    if (s.n_test >= 3 && s.n_train >= 2) {
      ts.push_back(s.top_small);
      tl.push_back(s.top_large);
      bl.push_back(s.bottom_large);
      bs.push_back(s.bottom_small);
    }
  }
  if (rho.empty()) throw DegenerateInputError("memorability protocol: no split produced a defined rho");
  report.rho = mean_of(rho);
  report.human_rho = mean_of(human);
  report.top_small = mean_of(ts);
  report.top_large = mean_of(tl);
  report.bottom_large = mean_of(bl);
  report.bottom_small = mean_of(bs);
  return report;
}

std::string protocol_csv(const std::vector<std::pair<std::string, ProtocolReport>>& reports) {
  std::ostringstream out;
  out << std::fixed;
  out << "metric";
  for (const auto& [name, _] : reports) out << ',' << name;
  out << '\n';
  auto row = [&](const std::string& label, auto get, int digits) {
    out << label;
    for (const auto& [_, r] : reports) out << ',' << std::setprecision(digits) << get(r);
    out << '\n';
  };
  const int ks = reports.empty() ? 20 : reports.front().second.top_small_k;
  const int kl = reports.empty() ? 100 : reports.front().second.top_large_k;
  row("top" + std::to_string(ks), [](const ProtocolReport& r) { return 100.0 * r.top_small; }, 2);
  row("top" + std::to_string(kl), [](const ProtocolReport& r) { return 100.0 * r.top_large; }, 2);
  row("bottom" + std::to_string(kl), [](const ProtocolReport& r) { return 100.0 * r.bottom_large; }, 2);
  row("bottom" + std::to_string(ks), [](const ProtocolReport& r) { return 100.0 * r.bottom_small; }, 2);
  row("rho", [](const ProtocolReport& r) { return r.rho; }, 4);
  row("human_rho", [](const ProtocolReport& r) { return r.human_rho; }, 4);
  return out.str();
}

}  // namespace vms
