#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "json.hpp"
#include "vms/errors.hpp"
#include "vms/memstats.hpp"
#include "vms/recon.hpp"
#include "vms/rng.hpp"
#include "vms/tensor_io.hpp"

namespace vms {
namespace {

using nlohmann::json;

bool decayed(int group) { return group == kW1 || group == kW2 || group == kW3; }

}  // namespace

void validate_dataset(const ReconDataset& data, std::size_t output_size) {
  if (data.inputs.empty()) throw ValidationError("reconstruction dataset is empty");
  if (data.inputs.size() != data.targets.size()) throw ValidationError("input and target counts differ");
  if (!data.ids.empty() && data.ids.size() != data.inputs.size()) throw ValidationError("id count differs");
  const std::size_t n_in = data.inputs.front().size();
  if (n_in == 0) throw ValidationError("feature tensors are empty");
  if (!data.feature_dims.empty()) {
    std::size_t prod = 1;
    for (auto d : data.feature_dims) prod *= d;
    if (prod != n_in) throw ValidationError("feature dims do not match input length");
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.inputs[i].size() != n_in) {
      throw ValidationError("sample " + std::to_string(i) + ": feature length differs from the first sample");
    }
    if (data.targets[i].size() != output_size) {
      throw ValidationError("sample " + std::to_string(i) + ": target length must be " + std::to_string(output_size));
    }
    for (float v : data.inputs[i]) {
      if (!std::isfinite(v)) throw ValidationError("sample " + std::to_string(i) + ": non-finite feature");
    }
    for (float v : data.targets[i]) {
      if (!std::isfinite(v)) throw ValidationError("sample " + std::to_string(i) + ": non-finite target");
    }
  }
}

std::vector<float> predict_recon(const HeadParams& params, std::span<const float> input, const BatchNormConfig& bn) {
  return head_forward<float>(params, input, 1, ForwardMode::Eval, bn);
}

ReconEval eval_recon(const HeadParams& params, const ReconDataset& data, const BatchNormConfig& bn) {
  validate_dataset(data, params.shape.output);
  ReconEval ev;
  std::vector<double> vals;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto pred = predict_recon(params, data.inputs[i], bn);
    const std::vector<double> a(pred.begin(), pred.end());
    const std::vector<double> b(data.targets[i].begin(), data.targets[i].end());
    try {
      const double r = pearson2d(a, b);
      ev.per_image.push_back(r);
      vals.push_back(r);
    } catch (const DegenerateInputError&) {
      ev.per_image.push_back(std::nullopt);
      ++ev.degenerate;
    }
  }
  if (vals.empty()) throw DegenerateInputError("eval_recon: every prediction or target is constant");
  ev.mean_rho = std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
  return ev;
}

TrainResult train_head(const ReconDataset& train, const TrainConfig& config, const ReconDataset* eval) {
  validate_dataset(train);
  if (eval) validate_dataset(*eval);
  if (!(config.lr > 0) || config.batch <= 0 || config.epochs <= 0) {
    throw ValidationError("lr, batch and epochs must be positive");
  }
  if (!(config.momentum >= 0 && config.momentum < 1)) throw ValidationError("momentum must lie in [0, 1)");
  if (eval && eval->input_size() != train.input_size()) throw ValidationError("eval features differ in length");

  const HeadShape shape{train.input_size(), config.hidden1, config.hidden2, 400};
  TrainResult result;
  HeadParams params = init_head<float>(shape, config.seed);
  HeadGrads<float> velocity;
  for (int g = 0; g < kParamGroups; ++g) velocity[g].assign(params.p[g].size(), 0.0f);

  const CounterRng root(config.seed);
  const std::size_t n = train.size();
  const std::size_t n_in = shape.input;
  const float lr = static_cast<float>(config.lr);
  const float mu = static_cast<float>(config.momentum);
  const float wd = static_cast<float>(config.weight_decay);
  double best_rho = -std::numeric_limits<double>::infinity();
  std::vector<float> xb, yb;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto rng = root.derive(static_cast<std::uint64_t>(epoch));
    fisher_yates(std::span<std::size_t>(order), rng);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch)) {
      const std::size_t B = std::min<std::size_t>(config.batch, n - start);
      xb.resize(B * n_in);
      yb.resize(B * shape.output);
      for (std::size_t r = 0; r < B; ++r) {
        const auto& xi = train.inputs[order[start + r]];
        const auto& yi = train.targets[order[start + r]];
        std::copy(xi.begin(), xi.end(), xb.begin() + r * n_in);
        std::copy(yi.begin(), yi.end(), yb.begin() + r * shape.output);
      }
      ForwardCache<float> cache;
      const auto out = head_forward<float>(params, xb, B, ForwardMode::Train, config.bn, &cache);
      std::vector<float> gout(out.size());
      float batch_loss = 0;
      for (std::size_t r = 0; r < B; ++r) {
        batch_loss += loss_and_grad<float>(std::span<const float>(out.data() + r * shape.output, shape.output),
                                           std::span<const float>(yb.data() + r * shape.output, shape.output),
                                           config.loss, std::span<float>(gout.data() + r * shape.output, shape.output));
      }
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + ": non-finite loss");
      }
      loss_sum += batch_loss;
      const float inv_b = 1.0f / static_cast<float>(B);
      for (auto& v : gout) v *= inv_b;
      const auto grads = head_backward<float>(params, cache, gout);
      update_running_stats(params, cache, config.bn);
      for (int g = 0; g < kParamGroups; ++g) {
        auto& w = params.p[g];
        auto& v = velocity[g];
        const auto& gr = grads[g];
        const float decay = decayed(g) ? wd : 0.0f;
        for (std::size_t k = 0; k < w.size(); ++k) {
          v[k] = mu * v[k] - lr * (gr[k] + decay * w[k]);
          w[k] += v[k];
        }
      }
    }
    EpochLog log{epoch, loss_sum / static_cast<double>(n), std::nullopt};
    if (!std::isfinite(log.train_loss)) {
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch));
    }
    if (eval) {
      try {
        log.eval_rho = eval_recon(params, *eval, config.bn).mean_rho;
      } catch (const DegenerateInputError&) {
      }
      if (log.eval_rho && *log.eval_rho > best_rho) {
        best_rho = *log.eval_rho;
        result.best = params;
        result.best_epoch = epoch;
      }
    }
    if (epoch == config.snapshot_epoch) result.snapshot = params;
    result.epochs.push_back(log);
  }
  result.params = std::move(params);
  return result;
}

std::vector<int> stratified_folds(std::span<const std::string> ids, std::span<const CategoryPath> leaves, int k,
                                  std::uint64_t seed) {
  if (k < 2) throw ValidationError("fold count must be at least 2");
  if (ids.size() != leaves.size()) throw ValidationError("each id needs a category");
  std::map<CategoryPath, std::vector<std::size_t>> by_leaf;
  for (std::size_t i = 0; i < ids.size(); ++i) by_leaf[leaves[i]].push_back(i);
  std::vector<int> fold(ids.size(), 0);
  CounterRng rng(seed);
  for (auto& [leaf, members] : by_leaf) {
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
    fisher_yates(std::span<std::size_t>(members), rng);
    for (std::size_t j = 0; j < members.size(); ++j) fold[members[j]] = static_cast<int>(j % k);
  }
  return fold;
}

void save_head(const HeadParams& params, const std::filesystem::path& stem) {
  Tensor t;
  json groups = json::array();
  auto append = [&](const char* name, const std::vector<float>& v) {
    groups.push_back({{"name", name}, {"offset", t.data.size()}, {"size", v.size()}});
    t.data.insert(t.data.end(), v.begin(), v.end());
  };
  for (int g = 0; g < kParamGroups; ++g) append(param_group_name(g), params.p[g]);
  append("running_mean1", params.mean1);
  append("running_var1", params.var1);
  append("running_mean2", params.mean2);
  append("running_var2", params.var2);
  t.dims = {static_cast<std::uint32_t>(t.data.size())};
  json meta = {{"format", "vms-recon-head"},
               {"version", 1},
               {"shape",
                {{"input", params.shape.input},
                 {"hidden1", params.shape.hidden1},
                 {"hidden2", params.shape.hidden2},
                 {"output", params.shape.output}}},
               {"groups", groups}};
  auto tensor_path = stem;
  tensor_path += ".vtns";
  auto meta_path = stem;
  meta_path += ".json";
  write_tensor(tensor_path, t);
  write_file_atomic(meta_path, meta.dump(2) + "\n");
}

HeadParams load_head(const std::filesystem::path& stem) {
  auto tensor_path = stem;
  tensor_path += ".vtns";
  auto meta_path = stem;
  meta_path += ".json";
  json meta;
  try {
    meta = json::parse(read_file(meta_path));
  } catch (const json::exception& e) {
    throw FormatError("head manifest " + meta_path.string() + ": " + e.what());
  }
  const Tensor t = read_tensor(tensor_path);
  HeadParams h;
  try {
    const auto& s = meta.at("shape");
    h.shape = {s.at("input").get<std::size_t>(), s.at("hidden1").get<std::size_t>(),
               s.at("hidden2").get<std::size_t>(), s.at("output").get<std::size_t>()};
    std::map<std::string, std::vector<float>> found;
    for (const auto& g : meta.at("groups")) {
      const auto off = g.at("offset").get<std::size_t>();
      const auto size = g.at("size").get<std::size_t>();
      if (off + size > t.data.size()) throw FormatError("head bundle group exceeds tensor length");
      found[g.at("name").get<std::string>()] = std::vector<float>(t.data.begin() + off, t.data.begin() + off + size);
    }
    auto take = [&](const std::string& name, std::size_t expect) {
      auto it = found.find(name);
      if (it == found.end()) throw FormatError("head bundle lacks group " + name);
      if (it->second.size() != expect) throw FormatError("head bundle group " + name + " has the wrong size");
      return it->second;
    };
    const auto& s2 = h.shape;
    const std::size_t sizes[kParamGroups] = {s2.input * s2.hidden1, s2.hidden1, s2.hidden1, s2.hidden1,
                                             s2.hidden1 * s2.hidden2, s2.hidden2, s2.hidden2, s2.hidden2,
                                             s2.hidden2 * s2.output, s2.output};
    for (int g = 0; g < kParamGroups; ++g) h.p[g] = take(param_group_name(g), sizes[g]);
    h.mean1 = take("running_mean1", s2.hidden1);
    h.var1 = take("running_var1", s2.hidden1);
    h.mean2 = take("running_mean2", s2.hidden2);
    h.var2 = take("running_var2", s2.hidden2);
  } catch (const json::exception& e) {
    throw FormatError("head manifest " + meta_path.string() + ": " + e.what());
  }
  for (float v : h.var1) {
    if (!(v > 0)) throw FormatError("head bundle has a non-positive running variance");
  }
  for (float v : h.var2) {
    if (!(v > 0)) throw FormatError("head bundle has a non-positive running variance");
  }
  return h;
}

}  // namespace vms
