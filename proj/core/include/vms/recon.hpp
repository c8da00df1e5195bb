#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vms/manifest.hpp"
#include "vms/map_grid.hpp"

namespace vms {

struct HeadShape {
  std::size_t input = 0;  // m * n * f
  std::size_t hidden1 = 256;
  std::size_t hidden2 = 256;
  std::size_t output = 400;  // 20 x 20
  bool operator==(const HeadShape&) const = default;
};

// Trainable parameter groups, in serialization order. Weight matrices are
// stored input-major: W[i * out + j] connects input i to unit j.
enum ParamGroup : int { kW1, kB1, kGamma1, kBeta1, kW2, kB2, kGamma2, kBeta2, kW3, kB3, kParamGroups };

const char* param_group_name(int group) noexcept;

template <typename Real>
struct HeadParamsT {
  HeadShape shape;
  std::array<std::vector<Real>, kParamGroups> p;
  // Batch-norm running statistics (not trained by gradient).
  std::vector<Real> mean1, var1, mean2, var2;

  std::size_t group_size(int g) const { return p[g].size(); }
};

using HeadParams = HeadParamsT<float>;
using HeadParams64 = HeadParamsT<double>;

struct BatchNormConfig {
  double epsilon = 1e-5;
  // running = momentum * running + (1 - momentum) * batch.
  double momentum = 0.9;
};

// He-uniform weights (limit sqrt(6 / fan_in)), zero biases, gamma 1, beta 0,
// running mean 0 and variance 1.
template <typename Real>
HeadParamsT<Real> init_head(const HeadShape& shape, std::uint64_t seed);

template <typename To, typename From>
HeadParamsT<To> convert_head(const HeadParamsT<From>& params);

enum class ForwardMode { Train, Eval };

// Intermediates kept by a train-mode forward pass for backprop.
template <typename Real>
struct ForwardCache {
  std::size_t batch = 0;
  std::vector<Real> x;                     // B x in
  std::vector<Real> xhat1, inv_std1, a1;   // B x h1, h1, B x h1
  std::vector<Real> xhat2, inv_std2, a2;
  std::vector<Real> batch_mean1, batch_var1, batch_mean2, batch_var2;
};

// Forward pass over a batch (rows of length shape.input, concatenated).
// Returns B x 400 outputs. Train mode uses batch statistics and fills
// `cache`; eval mode uses running statistics. Throws DivergenceError naming
// the layer when an activation is non-finite.
template <typename Real>
std::vector<Real> head_forward(const HeadParamsT<Real>& params, std::span<const Real> x, std::size_t batch,
                               ForwardMode mode, const BatchNormConfig& bn = {},
                               ForwardCache<Real>* cache = nullptr);

enum class LossKind { L1, L2 };

std::string_view to_string(LossKind kind) noexcept;
LossKind parse_loss_kind(std::string_view text);

// Mean over the entries; gradient w.r.t. pred. sign(0) := 0 for l1.
template <typename Real>
Real loss_and_grad(std::span<const Real> pred, std::span<const Real> target, LossKind kind,
                   std::span<Real> grad);

template <typename Real>
using HeadGrads = std::array<std::vector<Real>, kParamGroups>;

// Backprop of d(loss)/d(out) (B x 400) through a cached train forward.
template <typename Real>
HeadGrads<Real> head_backward(const HeadParamsT<Real>& params, const ForwardCache<Real>& cache,
                              std::span<const Real> grad_out);

// Batch loss (mean of per-sample losses) and parameter gradients.
template <typename Real>
Real batch_loss_and_grads(const HeadParamsT<Real>& params, std::span<const Real> x, std::span<const Real> targets,
                          std::size_t batch, LossKind kind, HeadGrads<Real>* grads,
                          const BatchNormConfig& bn = {});

// Running statistics update from one train-mode forward pass. The variance
// uses the unbiased batch estimate.
template <typename Real>
void update_running_stats(HeadParamsT<Real>& params, const ForwardCache<Real>& cache, const BatchNormConfig& bn);

// ---------------------------------------------------------------------------
// Training

struct ReconDataset {
  std::vector<std::uint32_t> feature_dims;  // (m, n, f)
  std::vector<std::string> ids;
  std::vector<std::vector<float>> inputs;   // each of length m*n*f
  std::vector<std::vector<float>> targets;  // each of length 400

  std::size_t size() const noexcept { return inputs.size(); }
  std::size_t input_size() const noexcept { return inputs.empty() ? 0 : inputs.front().size(); }
};

// Checks consistent lengths and finite values.
void validate_dataset(const ReconDataset& data, std::size_t output_size = 400);

struct TrainConfig {
  LossKind loss = LossKind::L1;
  double lr = 0.001;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  int batch = 40;
  int epochs = 30;
  std::uint64_t seed = 0;
  BatchNormConfig bn;
  std::size_t hidden1 = 256;
  std::size_t hidden2 = 256;
  // Epoch whose parameters are kept as the fixed-epoch snapshot.
  int snapshot_epoch = 20;
};

struct EpochLog {
  int epoch = 0;  // 1-based
  double train_loss = 0;
  std::optional<double> eval_rho;
};

struct ReconEval {
  double mean_rho = 0;
  std::vector<std::optional<double>> per_image;  // nullopt: degenerate
  int degenerate = 0;
};

struct TrainResult {
  HeadParams params;  // after the last epoch
  std::vector<EpochLog> epochs;
  std::optional<HeadParams> snapshot;  // at config.snapshot_epoch
  std::optional<HeadParams> best;      // highest eval rho
  int best_epoch = 0;
};

// Mini-batch SGD with classical momentum: v <- mu v - lr (g + wd W),
// W <- W + v. Weight decay applies to the three weight matrices only. The
// last partial batch of an epoch is kept.
TrainResult train_head(const ReconDataset& train, const TrainConfig& config, const ReconDataset* eval = nullptr);

// Per-image pearson2d of the 20x20 prediction against the target.
// Constant predictions or targets are excluded and counted. Throws
// DegenerateInputError when no image is valid.
ReconEval eval_recon(const HeadParams& params, const ReconDataset& data, const BatchNormConfig& bn = {});

std::vector<float> predict_recon(const HeadParams& params, std::span<const float> input,
                                 const BatchNormConfig& bn = {});

// `k` folds stratified by leaf category: per leaf the sorted ids are
// shuffled and dealt round-robin. Returns the fold index of each id.
std::vector<int> stratified_folds(std::span<const std::string> ids, std::span<const CategoryPath> leaves, int k,
                                  std::uint64_t seed);

// Parameter bundle: <stem>.vtns (flat f32) + <stem>.json (shape and
// offsets of every group).
void save_head(const HeadParams& params, const std::filesystem::path& stem);
HeadParams load_head(const std::filesystem::path& stem);

}  // namespace vms
