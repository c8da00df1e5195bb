#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vms/featpool.hpp"
#include "vms/memstats.hpp"
#include "vms/session.hpp"

namespace vms {

// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> data() const noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Kernels

enum class KernelKind { Rbf, HistogramIntersection };

std::string_view to_string(KernelKind kind) noexcept;
KernelKind parse_kernel_kind(std::string_view text);

struct KernelTerm {
  std::string feature;
  KernelKind kind = KernelKind::HistogramIntersection;
  // RBF width; 0 selects 1 / median pairwise squared distance on the
  // training rows.
  double gamma = 0.0;
};

// One term is a plain kernel; several terms form the entrywise product of
// their matrices.
struct KernelSpec {
  std::vector<KernelTerm> terms;
};

// Feature name -> one row per sample.
using FeatureTable = std::map<std::string, std::vector<std::vector<double>>>;

double kernel_value(KernelKind kind, double gamma, std::span<const double> x, std::span<const double> y);

// 1 / median of the squared distances over all pairs of `rows`.
double median_gamma(const std::vector<std::vector<double>>& rows, std::span<const std::size_t> subset = {});

// Copy of `spec` with every zero RBF gamma replaced by median_gamma over the
// given rows.
KernelSpec resolve_gammas(const KernelSpec& spec, const FeatureTable& features,
                          std::span<const std::size_t> rows = {});

// Gram matrix over `rows` (all rows when empty). Gammas must be resolved.
Matrix kernel_matrix(const FeatureTable& features, const KernelSpec& spec, std::span<const std::size_t> rows = {});

// K(a_i, b_j) for the two row subsets of the same table.
Matrix kernel_cross(const FeatureTable& features, const KernelSpec& spec, std::span<const std::size_t> rows_a,
                    std::span<const std::size_t> rows_b);

// ---------------------------------------------------------------------------
// epsilon-SVR

struct SvrParams {
  double C = 1.0;
  double epsilon = 0.1;
  double tol = 1e-3;
  long max_iterations = 0;  // 0 = max(10^7, 100 n)
  bool record_objective = false;
  // Eigenvalue slack allowed by the PSD check.
  double psd_tolerance = 1e-8;
};

struct SvrModel {
  std::vector<double> beta;  // alpha - alpha*, one per training point
  double bias = 0.0;
  std::vector<std::size_t> support;
  double C = 1.0;
  double epsilon = 0.1;
  long iterations = 0;
  bool converged = false;
  // Maximal KKT violation m(alpha) - M(alpha) at exit.
  double kkt_violation = 0.0;
  // Dual objective after every iteration when requested.
  std::vector<double> objective_trace;
  std::vector<std::string> warnings;
};

// Maximized dual: -1/2 b'Kb - eps sum|b_i| + sum y_i b_i.
double svr_dual_objective(const Matrix& K, std::span<const double> y, std::span<const double> beta,
                          double epsilon);

// Throws ValidationError when K is not symmetric or has an eigenvalue below
// -psd_tolerance (Cholesky of K + tol I fails).
void check_psd(const Matrix& K, double psd_tolerance = 1e-8);

// Pairwise SMO on the 2n-variable dual with second-order working-set
// selection. Stops once the maximal violating pair gap is below tol.
SvrModel svr_train(const Matrix& K, std::span<const double> y, const SvrParams& params = {});

// `kernel_row` holds K(x_i, q) either for every training point or for the
// support set in model.support order.
double svr_predict(const SvrModel& model, std::span<const double> kernel_row);

// ---------------------------------------------------------------------------
// Memorability protocol

struct ProtocolDataset {
  std::vector<std::string> image_ids;  // sorted, row order of every feature
  FeatureTable features;
  // Images skipped because a weight map or descriptor was missing.
  std::vector<std::string> skipped;
  // Rows whose weighted pooling had zero mass, per feature.
  std::map<std::string, int> zero_rows;
};

// Pools descriptors[image][feature] with the image's weight map (or none)
// and stacks the rows. Throws DegenerateInputError when every row of some
// feature is all-zero.
ProtocolDataset build_protocol_dataset(
    const std::map<std::string, std::map<std::string, SpatialDescriptor>>& descriptors,
    const std::map<std::string, MapGrid>* weights);

struct ProtocolOptions {
  int n_splits = 25;
  std::uint64_t seed = 0;
  SvrParams svr;
  bool grid_search = false;
  std::vector<double> grid_C{0.1, 1.0, 10.0};
  std::vector<double> grid_epsilon{0.01, 0.1};
  RateOptions rates;
  int top_small = 20;
  int top_large = 100;
};

struct SplitResult {
  std::optional<double> rho;
  std::optional<double> human_rho;
  double top_small = 0, top_large = 0, bottom_large = 0, bottom_small = 0;
  int n_train = 0;
  int n_test = 0;
  int dropped = 0;
  double C = 0, epsilon = 0;
};

struct ProtocolReport {
  std::vector<SplitResult> splits;
  double rho = 0;
  double human_rho = 0;
  double top_small = 0, top_large = 0, bottom_large = 0, bottom_small = 0;
  int dropped_total = 0;
  int top_small_k = 20, top_large_k = 100;
  std::vector<std::string> warnings;
};

ProtocolReport run_memorability_protocol(std::span<const SessionLog> logs, const ProtocolDataset& data,
                                         const KernelSpec& spec, const ProtocolOptions& options = {});

// Rows top-k / rho, one column per named report; HR means as percentages.
std::string protocol_csv(const std::vector<std::pair<std::string, ProtocolReport>>& reports);

}  // namespace vms
