#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vms/manifest.hpp"
#include "vms/map_grid.hpp"
#include "vms/session.hpp"
#include "vms/vms_builder.hpp"

namespace vms {

// ---------------------------------------------------------------------------
// Hit rate / false-alarm rate

struct RatePair {
  // nullopt when the image was never shown in that role.
  std::optional<double> hr;
  std::optional<double> far;
  int n_repeat_showings = 0;
  int n_filler_showings = 0;
  int hits = 0;
  int false_alarms = 0;
};

struct RateOptions {
  int threshold = kDefaultAnalysisThreshold;
  // A rating equal to the threshold counts as remembered.
  bool inclusive = true;
};

// Ratings per image and role, gathered once from a set of logs. Participant
// k is logs[k]; an optional membership mask restricts the index to a subset.
class RatingIndex {
 public:
  explicit RatingIndex(std::span<const SessionLog> logs, std::span<const std::uint8_t> membership = {});

  RatePair rates(std::string_view image_id, const RateOptions& options = {}) const;

  // Images seen in any role, sorted.
  const std::vector<std::string>& image_ids() const noexcept { return ids_; }

  // Pooled ratings over all images.
  const std::vector<int>& pooled_repeat() const noexcept { return pooled_repeat_; }
  const std::vector<int>& pooled_filler() const noexcept { return pooled_filler_; }

 private:
  struct Ratings {
    std::vector<int> repeat;
    std::vector<int> filler;
  };
  std::unordered_map<std::string, Ratings> by_image_;
  std::vector<std::string> ids_;
  std::vector<int> pooled_repeat_;
  std::vector<int> pooled_filler_;
};

RatePair rates(std::span<const SessionLog> logs, std::string_view image_id,
               const RateOptions& options = {});

// ---------------------------------------------------------------------------
// Rank correlation and threshold selection

// Average ranks (1-based); tied values share the mean of their ranks.
std::vector<double> average_ranks(std::span<const double> xs);

// Pearson correlation of the 1-D vectors. Throws DegenerateInputError when
// either vector is constant.
double pearson(std::span<const double> xs, std::span<const double> ys);

// Pearson correlation of average ranks. Requires |xs| = |ys| >= 3 and at
// least two distinct values in each vector.
double spearman(std::span<const double> xs, std::span<const double> ys);

struct ThresholdPoint {
  int threshold = 0;
  // nullopt when fewer than 3 images have defined rates or a side is all ties.
  std::optional<double> rho;
  int n_images = 0;
};

struct ThresholdSelection {
  int threshold = 0;
  std::vector<ThresholdPoint> curve;
};

struct ThresholdSearch {
  int floor = kSelectionGate;
  double cutoff = 0.01;
  bool inclusive = true;
};

// Smallest t in [floor, 100] whose Spearman rho between per-image HR(t) and
// FAR(t) is below `cutoff`, together with the whole rho(t) curve.
ThresholdSelection select_threshold(std::span<const SessionLog> logs, const ThresholdSearch& search = {});

// ---------------------------------------------------------------------------
// Signal detection

struct RocPoint {
  int threshold = 0;
  double far = 0;
  double hr = 0;
};

struct DetectionSummary {
  std::vector<RocPoint> roc;  // thresholds 0..100
  double auc = 0.5;
  double d_prime = 0;
  int analysis_threshold = kDefaultAnalysisThreshold;
  double hr = 0;   // pooled, at the analysis threshold
  double far = 0;  // pooled, at the analysis threshold
  int n_repeat = 0;
  int n_filler = 0;
  std::vector<std::string> warnings;
};

// Standard normal quantile, accurate to full double precision on (0, 1).
double inverse_normal_cdf(double p);

// z(HR) - z(FAR) with both rates clamped to [1/(2N), 1 - 1/(2N)] first.
double d_prime(double hr, double far, int n_repeat, int n_filler);

// Trapezoidal area under ROC points (anchored at (0,0) and (1,1)).
double roc_auc(std::span<const RocPoint> roc);

DetectionSummary detection_summary(std::span<const SessionLog> logs,
                                   int analysis_threshold = kDefaultAnalysisThreshold);

// ---------------------------------------------------------------------------
// Map similarity

// Correlation of two same-size maps with population (1/n) moments.
double pearson2d(std::span<const double> a, std::span<const double> b);
double pearson2d(const MapGrid& a, const MapGrid& b);

inline constexpr int kDefaultMiBins = 32;

// Mutual information in bits using a bins x bins joint histogram of
// equal-width bins on [0, 1]; 0 log 0 := 0.
double mutual_information(const MapGrid& a, const MapGrid& b, int bins = kDefaultMiBins);

// Entropy in bits of the same marginal binning.
double binned_entropy(const MapGrid& a, int bins = kDefaultMiBins);

enum class MapMetric { Pearson2d, MutualInformation };

std::string_view to_string(MapMetric metric) noexcept;
MapMetric parse_map_metric(std::string_view text);

// Evaluates `metric`; throws DegenerateInputError for a constant map under
// Pearson2d.
double map_metric(MapMetric metric, const MapGrid& a, const MapGrid& b, int mi_bins = kDefaultMiBins);

// ---------------------------------------------------------------------------
// Histograms, consistency, bootstrap, comparisons

struct Histogram {
  double lo = 0;
  double hi = 1;
  std::vector<int> counts;

  double bin_width() const { return counts.empty() ? 0.0 : (hi - lo) / counts.size(); }
  int total() const;
};

// Equal-width histogram; values outside [lo, hi] are clamped into the end bins.
Histogram make_histogram(std::span<const double> values, double lo, double hi, int bins);

struct SummaryStats {
  double mean = 0;
  double stddev = 0;  // population
  std::size_t n = 0;
};

SummaryStats summarize(std::span<const double> values);

struct ConsistencyOptions {
  int n_splits = 25;
  std::uint64_t seed = 0;
  VmsOptions vms;
  int mi_bins = kDefaultMiBins;
  int histogram_bins = 20;
};

struct ConsistencyReport {
  MapMetric metric = MapMetric::Pearson2d;
  VmsKind kind = VmsKind::True;
  // Per image: metric averaged over the splits where it was defined.
  std::map<std::string, double> per_image;
  Histogram histogram;
  double mean = 0;
  double stddev = 0;
  int n_splits = 0;
  // Images with no defined value in any split.
  std::vector<std::string> omitted;
  // (image, split) pairs skipped because a half had no contributor or the
  // metric was undefined.
  int skipped_evaluations = 0;
};

// Each split shuffles the participants (ordered by participant id, then
// session id) and cuts them into two equal halves; an odd participant out is
// dropped for that split.
ConsistencyReport split_half_consistency(std::span<const SessionLog> logs,
                                         std::span<const std::string> images, VmsKind kind,
                                         MapMetric metric, const ConsistencyOptions& options);

struct BootstrapOptions {
  int n_boot = 10000;
  double level = 0.95;
  std::uint64_t seed = 0;
};

struct BootstrapResult {
  bool significant = false;
  double ci_low = 0;
  double ci_high = 0;
  double mean_difference = 0;
  // Share of resample means whose sign differs from the full-sample mean.
  double opposite_sign_fraction = 0;
};

// Paired percentile bootstrap on mean(a - b).
BootstrapResult bootstrap_diff_test(std::span<const double> a, std::span<const double> b,
                                    const BootstrapOptions& options = {});

struct MapSetComparison {
  MapMetric metric = MapMetric::Pearson2d;
  std::map<std::string, double> per_image;
  Histogram histogram;
  double mean = 0;
  double stddev = 0;
  // Ids present in only one of the two sets, or whose metric was undefined.
  std::vector<std::string> omitted;
};

struct CompareOptions {
  int mi_bins = kDefaultMiBins;
  int histogram_bins = 20;
  // Both maps are resized to this grid; {0,0} keeps the first set's dims.
  GridDims grid{0, 0};
};

MapSetComparison compare_map_sets(const std::map<std::string, MapGrid>& first,
                                  const std::map<std::string, MapGrid>& second, MapMetric metric,
                                  const CompareOptions& options = {});

// ---------------------------------------------------------------------------
// Category aggregation

enum class CategoryLevel { Supra, Mid, Leaf };

struct ErrorEllipse {
  double center_x = 0;  // mean empirical HR
  double center_y = 0;  // mean predicted
  double semi_major = 0;
  double semi_minor = 0;
  double angle_rad = 0;  // orientation of the major axis
};

struct CategoryStat {
  CategoryLevel level = CategoryLevel::Leaf;
  std::string name;
  int n_images = 0;
  double mean_hr = 0;
  double stddev_hr = 0;
  double mean_far = 0;
  double stddev_far = 0;
  std::optional<ErrorEllipse> ellipse;
};

// Ellipse with semi-axes of `scale` standard errors along the eigenvectors
// of the (empirical, predicted) covariance.
ErrorEllipse error_ellipse(std::span<const double> empirical, std::span<const double> predicted,
                           double scale = 3.0);

// Per supra/mid/leaf category statistics over images with a defined HR.
// `predictions` (image -> predicted memorability) adds error ellipses.
std::vector<CategoryStat> category_stats(std::span<const SessionLog> logs, const DatasetManifest& manifest,
                                         const RateOptions& options = {},
                                         const std::map<std::string, double>* predictions = nullptr);

}  // namespace vms
