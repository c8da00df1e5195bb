#include <cmath>

#include "vms/errors.hpp"
#include "vms/memstats.hpp"

namespace vms {

ErrorEllipse error_ellipse(std::span<const double> empirical, std::span<const double> predicted, double scale) {
  if (empirical.size() != predicted.size()) throw ValidationError("error_ellipse: size mismatch");
  if (empirical.size() < 2) throw ValidationError("error_ellipse: need at least 2 points");
  const double n = static_cast<double>(empirical.size());
  ErrorEllipse e;
  for (std::size_t i = 0; i < empirical.size(); ++i) {
    e.center_x += empirical[i];
    e.center_y += predicted[i];
  }
  e.center_x /= n;
  e.center_y /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < empirical.size(); ++i) {
    const double dx = empirical[i] - e.center_x;
    const double dy = predicted[i] - e.center_y;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  // Covariance of the mean (sample covariance / n).
  const double k = 1.0 / ((n - 1) * n);
  const double a = sxx * k, c = syy * k, b = sxy * k;
  const double mid = 0.5 * (a + c);
  const double rad = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  const double l1 = mid + rad;
  const double l2 = std::max(mid - rad, 0.0);
  e.semi_major = scale * std::sqrt(l1);
  e.semi_minor = scale * std::sqrt(l2);
  e.angle_rad = 0.5 * std::atan2(2 * b, a - c);
  return e;
}

std::vector<CategoryStat> category_stats(std::span<const SessionLog> logs, const DatasetManifest& manifest,
                                         const RateOptions& options,
                                         const std::map<std::string, double>* predictions) {
  const RatingIndex index(logs);
  struct Level {
    CategoryLevel level;
    std::string name;
    std::vector<const ImageRecord*> images;
  };
  std::vector<Level> groups;
  for (const auto& supra : manifest.categories.roots()) {
    groups.push_back({CategoryLevel::Supra, supra.label, {}});
    for (const auto& mid : supra.children) {
      groups.push_back({CategoryLevel::Mid, supra.label + "/" + mid.label, {}});
      for (const auto& leaf : mid.children) {
        groups.push_back({CategoryLevel::Leaf, supra.label + "/" + mid.label + "/" + leaf.label, {}});
      }
    }
  }
  for (const auto& img : manifest.images) {
    const std::string paths[] = {img.category.supra, img.category.supra + "/" + img.category.mid,
                                 img.category.str()};
    for (auto& g : groups) {
      if (g.name == paths[static_cast<int>(g.level)]) g.images.push_back(&img);
    }
  }

  std::vector<CategoryStat> out;
  for (const auto& g : groups) {
    if (g.images.empty()) throw ValidationError("category '" + g.name + "' has no images");
    CategoryStat s;
    s.level = g.level;
    s.name = g.name;
    std::vector<double> hr, far, emp, pred;
    for (const auto* img : g.images) {
      const auto r = index.rates(img->id, options);
      if (r.far) far.push_back(*r.far);
      if (!r.hr) continue;
      hr.push_back(*r.hr);
      if (predictions) {
        auto it = predictions->find(img->id);
        if (it != predictions->end()) {
          emp.push_back(*r.hr);
          pred.push_back(it->second);
        }
      }
    }
    s.n_images = static_cast<int>(hr.size());
    const auto sh = summarize(hr);
    const auto sf = summarize(far);
    s.mean_hr = sh.mean;
    s.stddev_hr = sh.stddev;
    s.mean_far = sf.mean;
    s.stddev_far = sf.stddev;
    if (emp.size() >= 2) s.ellipse = error_ellipse(emp, pred);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace vms
