#pragma once

#include <string>
#include <vector>

#include "vms/memstats.hpp"

namespace vmstool {

struct Series {
  std::string name;
  std::vector<double> xs;
  std::vector<double> ys;
};

// Static line chart; axis ranges cover every series.
std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<Series>& series);

std::string svg_histogram(const std::string& title, const std::string& x_label, const vms::Histogram& hist);

}  // namespace vmstool
