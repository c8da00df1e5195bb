#include "vmstool/svg.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "vmstool/common.hpp"

namespace vmstool {
namespace {

constexpr double kW = 640, kH = 420, kLeft = 60, kRight = 20, kTop = 40, kBottom = 50;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kW - kLeft - kRight); }
  double py(double y) const { return kH - kBottom - (y - y0) / (y1 - y0) * (kH - kTop - kBottom); }
};

void axes(std::ostringstream& o, const Frame& f, const std::string& title, const std::string& xl,
          const std::string& yl) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
    << "</text>\n";
  o << "<line x1=\"" << kLeft << "\" y1=\"" << kH - kBottom << "\" x2=\"" << kW - kRight << "\" y2=\""
    << kH - kBottom << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kH - kBottom
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 4;
    const double yv = f.y0 + (f.y1 - f.y0) * i / 4;
    o << "<text x=\"" << fixed(f.px(xv), 1) << "\" y=\"" << kH - kBottom + 16
      << "\" text-anchor=\"middle\" font-size=\"11\">" << fixed(xv, 2) << "</text>\n";
    o << "<text x=\"" << kLeft - 6 << "\" y=\"" << fixed(f.py(yv) + 4, 1)
      << "\" text-anchor=\"end\" font-size=\"11\">" << fixed(yv, 2) << "</text>\n";
  }
  o << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
    << escape(xl) << "</text>\n";
  o << "<text x=\"16\" y=\"" << kH / 2 << "\" transform=\"rotate(-90 16 " << kH / 2
    << ")\" text-anchor=\"middle\" font-size=\"12\">" << escape(yl) << "</text>\n";
}

}  // namespace

std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<Series>& series) {
  Frame f{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& s : series) {
    for (double x : s.xs) f.x0 = std::min(f.x0, x), f.x1 = std::max(f.x1, x);
    for (double y : s.ys) f.y0 = std::min(f.y0, y), f.y1 = std::max(f.y1, y);
  }
  if (!(f.x1 > f.x0)) f.x0 = (f.x0 == std::numeric_limits<double>::infinity() ? 0 : f.x0), f.x1 = f.x0 + 1;
  if (!(f.y1 > f.y0)) f.y0 = (f.y0 == std::numeric_limits<double>::infinity() ? 0 : f.y0), f.y1 = f.y0 + 1;
  std::ostringstream o;
  axes(o, f, title, x_label, y_label);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % 5];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < std::min(s.xs.size(), s.ys.size()); ++i) {
      o << (i ? " " : "") << fixed(f.px(s.xs[i]), 2) << ',' << fixed(f.py(s.ys[i]), 2);
    }
    o << "\"/>\n";
    o << "<text x=\"" << kW - kRight - 4 << "\" y=\"" << kTop + 14 * (k + 1)
      << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << color << "\">" << escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string svg_histogram(const std::string& title, const std::string& x_label, const vms::Histogram& hist) {
  const int peak = hist.counts.empty() ? 1 : std::max(1, *std::max_element(hist.counts.begin(), hist.counts.end()));
  Frame f{hist.lo, hist.hi, 0.0, static_cast<double>(peak)};
  std::ostringstream o;
  axes(o, f, title, x_label, "images");
  const double bw = hist.bin_width();
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    const double x0 = f.px(hist.lo + bw * i);
    const double x1 = f.px(hist.lo + bw * (i + 1));
    const double y = f.py(hist.counts[i]);
    o << "<rect x=\"" << fixed(x0, 2) << "\" y=\"" << fixed(y, 2) << "\" width=\"" << fixed(x1 - x0 - 1, 2)
      << "\" height=\"" << fixed(kH - kBottom - y, 2) << "\" fill=\"#1f77b4\"/>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace vmstool
