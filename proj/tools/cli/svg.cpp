#include "cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "lesioneval/format.hpp"

#ifndef LESIONEVAL_VERSION
#define LESIONEVAL_VERSION "dev"
#endif

namespace lesioneval::cli {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 64.0;
constexpr double kTop = 24.0;
constexpr double kBottom = 56.0;

// Maps data coordinates onto the plot area.
struct Frame {
  double x_max = 1.0;
  double y_max = 1.0;

  double px(double x) const { return kLeft + (kWidth - kLeft - kRight) * x / x_max; }
  double py(double y) const { return kHeight - kBottom - (kHeight - kTop - kBottom) * y / y_max; }
};

std::string header() {
  std::string s;
  s += fmt::format("<!-- lesioneval {} -->\n", LESIONEVAL_VERSION);
  s += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" "
      "viewBox=\"0 0 {0:.0f} {1:.0f}\" font-family=\"sans-serif\" font-size=\"12\">\n",
      kWidth, kHeight);
  s += fmt::format("<rect x=\"0\" y=\"0\" width=\"{:.0f}\" height=\"{:.0f}\" fill=\"white\"/>\n", kWidth, kHeight);
  return s;
}

std::string axes_box(const Frame& f) {
  return fmt::format(
      "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" stroke=\"black\"/>\n",
      f.px(0), f.py(f.y_max), f.px(f.x_max) - f.px(0), f.py(0) - f.py(f.y_max));
}

std::string y_ticks(const Frame& f, int count, bool right, const char* fmt_spec) {
  std::string s;
  for (int i = 0; i <= count; ++i) {
    const double v = f.y_max * i / count;
    const double y = f.py(v);
    const double x0 = right ? f.px(f.x_max) : f.px(0);
    const double dir = right ? 1.0 : -1.0;
    s += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"black\"/>\n", x0, y,
                     x0 + 4.0 * dir, y);
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"{}\">{}</text>\n", x0 + 7.0 * dir, y + 4.0,
                     right ? "start" : "end", fmt::format(fmt::runtime(fmt_spec), v));
  }
  return s;
}

std::string polyline(const std::vector<std::pair<double, double>>& pts, const Frame& f, const char* colour,
                     bool dashed) {
  std::string s = "<polyline fill=\"none\" stroke-width=\"2\" stroke=\"";
  s += colour;
  s += "\"";
  if (dashed) s += " stroke-dasharray=\"6 4\"";
  s += " points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) s += ' ';
    s += fmt::format("{:.2f},{:.2f}", f.px(pts[i].first), f.py(pts[i].second));
  }
  s += "\"/>\n";
  return s;
}

// Same shape the AUC integrates: flat lead-in, linear segments, flat tail.
std::vector<std::pair<double, double>> froc_outline(const FrocCurve& c) {
  std::vector<std::pair<double, double>> pts;
  if (c.points.empty()) return {{0.0, 0.0}, {c.fppi_limit, 0.0}};
  pts.emplace_back(0.0, c.points.front().sensitivity);
  for (const auto& p : c.points) pts.emplace_back(p.fppi, p.sensitivity);
  pts.emplace_back(c.fppi_limit, c.points.back().sensitivity);
  return pts;
}

std::string legend_entry(double x, double y, const char* colour, bool dashed, const std::string& label) {
  std::string s = fmt::format(
      "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" stroke-width=\"2\"{}/>\n", x,
      y, x + 28.0, y, colour, dashed ? " stroke-dasharray=\"6 4\"" : "");
  s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", x + 34.0, y + 4.0, label);
  return s;
}

}  // namespace

std::string froc_svg(const FrocCurve& all, const FrocCurve& large, double large_lesion_ml) {
  Frame f;
  f.x_max = std::max(all.fppi_limit, large.fppi_limit);
  f.y_max = 1.0;

  std::string s = header();
  s += axes_box(f);
  const int x_steps = static_cast<int>(std::ceil(f.x_max));
  const int x_every = x_steps > 10 ? 5 : 1;
  for (int i = 0; i <= x_steps; i += x_every) {
    const double x = f.px(std::min<double>(i, f.x_max));
    s += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n", x,
                     f.py(0), f.py(0) + 4.0);
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", x, f.py(0) + 18.0, i);
  }
  s += y_ticks(f, 5, false, "{:.1f}");
  s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">False positives per image</text>\n",
                   (f.px(0) + f.px(f.x_max)) / 2, kHeight - 16.0);
  s += fmt::format(
      "<text x=\"16\" y=\"{0:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0:.2f})\">Sensitivity</text>\n",
      (f.py(0) + f.py(1)) / 2);

  s += polyline(froc_outline(all), f, "#1f77b4", false);
  s += polyline(froc_outline(large), f, "#1f77b4", true);

  const double lx = f.px(f.x_max) - 220.0;
  const double ly = f.py(0) - 44.0;
  s += legend_entry(lx, ly, "#1f77b4", false, fmt::format("All lesions (AUC {:.2f})", all.auc));
  s += legend_entry(lx, ly + 18.0, "#1f77b4", true,
                    fmt::format("Volume &gt; {} ml (AUC {:.2f})", format_number(large_lesion_ml), large.auc));
  s += "</svg>\n";
  return s;
}

std::string volume_curve_svg(std::span<const VolumeStratum> strata) {
  Frame f;
  f.x_max = static_cast<double>(std::max<std::size_t>(strata.size(), 1));
  f.y_max = 1.0;
  double fppi_max = 1.0;
  std::int64_t count_max = 1;
  for (const auto& s : strata) {
    fppi_max = std::max(fppi_max, s.fppi);
    count_max = std::max(count_max, s.gt_lesion_count);
  }
  fppi_max = std::ceil(fppi_max);

  std::string s = header();
  // Histogram first so the curves draw on top.
  for (std::size_t i = 0; i < strata.size(); ++i) {
    const double h = static_cast<double>(strata[i].gt_lesion_count) / static_cast<double>(count_max);
    const double x0 = f.px(static_cast<double>(i) + 0.1);
    const double x1 = f.px(static_cast<double>(i) + 0.9);
    s += fmt::format(
        "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"white\" stroke=\"#888888\"/>\n",
        x0, f.py(h), x1 - x0, f.py(0) - f.py(h));
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\" fill=\"#888888\">{}</text>\n",
                     (x0 + x1) / 2, f.py(h) - 4.0, strata[i].gt_lesion_count);
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">&gt;{}</text>\n", (x0 + x1) / 2,
                     f.py(0) + 18.0, format_number(strata[i].min_ml));
  }
  s += axes_box(f);
  s += y_ticks(f, 5, false, "{:.1f}");
  Frame right = f;
  right.y_max = fppi_max;
  s += y_ticks(right, 5, true, "{:.1f}");
  s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">Minimum lesion volume (ml)</text>\n",
                   (f.px(0) + f.px(f.x_max)) / 2, kHeight - 16.0);
  s += fmt::format(
      "<text x=\"16\" y=\"{0:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0:.2f})\">Sensitivity</text>\n",
      (f.py(0) + f.py(1)) / 2);
  s += fmt::format(
      "<text x=\"{0:.2f}\" y=\"{1:.2f}\" text-anchor=\"middle\" transform=\"rotate(90 {0:.2f} {1:.2f})\">FPPI</text>\n",
      kWidth - 14.0, (f.py(0) + f.py(1)) / 2);

  std::vector<std::pair<double, double>> sens, fppi;
  for (std::size_t i = 0; i < strata.size(); ++i) {
    const double x = static_cast<double>(i) + 0.5;
    if (strata[i].sensitivity) sens.emplace_back(x, *strata[i].sensitivity);
    fppi.emplace_back(x, strata[i].fppi);
  }
  if (!sens.empty()) s += polyline(sens, f, "#1f77b4", false);
  if (!fppi.empty()) s += polyline(fppi, right, "#d62728", true);

  const double lx = f.px(f.x_max) - 200.0;
  const double ly = f.py(1) + 18.0;
  s += legend_entry(lx, ly, "#1f77b4", false, "Sensitivity");
  s += legend_entry(lx, ly + 18.0, "#d62728", true, "FPPI (right axis)");
  s += "</svg>\n";
  return s;
}

}  // namespace lesioneval::cli
