#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "lowrank/harness.hpp"
#include "lowrank/observation_io.hpp"

namespace lowrank {

namespace {

constexpr double kPanelW = 460, kPanelH = 340;
constexpr double kMarginL = 70, kMarginR = 20, kMarginT = 40, kMarginB = 50;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2"};

std::string num(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
  return std::string(buf, end);
}

std::string label(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 4);
  return std::string(buf, end);
}

struct Axis {
  double lo, hi;
  bool log;
  double map(double v, double a, double b) const {
    const double f = log ? (std::log10(v) - lo) / (hi - lo) : (v - lo) / (hi - lo);
    return a + f * (b - a);
  }
};

void panel(std::string& svg, double x0, const char* title, const char* xlabel,
           const std::map<Eigen::Index, std::vector<std::pair<double, double>>>& series, const Axis& yaxis) {
  double xlo = INFINITY, xhi = -INFINITY;
  for (const auto& [p, pts] : series) {
    for (const auto& [x, y] : pts) {
      xlo = std::min(xlo, x);
      xhi = std::max(xhi, x);
    }
  }
  if (xhi <= xlo) {
    xlo -= 0.5;
    xhi += 0.5;
  }
  const Axis xaxis{xlo, xhi, false};
  const double left = x0 + kMarginL, right = x0 + kPanelW - kMarginR;
  const double top = kMarginT, bottom = kPanelH - kMarginB;

  svg += "<g>\n<text x=\"" + num(x0 + kPanelW / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + title +
         "</text>\n";
  svg += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(right - left) + "\" height=\"" +
         num(bottom - top) + "\" fill=\"none\" stroke=\"#000\"/>\n";

  for (int i = 0; i <= 4; ++i) {
    const double v = xlo + (xhi - xlo) * i / 4.0;
    const double x = xaxis.map(v, left, right);
    svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(bottom) + "\" x2=\"" + num(x) + "\" y2=\"" + num(bottom + 5) +
           "\" stroke=\"#000\"/>\n";
    svg += "<text x=\"" + num(x) + "\" y=\"" + num(bottom + 18) + "\" text-anchor=\"middle\" font-size=\"11\">" +
           label(v) + "</text>\n";
  }
  for (int e = static_cast<int>(std::ceil(yaxis.lo - 1e-9)); e <= static_cast<int>(std::floor(yaxis.hi + 1e-9)); ++e) {
    const double y = yaxis.map(std::pow(10.0, e), bottom, top);
    svg += "<line x1=\"" + num(left - 5) + "\" y1=\"" + num(y) + "\" x2=\"" + num(right) + "\" y2=\"" + num(y) +
           "\" stroke=\"#ccc\"/>\n";
    svg += "<text x=\"" + num(left - 8) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\" font-size=\"11\">1e" +
           std::to_string(e) + "</text>\n";
  }
  svg += "<text x=\"" + num((left + right) / 2) + "\" y=\"" + num(kPanelH - 12) +
         "\" text-anchor=\"middle\" font-size=\"12\">" + xlabel + "</text>\n";
  svg += "<text x=\"" + num(x0 + 16) + "\" y=\"" + num((top + bottom) / 2) +
         "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 " + num(x0 + 16) + " " +
         num((top + bottom) / 2) + ")\">Frobenius error</text>\n";

  std::size_t idx = 0;
  for (const auto& [p, pts] : series) {
    const char* colour = kPalette[idx % std::size(kPalette)];
    std::string points;
    for (const auto& [x, y] : pts) {
      if (!points.empty()) points += ' ';
      points += num(xaxis.map(x, left, right)) + ',' + num(yaxis.map(y, bottom, top));
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"1.5\" points=\"" + points +
           "\"/>\n";
    for (const auto& [x, y] : pts) {
      svg += "<circle cx=\"" + num(xaxis.map(x, left, right)) + "\" cy=\"" + num(yaxis.map(y, bottom, top)) +
             "\" r=\"3\" fill=\"" + colour + "\"/>\n";
    }
    const double ly = top + 14 + 16 * static_cast<double>(idx);
    svg += "<line x1=\"" + num(right - 80) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(right - 60) + "\" y2=\"" +
           num(ly) + "\" stroke=\"" + colour + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + num(right - 55) + "\" y=\"" + num(ly + 4) + "\" font-size=\"11\">p = " +
           std::to_string(p) + "</text>\n";
    ++idx;
  }
  svg += "</g>\n";
}

}  // namespace

std::string render_plot(const std::vector<TrialRecord>& records) {
  const auto curves = mean_curves(records);
  if (curves.empty()) throw std::invalid_argument("render_plot: no successful records");

  std::map<Eigen::Index, std::vector<std::pair<double, double>>> raw, rescaled;
  double ylo = INFINITY, yhi = -INFINITY;
  for (const auto& pt : curves) {
    const double err = std::max(pt.mean_error, 1e-300);
    raw[pt.p].emplace_back(static_cast<double>(pt.N), err);
    rescaled[pt.p].emplace_back(pt.rescaled_N, err);
    ylo = std::min(ylo, err);
    yhi = std::max(yhi, err);
  }
  Axis yaxis{std::floor(std::log10(ylo)), std::ceil(std::log10(yhi)), true};
  if (yaxis.hi <= yaxis.lo) yaxis.hi = yaxis.lo + 1;

  const std::string model = records.front().model;
  std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(2 * kPanelW) + "\" height=\"" +
         num(kPanelH) + "\" viewBox=\"0 0 " + num(2 * kPanelW) + " " + num(kPanelH) + "\">\n";
  svg += "<title>" + model + ": error versus sample size</title>\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";
  panel(svg, 0, "(a) error vs N", "sample size N", raw, yaxis);
  panel(svg, kPanelW, "(b) error vs N/(rp)", "rescaled sample size N/(rp)", rescaled, yaxis);
  svg += "</svg>\n";
  return svg;
}

void emit_plot(const std::vector<TrialRecord>& records, const std::string& path) {
  const std::string svg = render_plot(records);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << svg;
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace lowrank
