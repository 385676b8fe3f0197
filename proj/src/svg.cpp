#include "dropal/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "dropal/error.hpp"

namespace dropal::svg {
namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 180.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      const double pad = std::max(std::abs(lo) * 0.05, 0.5);
      lo -= pad;
      hi += pad;
    }
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

}  // namespace

std::string render(const Plot& plot) {
  auto tx = [&](double x) { return plot.log_x ? std::log10(std::max(x, 1e-300)) : x; };

  Range xr;
  Range yr;
  for (const auto& s : plot.series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      xr.add(tx(s.x[i]));
      const double sp = i < s.spread.size() ? s.spread[i] : 0.0;
      yr.add(s.y[i] - sp);
      yr.add(s.y[i] + sp);
    }
  }
  for (const auto& g : plot.guides) (g.vertical ? xr : yr).add(g.vertical ? tx(g.at) : g.at);
  xr.finish();
  yr.finish();

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (tx(x) - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - yr.lo) / (yr.hi - yr.lo)) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
     << escape(plot.title) << "</text>\n";
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"#444\"/>\n";

  for (int i = 0; i <= 5; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 5.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / 5.0;
    const double sx = kLeft + pw * i / 5.0;
    const double sy = kTop + ph * (1.0 - i / 5.0);
    os << "<text x=\"" << sx << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\">"
       << fmt(plot.log_x ? std::pow(10.0, fx) : fx) << "</text>\n";
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << sy + 4 << "\" text-anchor=\"end\">" << fmt(fy)
       << "</text>\n";
  }
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12
     << "\" text-anchor=\"middle\">" << escape(plot.x_label) << "</text>\n";
  os << "<text transform=\"translate(16," << kTop + ph / 2
     << ") rotate(-90)\" text-anchor=\"middle\">" << escape(plot.y_label) << "</text>\n";

  for (const auto& g : plot.guides) {
    const std::string dash = g.dashed ? " stroke-dasharray=\"6,4\"" : "";
    if (g.vertical) {
      os << "<line x1=\"" << px(g.at) << "\" x2=\"" << px(g.at) << "\" y1=\"" << kTop
         << "\" y2=\"" << kTop + ph << "\" stroke=\"" << g.color << "\"" << dash << "/>\n";
    } else {
      os << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << py(g.at)
         << "\" y2=\"" << py(g.at) << "\" stroke=\"" << g.color << "\"" << dash << "/>\n";
    }
  }

  std::size_t color_index = 0;
  for (const auto& s : plot.series) {
    const char* color = kPalette[color_index++ % std::size(kPalette)];
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (n == 0) continue;
    if (s.spread.size() >= n) {
      os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < n; ++i) os << px(s.x[i]) << ',' << py(s.y[i] + s.spread[i]) << ' ';
      for (std::size_t i = n; i-- > 0;) os << px(s.x[i]) << ',' << py(s.y[i] - s.spread[i]) << ' ';
      os << "\"/>\n";
    }
    if (s.points) {
      for (std::size_t i = 0; i < n; ++i) {
        os << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"1.8\" fill=\""
           << color << "\" fill-opacity=\"0.6\"/>\n";
      }
    } else {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
      for (std::size_t i = 0; i < n; ++i) {
        if (s.step && i > 0) os << px(s.x[i]) << ',' << py(s.y[i - 1]) << ' ';
        os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
      }
      os << "\"/>\n";
    }
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(color_index - 1);
    os << "<rect x=\"" << kLeft + pw + 12 << "\" y=\"" << ly - 9 << "\" width=\"12\" height=\"12\" fill=\""
       << color << "\"/>\n";
    os << "<text x=\"" << kLeft + pw + 30 << "\" y=\"" << ly + 1 << "\">" << escape(s.label)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write(const std::filesystem::path& path, const Plot& plot) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << render(plot);
}

}  // namespace dropal::svg
