#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace dropal::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> spread;  // optional +/- band around y
  bool points = false;         // scatter instead of a polyline
  bool step = false;           // right-continuous staircase
};

struct GuideLine {
  bool vertical = false;
  double at = 0.0;
  std::string color = "#000000";
  bool dashed = true;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  std::vector<Series> series;
  std::vector<GuideLine> guides;
};

std::string render(const Plot& plot);
void write(const std::filesystem::path& path, const Plot& plot);

}  // namespace dropal::svg
