#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dislab/linalg.hpp"

namespace dislab {

// Minimal self-contained SVG writer for heatmaps, scatter overlays and
// categorical mode maps. Data coordinates map onto a fixed-size panel; no
// external renderer or font dependency beyond generic sans-serif.
class SvgCanvas {
  public:
    SvgCanvas(double width, double height);

    void rect(double x, double y, double w, double h, const std::string& fill);
    void circle(double cx, double cy, double r, const std::string& fill,
                const std::string& stroke = "none", double stroke_width = 0.0);
    void text(double x, double y, const std::string& content, double size = 12.0,
              const std::string& anchor = "start");
    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width = 1.0);

    std::string finish() const;
    void write(const std::string& path) const;

  private:
    double width_;
    double height_;
    std::string body_;
};

// viridis-like sequential color for t in [0, 1]
std::string sequential_color(double t);
// distinct categorical palette
std::string categorical_color(std::size_t index);

struct HeatmapPanel {
    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    std::size_t nx = 0, ny = 0;
    std::vector<double> values;  // row-major, iy * nx + ix
};

struct ScatterSeries {
    std::vector<Vec> points;
    std::string color;
    double radius = 2.5;
    std::string label;
};

// One heatmap panel with scatter overlays and a caption. The metadata string
// is embedded as a leading XML comment (config hash, seed).
void write_heatmap_svg(const std::string& path, const HeatmapPanel& panel,
                       const std::vector<ScatterSeries>& overlays, const std::string& title,
                       const std::string& metadata = "");

struct ModeMapPanel {
    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    std::size_t nx = 0, ny = 0;
    std::vector<int> modes;  // -1 renders gray
    std::string title;
};

// Side-by-side categorical panels (one per noise level), component centers
// overlaid.
void write_mode_maps_svg(const std::string& path, const std::vector<ModeMapPanel>& panels,
                         const std::vector<Vec>& centers, const std::string& metadata = "");

}  // namespace dislab
