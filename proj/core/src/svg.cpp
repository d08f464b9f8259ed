#include "dislab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dislab/csv.hpp"

namespace dislab {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string rgb(int r, int g, int b) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

}  // namespace

SvgCanvas::SvgCanvas(double width, double height) : width_(width), height_(height) {}

void SvgCanvas::rect(double x, double y, double w, double h, const std::string& fill) {
    body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) +
             "\" height=\"" + num(h) + "\" fill=\"" + fill + "\"/>\n";
}

void SvgCanvas::circle(double cx, double cy, double r, const std::string& fill,
                       const std::string& stroke, double stroke_width) {
    body_ += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) +
             "\" fill=\"" + fill + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
             num(stroke_width) + "\"/>\n";
}

void SvgCanvas::text(double x, double y, const std::string& content, double size,
                     const std::string& anchor) {
    body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) +
             "\" font-family=\"sans-serif\" text-anchor=\"" + anchor + "\">" + content +
             "</text>\n";
}

void SvgCanvas::line(double x1, double y1, double x2, double y2, const std::string& stroke,
                     double width) {
    body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" +
             num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) + "\"/>\n";
}

std::string SvgCanvas::finish() const {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_) + "\" height=\"" +
           num(height_) + "\" viewBox=\"0 0 " + num(width_) + " " + num(height_) + "\">\n" +
           "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body_ + "</svg>\n";
}

void SvgCanvas::write(const std::string& path) const { write_text_file(path, finish()); }

std::string sequential_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    // dark violet -> teal -> yellow
    const double r = std::clamp(-0.3 + 1.8 * t * t, 0.0, 1.0);
    const double g = std::clamp(0.05 + 0.95 * t, 0.0, 1.0);
    const double b = std::clamp(0.45 + 0.5 * std::sin(M_PI * (0.55 - 0.55 * t)), 0.0, 1.0) *
                     (1.0 - 0.75 * t * t);
    return rgb(static_cast<int>(255 * r), static_cast<int>(255 * g), static_cast<int>(255 * b));
}

std::string categorical_color(std::size_t index) {
    static const char* palette[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44",
                                    "#66ccee", "#aa3377", "#bbbbbb", "#222255"};
    return palette[index % (sizeof(palette) / sizeof(palette[0]))];
}

namespace {

constexpr double kPanelSize = 360.0;
constexpr double kMargin = 40.0;

struct PanelTransform {
    double x0, y0, sx, sy, ymax;
    double px(double x) const { return x0 + sx * x; }
    double py(double y) const { return y0 + sy * (ymax - y); }
};

std::string svg_with_metadata(const SvgCanvas& svg, const std::string& metadata) {
    std::string out;
    if (!metadata.empty()) out += "<!-- " + metadata + " -->\n";
    out += svg.finish();
    return out;
}

}  // namespace

void write_heatmap_svg(const std::string& path, const HeatmapPanel& panel,
                       const std::vector<ScatterSeries>& overlays, const std::string& title,
                       const std::string& metadata) {
    SvgCanvas svg(kPanelSize + 2 * kMargin, kPanelSize + 2 * kMargin + 20 * (overlays.size() + 1));

    double vmin = INFINITY, vmax = -INFINITY;
    for (double v : panel.values) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    if (!(vmax > vmin)) vmax = vmin + 1.0;

    const PanelTransform tr{kMargin, kMargin,
                            kPanelSize / (panel.xmax - panel.xmin),
                            kPanelSize / (panel.ymax - panel.ymin), panel.ymax};
    const double cw = kPanelSize / static_cast<double>(panel.nx);
    const double ch = kPanelSize / static_cast<double>(panel.ny);
    for (std::size_t iy = 0; iy < panel.ny; ++iy)
        for (std::size_t ix = 0; ix < panel.nx; ++ix) {
            const double v = panel.values[iy * panel.nx + ix];
            const double t = (v - vmin) / (vmax - vmin);
            const double px = kMargin + cw * static_cast<double>(ix);
            const double py = kMargin + kPanelSize - ch * static_cast<double>(iy + 1);
            svg.rect(px, py, cw + 0.5, ch + 0.5, sequential_color(t));
        }

    double legend_y = kMargin + kPanelSize + 18.0;
    svg.text(kMargin, kMargin - 10.0, title, 13.0);
    for (const auto& series : overlays) {
        for (const auto& p : series.points)
            svg.circle(tr.px(p[0]), tr.py(p[1]), series.radius, series.color, "white", 0.5);
        svg.circle(kMargin + 6.0, legend_y - 4.0, 4.0, series.color);
        svg.text(kMargin + 16.0, legend_y, series.label, 11.0);
        legend_y += 18.0;
    }
    write_text_file(path, svg_with_metadata(svg, metadata));
}

void write_mode_maps_svg(const std::string& path, const std::vector<ModeMapPanel>& panels,
                         const std::vector<Vec>& centers, const std::string& metadata) {
    const double total_w = kMargin + panels.size() * (kPanelSize + kMargin);
    SvgCanvas svg(total_w, kPanelSize + 2 * kMargin);

    for (std::size_t p = 0; p < panels.size(); ++p) {
        const auto& panel = panels[p];
        const double ox = kMargin + static_cast<double>(p) * (kPanelSize + kMargin);
        const double cw = kPanelSize / static_cast<double>(panel.nx);
        const double ch = kPanelSize / static_cast<double>(panel.ny);
        for (std::size_t iy = 0; iy < panel.ny; ++iy)
            for (std::size_t ix = 0; ix < panel.nx; ++ix) {
                const int mode = panel.modes[iy * panel.nx + ix];
                const std::string fill = mode < 0 ? "#888888"
                                                  : categorical_color(static_cast<std::size_t>(mode));
                const double px = ox + cw * static_cast<double>(ix);
                const double py = kMargin + kPanelSize - ch * static_cast<double>(iy + 1);
                svg.rect(px, py, cw + 0.5, ch + 0.5, fill);
            }
        for (const auto& c : centers) {
            const double px = ox + (c[0] - panel.xmin) / (panel.xmax - panel.xmin) * kPanelSize;
            const double py =
                kMargin + (panel.ymax - c[1]) / (panel.ymax - panel.ymin) * kPanelSize;
            svg.circle(px, py, 4.0, "black", "white", 1.5);
        }
        svg.text(ox, kMargin - 10.0, panel.title, 13.0);
    }
    write_text_file(path, svg_with_metadata(svg, metadata));
}

}  // namespace dislab
