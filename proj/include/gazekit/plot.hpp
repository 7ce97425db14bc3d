#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gazekit {

struct Rgb {
    uint8_t r, g, b;
};

// Minimal raster canvas for the report plots.
class Canvas {
public:
    Canvas(int height, int width, Rgb background = {255, 255, 255});

    int height() const { return h_; }
    int width() const { return w_; }

    void set(int x, int y, Rgb c);
    void line(double x0, double y0, double x1, double y1, Rgb c);
    void fill_rect(int x0, int y0, int x1, int y1, Rgb c);
    void dot(double x, double y, int radius, Rgb c);
    // 3x5 bitmap glyphs: digits, '-', '.', 'e'. scale multiplies the glyph size.
    void text(int x, int y, const std::string& s, Rgb c, int scale = 1);

    void save(const std::string& path) const;

private:
    int h_, w_;
    std::vector<uint8_t> px_;
};

// Axis-fitted line/scatter plot helper.
class AxesPlot {
public:
    AxesPlot(int height, int width, double xmin, double xmax, double ymin, double ymax);

    void polyline(const std::vector<double>& xs, const std::vector<double>& ys, Rgb c);
    void scatter(const std::vector<double>& xs, const std::vector<double>& ys, Rgb c,
                 int radius = 1);
    void save(const std::string& path);

    Canvas& canvas() { return canvas_; }

private:
    double px(double x) const;
    double py(double y) const;
    void draw_axes();

    Canvas canvas_;
    double xmin_, xmax_, ymin_, ymax_;
    int margin_ = 32;
};

// k x k heatmap with per-cell value labels; values expected in [0, 1].
void save_heatmap(const std::string& path, const std::vector<double>& values, int k);

std::string format_number(double v);

}  // namespace gazekit
