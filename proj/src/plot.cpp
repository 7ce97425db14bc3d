#include "gazekit/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gazekit/image.hpp"

namespace gazekit {

namespace {

// 3x5 glyphs, row-major bits, MSB = leftmost column.
struct Glyph {
    char ch;
    uint8_t rows[5];
};

constexpr Glyph kGlyphs[] = {
    {'0', {0b111, 0b101, 0b101, 0b101, 0b111}},
    {'1', {0b010, 0b110, 0b010, 0b010, 0b111}},
    {'2', {0b111, 0b001, 0b111, 0b100, 0b111}},
    {'3', {0b111, 0b001, 0b111, 0b001, 0b111}},
    {'4', {0b101, 0b101, 0b111, 0b001, 0b001}},
    {'5', {0b111, 0b100, 0b111, 0b001, 0b111}},
    {'6', {0b111, 0b100, 0b111, 0b101, 0b111}},
    {'7', {0b111, 0b001, 0b010, 0b010, 0b010}},
    {'8', {0b111, 0b101, 0b111, 0b101, 0b111}},
    {'9', {0b111, 0b101, 0b111, 0b001, 0b111}},
    {'-', {0b000, 0b000, 0b111, 0b000, 0b000}},
    {'.', {0b000, 0b000, 0b000, 0b000, 0b010}},
    {'e', {0b000, 0b111, 0b110, 0b100, 0b111}},
};

const Glyph* find_glyph(char c) {
    for (const auto& g : kGlyphs) {
        if (g.ch == c) return &g;
    }
    return nullptr;
}

}  // namespace

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

Canvas::Canvas(int height, int width, Rgb background) : h_(height), w_(width) {
    px_.resize(static_cast<size_t>(height) * width * 3);
    for (int i = 0; i < height * width; ++i) {
        px_[3 * i] = background.r;
        px_[3 * i + 1] = background.g;
        px_[3 * i + 2] = background.b;
    }
}

void Canvas::set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
    const size_t i = (static_cast<size_t>(y) * w_ + x) * 3;
    px_[i] = c.r;
    px_[i + 1] = c.g;
    px_[i + 2] = c.b;
}

void Canvas::line(double x0, double y0, double x1, double y1, Rgb c) {
    const int steps = static_cast<int>(std::max(std::abs(x1 - x0), std::abs(y1 - y0))) + 1;
    for (int i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) / steps;
        set(static_cast<int>(std::lround(x0 + t * (x1 - x0))),
            static_cast<int>(std::lround(y0 + t * (y1 - y0))), c);
    }
}

void Canvas::fill_rect(int x0, int y0, int x1, int y1, Rgb c) {
    for (int y = std::max(0, y0); y <= std::min(h_ - 1, y1); ++y) {
        for (int x = std::max(0, x0); x <= std::min(w_ - 1, x1); ++x) set(x, y, c);
    }
}

void Canvas::dot(double x, double y, int radius, Rgb c) {
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            if (dx * dx + dy * dy <= radius * radius) {
                set(static_cast<int>(std::lround(x)) + dx,
                    static_cast<int>(std::lround(y)) + dy, c);
            }
        }
    }
}

void Canvas::text(int x, int y, const std::string& s, Rgb c, int scale) {
    int cx = x;
    for (const char ch : s) {
        const Glyph* g = find_glyph(ch);
        if (g) {
            for (int r = 0; r < 5; ++r) {
                for (int col = 0; col < 3; ++col) {
                    if (g->rows[r] & (0b100 >> col)) {
                        fill_rect(cx + col * scale, y + r * scale, cx + (col + 1) * scale - 1,
                                  y + (r + 1) * scale - 1, c);
                    }
                }
            }
        }
        cx += 4 * scale;
    }
}

void Canvas::save(const std::string& path) const { write_png_rgb(path, h_, w_, px_); }

AxesPlot::AxesPlot(int height, int width, double xmin, double xmax, double ymin, double ymax)
    : canvas_(height, width), xmin_(xmin), xmax_(xmax), ymin_(ymin), ymax_(ymax) {
    if (xmax_ <= xmin_) xmax_ = xmin_ + 1.0;
    if (ymax_ <= ymin_) ymax_ = ymin_ + 1.0;
    draw_axes();
}

double AxesPlot::px(double x) const {
    return margin_ + (x - xmin_) / (xmax_ - xmin_) * (canvas_.width() - 2 * margin_);
}

double AxesPlot::py(double y) const {
    return canvas_.height() - margin_ -
           (y - ymin_) / (ymax_ - ymin_) * (canvas_.height() - 2 * margin_);
}

void AxesPlot::draw_axes() {
    const Rgb axis{60, 60, 60};
    canvas_.line(margin_, canvas_.height() - margin_, canvas_.width() - margin_,
                 canvas_.height() - margin_, axis);
    canvas_.line(margin_, margin_, margin_, canvas_.height() - margin_, axis);
    for (int i = 0; i <= 4; ++i) {
        const double xv = xmin_ + (xmax_ - xmin_) * i / 4.0;
        const double yv = ymin_ + (ymax_ - ymin_) * i / 4.0;
        canvas_.line(px(xv), canvas_.height() - margin_, px(xv),
                     canvas_.height() - margin_ + 3, axis);
        canvas_.line(margin_ - 3, py(yv), margin_, py(yv), axis);
        canvas_.text(static_cast<int>(px(xv)) - 6, canvas_.height() - margin_ + 6,
                     format_number(xv), axis);
        canvas_.text(2, static_cast<int>(py(yv)) - 2, format_number(yv), axis);
    }
}

void AxesPlot::polyline(const std::vector<double>& xs, const std::vector<double>& ys, Rgb c) {
    for (size_t i = 1; i < xs.size(); ++i) {
        canvas_.line(px(xs[i - 1]), py(ys[i - 1]), px(xs[i]), py(ys[i]), c);
    }
}

void AxesPlot::scatter(const std::vector<double>& xs, const std::vector<double>& ys, Rgb c,
                       int radius) {
    for (size_t i = 0; i < xs.size(); ++i) {
        canvas_.dot(px(xs[i]), py(ys[i]), radius, c);
    }
}

void AxesPlot::save(const std::string& path) { canvas_.save(path); }

void save_heatmap(const std::string& path, const std::vector<double>& values, int k) {
    const int cell = 48, margin = 20;
    Canvas canvas(k * cell + 2 * margin, k * cell + 2 * margin);
    for (int r = 0; r < k; ++r) {
        for (int c = 0; c < k; ++c) {
            const double v = std::clamp(values[static_cast<size_t>(r) * k + c], 0.0, 1.0);
            // White → blue ramp.
            const Rgb col{static_cast<uint8_t>(255 - 200 * v),
                          static_cast<uint8_t>(255 - 150 * v), 255};
            canvas.fill_rect(margin + c * cell, margin + r * cell, margin + (c + 1) * cell - 1,
                             margin + (r + 1) * cell - 1, col);
            canvas.text(margin + c * cell + 6, margin + r * cell + 6, format_number(v),
                        {30, 30, 30});
        }
    }
    const Rgb axis{60, 60, 60};
    for (int i = 0; i <= k; ++i) {
        canvas.line(margin, margin + i * cell, margin + k * cell, margin + i * cell, axis);
        canvas.line(margin + i * cell, margin, margin + i * cell, margin + k * cell, axis);
    }
    canvas.save(path);
}

}  // namespace gazekit
