#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gazekit {

// Single-channel float image, row-major, values nominally in [0, 1].
struct Image {
    int height = 0;
    int width = 0;
    std::vector<float> data;

    Image() = default;
    Image(int h, int w, float fill = 0.0f)
        : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

    float& at(int r, int c) { return data[static_cast<size_t>(r) * width + c]; }
    float at(int r, int c) const { return data[static_cast<size_t>(r) * width + c]; }

    // Replicate-edge lookup for out-of-bounds coordinates.
    float at_clamped(int r, int c) const;

    bool empty() const { return data.empty(); }
};

// Multi-channel planar image: channel-major storage (c, then rows).
struct MultiImage {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> data;

    MultiImage() = default;
    MultiImage(int h, int w, int c)
        : height(h), width(w), channels(c),
          data(static_cast<size_t>(h) * w * c, 0.0f) {}

    float& at(int ch, int r, int c) {
        return data[(static_cast<size_t>(ch) * height + r) * width + c];
    }
    float at(int ch, int r, int c) const {
        return data[(static_cast<size_t>(ch) * height + r) * width + c];
    }
    Image channel(int ch) const;
    void set_channel(int ch, const Image& img);
};

// 8-bit grayscale PNG IO. Writing quantizes with round(clamp(v,0,1)*255);
// bytes are deterministic for fixed content.
void write_png_gray(const std::string& path, const Image& img);
Image read_png_gray(const std::string& path);

// 8-bit RGB PNG output for plots. Pixels interleaved r,g,b.
void write_png_rgb(const std::string& path, int height, int width,
                   const std::vector<uint8_t>& rgb);

Image bilinear_resize(const Image& src, int out_h, int out_w);

}  // namespace gazekit
