#include "gazekit/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace gazekit {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

[[noreturn]] void fail(const std::string& path, const char* what) {
    throw std::runtime_error(std::string(what) + ": " + path);
}

}  // namespace

float Image::at_clamped(int r, int c) const {
    r = std::clamp(r, 0, height - 1);
    c = std::clamp(c, 0, width - 1);
    return at(r, c);
}

Image MultiImage::channel(int ch) const {
    Image out(height, width);
    const float* src = data.data() + static_cast<size_t>(ch) * height * width;
    std::copy(src, src + static_cast<size_t>(height) * width, out.data.begin());
    return out;
}

void MultiImage::set_channel(int ch, const Image& img) {
    if (img.height != height || img.width != width) {
        throw std::invalid_argument("MultiImage::set_channel: shape mismatch");
    }
    std::copy(img.data.begin(), img.data.end(),
              data.begin() + static_cast<size_t>(ch) * height * width);
}

void write_png_gray(const std::string& path, const Image& img) {
    if (img.empty()) fail(path, "write_png_gray: empty image");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) fail(path, "write_png_gray: cannot open");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        fail(path, "write_png_gray: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(path, "write_png_gray: libpng error");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<uint8_t> row(img.width);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            const float v = std::clamp(img.at(r, c), 0.0f, 1.0f);
            row[c] = static_cast<uint8_t>(std::lround(v * 255.0f));
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image read_png_gray(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) fail(path, "read_png_gray: cannot open");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "read_png_gray: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "read_png_gray: libpng error");
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    // Normalize any input to 8-bit single-channel.
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE) {
        png_set_palette_to_rgb(png);
    }
    if (png_get_color_type(png, info) & PNG_COLOR_MASK_COLOR) {
        png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    }
    if (png_get_bit_depth(png, info) < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
    }
    png_read_update_info(png, info);

    const int h = static_cast<int>(png_get_image_height(png, info));
    const int w = static_cast<int>(png_get_image_width(png, info));
    Image img(h, w);
    std::vector<uint8_t> row(png_get_rowbytes(png, info));
    for (int r = 0; r < h; ++r) {
        png_read_row(png, row.data(), nullptr);
        for (int c = 0; c < w; ++c) {
            img.at(r, c) = static_cast<float>(row[c]) / 255.0f;
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png_rgb(const std::string& path, int height, int width,
                   const std::vector<uint8_t>& rgb) {
    if (rgb.size() != static_cast<size_t>(height) * width * 3) {
        fail(path, "write_png_rgb: buffer size mismatch");
    }
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) fail(path, "write_png_rgb: cannot open");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        fail(path, "write_png_rgb: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(path, "write_png_rgb: libpng error");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int r = 0; r < height; ++r) {
        png_write_row(png, const_cast<uint8_t*>(rgb.data() + static_cast<size_t>(r) * width * 3));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image bilinear_resize(const Image& src, int out_h, int out_w) {
    if (src.empty() || out_h < 1 || out_w < 1) {
        throw std::invalid_argument("bilinear_resize: bad arguments");
    }
    Image out(out_h, out_w);
    const double sy = static_cast<double>(src.height) / out_h;
    const double sx = static_cast<double>(src.width) / out_w;
    for (int r = 0; r < out_h; ++r) {
        // Pixel-center alignment.
        const double fy = (r + 0.5) * sy - 0.5;
        const int y0 = static_cast<int>(std::floor(fy));
        const double wy = fy - y0;
        for (int c = 0; c < out_w; ++c) {
            const double fx = (c + 0.5) * sx - 0.5;
            const int x0 = static_cast<int>(std::floor(fx));
            const double wx = fx - x0;
            const double v =
                (1 - wy) * ((1 - wx) * src.at_clamped(y0, x0) + wx * src.at_clamped(y0, x0 + 1)) +
                wy * ((1 - wx) * src.at_clamped(y0 + 1, x0) + wx * src.at_clamped(y0 + 1, x0 + 1));
            out.at(r, c) = static_cast<float>(v);
        }
    }
    return out;
}

}  // namespace gazekit
