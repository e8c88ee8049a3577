#include "fray/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

namespace fray {

namespace {

inline uint8_t to_byte(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<uint8_t>(std::lround(c * 255.0));
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_png_impl(const std::string& path, int width, int height,
                    int bit_depth, int color_type,
                    const std::vector<png_bytep>& rows) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("save_png: cannot open " + path);
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("save_png: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("save_png: libpng error writing " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, width, height, bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16) png_set_swap(png);  // rows are little-endian u16
    png_write_image(png, const_cast<png_bytep*>(rows.data()));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

void save_png(const std::string& path, const ImageBuffer& image) {
    std::vector<uint8_t> data(static_cast<size_t>(image.width) * image.height * 3);
    for (size_t p = 0; p < image.rgb.size(); ++p) {
        data[3 * p + 0] = to_byte(image.rgb[p].x());
        data[3 * p + 1] = to_byte(image.rgb[p].y());
        data[3 * p + 2] = to_byte(image.rgb[p].z());
    }
    std::vector<png_bytep> rows(static_cast<size_t>(image.height));
    for (int j = 0; j < image.height; ++j)
        rows[static_cast<size_t>(j)] = data.data() + static_cast<size_t>(j) * image.width * 3;
    write_png_impl(path, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, rows);
}

void save_ppm(const std::string& path, const ImageBuffer& image) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("save_ppm: cannot open " + path);
    std::fprintf(fp.get(), "P6\n%d %d\n255\n", image.width, image.height);
    std::vector<uint8_t> row(static_cast<size_t>(image.width) * 3);
    for (int j = 0; j < image.height; ++j) {
        for (int i = 0; i < image.width; ++i) {
            const Vec3& c = image.at(i, j);
            row[3 * static_cast<size_t>(i) + 0] = to_byte(c.x());
            row[3 * static_cast<size_t>(i) + 1] = to_byte(c.y());
            row[3 * static_cast<size_t>(i) + 2] = to_byte(c.z());
        }
        std::fwrite(row.data(), 1, row.size(), fp.get());
    }
}

void save_depth_png(const std::string& path, const ImageBuffer& image) {
    if (image.depth.empty())
        throw std::invalid_argument("save_depth_png: image has no depth channel");
    std::vector<uint16_t> data(image.depth.size());
    for (size_t p = 0; p < image.depth.size(); ++p) {
        const double scaled = std::clamp(image.depth[p] * kDepthScale, 0.0, 65535.0);
        data[p] = static_cast<uint16_t>(std::lround(scaled));
    }
    std::vector<png_bytep> rows(static_cast<size_t>(image.height));
    for (int j = 0; j < image.height; ++j)
        rows[static_cast<size_t>(j)] = reinterpret_cast<png_bytep>(
            data.data() + static_cast<size_t>(j) * image.width);
    write_png_impl(path, image.width, image.height, 16, PNG_COLOR_TYPE_GRAY, rows);
}

ImageBuffer load_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("load_png: cannot open " + path);
    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("load_png: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("load_png: libpng error reading " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    // Normalize every input variant to 8-bit RGB.
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));
    std::vector<uint8_t> data(static_cast<size_t>(width) * height * 3);
    std::vector<png_bytep> rows(static_cast<size_t>(height));
    for (int j = 0; j < height; ++j)
        rows[static_cast<size_t>(j)] = data.data() + static_cast<size_t>(j) * width * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    ImageBuffer img(width, height);
    for (size_t p = 0; p < img.rgb.size(); ++p)
        img.rgb[p] = Vec3(data[3 * p] / 255.0, data[3 * p + 1] / 255.0,
                          data[3 * p + 2] / 255.0);
    return img;
}

}  // namespace fray
