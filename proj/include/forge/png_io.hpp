#pragma once

// Raster file forms.
//
// Heightmap PNG: 16-bit grayscale, one sample per cell, value = round(height / 0.1 mm) clamped to
// 65535. Image row r holds grid row j = r, column c holds grid column i = c.
//
// Label PNG: 16-bit RGBA with the same layout.
//   R = round(gradient * 255)   (0..255)
//   G = class id                (0..65535; combined id for pose labels)
//   B = 0
//   A = round(height / 0.1 mm)
//
// Grid metadata lives in a JSON sidecar (see to_json(GridSpec) in dataset.hpp).

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <png.h>

#include "forge/render.hpp"

namespace forge::png {

inline constexpr double kHeightUnit = 1e-4; // meters per count

inline uint16_t encode_height(double h) {
    double v = std::round(h / kHeightUnit);
    return static_cast<uint16_t>(std::clamp(v, 0.0, 65535.0));
}
inline double decode_height(uint16_t v) { return v * kHeightUnit; }

namespace detail {

inline void write_cb(png_structp p, png_bytep data, png_size_t len) {
    auto* out = static_cast<std::vector<uint8_t>*>(png_get_io_ptr(p));
    out->insert(out->end(), data, data + len);
}
inline void flush_cb(png_structp) {}

struct ReadState {
    const std::vector<uint8_t>* buf;
    size_t pos;
};
inline void read_cb(png_structp p, png_bytep data, png_size_t len) {
    auto* st = static_cast<ReadState*>(png_get_io_ptr(p));
    if (st->pos + len > st->buf->size()) png_error(p, "truncated png");
    std::memcpy(data, st->buf->data() + st->pos, len);
    st->pos += len;
}

// rows of big-endian 16-bit samples
inline std::vector<uint8_t> encode16(int w, int h, int channels, const std::vector<uint16_t>& samples) {
    std::vector<uint8_t> out;
    png_structp p = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(p);
    if (setjmp(png_jmpbuf(p))) {
        png_destroy_write_struct(&p, &info);
        throw std::runtime_error("png encode failed");
    }
    png_set_write_fn(p, &out, write_cb, flush_cb);
    png_set_IHDR(p, info, w, h, 16, channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(p, info);
    std::vector<uint8_t> row(static_cast<size_t>(w) * channels * 2);
    for (int y = 0; y < h; ++y) {
        for (int k = 0; k < w * channels; ++k) {
            uint16_t s = samples[static_cast<size_t>(y) * w * channels + k];
            row[2 * k] = static_cast<uint8_t>(s >> 8);
            row[2 * k + 1] = static_cast<uint8_t>(s & 0xff);
        }
        png_write_row(p, row.data());
    }
    png_write_end(p, nullptr);
    png_destroy_write_struct(&p, &info);
    return out;
}

inline std::vector<uint16_t> decode16(const std::vector<uint8_t>& buf, int& w, int& h, int& channels) {
    png_structp p = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(p);
    if (setjmp(png_jmpbuf(p))) {
        png_destroy_read_struct(&p, &info, nullptr);
        throw std::runtime_error("png decode failed");
    }
    ReadState st{&buf, 0};
    png_set_read_fn(p, &st, read_cb);
    png_read_info(p, info);
    w = static_cast<int>(png_get_image_width(p, info));
    h = static_cast<int>(png_get_image_height(p, info));
    if (png_get_bit_depth(p, info) != 16) {
        png_destroy_read_struct(&p, &info, nullptr);
        throw std::runtime_error("png: expected 16-bit samples");
    }
    channels = png_get_channels(p, info);
    std::vector<uint16_t> samples(static_cast<size_t>(w) * h * channels);
    std::vector<uint8_t> row(png_get_rowbytes(p, info));
    for (int y = 0; y < h; ++y) {
        png_read_row(p, row.data(), nullptr);
        for (int k = 0; k < w * channels; ++k)
            samples[static_cast<size_t>(y) * w * channels + k] = static_cast<uint16_t>((row[2 * k] << 8) | row[2 * k + 1]);
    }
    png_destroy_read_struct(&p, &info, nullptr);
    return samples;
}

} // namespace detail

inline std::vector<uint8_t> encode_heightmap(const Heightmap& hm) {
    std::vector<uint16_t> s(static_cast<size_t>(hm.nx()) * hm.ny());
    for (size_t k = 0; k < s.size(); ++k) s[k] = encode_height(hm.height[k]);
    return detail::encode16(hm.nx(), hm.ny(), 1, s);
}

inline std::vector<uint8_t> encode_label(const Heightmap& hm) {
    std::vector<uint16_t> s(static_cast<size_t>(hm.nx()) * hm.ny() * 4);
    for (size_t k = 0; k < hm.height.size(); ++k) {
        bool on = hm.height[k] > 0.0f;
        s[4 * k + 0] = on ? static_cast<uint16_t>(std::lround(std::clamp<double>(hm.gradient[k], 0.0, 1.0) * 255.0)) : 0;
        s[4 * k + 1] = on ? static_cast<uint16_t>(std::clamp(hm.class_id[k], 0, 65535)) : 0;
        s[4 * k + 2] = 0;
        s[4 * k + 3] = encode_height(hm.height[k]);
    }
    return detail::encode16(hm.nx(), hm.ny(), 4, s);
}

/// Decodes a heightmap or label PNG onto `grid` (dimensions must match).
inline Heightmap decode(const std::vector<uint8_t>& buf, const GridSpec& grid) {
    int w = 0, h = 0, ch = 0;
    auto s = detail::decode16(buf, w, h, ch);
    if (w != grid.nx || h != grid.ny) throw std::runtime_error("png: grid size mismatch");
    Heightmap hm(grid);
    for (size_t k = 0; k < hm.height.size(); ++k) {
        if (ch == 1) {
            hm.height[k] = static_cast<float>(decode_height(s[k]));
        } else if (ch == 4) {
            hm.gradient[k] = static_cast<float>(s[4 * k] / 255.0);
            hm.class_id[k] = s[4 * k + 1];
            hm.height[k] = static_cast<float>(decode_height(s[4 * k + 3]));
        } else {
            throw std::runtime_error("png: unsupported channel count");
        }
    }
    return hm;
}

inline void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

} // namespace forge::png
