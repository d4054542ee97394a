#pragma once

// PFM and PNG readers/writers.
//
// PFM files are written little-endian ("-1" scale line), bottom row first,
// as the format requires. PNG goes through the libpng simplified API; the
// transfer function of 8/16-bit samples is chosen by the caller.

#include <png.h>

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "brdfremap/image.hpp"

namespace brdfremap {

enum class Transfer { Linear, Srgb };

inline double srgb_encode(double v) {
    v = std::clamp(v, 0.0, 1.0);
    return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

inline double srgb_decode(double v) {
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

// Planar float data with 1 or 3 channels, top row first.
struct FloatRaster {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<float> data;
};

namespace detail {

inline std::uint32_t byteswap32(std::uint32_t v) {
    return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

inline std::string pfm_bytes(const FloatRaster& r) {
    std::ostringstream os(std::ios::binary);
    os << (r.channels == 3 ? "PF" : "Pf") << '\n' << r.width << ' ' << r.height << '\n' << "-1.0" << '\n';
    const std::size_t row = static_cast<std::size_t>(r.width) * r.channels;
    for (int y = r.height - 1; y >= 0; --y) {
        for (std::size_t i = 0; i < row; ++i) {
            std::uint32_t bits = std::bit_cast<std::uint32_t>(r.data[y * row + i]);
            if constexpr (std::endian::native == std::endian::big) bits = byteswap32(bits);
            char b[4];
            std::memcpy(b, &bits, 4);
            os.write(b, 4);
        }
    }
    return os.str();
}

}  // namespace detail

inline void write_pfm(const std::string& path, const FloatRaster& r) {
    if (r.channels != 1 && r.channels != 3) throw IoError("PFM supports 1 or 3 channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    const auto bytes = detail::pfm_bytes(r);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path + "'");
}

inline FloatRaster read_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string magic;
    FloatRaster r;
    double scale = 0;
    in >> magic >> r.width >> r.height >> scale;
    if (!in || (magic != "PF" && magic != "Pf")) throw IoError("'" + path + "' is not a PFM file");
    if (r.width <= 0 || r.height <= 0 || scale == 0.0) throw IoError("'" + path + "': invalid PFM header");
    in.get();  // single whitespace before the raster
    r.channels = magic == "PF" ? 3 : 1;
    const std::size_t row = static_cast<std::size_t>(r.width) * r.channels;
    r.data.resize(row * r.height);
    const bool file_little = scale < 0;
    const bool swap = file_little != (std::endian::native == std::endian::little);
    for (int y = r.height - 1; y >= 0; --y) {
        for (std::size_t i = 0; i < row; ++i) {
            char b[4];
            if (!in.read(b, 4)) throw IoError("'" + path + "': truncated PFM raster");
            std::uint32_t bits;
            std::memcpy(&bits, b, 4);
            if (swap) bits = detail::byteswap32(bits);
            r.data[y * row + i] = std::bit_cast<float>(bits);
        }
    }
    return r;
}

inline FloatRaster to_raster(const RenderedImage& img) {
    FloatRaster r{img.width, img.height, 3, std::vector<float>(img.pixels.size())};
    for (std::size_t i = 0; i < img.pixels.size(); ++i) r.data[i] = static_cast<float>(img.pixels[i]);
    return r;
}

inline FloatRaster to_raster(const ScalarImage& img) {
    FloatRaster r{img.width, img.height, 1, std::vector<float>(img.data.size())};
    for (std::size_t i = 0; i < img.data.size(); ++i) r.data[i] = static_cast<float>(img.data[i]);
    return r;
}

inline void write_pfm(const std::string& path, const RenderedImage& img) { write_pfm(path, to_raster(img)); }
inline void write_pfm(const std::string& path, const ScalarImage& img) { write_pfm(path, to_raster(img)); }

inline RenderedImage read_pfm_rgb(const std::string& path) {
    const auto r = read_pfm(path);
    auto img = RenderedImage::zeros(r.width, r.height);
    for (std::size_t i = 0; i < img.pixel_count(); ++i)
        for (int c = 0; c < 3; ++c) img.pixels[3 * i + c] = r.data[i * r.channels + (r.channels == 3 ? c : 0)];
    return img;
}

// --- PNG ---------------------------------------------------------------------

struct PngData {
    int width = 0;
    int height = 0;
    int channels = 3;  // 1 or 3
    int bit_depth = 8;  // 8 or 16
    std::vector<std::uint16_t> samples;  // raw code values, interleaved

    double max_code() const { return bit_depth == 16 ? 65535.0 : 255.0; }
};

inline void write_png(const std::string& path, const PngData& d) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(d.width);
    image.height = static_cast<png_uint_32>(d.height);
    image.format = (d.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY) |
                   (d.bit_depth == 16 ? PNG_FORMAT_FLAG_LINEAR : 0u);
    int ok = 0;
    if (d.bit_depth == 16) {
        ok = png_image_write_to_file(&image, path.c_str(), 0, d.samples.data(), 0, nullptr);
    } else {
        std::vector<std::uint8_t> bytes(d.samples.begin(), d.samples.end());
        ok = png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr);
    }
    if (!ok) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw IoError("cannot write PNG '" + path + "': " + msg);
    }
}

inline PngData read_png(const std::string& path) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw IoError("cannot read PNG '" + path + "': " + std::string(image.message));
    PngData d;
    d.width = static_cast<int>(image.width);
    d.height = static_cast<int>(image.height);
    d.channels = (image.format & PNG_FORMAT_FLAG_COLOR) ? 3 : 1;
    d.bit_depth = (image.format & PNG_FORMAT_FLAG_LINEAR) ? 16 : 8;
    image.format = (d.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY) |
                   (d.bit_depth == 16 ? PNG_FORMAT_FLAG_LINEAR : 0u);
    const std::size_t n = PNG_IMAGE_SIZE(image);
    int ok = 0;
    if (d.bit_depth == 16) {
        d.samples.resize(n / 2);
        ok = png_image_finish_read(&image, nullptr, d.samples.data(), 0, nullptr);
    } else {
        std::vector<std::uint8_t> bytes(n);
        ok = png_image_finish_read(&image, nullptr, bytes.data(), 0, nullptr);
        d.samples.assign(bytes.begin(), bytes.end());
    }
    if (!ok) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw IoError("cannot decode PNG '" + path + "': " + msg);
    }
    return d;
}

// LDR preview: clamp to [0, 1] then sRGB-encode to 8 bits.
inline void write_png_preview(const std::string& path, const RenderedImage& img) {
    PngData d{img.width, img.height, 3, 8, std::vector<std::uint16_t>(img.pixels.size())};
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        d.samples[i] = static_cast<std::uint16_t>(std::lround(255.0 * srgb_encode(img.pixels[i])));
    write_png(path, d);
}

// False-colour rendering of an SSIM map: 1 maps to dark blue, values at or
// below 0 map to red, passing through green and yellow.
inline void write_ssim_png(const std::string& path, const ScalarImage& ssim_map) {
    PngData d{ssim_map.width, ssim_map.height, 3, 8, std::vector<std::uint16_t>(ssim_map.data.size() * 3)};
    for (std::size_t i = 0; i < ssim_map.data.size(); ++i) {
        const double t = std::clamp(1.0 - ssim_map.data[i], 0.0, 1.0);
        const double r = std::clamp(2.0 * t, 0.0, 1.0);
        const double g = t < 0.5 ? 2.0 * t : 2.0 - 2.0 * t;
        const double b = std::clamp(0.5 - t, 0.0, 0.5);
        d.samples[3 * i] = static_cast<std::uint16_t>(std::lround(255.0 * r));
        d.samples[3 * i + 1] = static_cast<std::uint16_t>(std::lround(255.0 * g));
        d.samples[3 * i + 2] = static_cast<std::uint16_t>(std::lround(255.0 * b));
    }
    write_png(path, d);
}

}  // namespace brdfremap
