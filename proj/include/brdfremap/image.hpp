#pragma once

#include <vector>

#include "brdfremap/core.hpp"

namespace brdfremap {

enum class RenderPass { Full, DiffuseOnly, SpecularOnly };

inline const char* pass_name(RenderPass p) {
    switch (p) {
        case RenderPass::Full: return "full";
        case RenderPass::DiffuseOnly: return "diffuse";
        case RenderPass::SpecularOnly: return "specular";
    }
    return "?";
}

// Linear HDR RGB raster, row-major, top row first.
struct RenderedImage {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;  // 3 * width * height
    RenderPass pass = RenderPass::Full;

    static RenderedImage zeros(int w, int h, RenderPass pass = RenderPass::Full) {
        return {w, h, std::vector<double>(static_cast<std::size_t>(3) * w * h, 0.0), pass};
    }

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    std::size_t offset(int x, int y) const { return 3 * (static_cast<std::size_t>(y) * width + x); }

    Rgb at(int x, int y) const {
        const auto o = offset(x, y);
        return {pixels[o], pixels[o + 1], pixels[o + 2]};
    }
    void set(int x, int y, const Rgb& c) {
        const auto o = offset(x, y);
        pixels[o] = c.r;
        pixels[o + 1] = c.g;
        pixels[o + 2] = c.b;
    }
    bool same_shape(const RenderedImage& o) const { return width == o.width && height == o.height; }
};

// Single-channel raster (SSIM maps, roughness maps).
struct ScalarImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    static ScalarImage zeros(int w, int h) { return {w, h, std::vector<double>(static_cast<std::size_t>(w) * h, 0.0)}; }
    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

inline ScalarImage luminance_image(const RenderedImage& img) {
    auto out = ScalarImage::zeros(img.width, img.height);
    for (std::size_t i = 0; i < img.pixel_count(); ++i)
        out.data[i] = luminance({img.pixels[3 * i], img.pixels[3 * i + 1], img.pixels[3 * i + 2]});
    return out;
}

}  // namespace brdfremap
