#pragma once

// Image-space appearance comparison: the L2 objective used by the
// optimizer and windowed SSIM used for reporting.

#include <array>
#include <optional>

#include "brdfremap/image.hpp"

namespace brdfremap {

namespace detail {

inline void require_same_shape(const RenderedImage& a, const RenderedImage& b, const char* what) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(what) + ": image sizes differ (" + std::to_string(a.width) + "x" +
                             std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                             std::to_string(b.height) + ")");
}

inline double rms_difference(const RenderedImage& a, const RenderedImage& b) {
    if (a.pixels.empty()) return 0.0;
    double sum = 0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = a.pixels[i] - b.pixels[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(a.pixels.size()));
}

}  // namespace detail

// sqrt of the mean squared per-channel difference, on linear values.
inline double l2_distance(const RenderedImage& a, const RenderedImage& b) {
    detail::require_same_shape(a, b, "l2_distance");
    if (a.pass != b.pass) throw DimensionError("l2_distance: render passes differ");
    return detail::rms_difference(a, b);
}

// Flattened per-channel differences a - b; length 3 * w * h.
inline std::vector<double> residual_vector(const RenderedImage& a, const RenderedImage& b) {
    detail::require_same_shape(a, b, "residual_vector");
    std::vector<double> r(a.pixels.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = a.pixels[i] - b.pixels[i];
    return r;
}

struct SsimSettings {
    double sigma = 1.5;
    int radius = 5;  // 11x11 window
    double k1 = 0.01;
    double k2 = 0.03;
};

struct DissimilarityReport {
    double l2 = 0;
    double mean_ssim = 1;
    ScalarImage ssim_map;
    double mean_dissimilarity = 0;  // 1 - mean_ssim
};

namespace detail {

// Mirror index with the edge sample repeated: d c b a | a b c d.
inline int reflect_index(int i, int n) {
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

inline ScalarImage gaussian_blur(const ScalarImage& in, const std::vector<double>& w) {
    const int r = static_cast<int>(w.size() / 2);
    auto tmp = ScalarImage::zeros(in.width, in.height);
    auto out = ScalarImage::zeros(in.width, in.height);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) {
            double s = 0;
            for (int k = -r; k <= r; ++k) s += w[k + r] * in.at(reflect_index(x + k, in.width), y);
            tmp.at(x, y) = s;
        }
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) {
            double s = 0;
            for (int k = -r; k <= r; ++k) s += w[k + r] * tmp.at(x, reflect_index(y + k, in.height));
            out.at(x, y) = s;
        }
    return out;
}

inline std::vector<double> gaussian_weights(double sigma, int radius) {
    std::vector<double> w(2 * radius + 1);
    double sum = 0;
    for (int k = -radius; k <= radius; ++k) sum += w[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
    for (auto& v : w) v /= sum;
    return w;
}

}  // namespace detail

// Windowed SSIM on Rec.709 luminance of linear HDR values. The dynamic
// range L defaults to the maximum luminance of `a` (1 if `a` is black).
inline DissimilarityReport ssim(const RenderedImage& a, const RenderedImage& b,
                                std::optional<double> dynamic_range = std::nullopt,
                                const SsimSettings& settings = {}) {
    detail::require_same_shape(a, b, "ssim");
    const ScalarImage la = luminance_image(a);
    const ScalarImage lb = luminance_image(b);

    double range = 0;
    if (dynamic_range) {
        range = *dynamic_range;
    } else {
        for (double v : la.data) range = std::max(range, v);
    }
    if (!(range > 0)) range = 1.0;
    const double c1 = (settings.k1 * range) * (settings.k1 * range);
    const double c2 = (settings.k2 * range) * (settings.k2 * range);

    const auto w = detail::gaussian_weights(settings.sigma, settings.radius);
    auto product = [](const ScalarImage& x, const ScalarImage& y) {
        auto p = ScalarImage::zeros(x.width, x.height);
        for (std::size_t i = 0; i < p.data.size(); ++i) p.data[i] = x.data[i] * y.data[i];
        return p;
    };
    const auto mu_a = detail::gaussian_blur(la, w);
    const auto mu_b = detail::gaussian_blur(lb, w);
    const auto e_aa = detail::gaussian_blur(product(la, la), w);
    const auto e_bb = detail::gaussian_blur(product(lb, lb), w);
    const auto e_ab = detail::gaussian_blur(product(la, lb), w);

    DissimilarityReport rep;
    rep.ssim_map = ScalarImage::zeros(a.width, a.height);
    double sum = 0;
    for (std::size_t i = 0; i < rep.ssim_map.data.size(); ++i) {
        const double ma = mu_a.data[i], mb = mu_b.data[i];
        const double vaa = e_aa.data[i] - ma * ma;
        const double vbb = e_bb.data[i] - mb * mb;
        const double vab = e_ab.data[i] - ma * mb;
        const double s = ((2.0 * ma * mb + c1) * (2.0 * vab + c2)) / ((ma * ma + mb * mb + c1) * (vaa + vbb + c2));
        rep.ssim_map.data[i] = std::clamp(s, -1.0, 1.0);
        sum += rep.ssim_map.data[i];
    }
    rep.mean_ssim = rep.ssim_map.data.empty() ? 1.0 : sum / static_cast<double>(rep.ssim_map.data.size());
    rep.mean_dissimilarity = 1.0 - rep.mean_ssim;
    rep.l2 = detail::rms_difference(a, b);
    return rep;
}

}  // namespace brdfremap
