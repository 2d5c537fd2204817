#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "dynshape/errors.hpp"
#include "dynshape/geometry.hpp"

namespace dynshape {

inline constexpr double kPsnrCap = 100.0;   // reported for exact matches

inline double mse(std::span<const double> ref, std::span<const double> test) {
    require(ref.size() == test.size(), "mse: shape mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < ref.size(); ++i) {
        double d = ref[i] - test[i];
        acc += d * d;
    }
    return acc / static_cast<double>(ref.size());
}

/// PSNR in dB for unit peak; capped at 100 dB when MSE vanishes.
inline double psnr(std::span<const double> ref, std::span<const double> test) {
    double m = mse(ref, test);
    if (m <= 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / m));
}

namespace detail {

inline std::vector<double> gaussian_window(int radius, double sigma) {
    int n = 2 * radius + 1;
    std::vector<double> w(static_cast<size_t>(n) * n);
    double sum = 0.0;
    for (int y = -radius; y <= radius; ++y)
        for (int x = -radius; x <= radius; ++x) {
            double g = std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
            w[static_cast<size_t>(y + radius) * n + (x + radius)] = g;
            sum += g;
        }
    for (auto& g : w) g /= sum;
    return w;
}

/// Symmetric (mirror) boundary index.
inline int reflect(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - i - 1;
    }
    return i;
}

} // namespace detail

/// Mean local SSIM, 11x11 Gaussian window sigma 1.5, C1=(0.01)^2, C2=(0.03)^2,
/// dynamic range 1, symmetric boundary padding.
inline double ssim(std::span<const double> ref, std::span<const double> test, int nx,
                   int ny) {
    require(ref.size() == test.size(), "ssim: shape mismatch");
    require(static_cast<size_t>(nx) * ny == ref.size(), "ssim: bad dimensions");
    constexpr int radius = 5;
    require(nx >= 2 * radius + 1 && ny >= 2 * radius + 1,
            "ssim: image smaller than the 11x11 window");
    static const std::vector<double> win = detail::gaussian_window(radius, 1.5);
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    double acc = 0.0;
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
            double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
            for (int dy = -radius; dy <= radius; ++dy)
                for (int dx = -radius; dx <= radius; ++dx) {
                    double w = win[static_cast<size_t>(dy + radius) * (2 * radius + 1) +
                                   (dx + radius)];
                    int ix = detail::reflect(x + dx, nx);
                    int iy = detail::reflect(y + dy, ny);
                    double a = ref[static_cast<size_t>(iy) * nx + ix];
                    double b = test[static_cast<size_t>(iy) * nx + ix];
                    mx += w * a;
                    my += w * b;
                    sxx += w * a * a;
                    syy += w * b * b;
                    sxy += w * a * b;
                }
            sxx -= mx * mx;
            syy -= my * my;
            sxy -= mx * my;
            acc += ((2 * mx * my + c1) * (2 * sxy + c2)) /
                   ((mx * mx + my * my + c1) * (sxx + syy + c2));
        }
    return acc / (static_cast<double>(nx) * ny);
}

/// Otsu threshold: 256-bin histogram over [min, max], maximize between-class
/// variance, ties broken toward the lowest threshold. Binarize as value > t.
inline double otsu_threshold(std::span<const double> image) {
    require(!image.empty(), "otsu_threshold: empty image");
    double lo = image[0], hi = image[0];
    for (double v : image) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi > lo)) throw numerical_error("otsu_threshold: constant image");
    constexpr int bins = 256;
    std::vector<double> hist(bins, 0.0);
    const double scale = bins / (hi - lo);
    for (double v : image) {
        int b = std::min(bins - 1, static_cast<int>((v - lo) * scale));
        hist[b] += 1.0;
    }
    const double total = static_cast<double>(image.size());
    double sum_all = 0.0;
    for (int b = 0; b < bins; ++b) sum_all += b * hist[b];
    double w0 = 0.0, sum0 = 0.0, best = -1.0;
    int best_bin = 0;
    for (int b = 0; b < bins - 1; ++b) {
        w0 += hist[b];
        sum0 += b * hist[b];
        double w1 = total - w0;
        if (w0 <= 0.0 || w1 <= 0.0) continue;
        double m0 = sum0 / w0, m1 = (sum_all - sum0) / w1;
        double var = w0 * w1 * (m0 - m1) * (m0 - m1);
        if (var > best) {       // strict: ties keep the lowest threshold
            best = var;
            best_bin = b;
        }
    }
    return lo + (best_bin + 1) / scale;
}

inline std::vector<uint8_t> binarize(std::span<const double> image, double threshold) {
    std::vector<uint8_t> mask(image.size());
    for (size_t i = 0; i < image.size(); ++i) mask[i] = image[i] > threshold ? 1 : 0;
    return mask;
}

/// Dice overlap 2|A∩B| / (|A|+|B|); two empty masks count as a perfect match.
inline double dice(std::span<const uint8_t> a, std::span<const uint8_t> b) {
    require(a.size() == b.size(), "dice: shape mismatch");
    size_t na = 0, nb = 0, inter = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        na += a[i] != 0;
        nb += b[i] != 0;
        inter += (a[i] != 0 && b[i] != 0);
    }
    if (na + nb == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

/// Per-frame quality scores plus sequence means.
struct MetricReport {
    std::vector<double> psnr_db;
    std::vector<double> ssim_val;
    std::vector<double> dice_val;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    double mean_dice = 0.0;
};

/// Per-frame PSNR/SSIM on grayscale values; Dice on the Otsu binarization of
/// the reconstruction against the (binary) ground truth. A constant
/// reconstruction frame cannot be Otsu-binarized and records dice 0.
inline MetricReport report(const ImageSequence& gt, const ImageSequence& recon) {
    require(gt.nx == recon.nx && gt.ny == recon.ny && gt.frames == recon.frames,
            "report: shape mismatch");
    MetricReport r;
    for (int t = 0; t < gt.frames; ++t) {
        auto g = gt.frame(t);
        auto x = recon.frame(t);
        r.psnr_db.push_back(psnr(g, x));
        r.ssim_val.push_back(ssim(g, x, gt.nx, gt.ny));
        auto gt_mask = binarize(g, 0.5);
        double d = 0.0;
        try {
            auto m = binarize(x, otsu_threshold(x));
            d = dice(gt_mask, m);
        } catch (const numerical_error&) {
            d = 0.0;
        }
        r.dice_val.push_back(d);
    }
    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    };
    r.mean_psnr = mean(r.psnr_db);
    r.mean_ssim = mean(r.ssim_val);
    r.mean_dice = mean(r.dice_val);
    return r;
}

} // namespace dynshape
