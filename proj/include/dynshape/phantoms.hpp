#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "dynshape/errors.hpp"
#include "dynshape/geometry.hpp"
#include "dynshape/parallel.hpp"

namespace dynshape {

struct Ball {
    double radius = 0.0;       // pixels
    double x = 0.0, y = 0.0;   // pixel coordinates
    double vx = 0.0, vy = 0.0; // pixels per frame
};

struct RigidBallSpec {
    int n = 512;
    int frames = 512;
    std::vector<Ball> balls;
    uint64_t seed = 0;

    /// Two balls with resolution-scaled defaults; the reference speeds are
    /// pixels/frame at n = 512 and scale with the grid like everything else.
    static RigidBallSpec defaults(int n, int frames) {
        RigidBallSpec s;
        s.n = n;
        s.frames = frames;
        double r = 0.08 * n;
        double v = n / 512.0;
        s.balls = {Ball{r, 0.3 * n, 0.5 * n, 1.2 * v, 0.7 * v},
                   Ball{r, 0.7 * n, 0.4 * n, -0.9 * v, 1.1 * v}};
        return s;
    }

    void validate() const {
        require(n >= 1 && frames >= 1, "RigidBallSpec: n and frames must be >= 1");
        require(!balls.empty(), "RigidBallSpec: no balls");
        for (const auto& b : balls) {
            require(b.radius > 0, "RigidBallSpec: radii must be > 0");
            require(2 * b.radius < n, "RigidBallSpec: ball larger than domain");
            require(b.x >= b.radius && b.x <= n - b.radius && b.y >= b.radius &&
                        b.y <= n - b.radius,
                    "RigidBallSpec: balls must start inside the domain");
        }
    }
};

/// Bouncing-ball phantom: positions advance by velocity each frame, the
/// velocity component reflects on wall contact, and discs are rasterized as
/// (pixel center inside radius).
inline ImageSequence rigid_balls(const RigidBallSpec& spec) {
    spec.validate();
    ImageSequence seq(spec.n, spec.n, spec.frames);
    auto balls = spec.balls;
    auto rasterize = [&](int t) {
        auto f = seq.frame(t);
        for (const auto& b : balls) {
            int x0 = std::max(0, static_cast<int>(std::floor(b.x - b.radius - 1)));
            int x1 = std::min(spec.n - 1, static_cast<int>(std::ceil(b.x + b.radius + 1)));
            int y0 = std::max(0, static_cast<int>(std::floor(b.y - b.radius - 1)));
            int y1 = std::min(spec.n - 1, static_cast<int>(std::ceil(b.y + b.radius + 1)));
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    double dx = x + 0.5 - b.x, dy = y + 0.5 - b.y;
                    if (dx * dx + dy * dy <= b.radius * b.radius)
                        f[static_cast<size_t>(y) * spec.n + x] = 1.0;
                }
        }
    };
    rasterize(0);
    for (int t = 1; t < spec.frames; ++t) {
        for (auto& b : balls) {
            b.x += b.vx;
            b.y += b.vy;
            // mirror reflection keeps the disc inside the domain
            if (b.x < b.radius) { b.x = 2 * b.radius - b.x; b.vx = -b.vx; }
            if (b.x > spec.n - b.radius) { b.x = 2 * (spec.n - b.radius) - b.x; b.vx = -b.vx; }
            if (b.y < b.radius) { b.y = 2 * b.radius - b.y; b.vy = -b.vy; }
            if (b.y > spec.n - b.radius) { b.y = 2 * (spec.n - b.radius) - b.y; b.vy = -b.vy; }
        }
        rasterize(t);
    }
    return seq;
}

struct NonRigidSpec {
    std::vector<double> base;   // binary base shape, n x n
    int n = 512;
    int frames = 360;
    double frequency = 10.0;
    double amplitude = 2.0;
    uint64_t seed = 0;

    void validate() const {
        require(n >= 1 && frames >= 1, "NonRigidSpec: n and frames must be >= 1");
        require(base.size() == static_cast<size_t>(n) * n,
                "NonRigidSpec: base shape size mismatch");
        require(frequency > 0, "NonRigidSpec: frequency must be > 0");
        require(amplitude >= 0, "NonRigidSpec: amplitude must be >= 0");
        bool any = false;
        for (double v : base) any = any || v != 0.0;
        require(any, "NonRigidSpec: base shape is empty");
    }
};

/// Default bell-shaped base image: the region under a Gaussian hump.
inline std::vector<double> bell_base(int n) {
    std::vector<double> img(static_cast<size_t>(n) * n, 0.0);
    double cx = 0.5 * n, sigma = 0.16 * n;
    double baseline = 0.62 * n, height = 0.42 * n;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            double dx = (x + 0.5 - cx) / sigma;
            double top = baseline - height * std::exp(-0.5 * dx * dx);
            if (y + 0.5 > top && y + 0.5 < baseline)
                img[static_cast<size_t>(y) * n + x] = 1.0;
        }
    return img;
}

namespace detail {

/// 3x3 morphological closing followed by hole filling (flood fill from the
/// border; unreached background becomes foreground).
inline void clean_binary(std::vector<double>& img, int n) {
    auto at = [n](const std::vector<double>& a, int x, int y) -> double {
        if (x < 0 || x >= n || y < 0 || y >= n) return 0.0;
        return a[static_cast<size_t>(y) * n + x];
    };
    std::vector<double> tmp(img.size(), 0.0);
    for (int y = 0; y < n; ++y)        // dilate
        for (int x = 0; x < n; ++x) {
            double v = 0.0;
            for (int dy = -1; dy <= 1 && v == 0.0; ++dy)
                for (int dx = -1; dx <= 1; ++dx)
                    if (at(img, x + dx, y + dy) != 0.0) { v = 1.0; break; }
            tmp[static_cast<size_t>(y) * n + x] = v;
        }
    for (int y = 0; y < n; ++y)        // erode
        for (int x = 0; x < n; ++x) {
            double v = 1.0;
            for (int dy = -1; dy <= 1 && v == 1.0; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    int xx = x + dx, yy = y + dy;
                    double s = (xx < 0 || xx >= n || yy < 0 || yy >= n)
                                   ? 1.0   // treat outside as foreground: keep edges
                                   : tmp[static_cast<size_t>(yy) * n + xx];
                    if (s == 0.0) { v = 0.0; break; }
                }
            img[static_cast<size_t>(y) * n + x] = v;
        }
    // hole fill
    std::vector<uint8_t> outside(img.size(), 0);
    std::vector<int> stack;
    auto push = [&](int x, int y) {
        if (x < 0 || x >= n || y < 0 || y >= n) return;
        size_t i = static_cast<size_t>(y) * n + x;
        if (!outside[i] && img[i] == 0.0) {
            outside[i] = 1;
            stack.push_back(y * n + x);
        }
    };
    for (int x = 0; x < n; ++x) { push(x, 0); push(x, n - 1); }
    for (int y = 0; y < n; ++y) { push(0, y); push(n - 1, y); }
    while (!stack.empty()) {
        int i = stack.back();
        stack.pop_back();
        int x = i % n, y = i / n;
        push(x - 1, y); push(x + 1, y); push(x, y - 1); push(x, y + 1);
    }
    for (size_t i = 0; i < img.size(); ++i)
        if (img[i] == 0.0 && !outside[i]) img[i] = 1.0;
}

} // namespace detail

/// One frame of the sinusoidal warp; t may exceed spec.frames (the warp is
/// periodic with period spec.frames).
inline std::vector<double> nonrigid_frame(const NonRigidSpec& spec, int t) {
    const int n = spec.n;
    double phase = 2.0 * M_PI * t / spec.frames;
    std::vector<double> frame(static_cast<size_t>(n) * n, 0.0);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            double sx = x + spec.amplitude *
                                std::sin(2.0 * M_PI * spec.frequency * y / n + phase);
            double sy = y + spec.amplitude *
                                std::sin(2.0 * M_PI * spec.frequency * x / n + phase);
            int ix = static_cast<int>(std::lround(sx));
            int iy = static_cast<int>(std::lround(sy));
            if (ix >= 0 && ix < n && iy >= 0 && iy < n)
                frame[static_cast<size_t>(y) * n + x] =
                    spec.base[static_cast<size_t>(iy) * n + ix];
        }
    detail::clean_binary(frame, n);
    return frame;
}

/// Non-rigid phantom: the base shape resampled through a time-periodic
/// sinusoidal coordinate warp (nearest-neighbor), then cleaned up with a 3x3
/// closing and hole filling.
inline ImageSequence nonrigid_bell(const NonRigidSpec& spec) {
    spec.validate();
    ImageSequence seq(spec.n, spec.n, spec.frames);
    parallel_for(spec.frames, [&](int t) {
        auto frame = nonrigid_frame(spec, t);
        std::copy(frame.begin(), frame.end(), seq.frame(t).begin());
    });
    return seq;
}

/// Adds i.i.d. zero-mean Gaussian noise at the requested SNR (dB), measured
/// against the mean squared sinogram entry. Deterministic under the seed.
inline Sinogram add_awgn(Sinogram sino, double snr_db, uint64_t seed) {
    if (std::isinf(snr_db) && snr_db > 0) return sino;
    double power = 0.0;
    for (double v : sino.data) power += v * v;
    power /= static_cast<double>(sino.data.size());
    if (power <= 0.0)
        throw numerical_error("add_awgn: zero signal with finite SNR");
    double sigma = std::sqrt(power * std::pow(10.0, -snr_db / 10.0));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma);
    for (auto& v : sino.data) v += gauss(rng);
    return sino;
}

} // namespace dynshape
