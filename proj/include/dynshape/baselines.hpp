#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "dynshape/dss.hpp"
#include "dynshape/errors.hpp"
#include "dynshape/geometry.hpp"
#include "dynshape/projector.hpp"

namespace dynshape {

struct BaselineConfig {
    int bin_size = 36;
    double alpha_tv = 0.0;
    double beta_temporal = 0.0;
    double tv_mu = 1e-6;          // TV smoothing parameter
    int max_iters = 1000;
    double css_tau = 0.0;         // <= 0: derived from the CSS initializer
    double css_fraction = 0.2;    // spatial DCT kept fraction for CSS
    double ls_shrink = 0.5;
    double ls_c = 1e-4;
    int ls_max = 30;
    double tol = 1e-9;            // relative objective-decrease stop

    void validate() const {
        require(bin_size >= 1, "BaselineConfig: bin_size must be >= 1");
        require(alpha_tv >= 0 && beta_temporal >= 0,
                "BaselineConfig: weights must be >= 0");
        require(tv_mu > 0, "BaselineConfig: tv_mu must be > 0");
        require(max_iters >= 1, "BaselineConfig: max_iters must be >= 1");
    }
};

/// Contiguous group of frames treated as one static object.
struct SinogramBin {
    int first_frame = 0;
    int last_frame = 0;               // inclusive
    std::vector<double> angles;
    std::vector<double> data;          // angles x n_det
    DetectorArray detector;
};

/// Splits a sinogram into bins of B consecutive frames (last bin may be short).
inline std::vector<SinogramBin> bin_measurements(const Sinogram& sino, int B) {
    require(B >= 1 && B <= sino.schedule.frames,
            "bin_measurements: bin size out of range");
    std::vector<SinogramBin> bins;
    for (int lo = 0; lo < sino.schedule.frames; lo += B) {
        int hi = std::min(lo + B, sino.schedule.frames) - 1;
        SinogramBin bin;
        bin.first_frame = lo;
        bin.last_frame = hi;
        bin.detector = sino.detector;
        for (int t = lo; t <= hi; ++t) {
            bin.angles.push_back(sino.schedule.angle_deg(t));
            bin.data.insert(bin.data.end(), sino.row(t),
                            sino.row(t) + sino.detector.n_det);
        }
        bins.push_back(std::move(bin));
    }
    return bins;
}

namespace detail {

/// Smoothed isotropic TV: sum sqrt(gx^2 + gy^2 + mu^2), forward differences
/// with Neumann boundary. Writes the gradient into grad when non-null.
inline double tv_smoothed(const std::vector<double>& x, int nx, int ny, double mu,
                          std::vector<double>* grad) {
    if (grad) grad->assign(x.size(), 0.0);
    double val = 0.0;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            size_t idx = static_cast<size_t>(j) * nx + i;
            double gx = i + 1 < nx ? x[idx + 1] - x[idx] : 0.0;
            double gy = j + 1 < ny ? x[idx + nx] - x[idx] : 0.0;
            double root = std::sqrt(gx * gx + gy * gy + mu * mu);
            val += root;
            if (grad) {
                if (i + 1 < nx) {
                    (*grad)[idx] -= gx / root;
                    (*grad)[idx + 1] += gx / root;
                }
                if (j + 1 < ny) {
                    (*grad)[idx] -= gy / root;
                    (*grad)[idx + nx] += gy / root;
                }
            }
        }
    return val;
}

struct BoxObjective {
    double value = 0.0;
    std::vector<double> grad;
};

} // namespace detail

/// Binned static reconstruction: projected gradient descent (clamp to [0, 1])
/// with Armijo backtracking on
///   sum_{t in bin} ||A_t x - y_t||^2 + alpha_tv * TV_mu(x).
inline std::vector<double> static_tv_reconstruct(const SinogramBin& bin,
                                                 const ImageGrid& grid,
                                                 const BaselineConfig& cfg) {
    cfg.validate();
    grid.validate();
    require(!bin.angles.empty(), "static_tv_reconstruct: empty bin");
    const int n = grid.pixels();

    auto eval = [&](const std::vector<double>& x, bool want_grad)
        -> detail::BoxObjective {
        detail::BoxObjective out;
        if (want_grad) out.grad.assign(n, 0.0);
        for (size_t a = 0; a < bin.angles.size(); ++a) {
            auto proj = radon_forward(x, grid, bin.angles[a], bin.detector);
            const double* y = bin.data.data() + a * bin.detector.n_det;
            std::vector<double> resid(bin.detector.n_det);
            for (int j = 0; j < bin.detector.n_det; ++j) {
                resid[j] = proj[j] - y[j];
                out.value += resid[j] * resid[j];
            }
            if (want_grad) {
                auto bp = radon_adjoint(resid, grid, bin.angles[a], bin.detector);
                for (int i = 0; i < n; ++i) out.grad[i] += 2.0 * bp[i];
            }
        }
        if (cfg.alpha_tv > 0) {
            std::vector<double> tvg;
            double tv = detail::tv_smoothed(x, grid.nx, grid.ny, cfg.tv_mu,
                                            want_grad ? &tvg : nullptr);
            out.value += cfg.alpha_tv * tv;
            if (want_grad)
                for (int i = 0; i < n; ++i) out.grad[i] += cfg.alpha_tv * tvg[i];
        }
        return out;
    };

    std::vector<double> x(n, 0.0);
    auto cur = eval(x, true);
    std::optional<std::pair<std::vector<double>, std::vector<double>>> prev;
    for (int it = 0; it < cfg.max_iters; ++it) {
        double gn2 = dot(cur.grad, cur.grad);
        if (gn2 == 0.0) break;
        double gamma = 1.0 / std::sqrt(gn2);
        if (prev) {
            double num = 0.0, den = 0.0;
            for (int i = 0; i < n; ++i) {
                double da = x[i] - prev->first[i];
                double dg = cur.grad[i] - prev->second[i];
                num += da * da;
                den += da * dg;
            }
            if (num > 0 && den > 0) gamma = std::clamp(num / den, 1e-12, 1e12);
        }
        bool accepted = false;
        for (int k = 0; k <= cfg.ls_max; ++k) {
            std::vector<double> cand(n);
            for (int i = 0; i < n; ++i)
                cand[i] = std::clamp(x[i] - gamma * cur.grad[i], 0.0, 1.0);
            auto trial = eval(cand, false);
            if (trial.value <= cur.value - cfg.ls_c * gamma * gn2) {
                prev = {x, cur.grad};
                double old = cur.value;
                x = std::move(cand);
                cur = eval(x, true);
                accepted = true;
                if (old - cur.value <= cfg.tol * std::max(1.0, old)) it = cfg.max_iters;
                break;
            }
            gamma *= cfg.ls_shrink;
        }
        if (!accepted) break;
    }
    return x;
}

/// Binned compressed shape sensing: the DSS machinery with a single temporal
/// frame carrying all the bin's angles (purely spatial truncated DCT basis),
/// annealed exactly as the dynamic algorithm.
inline std::vector<double> css_reconstruct(const SinogramBin& bin, const ImageGrid& grid,
                                           const BaselineConfig& cfg,
                                           ReconConfig solver = {}) {
    cfg.validate();
    grid.validate();
    require(!bin.angles.empty(), "css_reconstruct: empty bin");
    ShapeProblem pb;
    pb.grid = grid;
    pb.detector = bin.detector;
    pb.frames = 1;
    pb.angles = {bin.angles};
    pb.data = {bin.data};
    pb.dims = DctDims{grid.nx, grid.ny, 1};
    solver.dct_fraction = cfg.css_fraction;
    solver.tau = cfg.css_tau;
    pb.mask = make_mask(pb.dims, solver.dct_fraction);
    auto init = initialize_shape(pb, solver);
    auto sol = shape_solve(pb, std::move(init.alpha), init.tau, solver);
    return binarize_levelset(sol.alpha, grid.pixel_size).data;
}

/// Coupled Box-l2 reconstruction over all frames:
///   sum_t ||A_t x_t - y_t||^2 + alpha_tv sum_t TV_mu(x_t)
///   + beta sum_{t<T} ||x_{t+1} - x_t||^2,  x in [0, 1].
/// With beta = 0 the problem decouples exactly and each frame is solved as a
/// single-angle static bin.
inline ImageSequence boxl2_reconstruct(const Sinogram& sino, const ImageGrid& grid,
                                       const BaselineConfig& cfg) {
    cfg.validate();
    grid.validate();
    sino.validate();
    const int T = sino.schedule.frames;
    const int n = grid.pixels();
    ImageSequence seq(grid.nx, grid.ny, T, grid.pixel_size);

    if (cfg.beta_temporal == 0.0) {
        auto bins = bin_measurements(sino, 1);
        parallel_for(T, [&](int t) {
            auto x = static_tv_reconstruct(bins[t], grid, cfg);
            std::copy(x.begin(), x.end(), seq.frame(t).begin());
        });
        return seq;
    }

    auto eval = [&](const std::vector<double>& x, bool want_grad)
        -> detail::BoxObjective {
        detail::BoxObjective out;
        if (want_grad) out.grad.assign(x.size(), 0.0);
        std::vector<double> values(T, 0.0);
        std::vector<std::vector<double>> grads(want_grad ? T : 0);
        parallel_for(T, [&](int t) {
            const double* xt = x.data() + static_cast<size_t>(t) * n;
            std::vector<double> img(xt, xt + n);
            auto proj = radon_forward(img, grid, sino.schedule.angle_deg(t),
                                      sino.detector);
            const double* y = sino.row(t);
            std::vector<double> resid(sino.detector.n_det);
            double v = 0.0;
            for (int j = 0; j < sino.detector.n_det; ++j) {
                resid[j] = proj[j] - y[j];
                v += resid[j] * resid[j];
            }
            std::vector<double> g;
            if (want_grad) {
                auto bp = radon_adjoint(resid, grid, sino.schedule.angle_deg(t),
                                        sino.detector);
                g.assign(n, 0.0);
                for (int i = 0; i < n; ++i) g[i] = 2.0 * bp[i];
            }
            if (cfg.alpha_tv > 0) {
                std::vector<double> tvg;
                double tv = detail::tv_smoothed(img, grid.nx, grid.ny, cfg.tv_mu,
                                                want_grad ? &tvg : nullptr);
                v += cfg.alpha_tv * tv;
                if (want_grad)
                    for (int i = 0; i < n; ++i) g[i] += cfg.alpha_tv * tvg[i];
            }
            values[t] = v;
            if (want_grad) grads[t] = std::move(g);
        });
        for (int t = 0; t < T; ++t) {
            out.value += values[t];
            if (want_grad)
                std::copy(grads[t].begin(), grads[t].end(),
                          out.grad.begin() + static_cast<size_t>(t) * n);
        }
        for (int t = 0; t + 1 < T; ++t) {
            const double* a = x.data() + static_cast<size_t>(t) * n;
            const double* b = a + n;
            for (int i = 0; i < n; ++i) {
                double d = b[i] - a[i];
                out.value += cfg.beta_temporal * d * d;
                if (want_grad) {
                    out.grad[static_cast<size_t>(t) * n + i] -=
                        2.0 * cfg.beta_temporal * d;
                    out.grad[static_cast<size_t>(t + 1) * n + i] +=
                        2.0 * cfg.beta_temporal * d;
                }
            }
        }
        return out;
    };

    std::vector<double> x(seq.size(), 0.0);
    auto cur = eval(x, true);
    std::optional<std::pair<std::vector<double>, std::vector<double>>> prev;
    for (int it = 0; it < cfg.max_iters; ++it) {
        double gn2 = dot(cur.grad, cur.grad);
        if (gn2 == 0.0) break;
        double gamma = 1.0 / std::sqrt(gn2);
        if (prev) {
            double num = 0.0, den = 0.0;
            for (size_t i = 0; i < x.size(); ++i) {
                double da = x[i] - prev->first[i];
                double dg = cur.grad[i] - prev->second[i];
                num += da * da;
                den += da * dg;
            }
            if (num > 0 && den > 0) gamma = std::clamp(num / den, 1e-12, 1e12);
        }
        bool accepted = false;
        for (int k = 0; k <= cfg.ls_max; ++k) {
            std::vector<double> cand(x.size());
            for (size_t i = 0; i < x.size(); ++i)
                cand[i] = std::clamp(x[i] - gamma * cur.grad[i], 0.0, 1.0);
            auto trial = eval(cand, false);
            if (trial.value <= cur.value - cfg.ls_c * gamma * gn2) {
                prev = {x, cur.grad};
                double old = cur.value;
                x = std::move(cand);
                cur = eval(x, true);
                accepted = true;
                if (old - cur.value <= cfg.tol * std::max(1.0, old)) it = cfg.max_iters;
                break;
            }
            gamma *= cfg.ls_shrink;
        }
        if (!accepted) break;
    }
    seq.data = std::move(x);
    return seq;
}

/// Expands binned per-bin images to a per-frame sequence (each frame shows its
/// bin's reconstruction), the display convention for binned baselines.
inline ImageSequence expand_bins(const std::vector<SinogramBin>& bins,
                                 const std::vector<std::vector<double>>& images,
                                 const ImageGrid& grid, int frames) {
    ImageSequence seq(grid.nx, grid.ny, frames, grid.pixel_size);
    for (size_t b = 0; b < bins.size(); ++b)
        for (int t = bins[b].first_frame; t <= bins[b].last_frame; ++t)
            std::copy(images[b].begin(), images[b].end(), seq.frame(t).begin());
    return seq;
}

} // namespace dynshape
