#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "dynshape/dct.hpp"
#include "dynshape/errors.hpp"
#include "dynshape/geometry.hpp"
#include "dynshape/l1ball.hpp"
#include "dynshape/levelset.hpp"
#include "dynshape/metrics.hpp"
#include "dynshape/parallel.hpp"
#include "dynshape/projector.hpp"

namespace dynshape {

/// Shape-sensing solver hyperparameters.
struct ReconConfig {
    double tau = 0.0;            // <= 0: derive from the initial coefficients
    int outer_iters = 20;        // M
    int inner_iters = 30;        // N
    double kappa0 = 0.1;
    double kappa_decay = 0.8;
    double dct_fraction = 0.01;
    double ls_shrink = 0.5;
    double ls_c = 1e-4;
    int ls_max = 30;

    void validate() const {
        require(outer_iters >= 1 && inner_iters >= 1,
                "ReconConfig: iteration counts must be >= 1");
        require(kappa0 > 0, "ReconConfig: kappa0 must be > 0");
        require(kappa_decay > 0 && kappa_decay < 1,
                "ReconConfig: kappa_decay must be in (0, 1)");
        require(dct_fraction > 0 && dct_fraction <= 1,
                "ReconConfig: dct_fraction must be in (0, 1]");
        require(ls_shrink > 0 && ls_shrink < 1, "ReconConfig: ls_shrink must be in (0, 1)");
        require(ls_c > 0, "ReconConfig: ls_c must be > 0");
        require(ls_max >= 1, "ReconConfig: ls_max must be >= 1");
    }
};

/// Optional forward-model extensions.
struct ExtensionConfig {
    bool fit_attenuation = false;          // alternate on a free per-frame u_t
    std::vector<double> attenuation;       // fixed or initial u_t (empty = 1)
    std::vector<double> gray_levels;       // multilevel material coefficients
    double perimeter_lambda = 0.0;

    void validate() const {
        for (size_t i = 1; i < gray_levels.size(); ++i)
            require(gray_levels[i] > gray_levels[i - 1],
                    "ExtensionConfig: gray levels must be strictly increasing");
        for (double u : gray_levels)
            require(u > 0, "ExtensionConfig: gray levels must be positive");
        require(perimeter_lambda >= 0, "ExtensionConfig: lambda must be >= 0");
    }
};

/// Measurement layout for the shape solvers: `frames` temporal slices of phi,
/// each observed at one or more angles. Single-shot reconstruction has one
/// angle per frame; a binned (static) solve is one frame with all bin angles.
struct ShapeProblem {
    ImageGrid grid;
    DetectorArray detector;
    int frames = 1;
    std::vector<std::vector<double>> angles;   // [frame][angle]
    std::vector<std::vector<double>> data;     // [frame], angles * n_det row-major
    DctDims dims;                              // (nx, ny, frames)
    TruncationMask mask;
    ExtensionConfig ext;

    void validate() const {
        grid.validate();
        detector.validate();
        require(frames >= 1, "ShapeProblem: frames must be >= 1");
        require(angles.size() == static_cast<size_t>(frames) &&
                    data.size() == static_cast<size_t>(frames),
                "ShapeProblem: per-frame containers must match frame count");
        for (int t = 0; t < frames; ++t)
            require(data[t].size() == angles[t].size() * detector.n_det,
                    "ShapeProblem: data row size mismatch");
        require(dims.nx == grid.nx && dims.ny == grid.ny && dims.nt == frames,
                "ShapeProblem: DCT dims must match grid and frames");
        mask.validate(dims);
        ext.validate();
        if (!ext.attenuation.empty())
            require(ext.attenuation.size() == static_cast<size_t>(frames),
                    "ShapeProblem: attenuation length must equal frame count");
    }

    double atten(int t) const {
        return ext.attenuation.empty() ? 1.0 : ext.attenuation[t];
    }
};

/// Multilevel image map for known material coefficients u_1 < ... < u_m:
/// I = u_1 h_eps(phi - u_1) + sum_p (u_p - u_{p-1}) h_eps(phi - (u_p - u_{p-1})).
inline double multilevel_value(double phi, double eps, const std::vector<double>& levels) {
    double v = levels[0] * heaviside(phi - levels[0], eps);
    for (size_t p = 1; p < levels.size(); ++p) {
        double step = levels[p] - levels[p - 1];
        v += step * heaviside(phi - step, eps);
    }
    return v;
}

/// d(multilevel_value)/d(phi).
inline double multilevel_slope(double phi, double eps, const std::vector<double>& levels) {
    double v = levels[0] * dirac(phi - levels[0], eps);
    for (size_t p = 1; p < levels.size(); ++p) {
        double step = levels[p] - levels[p - 1];
        v += step * dirac(phi - step, eps);
    }
    return v;
}

namespace detail {

/// Frame image under the configured forward-model variant.
inline void frame_image(const ShapeProblem& pb, const double* phi, int t, double eps,
                        std::vector<double>& out) {
    const int n = pb.grid.pixels();
    out.resize(n);
    if (!pb.ext.gray_levels.empty()) {
        for (int i = 0; i < n; ++i)
            out[i] = multilevel_value(phi[i], eps, pb.ext.gray_levels);
    } else {
        const double u = pb.atten(t);
        for (int i = 0; i < n; ++i) out[i] = u * heaviside(phi[i], eps);
    }
}

/// dI/dphi for one frame.
inline void frame_slope(const ShapeProblem& pb, const double* phi, int t, double eps,
                        std::vector<double>& out) {
    const int n = pb.grid.pixels();
    out.resize(n);
    if (!pb.ext.gray_levels.empty()) {
        for (int i = 0; i < n; ++i)
            out[i] = multilevel_slope(phi[i], eps, pb.ext.gray_levels);
    } else {
        const double u = pb.atten(t);
        for (int i = 0; i < n; ++i) out[i] = u * dirac(phi[i], eps);
    }
}

} // namespace detail

/// J(alpha) = sum_t sum_angles || A (I_t(phi_t)) - y ||^2, plus the optional
/// perimeter term lambda * sum ||delta_eps(phi)||^2.
inline double objective(const ShapeProblem& pb, const DctCoeffs& alpha, double eps) {
    require(eps > 0, "objective: epsilon must be > 0");
    auto phi = dct_synthesize(alpha);
    const int fp = pb.grid.pixels();
    std::vector<double> partial(pb.frames, 0.0);
    parallel_for(pb.frames, [&](int t) {
        std::vector<double> img;
        detail::frame_image(pb, phi.data() + static_cast<size_t>(t) * fp, t, eps, img);
        double acc = 0.0;
        for (size_t a = 0; a < pb.angles[t].size(); ++a) {
            auto proj = radon_forward(img, pb.grid, pb.angles[t][a], pb.detector);
            const double* y = pb.data[t].data() + a * pb.detector.n_det;
            for (int j = 0; j < pb.detector.n_det; ++j) {
                double r = proj[j] - y[j];
                acc += r * r;
            }
        }
        partial[t] = acc;
    });
    double J = 0.0;
    for (double v : partial) J += v;
    if (pb.ext.perimeter_lambda > 0) {
        double per = 0.0;
        for (double s : phi) {
            double d = dirac(s, eps);
            per += d * d;
        }
        J += pb.ext.perimeter_lambda * per;
    }
    return J;
}

/// Analytic gradient of the objective with respect to the masked coefficients:
/// synthesize phi, backproject the per-frame residuals, scale voxelwise by
/// dI/dphi, then apply the truncated adjoint transform.
inline DctCoeffs gradient(const ShapeProblem& pb, const DctCoeffs& alpha, double eps) {
    require(eps > 0, "gradient: epsilon must be > 0");
    auto phi = dct_synthesize(alpha);
    const int fp = pb.grid.pixels();
    std::vector<double> gphi(phi.size(), 0.0);
    parallel_for(pb.frames, [&](int t) {
        const double* phit = phi.data() + static_cast<size_t>(t) * fp;
        std::vector<double> img, slope;
        detail::frame_image(pb, phit, t, eps, img);
        detail::frame_slope(pb, phit, t, eps, slope);
        std::vector<double> back(fp, 0.0);
        for (size_t a = 0; a < pb.angles[t].size(); ++a) {
            auto proj = radon_forward(img, pb.grid, pb.angles[t][a], pb.detector);
            const double* y = pb.data[t].data() + a * pb.detector.n_det;
            std::vector<double> resid(pb.detector.n_det);
            for (int j = 0; j < pb.detector.n_det; ++j) resid[j] = proj[j] - y[j];
            auto bp = radon_adjoint(resid, pb.grid, pb.angles[t][a], pb.detector);
            for (int i = 0; i < fp; ++i) back[i] += bp[i];
        }
        double* g = gphi.data() + static_cast<size_t>(t) * fp;
        for (int i = 0; i < fp; ++i) g[i] = 2.0 * slope[i] * back[i];
    });
    if (pb.ext.perimeter_lambda > 0) {
        for (size_t i = 0; i < phi.size(); ++i)
            gphi[i] += 2.0 * pb.ext.perimeter_lambda * dirac(phi[i], eps) *
                       dirac_prime(phi[i], eps);
    }
    return dct_analyze_masked(gphi, pb.dims, pb.mask);
}

/// Standalone perimeter penalty value and its coefficient-space gradient.
inline std::pair<double, DctCoeffs> perimeter_penalty(const ShapeProblem& pb,
                                                      const DctCoeffs& alpha, double eps,
                                                      double lambda) {
    require(lambda >= 0, "perimeter_penalty: lambda must be >= 0");
    auto phi = dct_synthesize(alpha);
    double value = 0.0;
    std::vector<double> gphi(phi.size());
    for (size_t i = 0; i < phi.size(); ++i) {
        double d = dirac(phi[i], eps);
        value += d * d;
        gphi[i] = 2.0 * lambda * d * dirac_prime(phi[i], eps);
    }
    return {lambda * value, dct_analyze_masked(gphi, pb.dims, pb.mask)};
}

/// Multilevel image sequence for the optimized coefficients.
inline ImageSequence multilevel_image(const DctCoeffs& alpha, double eps,
                                      const std::vector<double>& levels) {
    require(!levels.empty(), "multilevel_image: empty level list");
    for (size_t i = 1; i < levels.size(); ++i)
        require(levels[i] > levels[i - 1], "multilevel_image: levels must increase");
    auto phi = dct_synthesize(alpha);
    ImageSequence seq(alpha.dims.nx, alpha.dims.ny, alpha.dims.nt);
    for (size_t i = 0; i < phi.size(); ++i)
        seq.data[i] = multilevel_value(phi[i], eps, levels);
    return seq;
}

struct TraceRow {
    int outer = 0;      // q, 1-based
    int inner = 0;      // p, 1-based; 0 marks an outer-loop header row
    double objective = 0.0;
    double gamma = 0.0;
    double epsilon = 0.0;
    double alpha_l1 = 0.0;
    bool stagnated = false;
};

struct LineSearchResult {
    double gamma = 0.0;
    DctCoeffs next;
    double objective = 0.0;
    bool accepted = false;
};

/// Backtracking (Armijo) line search along the projected negative gradient.
/// gamma0 should come from a Barzilai-Borwein estimate; fallback 1/||g||.
inline LineSearchResult line_search(const ShapeProblem& pb, const DctCoeffs& alpha,
                                    const DctCoeffs& grad, double J0, double eps,
                                    double tau, double gamma0, const ReconConfig& cfg) {
    LineSearchResult res;
    double gn2 = dot(grad.values, grad.values);
    if (gn2 == 0.0) {
        res = {gamma0, alpha, J0, true};
        return res;
    }
    double gamma = gamma0;
    for (int k = 0; k <= cfg.ls_max; ++k) {
        DctCoeffs cand = alpha;
        for (size_t i = 0; i < cand.values.size(); ++i)
            cand.values[i] -= gamma * grad.values[i];
        cand.values = project_l1_ball(std::move(cand.values), tau);
        double J = objective(pb, cand, eps);
        if (J <= J0 - cfg.ls_c * gamma * gn2) {
            res = {gamma, std::move(cand), J, true};
            return res;
        }
        gamma *= cfg.ls_shrink;
    }
    res = {0.0, alpha, J0, false};   // stagnation; caller decides
    return res;
}

struct SolveResult {
    DctCoeffs alpha;
    std::vector<TraceRow> trace;
    double final_epsilon = 0.0;
    bool stagnated = false;
    std::vector<double> attenuation;   // filled when fit_attenuation
};

namespace detail {

/// Closed-form least-squares attenuation update, one scalar per frame:
/// u_t = <A_t(h_eps), y_t> / ||A_t(h_eps)||^2, clamped >= 0. A frame whose
/// unit-attenuation projection vanishes keeps its previous value.
inline void update_attenuation(ShapeProblem& pb, const std::vector<double>& phi,
                               double eps) {
    const int fp = pb.grid.pixels();
    if (pb.ext.attenuation.empty()) pb.ext.attenuation.assign(pb.frames, 1.0);
    parallel_for(pb.frames, [&](int t) {
        const double* phit = phi.data() + static_cast<size_t>(t) * fp;
        std::vector<double> shape(fp);
        for (int i = 0; i < fp; ++i) shape[i] = heaviside(phit[i], eps);
        double num = 0.0, den = 0.0;
        for (size_t a = 0; a < pb.angles[t].size(); ++a) {
            auto proj = radon_forward(shape, pb.grid, pb.angles[t][a], pb.detector);
            const double* y = pb.data[t].data() + a * pb.detector.n_det;
            for (int j = 0; j < pb.detector.n_det; ++j) {
                num += proj[j] * y[j];
                den += proj[j] * proj[j];
            }
        }
        if (den > 0.0) pb.ext.attenuation[t] = std::max(0.0, num / den);
    });
}

} // namespace detail

/// Projected gradient descent with Heaviside-width annealing:
/// outer loop refreshes eps = kappa * max|grad phi| and decays kappa,
/// inner loop runs Armijo-accepted l1-ball-projected gradient steps.
/// An inner loop with no accepted step is flagged and skipped; the next
/// outer iteration changes eps and may unlock progress.
inline SolveResult shape_solve(ShapeProblem pb, DctCoeffs alpha, double tau,
                               const ReconConfig& cfg) {
    cfg.validate();
    pb.validate();
    alpha.validate();
    SolveResult out;
    double kappa = cfg.kappa0;
    double eps = 0.0;
    std::optional<std::pair<std::vector<double>, std::vector<double>>> prev;  // alpha, grad
    for (int q = 1; q <= cfg.outer_iters; ++q) {
        auto phi = dct_synthesize(alpha);
        double g = max_gradient_magnitude(phi, alpha.dims);
        if (g > 0.0) eps = kappa * g;
        else if (eps <= 0.0)
            throw numerical_error("shape_solve: flat level-set function at start");
        // else: phi went flat mid-run; keep the previous width
        prev.reset();    // eps changed, BB memory is stale
        double J = objective(pb, alpha, eps);
        bool accepted_any = false;
        for (int p = 1; p <= cfg.inner_iters; ++p) {
            auto grad = gradient(pb, alpha, eps);
            double gn2 = dot(grad.values, grad.values);
            if (gn2 == 0.0) break;
            double gamma0 = 1.0 / std::sqrt(gn2);
            if (prev) {
                std::vector<double> da(alpha.values.size()), dg(grad.values.size());
                for (size_t i = 0; i < da.size(); ++i) {
                    da[i] = alpha.values[i] - prev->first[i];
                    dg[i] = grad.values[i] - prev->second[i];
                }
                double num = dot(da, da), den = dot(da, dg);
                if (den > 0.0 && num > 0.0)
                    gamma0 = std::clamp(num / den, 1e-12, 1e12);
            }
            auto ls = line_search(pb, alpha, grad, J, eps, tau, gamma0, cfg);
            if (!ls.accepted) {
                out.trace.push_back({q, p, J, 0.0, eps, norm1(alpha.values), true});
                break;
            }
            prev = {alpha.values, grad.values};
            alpha = std::move(ls.next);
            J = ls.objective;
            accepted_any = true;
            out.trace.push_back({q, p, J, ls.gamma, eps, norm1(alpha.values), false});
        }
        if (!accepted_any) out.stagnated = true;
        if (pb.ext.fit_attenuation) {
            detail::update_attenuation(pb, dct_synthesize(alpha), eps);
        }
        kappa *= cfg.kappa_decay;
    }
    out.alpha = std::move(alpha);
    out.final_epsilon = eps;
    out.attenuation = pb.ext.attenuation;
    return out;
}

/// Sharp-Heaviside binarization of the synthesized level-set volume
/// (phi >= 0 maps to 1).
inline ImageSequence binarize_levelset(const DctCoeffs& alpha, double pixel_size = 1.0) {
    auto phi = dct_synthesize(alpha);
    ImageSequence seq(alpha.dims.nx, alpha.dims.ny, alpha.dims.nt, pixel_size);
    for (size_t i = 0; i < phi.size(); ++i) seq.data[i] = phi[i] >= 0.0 ? 1.0 : 0.0;
    return seq;
}

struct InitResult {
    DctCoeffs alpha;
    double tau = 0.0;
};

/// Initial estimate: per-bin backprojection of the measurements (bin size
/// min(frames, 36)), normalized to [0, 1]; phi0 = recon - otsu(recon);
/// alpha0 = P_tau(masked DCT of phi0). When cfg.tau <= 0 the radius defaults
/// to ||masked DCT of phi0||_1, so the start is feasible with the constraint
/// active nearby.
inline InitResult initialize_shape(const ShapeProblem& pb, const ReconConfig& cfg) {
    const int fp = pb.grid.pixels();
    const int B = std::min(pb.frames, 36);
    std::vector<double> recon(pb.dims.voxels(), 0.0);
    for (int lo = 0; lo < pb.frames; lo += B) {
        int hi = std::min(lo + B, pb.frames);
        std::vector<double> bin_img(fp, 0.0);
        for (int t = lo; t < hi; ++t)
            for (size_t a = 0; a < pb.angles[t].size(); ++a) {
                std::span<const double> row{pb.data[t].data() + a * pb.detector.n_det,
                                            static_cast<size_t>(pb.detector.n_det)};
                auto bp = radon_adjoint(row, pb.grid, pb.angles[t][a], pb.detector);
                for (int i = 0; i < fp; ++i) bin_img[i] += bp[i];
            }
        for (int t = lo; t < hi; ++t)
            std::copy(bin_img.begin(), bin_img.end(),
                      recon.begin() + static_cast<size_t>(t) * fp);
    }
    double lo = recon[0], hi = recon[0];
    for (double v : recon) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi > lo))
        throw numerical_error("initialize_shape: degenerate (constant) backprojection");
    for (auto& v : recon) v = (v - lo) / (hi - lo);
    double thr = otsu_threshold(recon);
    std::vector<double> phi0(recon.size());
    for (size_t i = 0; i < recon.size(); ++i) phi0[i] = recon[i] - thr;
    auto alpha = dct_analyze_masked(phi0, pb.dims, pb.mask);
    double tau = cfg.tau > 0 ? cfg.tau : norm1(alpha.values);
    if (tau <= 0) throw numerical_error("initialize_shape: zero initial coefficients");
    alpha.values = project_l1_ball(std::move(alpha.values), tau);
    return {std::move(alpha), tau};
}

/// Builds the single-shot problem (one angle per frame) from a sinogram.
inline ShapeProblem single_shot_problem(const Sinogram& sino, const ImageGrid& grid,
                                        const ReconConfig& cfg,
                                        const ExtensionConfig& ext = {}) {
    ShapeProblem pb;
    pb.grid = grid;
    pb.detector = sino.detector;
    pb.frames = sino.schedule.frames;
    pb.angles.resize(pb.frames);
    pb.data.resize(pb.frames);
    for (int t = 0; t < pb.frames; ++t) {
        pb.angles[t] = {sino.schedule.angle_deg(t)};
        pb.data[t].assign(sino.row(t), sino.row(t) + sino.detector.n_det);
    }
    pb.dims = DctDims{grid.nx, grid.ny, pb.frames};
    pb.mask = make_mask(pb.dims, cfg.dct_fraction);
    pb.ext = ext;
    pb.ext.validate();
    return pb;
}

namespace detail {

inline ShapeProblem problem_for(const DctCoeffs& alpha, const Sinogram& sino) {
    require(alpha.dims.nt == sino.schedule.frames,
            "coefficient frame count does not match sinogram");
    ShapeProblem pb;
    pb.grid = ImageGrid{alpha.dims.nx, alpha.dims.ny, sino.grid.pixel_size};
    pb.detector = sino.detector;
    pb.frames = sino.schedule.frames;
    pb.angles.resize(pb.frames);
    pb.data.resize(pb.frames);
    for (int t = 0; t < pb.frames; ++t) {
        pb.angles[t] = {sino.schedule.angle_deg(t)};
        pb.data[t].assign(sino.row(t), sino.row(t) + sino.detector.n_det);
    }
    pb.dims = alpha.dims;
    pb.mask = alpha.mask;
    return pb;
}

} // namespace detail

/// Single-shot DSS objective for a coefficient vector against a sinogram.
inline double objective(const DctCoeffs& alpha, const Sinogram& sino, double eps) {
    return objective(detail::problem_for(alpha, sino), alpha, eps);
}

/// Matching analytic gradient.
inline DctCoeffs gradient(const DctCoeffs& alpha, const Sinogram& sino, double eps) {
    return gradient(detail::problem_for(alpha, sino), alpha, eps);
}

struct DssResult {
    ImageSequence reconstruction;
    DctCoeffs alpha;
    std::vector<TraceRow> trace;
    bool stagnated = false;
    std::vector<double> attenuation;
    double tau = 0.0;
};

/// Full dynamic shape sensing reconstruction from a single-shot sinogram.
inline DssResult dss_reconstruct(const Sinogram& sino, const ImageGrid& grid,
                                 const ReconConfig& cfg, const ExtensionConfig& ext = {}) {
    sino.validate();
    cfg.validate();
    auto pb = single_shot_problem(sino, grid, cfg, ext);
    auto init = initialize_shape(pb, cfg);
    auto sol = shape_solve(pb, std::move(init.alpha), init.tau, cfg);
    DssResult res;
    if (!ext.gray_levels.empty()) {
        res.reconstruction = multilevel_image(sol.alpha, sol.final_epsilon, ext.gray_levels);
        // snap to the nearest material level (sharp Heaviside limit)
        auto phi = dct_synthesize(sol.alpha);
        for (size_t i = 0; i < phi.size(); ++i) {
            double v = ext.gray_levels[0] * (phi[i] >= ext.gray_levels[0] ? 1.0 : 0.0);
            for (size_t p = 1; p < ext.gray_levels.size(); ++p) {
                double step = ext.gray_levels[p] - ext.gray_levels[p - 1];
                v += step * (phi[i] >= step ? 1.0 : 0.0);
            }
            res.reconstruction.data[i] = v;
        }
    } else {
        res.reconstruction = binarize_levelset(sol.alpha, grid.pixel_size);
        if (!sol.attenuation.empty())
            for (int t = 0; t < res.reconstruction.frames; ++t)
                for (auto& v : res.reconstruction.frame(t)) v *= sol.attenuation[t];
    }
    res.reconstruction.pixel_size = grid.pixel_size;
    res.alpha = std::move(sol.alpha);
    res.trace = std::move(sol.trace);
    res.stagnated = sol.stagnated;
    res.attenuation = std::move(sol.attenuation);
    res.tau = init.tau;
    return res;
}

/// Joint shape + per-frame attenuation reconstruction (alternating scheme).
inline DssResult dss_attenuation(const Sinogram& sino, const ImageGrid& grid,
                                 const ReconConfig& cfg, ExtensionConfig ext = {}) {
    ext.fit_attenuation = true;
    if (ext.attenuation.empty()) ext.attenuation.assign(sino.schedule.frames, 1.0);
    return dss_reconstruct(sino, grid, cfg, ext);
}

} // namespace dynshape
